#pragma once

namespace relfilter {

// Entry point of the relfilter tool. Returns 0 on success, 1 on a usage
// error and 2 on a data error.
int run_cli(int argc, char** argv);

}  // namespace relfilter
