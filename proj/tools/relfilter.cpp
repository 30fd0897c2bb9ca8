#include "relfilter/cli.hpp"

int main(int argc, char** argv) { return relfilter::run_cli(argc, argv); }
