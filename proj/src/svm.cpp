#include "relfilter/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "relfilter/error.hpp"
#include "relfilter/kernels.hpp"
#include "relfilter/rng.hpp"
#include "relfilter/text_io.hpp"

namespace relfilter {

namespace {

double dot(std::span<const double> w, const FeatureVector& x) {
  return x.binary() ? kernels::sparse_dot(w, x.indices) : kernels::sparse_dot(w, x.indices, x.values);
}

double squared_norm(const FeatureVector& x) {
  if (x.binary()) return static_cast<double>(x.indices.size());
  double s = 0.0;
  for (double v : x.values) s += v * v;
  return s;
}

}  // namespace

void TrainConfig::validate() const {
  if (C && !(*C > 0.0 && std::isfinite(*C))) throw UsageError("C must be positive and finite");
  if (!(tolerance > 0.0)) throw UsageError("tolerance must be positive");
  if (max_epochs < 1) throw UsageError("max_epochs must be >= 1");
}

LinearModel::LinearModel(std::vector<double> weights, double bias) {
  weights_.reserve(weights.size() + 1);
  weights_.push_back(bias);
  weights_.insert(weights_.end(), weights.begin(), weights.end());
}

LinearModel LinearModel::zeros(std::size_t vocab_size) {
  return LinearModel(std::vector<double>(vocab_size, 0.0), 0.0);
}

double LinearModel::score(const FeatureVector& x) const {
  if (!x.indices.empty() &&
      (x.indices.front() < 1 || static_cast<std::size_t>(x.indices.back()) > vocab_size())) {
    throw UsageError("feature index out of range for a model over " + std::to_string(vocab_size()) +
                     " features");
  }
  return weights_[0] + dot(weights_, x);
}

bool LinearModel::is_finite() const {
  return std::all_of(weights_.begin(), weights_.end(), [](double v) { return std::isfinite(v); });
}

std::string LinearModel::serialize() const {
  std::string out = "bias " + format_exact(weights_[0]) + "\n";
  for (std::size_t i = 1; i < weights_.size(); ++i) {
    if (weights_[i] == 0.0) continue;
    out += std::to_string(i);
    out += '\t';
    out += format_exact(weights_[i]);
    out += '\n';
  }
  return out;
}

LinearModel LinearModel::parse(std::string_view text, std::size_t vocab_size) {
  LinearModel model = zeros(vocab_size);
  const auto lines = split(text, '\n');
  if (lines.empty() || !lines[0].starts_with("bias ")) {
    throw DataError("model file must start with 'bias <real>'");
  }
  model.weights_[0] = parse_double(std::string_view(lines[0]).substr(5));
  std::size_t prev = 0;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    if (lines[n].empty()) continue;
    const auto cols = split(lines[n], '\t');
    if (cols.size() != 2) throw DataError("model line " + std::to_string(n + 1) + ": expected 'index TAB real'");
    std::size_t idx = 0;
    try {
      idx = std::stoul(cols[0]);
    } catch (const std::exception&) {
      throw DataError("model line " + std::to_string(n + 1) + ": bad index");
    }
    if (idx == 0 || idx > vocab_size || idx <= prev) {
      throw DataError("model line " + std::to_string(n + 1) + ": index out of range or not ascending");
    }
    model.weights_[idx] = parse_double(cols[1]);
    prev = idx;
  }
  if (!model.is_finite()) throw DataError("model contains non-finite values");
  return model;
}

LinearModel LinearModel::load(const std::filesystem::path& path, std::size_t vocab_size) {
  return parse(read_file(path), vocab_size);
}

double default_C(std::span<const LabeledVector> examples) {
  if (examples.empty()) return 1.0;
  double total = 0.0;
  for (const auto& e : examples) total += squared_norm(e.x);
  const double mean = total / static_cast<double>(examples.size());
  return mean > 0.0 ? 1.0 / mean : 1.0;
}

namespace {

void check_examples(std::span<const LabeledVector> examples, std::size_t vocab_size) {
  bool pos = false;
  bool neg = false;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& e = examples[i];
    if (e.y == 1) {
      pos = true;
    } else if (e.y == -1) {
      neg = true;
    } else {
      throw DataError("example " + std::to_string(i) + " has label " + std::to_string(e.y) +
                      "; expected -1 or +1");
    }
    if (!e.x.binary()) {
      if (e.x.values.size() != e.x.indices.size()) {
        throw DataError("example " + std::to_string(i) + " has " + std::to_string(e.x.values.size()) +
                        " values for " + std::to_string(e.x.indices.size()) + " indices");
      }
      for (double v : e.x.values) {
        if (!std::isfinite(v)) throw DataError("example " + std::to_string(i) + " has a non-finite value");
      }
    }
    std::int32_t prev = 0;
    for (auto idx : e.x.indices) {
      if (idx <= prev || static_cast<std::size_t>(idx) > vocab_size) {
        throw DataError("example " + std::to_string(i) +
                        " has unsorted, duplicate or out-of-range feature indices");
      }
      prev = idx;
    }
  }
  if (!pos || !neg) throw DataError("degenerate training set: both classes are required");
}

}  // namespace

TrainResult train(std::span<const LabeledVector> examples, std::size_t vocab_size,
                  const TrainConfig& config) {
  config.validate();
  check_examples(examples, vocab_size);

  constexpr double kInf = std::numeric_limits<double>::infinity();
  const std::size_t l = examples.size();
  const double C = config.C.value_or(default_C(examples));

  std::vector<double> w(vocab_size + 1, 0.0);  // w[0] is the bias
  std::vector<double> alpha(l, 0.0);
  std::vector<double> diag(l);  // |x_i|^2 + 1 for the constant feature
  std::vector<std::size_t> index(l);
  for (std::size_t i = 0; i < l; ++i) {
    diag[i] = squared_norm(examples[i].x) + 1.0;
    index[i] = i;
  }

  Rng rng(config.seed);
  TrainResult result;
  result.C = C;

  // Projected-gradient bounds from the previous pass drive shrinking:
  // variables stuck at a bound whose gradient points outward are set aside
  // until the remaining problem converges, then everything is re-checked.
  double pg_max_old = kInf;
  double pg_min_old = -kInf;
  std::size_t active = l;
  int epoch = 0;
  while (epoch < config.max_epochs) {
    double pg_max_new = -kInf;
    double pg_min_new = kInf;

    for (std::size_t i = 0; i < active; ++i) {
      const std::size_t j = i + rng.uniform(active - i);
      std::swap(index[i], index[j]);
    }

    for (std::size_t s = 0; s < active; ++s) {
      const std::size_t i = index[s];
      const auto& ex = examples[i];
      const double y = ex.y;
      const double G = y * (w[0] + dot(w, ex.x)) - 1.0;

      double pg = 0.0;
      if (alpha[i] == 0.0) {
        if (G > pg_max_old) {
          --active;
          std::swap(index[s], index[active]);
          --s;
          continue;
        }
        if (G < 0.0) pg = G;
      } else if (alpha[i] == C) {
        if (G < pg_min_old) {
          --active;
          std::swap(index[s], index[active]);
          --s;
          continue;
        }
        if (G > 0.0) pg = G;
      } else {
        pg = G;
      }
      pg_max_new = std::max(pg_max_new, pg);
      pg_min_new = std::min(pg_min_new, pg);

      if (std::fabs(pg) > 1e-12) {
        const double old = alpha[i];
        alpha[i] = std::min(std::max(old - G / diag[i], 0.0), C);
        const double d = (alpha[i] - old) * y;
        w[0] += d;
        if (ex.x.binary()) {
          kernels::sparse_axpy(w, ex.x.indices, d);
        } else {
          kernels::sparse_axpy(w, ex.x.indices, ex.x.values, d);
        }
      }
    }
    ++epoch;

    double alpha_sum = 0.0;
    for (double a : alpha) alpha_sum += a;
    result.dual_objective.push_back(0.5 * kernels::dense_dot(w, w) - alpha_sum);

    if (pg_max_new - pg_min_new <= config.tolerance) {
      if (active == l) {
        result.converged = true;
        break;
      }
      active = l;
      pg_max_old = kInf;
      pg_min_old = -kInf;
      continue;
    }
    pg_max_old = pg_max_new <= 0.0 ? kInf : pg_max_new;
    pg_min_old = pg_min_new >= 0.0 ? -kInf : pg_min_new;
  }
  result.epochs = epoch;

  const double bias = w[0];
  result.model = LinearModel(std::vector<double>(w.begin() + 1, w.end()), bias);
  if (!result.model.is_finite()) {
    std::ostringstream msg;
    msg << "training produced non-finite weights (C=" << C << ", epochs=" << epoch
        << ", examples=" << l << ")";
    throw DataError(msg.str());
  }
  return result;
}

double objective(const LinearModel& model, std::span<const LabeledVector> examples, double C) {
  const auto w = model.augmented();
  double reg = 0.0;
  for (double v : w) reg += v * v;
  double loss = 0.0;
  for (const auto& e : examples) {
    loss += std::max(0.0, 1.0 - e.y * model.score(e.x));
  }
  return 0.5 * reg + C * loss;
}

}  // namespace relfilter
