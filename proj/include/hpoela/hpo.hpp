#pragma once

// Continuous HPO problems: log-scale search spaces, logloss, and a
// deterministic multinomial-logistic toy learner tuned under fixed 10-fold CV.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "core.hpp"

namespace hpoela::hpo {

enum class Scale { Linear, Log };

struct Param {
  std::string name;
  double lower = 0.0;
  double upper = 1.0;
  Scale scale = Scale::Linear;
  bool round_to_int = false;
};

/// Ordered parameter list. Log parameters are optimized over [ln(lower), ln(upper)].
class SearchSpace {
 public:
  SearchSpace() = default;
  explicit SearchSpace(std::vector<Param> params) : params_(std::move(params)) {
    if (params_.empty()) throw Error(ErrorKind::InvalidDimension, "search space needs at least one parameter");
    std::set<std::string> names;
    for (const auto& p : params_) {
      if (!(p.lower < p.upper)) throw Error(ErrorKind::InvalidInput, "parameter " + p.name + ": lower must be < upper");
      if (p.scale == Scale::Log && !(p.lower > 0.0)) {
        throw Error(ErrorKind::InvalidInput, "parameter " + p.name + ": log scale needs lower > 0");
      }
      if (!names.insert(p.name).second) throw Error(ErrorKind::InvalidInput, "duplicate parameter name " + p.name);
    }
  }

  const std::vector<Param>& params() const { return params_; }
  std::size_t dim() const { return params_.size(); }

  BoxDomain internal_domain() const {
    std::vector<double> lo;
    std::vector<double> hi;
    for (const auto& p : params_) {
      lo.push_back(p.scale == Scale::Log ? std::log(p.lower) : p.lower);
      hi.push_back(p.scale == Scale::Log ? std::log(p.upper) : p.upper);
    }
    return {lo, hi};
  }

  /// Maps an internal vector to the configuration the learner sees.
  std::vector<double> to_eval_space(std::span<const double> z) const {
    if (z.size() != dim()) throw Error(ErrorKind::InvalidDimension, "internal vector has wrong length");
    require_finite(z);
    const BoxDomain box = internal_domain();
    std::vector<double> out(dim());
    for (std::size_t i = 0; i < dim(); ++i) {
      const double tol = 1e-12 * std::max(1.0, box.upper[i] - box.lower[i]);
      if (z[i] < box.lower[i] - tol || z[i] > box.upper[i] + tol) {
        throw Error(ErrorKind::Domain, "parameter " + params_[i].name + " outside internal box");
      }
      double v = params_[i].scale == Scale::Log ? std::exp(z[i]) : z[i];
      if (params_[i].round_to_int) v = std::floor(v + 0.5);
      out[i] = v;
    }
    return out;
  }

  /// Inverse of to_eval_space for non-integer parameters.
  std::vector<double> to_internal(std::span<const double> x) const {
    if (x.size() != dim()) throw Error(ErrorKind::InvalidDimension, "configuration has wrong length");
    std::vector<double> out(dim());
    for (std::size_t i = 0; i < dim(); ++i) out[i] = params_[i].scale == Scale::Log ? std::log(x[i]) : x[i];
    return out;
  }

 private:
  std::vector<Param> params_;
};

/// XGBoost space with nrounds and eta (2D), lambda (3D), gamma and alpha (5D).
inline SearchSpace xgboost_space(int dim) {
  std::vector<Param> all = {
      {"nrounds", 3.0, 2000.0, Scale::Log, true},
      {"eta", std::exp(-7.0), std::exp(0.0), Scale::Log, false},
      {"lambda", std::exp(-7.0), std::exp(7.0), Scale::Log, false},
      {"gamma", std::exp(-10.0), std::exp(2.0), Scale::Log, false},
      {"alpha", std::exp(-7.0), std::exp(7.0), Scale::Log, false},
  };
  if (dim != 2 && dim != 3 && dim != 5) throw Error(ErrorKind::InvalidDimension, "space dim must be 2, 3 or 5");
  all.resize(static_cast<std::size_t>(dim));
  return SearchSpace(all);
}

/// Toy learner space; dimensions are added cumulatively in the same way.
/// iterations counts the uniform base model as round 1.
inline SearchSpace toy_space(int dim) {
  std::vector<Param> all = {
      {"iterations", 1.0, 500.0, Scale::Log, true},
      {"learning_rate", std::exp(-7.0), std::exp(0.0), Scale::Log, false},
      {"l2", std::exp(-7.0), std::exp(7.0), Scale::Log, false},
      {"min_delta", std::exp(-10.0), std::exp(2.0), Scale::Log, false},
      {"l1", std::exp(-7.0), std::exp(7.0), Scale::Log, false},
  };
  if (dim != 2 && dim != 3 && dim != 5) throw Error(ErrorKind::InvalidDimension, "toy space dim must be 2, 3 or 5");
  all.resize(static_cast<std::size_t>(dim));
  return SearchSpace(all);
}

inline constexpr double kProbClamp = 1e-15;

/// Mean negative log-probability of the true class.
/// probs: n x g, rows summing to one.
inline double logloss(const Matrix& probs, std::span<const int> labels) {
  if (probs.rows() != static_cast<Eigen::Index>(labels.size())) {
    throw Error(ErrorKind::InvalidInput, "probability rows do not match label count");
  }
  if (labels.empty()) throw Error(ErrorKind::InvalidInput, "no observations");
  const auto g = probs.cols();
  double total = 0.0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    double row = 0.0;
    for (Eigen::Index k = 0; k < g; ++k) {
      const double p = probs(i, k);
      if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::InvalidProbabilities, "probability outside [0,1]");
      row += p;
    }
    if (std::abs(row - 1.0) > 1e-6) throw Error(ErrorKind::InvalidProbabilities, "row does not sum to 1");
    const int label = labels[static_cast<std::size_t>(i)];
    if (label < 0 || label >= g) throw Error(ErrorKind::InvalidInput, "label index out of range");
    const double p = std::clamp(probs(i, label), kProbClamp, 1.0 - kProbClamp);
    total -= std::log(p);
  }
  return total / static_cast<double>(labels.size());
}

struct Dataset {
  std::string name;
  Matrix X;  // standardized, scaled by 1/sqrt(p)
  std::vector<int> y;
  int classes = 0;
};

/// Reads a numeric CSV with a header row; the last column holds integer labels 0..g-1.
inline Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open data set " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    if (vals.size() < 2) throw Error(ErrorKind::Io, "data set row needs features and a label");
    labels.push_back(static_cast<int>(vals.back()));
    vals.pop_back();
    if (!rows.empty() && rows.front().size() != vals.size()) throw Error(ErrorKind::Io, "ragged data set");
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw Error(ErrorKind::Io, "empty data set " + path.string());

  Dataset ds;
  ds.name = path.stem().string();
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto p = static_cast<Eigen::Index>(rows.front().size());
  ds.X.resize(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) ds.X(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  for (Eigen::Index j = 0; j < p; ++j) {
    const double mean = ds.X.col(j).mean();
    const double sd = std::sqrt((ds.X.col(j).array() - mean).square().sum() / static_cast<double>(n - 1));
    ds.X.col(j) = (ds.X.col(j).array() - mean) / (sd > 0.0 ? sd : 1.0);
  }
  ds.X /= std::sqrt(static_cast<double>(p));
  ds.y = std::move(labels);
  ds.classes = *std::max_element(ds.y.begin(), ds.y.end()) + 1;
  for (int label : ds.y) {
    if (label < 0) throw Error(ErrorKind::Io, "negative class label");
  }
  return ds;
}

/// Hyperparameters of the logistic learner. Knobs absent from a space keep these defaults.
struct LearnerSettings {
  int iterations = 100;
  double learning_rate = 0.1;
  double l2 = 1e-3;
  double min_delta = 0.0;  // early-stop tolerance on training loss; 0 disables
  double l1 = 0.0;
};

struct LinearModel {
  Matrix weights;  // p x g
  Vector bias;     // g

  Matrix predict_proba(const Matrix& X) const {
    Matrix logits = X * weights;
    logits.rowwise() += bias.transpose();
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      const double m = logits.row(i).maxCoeff();
      logits.row(i) = (logits.row(i).array() - m).exp();
      logits.row(i) /= logits.row(i).sum();
    }
    return logits;
  }
};

/// Full-batch gradient descent on the multinomial logistic loss. Round 1 is the
/// zero-weight (uniform) model; every further round is one proximal gradient step.
inline LinearModel train_logistic(const Matrix& X, std::span<const int> y, int classes, const LearnerSettings& s) {
  const auto n = X.rows();
  LinearModel model{Matrix::Zero(X.cols(), classes), Vector::Zero(classes)};
  Matrix onehot = Matrix::Zero(n, classes);
  for (Eigen::Index i = 0; i < n; ++i) onehot(i, y[static_cast<std::size_t>(i)]) = 1.0;

  double prev_loss = std::numeric_limits<double>::infinity();
  for (int round = 1; round < s.iterations; ++round) {
    const Matrix probs = model.predict_proba(X);
    if (s.min_delta > 0.0) {
      double loss = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        loss -= std::log(std::max(probs(i, y[static_cast<std::size_t>(i)]), kProbClamp));
      }
      loss /= static_cast<double>(n);
      if (prev_loss - loss < s.min_delta) break;
      prev_loss = loss;
    }
    const Matrix resid = probs - onehot;
    const Matrix grad_w = X.transpose() * resid / static_cast<double>(n);
    const Vector grad_b = resid.colwise().sum().transpose() / static_cast<double>(n);
    model.weights -= s.learning_rate * grad_w;
    model.weights /= 1.0 + s.learning_rate * s.l2;
    if (s.l1 > 0.0) {
      const double t = s.learning_rate * s.l1;
      model.weights = model.weights.unaryExpr([t](double w) {
        return w > t ? w - t : (w < -t ? w + t : 0.0);
      });
    }
    model.bias -= s.learning_rate * grad_b;
  }
  return model;
}

struct ToyHpoProblem {
  std::shared_ptr<const Dataset> data;
  SearchSpace space;
  std::vector<int> fold_of;  // fold id per row, frozen at construction
  int folds = 10;

  std::string id() const { return data->name + "_" + std::to_string(space.dim()); }
};

inline ToyHpoProblem make_toy_problem(std::shared_ptr<const Dataset> data, int dim, std::uint64_t fold_seed,
                                      int folds = 10) {
  ToyHpoProblem p;
  p.space = toy_space(dim);
  p.folds = folds;
  const auto n = static_cast<std::size_t>(data->X.rows());
  if (n < static_cast<std::size_t>(folds)) throw Error(ErrorKind::InvalidInput, "data set smaller than fold count");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(fold_seed ^ fnv1a(data->name));
  rng.shuffle(order.begin(), order.end());
  p.fold_of.assign(n, 0);
  for (std::size_t k = 0; k < n; ++k) p.fold_of[order[k]] = static_cast<int>(k % static_cast<std::size_t>(folds));
  p.data = std::move(data);
  return p;
}

inline LearnerSettings settings_from(const SearchSpace& space, std::span<const double> cfg) {
  LearnerSettings s;
  for (std::size_t i = 0; i < space.dim(); ++i) {
    const auto& name = space.params()[i].name;
    if (name == "iterations") s.iterations = static_cast<int>(cfg[i]);
    else if (name == "learning_rate") s.learning_rate = cfg[i];
    else if (name == "l2") s.l2 = cfg[i];
    else if (name == "min_delta") s.min_delta = cfg[i];
    else if (name == "l1") s.l1 = cfg[i];
  }
  return s;
}

/// Mean held-out logloss over the problem's fixed folds.
inline double evaluate_toy(const ToyHpoProblem& problem, std::span<const double> z) {
  const auto cfg = problem.space.to_eval_space(z);
  const LearnerSettings s = settings_from(problem.space, cfg);
  const Dataset& ds = *problem.data;
  double total = 0.0;
  for (int fold = 0; fold < problem.folds; ++fold) {
    std::vector<Eigen::Index> train;
    std::vector<Eigen::Index> test;
    for (std::size_t i = 0; i < problem.fold_of.size(); ++i) {
      (problem.fold_of[i] == fold ? test : train).push_back(static_cast<Eigen::Index>(i));
    }
    const Matrix Xtr = ds.X(train, Eigen::all);
    const Matrix Xte = ds.X(test, Eigen::all);
    std::vector<int> ytr;
    std::vector<int> yte;
    for (auto i : train) ytr.push_back(ds.y[static_cast<std::size_t>(i)]);
    for (auto i : test) yte.push_back(ds.y[static_cast<std::size_t>(i)]);
    const LinearModel model = train_logistic(Xtr, ytr, ds.classes, s);
    total += logloss(model.predict_proba(Xte), yte);
  }
  return total / static_cast<double>(problem.folds);
}

inline Problem make_problem(ToyHpoProblem toy) {
  auto shared = std::make_shared<const ToyHpoProblem>(std::move(toy));
  Problem p;
  p.id = shared->id();
  p.cls = ProblemClass::Hpo;
  p.domain = shared->space.internal_domain();
  p.evaluate = [shared](std::span<const double> z) { return evaluate_toy(*shared, z); };
  return p;
}

}  // namespace hpoela::hpo
