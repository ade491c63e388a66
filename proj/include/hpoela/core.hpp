#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace hpoela {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class ErrorKind {
  InvalidFunction,
  InvalidDimension,
  InvalidInput,
  Domain,
  InvalidProbabilities,
  EmptyDesign,
  DegenerateSample,
  SingularFit,
  InsufficientSample,
  DegenerateFitness,
  DegenerateStep,
  Budget,
  BudgetExceeded,
  Evaluation,
  Protocol,
  Timeout,
  BrokenChannel,
  DegenerateProblem,
  MissingBaseline,
  IncompleteData,
  UnsupportedK,
  Stratification,
  EmptyMatrix,
  Config,
  Schema,
  Io,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidFunction: return "invalid-function";
    case ErrorKind::InvalidDimension: return "invalid-dimension";
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::InvalidProbabilities: return "invalid-probabilities";
    case ErrorKind::EmptyDesign: return "empty-design";
    case ErrorKind::DegenerateSample: return "degenerate-sample";
    case ErrorKind::SingularFit: return "singular-fit";
    case ErrorKind::InsufficientSample: return "insufficient-sample";
    case ErrorKind::DegenerateFitness: return "degenerate-fitness";
    case ErrorKind::DegenerateStep: return "degenerate-step";
    case ErrorKind::Budget: return "budget";
    case ErrorKind::BudgetExceeded: return "budget-exceeded";
    case ErrorKind::Evaluation: return "evaluation";
    case ErrorKind::Protocol: return "protocol";
    case ErrorKind::Timeout: return "timeout";
    case ErrorKind::BrokenChannel: return "broken-channel";
    case ErrorKind::DegenerateProblem: return "degenerate-problem";
    case ErrorKind::MissingBaseline: return "missing-baseline";
    case ErrorKind::IncompleteData: return "incomplete-data";
    case ErrorKind::UnsupportedK: return "unsupported-k";
    case ErrorKind::Stratification: return "stratification";
    case ErrorKind::EmptyMatrix: return "empty-matrix";
    case ErrorKind::Config: return "config";
    case ErrorKind::Schema: return "schema";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

/// Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Seedable random stream. All stochastic components draw from one of these,
/// so identical seeds give bitwise-identical results within one build.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_); }
  std::uint64_t next() { return engine_(); }

  template <typename It>
  void shuffle(It first, It last) {
    // Fisher-Yates on our own draws; std::shuffle's algorithm is unspecified.
    for (auto n = static_cast<std::size_t>(last - first); n > 1; --n) {
      std::swap(first[n - 1], first[index(n)]);
    }
  }

  Rng split() { return Rng(next()); }

 private:
  std::mt19937_64 engine_;
};

/// 64-bit FNV-1a. Stable across platforms, unlike std::hash.
inline std::uint64_t fnv1a(std::string_view text, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

struct BoxDomain {
  std::vector<double> lower;
  std::vector<double> upper;

  BoxDomain() = default;
  BoxDomain(std::vector<double> lo, std::vector<double> hi) : lower(std::move(lo)), upper(std::move(hi)) {
    if (lower.empty() || lower.size() != upper.size()) {
      throw Error(ErrorKind::InvalidDimension, "box bounds must have equal non-zero length");
    }
    for (std::size_t i = 0; i < lower.size(); ++i) {
      if (!(lower[i] < upper[i])) throw Error(ErrorKind::InvalidInput, "box lower bound must be below upper bound");
    }
  }

  static BoxDomain uniform(std::size_t dim, double lo, double hi) {
    return BoxDomain(std::vector<double>(dim, lo), std::vector<double>(dim, hi));
  }

  std::size_t dim() const { return lower.size(); }

  bool contains(std::span<const double> x, double tol = 0.0) const {
    if (x.size() != dim()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!(x[i] >= lower[i] - tol && x[i] <= upper[i] + tol)) return false;
    }
    return true;
  }
};

enum class ProblemClass { Bbob, Hpo };

inline const char* to_string(ProblemClass c) { return c == ProblemClass::Bbob ? "BBOB" : "HPO"; }

/// A bounded continuous minimization problem with a deterministic evaluator.
/// The evaluator receives points in the problem's own domain.
struct Problem {
  std::string id;
  ProblemClass cls = ProblemClass::Bbob;
  BoxDomain domain;
  std::function<double(std::span<const double>)> evaluate;

  std::size_t dim() const { return domain.dim(); }
};

inline void require_finite(std::span<const double> x) {
  for (double v : x) {
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidInput, "non-finite coordinate");
  }
}

inline std::span<const double> as_span(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

inline Vector to_vector(std::span<const double> x) {
  Vector v(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) v[static_cast<Eigen::Index>(i)] = x[i];
  return v;
}

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace hpoela
