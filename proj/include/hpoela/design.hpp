#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "core.hpp"

namespace hpoela::design {

struct Design {
  Matrix X;  // n x d, unit cube
  Vector y;  // raw objective values
  std::string problem_id;
  std::uint64_t seed = 0;
};

struct ElaSample {
  Matrix X;
  Vector z;
};

/// Smallest pairwise Euclidean distance among the rows of X.
inline double min_pairwise_distance(const Matrix& X) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < X.rows(); ++j) best = std::min(best, (X.row(i) - X.row(j)).squaredNorm());
  }
  return std::sqrt(best);
}

namespace detail {

inline double stratum_point(std::size_t k, std::size_t n, double u) {
  const double nd = static_cast<double>(n);
  double v = (static_cast<double>(k) + u) / nd;
  const auto kd = static_cast<double>(k);
  while (std::floor(v * nd) > kd) v = std::nextafter(v, 0.0);
  while (std::floor(v * nd) < kd) v = std::nextafter(v, 1.0);
  return v;
}

inline Matrix random_lhs(std::size_t n, std::size_t d, Rng& rng) {
  Matrix X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::vector<std::size_t> perm(n);
  for (std::size_t j = 0; j < d; ++j) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(perm.begin(), perm.end());
    for (std::size_t i = 0; i < n; ++i) {
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = stratum_point(perm[i], n, rng.uniform());
    }
  }
  return X;
}

}  // namespace detail

/// Maximin Latin hypercube: best of `restarts` random hypercubes by minimum pairwise distance.
inline Matrix lhs_minmax(std::size_t n, std::size_t d, std::uint64_t seed, std::size_t restarts = 100) {
  if (n == 0) throw Error(ErrorKind::EmptyDesign, "design needs at least one point");
  if (d == 0) throw Error(ErrorKind::InvalidDimension, "design needs at least one dimension");
  if (restarts == 0) throw Error(ErrorKind::InvalidInput, "restarts must be >= 1");
  Rng rng(seed);
  Matrix best;
  double best_score = -1.0;
  for (std::size_t r = 0; r < restarts; ++r) {
    Matrix cand = detail::random_lhs(n, d, rng);
    const double score = n > 1 ? min_pairwise_distance(cand) : 0.0;
    if (score > best_score) {
      best_score = score;
      best = std::move(cand);
    }
  }
  return best;
}

inline Vector normalize(const BoxDomain& domain, std::span<const double> x) {
  if (x.size() != domain.dim()) throw Error(ErrorKind::InvalidDimension, "point length does not match domain");
  Vector u(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = domain.upper[i] - domain.lower[i];
    if (!(x[i] >= domain.lower[i] - 1e-12 * w && x[i] <= domain.upper[i] + 1e-12 * w)) {
      throw Error(ErrorKind::Domain, "point outside domain");
    }
    u[static_cast<Eigen::Index>(i)] = std::clamp((x[i] - domain.lower[i]) / w, 0.0, 1.0);
  }
  return u;
}

inline std::vector<double> denormalize(const BoxDomain& domain, std::span<const double> u) {
  if (u.size() != domain.dim()) throw Error(ErrorKind::InvalidDimension, "point length does not match domain");
  std::vector<double> x(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!(u[i] >= -1e-12 && u[i] <= 1.0 + 1e-12)) throw Error(ErrorKind::Domain, "point outside unit cube");
    const double v = domain.lower[i] + std::clamp(u[i], 0.0, 1.0) * (domain.upper[i] - domain.lower[i]);
    x[i] = std::clamp(v, domain.lower[i], domain.upper[i]);
  }
  return x;
}

/// (y - mean) / sd with the n-1 denominator.
inline Vector standardize_y(const Vector& y) {
  if (y.size() < 2) throw Error(ErrorKind::InsufficientSample, "standardization needs at least two values");
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!std::isfinite(y[i])) throw Error(ErrorKind::DegenerateSample, "non-finite objective value");
  }
  const double mean = y.mean();
  const double sd = std::sqrt((y.array() - mean).square().sum() / static_cast<double>(y.size() - 1));
  if (!(sd > 0.0)) throw Error(ErrorKind::DegenerateSample, "constant objective values");
  return (y.array() - mean) / sd;
}

/// Evaluates a maximin LHS of n points on the problem.
inline Design make_design(const Problem& problem, std::size_t n, std::uint64_t seed, std::size_t restarts = 100) {
  Design des;
  des.problem_id = problem.id;
  des.seed = seed;
  des.X = lhs_minmax(n, problem.dim(), seed, restarts);
  des.y.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < des.X.rows(); ++i) {
    const Vector row = des.X.row(i).transpose();
    des.y[i] = problem.evaluate(denormalize(problem.domain, as_span(row)));
  }
  return des;
}

inline ElaSample make_ela_sample(const Design& des) { return {des.X, standardize_y(des.y)}; }

/// Header x1..xd,y; values printed with round-trip precision.
inline void write_csv(std::ostream& os, const Design& des) {
  for (Eigen::Index j = 0; j < des.X.cols(); ++j) os << "x" << (j + 1) << ",";
  os << "y\n";
  char buf[32];
  for (Eigen::Index i = 0; i < des.X.rows(); ++i) {
    for (Eigen::Index j = 0; j < des.X.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", des.X(i, j));
      os << buf << ",";
    }
    std::snprintf(buf, sizeof(buf), "%.17g", des.y[i]);
    os << buf << "\n";
  }
}

}  // namespace hpoela::design
