#pragma once

// Exploratory landscape analysis features on a standardized sample:
// ela_meta, ela_distr, nbc, disp and ic.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "design.hpp"

namespace hpoela::ela {

using design::ElaSample;

/// Ordered name -> value map.
class FeatureVector {
 public:
  void add(std::string name, double value) { entries_.emplace_back(std::move(name), value); }

  void append(const FeatureVector& other) {
    entries_.insert(entries_.end(), other.entries_.begin(), other.entries_.end());
  }

  double at(const std::string& name) const {
    for (const auto& [k, v] : entries_) {
      if (k == name) return v;
    }
    throw Error(ErrorKind::InvalidInput, "unknown feature " + name);
  }

  std::size_t size() const { return entries_.size(); }
  const std::vector<std::pair<std::string, double>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, double>> entries_;
};

inline constexpr std::array<double, 4> kDispQuantiles = {0.02, 0.05, 0.10, 0.25};

inline std::string quantile_tag(double q) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "%02d", static_cast<int>(std::lround(q * 100.0)));
  return buf;
}

/// The 38 feature names in export order.
inline std::vector<std::string> catalog() {
  std::vector<std::string> names = {
      "ela_meta.lin_simple.adj_r2",      "ela_meta.lin_simple.intercept",   "ela_meta.lin_simple.coef.min",
      "ela_meta.lin_simple.coef.max",    "ela_meta.lin_simple.coef.max_by_min", "ela_meta.lin_w_interact.adj_r2",
      "ela_meta.quad_simple.adj_r2",     "ela_meta.quad_simple.cond",       "ela_meta.quad_w_interact.adj_r2",
      "ela_distr.skewness",              "ela_distr.kurtosis",              "ela_distr.number_of_peaks",
      "nbc.nn_nb.sd_ratio",              "nbc.nn_nb.mean_ratio",            "nbc.nn_nb.cor",
      "nbc.dist_ratio.coeff_var",        "nbc.nb_fitness.cor",
  };
  for (const char* kind : {"ratio", "diff"}) {
    for (const char* stat : {"mean", "median"}) {
      for (double q : kDispQuantiles) names.push_back(std::string("disp.") + kind + "_" + stat + "_" + quantile_tag(q));
    }
  }
  for (const char* n : {"ic.h.max", "ic.eps.s", "ic.eps.max", "ic.eps.ratio", "ic.m0"}) names.emplace_back(n);
  return names;
}

namespace stats {

inline double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sd(std::span<const double> v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Pearson correlation; 0 when either variable is constant.
inline double pearson(std::span<const double> a, std::span<const double> b) {
  const double ma = mean(a);
  const double mb = mean(b);
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

/// Sample quantile, linear interpolation between order statistics.
inline double quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace stats

inline double distance(const Matrix& X, Eigen::Index i, Eigen::Index j) { return (X.row(i) - X.row(j)).norm(); }

// ---------------------------------------------------------------- ela_meta

struct LinearFit {
  Vector coef;
  double adj_r2 = 0.0;
};

inline LinearFit least_squares(const Matrix& A, const Vector& z) {
  const auto n = A.rows();
  const auto k = A.cols();
  if (n <= k) throw Error(ErrorKind::InsufficientSample, "need more observations than model coefficients");
  Eigen::ColPivHouseholderQR<Matrix> qr(A);
  if (qr.rank() < k) throw Error(ErrorKind::SingularFit, "rank-deficient model matrix");
  LinearFit fit;
  fit.coef = qr.solve(z);
  const double ss_res = (z - A * fit.coef).squaredNorm();
  const double ss_tot = (z.array() - z.mean()).square().sum();
  if (!(ss_tot > 0.0)) throw Error(ErrorKind::DegenerateSample, "constant response");
  const double r2 = 1.0 - ss_res / ss_tot;
  fit.adj_r2 = 1.0 - (1.0 - r2) * static_cast<double>(n - 1) / static_cast<double>(n - k);
  return fit;
}

/// Model matrix: intercept, linear terms, then optional interactions and squares.
inline Matrix model_matrix(const Matrix& X, bool interactions, bool squares) {
  const auto n = X.rows();
  const auto d = X.cols();
  Eigen::Index cols = 1 + d;
  if (interactions) cols += d * (d - 1) / 2;
  if (squares) cols += d;
  Matrix A(n, cols);
  A.col(0).setOnes();
  A.middleCols(1, d) = X;
  Eigen::Index c = 1 + d;
  if (interactions) {
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = i + 1; j < d; ++j) A.col(c++) = X.col(i).cwiseProduct(X.col(j));
    }
  }
  if (squares) {
    for (Eigen::Index i = 0; i < d; ++i) A.col(c++) = X.col(i).cwiseAbs2();
  }
  return A;
}

/// Squared-term coefficients at or below this fraction of the response spread count as no curvature.
inline constexpr double kFlatCurvature = 1e-10;

inline FeatureVector features_ela_meta(const ElaSample& s) {
  const auto d = s.X.cols();
  const LinearFit lin = least_squares(model_matrix(s.X, false, false), s.z);
  const LinearFit lin_int = least_squares(model_matrix(s.X, true, false), s.z);
  const LinearFit quad = least_squares(model_matrix(s.X, false, true), s.z);
  const LinearFit quad_int = least_squares(model_matrix(s.X, true, true), s.z);

  const Vector lin_abs = lin.coef.tail(d).cwiseAbs();
  const Vector quad_abs = quad.coef.tail(d).cwiseAbs();
  if (!(lin_abs.minCoeff() > 0.0)) throw Error(ErrorKind::DegenerateSample, "zero linear coefficient");
  // a response with no curvature above roundoff (e.g. an exactly linear one)
  // has equal, zero curvature in every direction: cond is 1
  const double spread = (s.z.array() - s.z.mean()).abs().maxCoeff();
  const bool flat = quad_abs.maxCoeff() <= kFlatCurvature * spread;
  if (!flat && !(quad_abs.minCoeff() > 0.0)) throw Error(ErrorKind::DegenerateSample, "zero quadratic coefficient");

  FeatureVector f;
  f.add("ela_meta.lin_simple.adj_r2", lin.adj_r2);
  f.add("ela_meta.lin_simple.intercept", lin.coef[0]);
  f.add("ela_meta.lin_simple.coef.min", lin_abs.minCoeff());
  f.add("ela_meta.lin_simple.coef.max", lin_abs.maxCoeff());
  f.add("ela_meta.lin_simple.coef.max_by_min", lin_abs.maxCoeff() / lin_abs.minCoeff());
  f.add("ela_meta.lin_w_interact.adj_r2", lin_int.adj_r2);
  f.add("ela_meta.quad_simple.adj_r2", quad.adj_r2);
  f.add("ela_meta.quad_simple.cond", flat ? 1.0 : quad_abs.maxCoeff() / quad_abs.minCoeff());
  f.add("ela_meta.quad_w_interact.adj_r2", quad_int.adj_r2);
  return f;
}

// --------------------------------------------------------------- ela_distr

inline constexpr int kKdeGrid = 512;
inline constexpr double kPeakFraction = 0.1;

/// Local maxima of a Gaussian KDE (Silverman bandwidth) that reach
/// kPeakFraction of the global density maximum.
inline int count_density_peaks(std::span<const double> z) {
  const std::vector<double> v(z.begin(), z.end());
  const double sd = stats::sd(z);
  const double iqr = stats::quantile(v, 0.75) - stats::quantile(v, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd;
  if (!(spread > 0.0)) throw Error(ErrorKind::DegenerateSample, "constant sample has no density");
  const double h = 0.9 * spread * std::pow(static_cast<double>(z.size()), -0.2);
  const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  const double lo = *mn - 3.0 * h;
  const double hi = *mx + 3.0 * h;

  std::vector<double> dens(kKdeGrid, 0.0);
  for (int g = 0; g < kKdeGrid; ++g) {
    const double t = lo + (hi - lo) * g / static_cast<double>(kKdeGrid - 1);
    double s = 0.0;
    for (double x : v) {
      const double u = (t - x) / h;
      s += std::exp(-0.5 * u * u);
    }
    dens[static_cast<std::size_t>(g)] = s;
  }
  const double top = *std::max_element(dens.begin(), dens.end());
  int peaks = 0;
  for (std::size_t g = 0; g < dens.size(); ++g) {
    const double left = g > 0 ? dens[g - 1] : -1.0;
    const double right = g + 1 < dens.size() ? dens[g + 1] : -1.0;
    if (dens[g] > left && dens[g] >= right && dens[g] >= kPeakFraction * top) ++peaks;
  }
  return peaks;
}

inline FeatureVector features_ela_distr(const ElaSample& s) {
  const auto n = s.z.size();
  if (n < 4) throw Error(ErrorKind::InsufficientSample, "ela_distr needs n >= 4");
  const double m = s.z.mean();
  const Eigen::ArrayXd c = s.z.array() - m;
  const double m2 = c.square().mean();
  if (!(m2 > 0.0)) throw Error(ErrorKind::DegenerateSample, "constant objective values");
  const double m3 = c.cube().mean();
  const double m4 = c.square().square().mean();
  FeatureVector f;
  f.add("ela_distr.skewness", m3 / std::pow(m2, 1.5));
  f.add("ela_distr.kurtosis", m4 / (m2 * m2) - 3.0);
  f.add("ela_distr.number_of_peaks", count_density_peaks(as_span(s.z)));
  return f;
}

// --------------------------------------------------------------------- nbc

struct NearestBetter {
  std::vector<double> nn_dist;
  std::vector<double> nb_dist;
  std::vector<int> nb_index;  // -1 for points without a strictly better point
};

/// Nearest-neighbour and nearest-better distances. Points with no strictly
/// better point get the largest distance from themselves to any other point.
inline NearestBetter nearest_better(const ElaSample& s) {
  const auto n = s.X.rows();
  NearestBetter nb;
  nb.nn_dist.assign(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  nb.nb_dist.assign(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  nb.nb_index.assign(static_cast<std::size_t>(n), -1);
  Matrix dist(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    dist(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) dist(i, j) = dist(j, i) = distance(s.X, i, j);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    double farthest = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dij = dist(i, j);
      nb.nn_dist[ui] = std::min(nb.nn_dist[ui], dij);
      farthest = std::max(farthest, dij);
      if (s.z[j] < s.z[i] && dij < nb.nb_dist[ui]) {
        nb.nb_dist[ui] = dij;
        nb.nb_index[ui] = static_cast<int>(j);
      }
    }
    if (nb.nb_index[ui] < 0) nb.nb_dist[ui] = farthest;
    if (!(nb.nn_dist[ui] > 0.0)) throw Error(ErrorKind::InvalidInput, "nbc needs pairwise-distinct points");
  }
  return nb;
}

inline FeatureVector features_nbc(const ElaSample& s) {
  const auto n = s.X.rows();
  if (n < 3) throw Error(ErrorKind::InsufficientSample, "nbc needs n >= 3");
  if (s.z.maxCoeff() == s.z.minCoeff()) throw Error(ErrorKind::DegenerateFitness, "all objective values equal");
  const NearestBetter nb = nearest_better(s);

  std::vector<double> ratio(nb.nn_dist.size());
  std::vector<double> indegree(nb.nn_dist.size(), 0.0);
  for (std::size_t i = 0; i < ratio.size(); ++i) {
    ratio[i] = nb.nn_dist[i] / nb.nb_dist[i];
    if (nb.nb_index[i] >= 0) indegree[static_cast<std::size_t>(nb.nb_index[i])] += 1.0;
  }
  const std::vector<double> z(s.z.data(), s.z.data() + n);
  const double nb_sd = stats::sd(nb.nb_dist);
  const double ratio_mean = stats::mean(ratio);
  if (!(nb_sd > 0.0) || !(ratio_mean > 0.0)) throw Error(ErrorKind::DegenerateSample, "nbc distance statistics vanish");

  FeatureVector f;
  f.add("nbc.nn_nb.sd_ratio", stats::sd(nb.nn_dist) / nb_sd);
  f.add("nbc.nn_nb.mean_ratio", stats::mean(nb.nn_dist) / stats::mean(nb.nb_dist));
  f.add("nbc.nn_nb.cor", stats::pearson(nb.nn_dist, nb.nb_dist));
  f.add("nbc.dist_ratio.coeff_var", stats::sd(ratio) / ratio_mean);
  f.add("nbc.nb_fitness.cor", stats::pearson(indegree, z));
  return f;
}

// -------------------------------------------------------------------- disp

inline FeatureVector features_disp(const ElaSample& s, std::span<const double> quantiles = kDispQuantiles) {
  const auto n = s.X.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return s.z[a] < s.z[b]; });

  auto pairwise = [&](std::size_t m) {
    std::vector<double> out;
    out.reserve(m * (m - 1) / 2);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) out.push_back(distance(s.X, order[i], order[j]));
    }
    return out;
  };
  if (n < 2) throw Error(ErrorKind::InsufficientSample, "disp needs n >= 2");
  const std::vector<double> all = pairwise(static_cast<std::size_t>(n));
  const double all_mean = stats::mean(all);
  const double all_median = stats::median(all);

  std::vector<double> mean_q;
  std::vector<double> median_q;
  for (double q : quantiles) {
    const auto m = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n) - 1e-9));
    if (m < 2) throw Error(ErrorKind::InsufficientSample, "disp quantile subset has fewer than 2 points");
    const std::vector<double> sub = pairwise(std::min<std::size_t>(m, static_cast<std::size_t>(n)));
    mean_q.push_back(stats::mean(sub));
    median_q.push_back(stats::median(sub));
  }
  FeatureVector f;
  for (std::size_t i = 0; i < quantiles.size(); ++i) f.add("disp.ratio_mean_" + quantile_tag(quantiles[i]), mean_q[i] / all_mean);
  for (std::size_t i = 0; i < quantiles.size(); ++i) f.add("disp.ratio_median_" + quantile_tag(quantiles[i]), median_q[i] / all_median);
  for (std::size_t i = 0; i < quantiles.size(); ++i) f.add("disp.diff_mean_" + quantile_tag(quantiles[i]), mean_q[i] - all_mean);
  for (std::size_t i = 0; i < quantiles.size(); ++i) f.add("disp.diff_median_" + quantile_tag(quantiles[i]), median_q[i] - all_median);
  return f;
}

// ---------------------------------------------------------------------- ic

inline constexpr double kIcSettling = 0.05;

/// {0} followed by 1000 log-spaced values in [1e-5, 1e15].
inline std::vector<double> ic_epsilon_grid() {
  std::vector<double> eps;
  eps.reserve(1001);
  eps.push_back(0.0);
  for (int i = 0; i < 1000; ++i) eps.push_back(std::pow(10.0, -5.0 + 20.0 * i / 999.0));
  return eps;
}

/// Greedy nearest-neighbour tour from row 0; ties go to the lower index.
inline std::vector<Eigen::Index> nearest_neighbor_tour(const Matrix& X) {
  const auto n = X.rows();
  std::vector<Eigen::Index> tour{0};
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  used[0] = true;
  Eigen::Index cur = 0;
  for (Eigen::Index step = 1; step < n; ++step) {
    Eigen::Index next = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      const double dj = (X.row(cur) - X.row(j)).squaredNorm();
      if (dj < best) {
        best = dj;
        next = j;
      }
    }
    used[static_cast<std::size_t>(next)] = true;
    tour.push_back(next);
    cur = next;
  }
  return tour;
}

/// Slopes between consecutive tour points.
inline std::vector<double> tour_slopes(const ElaSample& s) {
  const auto tour = nearest_neighbor_tour(s.X);
  std::vector<double> r;
  r.reserve(tour.size() - 1);
  for (std::size_t i = 0; i + 1 < tour.size(); ++i) {
    const double step = distance(s.X, tour[i], tour[i + 1]);
    if (!(step > 0.0)) throw Error(ErrorKind::DegenerateStep, "duplicate consecutive tour points");
    r.push_back((s.z[tour[i + 1]] - s.z[tour[i]]) / step);
  }
  return r;
}

inline int slope_symbol(double r, double eps) { return r > eps ? 1 : (r < -eps ? -1 : 0); }

/// Entropy of consecutive unequal symbol pairs, log base 6.
inline double information_content(std::span<const double> slopes, double eps) {
  std::array<int, 9> counts{};
  const std::size_t pairs = slopes.size() - 1;
  for (std::size_t i = 0; i < pairs; ++i) {
    const int a = slope_symbol(slopes[i], eps) + 1;
    const int b = slope_symbol(slopes[i + 1], eps) + 1;
    ++counts[static_cast<std::size_t>(3 * a + b)];
  }
  double h = 0.0;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      if (a == b) continue;
      const int c = counts[static_cast<std::size_t>(3 * a + b)];
      if (c == 0) continue;
      const double p = c / static_cast<double>(pairs);
      h -= p * std::log(p) / std::log(6.0);
    }
  }
  return h;
}

/// Length of the symbol sequence after dropping zeros and collapsing repeats,
/// relative to the number of symbols.
inline double partial_information(std::span<const double> slopes, double eps) {
  int last = 0;
  std::size_t mu = 0;
  for (double r : slopes) {
    const int s = slope_symbol(r, eps);
    if (s != 0 && s != last) {
      ++mu;
      last = s;
    }
  }
  return static_cast<double>(mu) / static_cast<double>(slopes.size());
}

inline FeatureVector features_ic(const ElaSample& s) {
  if (s.X.rows() < 3) throw Error(ErrorKind::InsufficientSample, "ic needs n >= 3");
  const std::vector<double> slopes = tour_slopes(s);
  const std::vector<double> grid = ic_epsilon_grid();

  double h_max = -1.0;
  double eps_max = 0.0;
  double eps_s = std::numeric_limits<double>::quiet_NaN();
  for (double eps : grid) {
    const double h = information_content(slopes, eps);
    if (h > h_max) {
      h_max = h;
      eps_max = eps;
    }
    if (std::isnan(eps_s) && h < kIcSettling) eps_s = eps;
  }
  if (std::isnan(eps_s)) throw Error(ErrorKind::DegenerateSample, "information content never settles");
  // zero epsilons are floored at the smallest positive grid value
  const double floor_eps = grid[1];
  FeatureVector f;
  f.add("ic.h.max", h_max);
  f.add("ic.eps.s", eps_s);
  f.add("ic.eps.max", eps_max);
  f.add("ic.eps.ratio", std::log10(std::max(eps_s, floor_eps) / std::max(eps_max, floor_eps)));
  f.add("ic.m0", partial_information(slopes, 0.0));
  return f;
}

/// All five feature sets in catalog order.
inline FeatureVector compute_all(const ElaSample& s) {
  FeatureVector f = features_ela_meta(s);
  f.append(features_ela_distr(s));
  f.append(features_nbc(s));
  f.append(features_disp(s));
  f.append(features_ic(s));
  for (const auto& [name, value] : f.entries()) {
    if (!std::isfinite(value)) throw Error(ErrorKind::DegenerateSample, "non-finite feature " + name);
  }
  return f;
}

}  // namespace hpoela::ela
