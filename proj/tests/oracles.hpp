#pragma once

// Independent reference implementations used by the tests. They work on plain
// std::vector data and share no code with the library.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace oracle {

using Rows = std::vector<std::vector<double>>;

inline double dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double sd(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

inline double cor(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean(a), mb = mean(b);
  double num = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - ma) * (b[i] - mb);
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) return 0.0;
  return num / std::sqrt(va) / std::sqrt(vb);
}

// ------------------------------------------------------------------ BBOB f1/f2

inline double sphere(const std::vector<double>& x, const std::vector<double>& xopt, double fopt) {
  double s = fopt;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::pow(x[i] - xopt[i], 2);
  return s;
}

// Oscillation transform written from its textbook definition.
inline double t_osz(double x) {
  if (x == 0.0) return 0.0;
  const double xh = std::log(std::fabs(x));
  double c1, c2;
  if (x > 0) {
    c1 = 10.0;
    c2 = 7.9;
  } else {
    c1 = 5.5;
    c2 = 3.1;
  }
  const double sign = x < 0 ? -1.0 : 1.0;
  return sign * std::exp(xh + 0.049 * (std::sin(c1 * xh) + std::sin(c2 * xh)));
}

inline double ellipsoid(const std::vector<double>& x, const std::vector<double>& xopt, double fopt) {
  const std::size_t d = x.size();
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double z = t_osz(x[i] - xopt[i]);
    const double e = 6.0 * static_cast<double>(i) / static_cast<double>(d - 1);
    s += std::pow(10.0, e) * z * z;
  }
  return s + fopt;
}

// ------------------------------------------------------------------------ nbc

struct Nbc {
  double sd_ratio, mean_ratio, cor, coeff_var, fitness_cor;
};

inline Nbc nbc(const Rows& X, const std::vector<double>& z) {
  const std::size_t n = X.size();
  std::vector<double> nn(n), nb(n), indeg(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<double, std::size_t>> others;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) others.push_back({dist(X[i], X[j]), j});
    }
    std::sort(others.begin(), others.end());
    nn[i] = others.front().first;
    nb[i] = others.back().first;
    for (const auto& [d, j] : others) {
      if (z[j] < z[i]) {
        nb[i] = d;
        indeg[j] += 1.0;
        break;
      }
    }
  }
  std::vector<double> ratio(n);
  for (std::size_t i = 0; i < n; ++i) ratio[i] = nn[i] / nb[i];
  return {sd(nn) / sd(nb), mean(nn) / mean(nb), cor(nn, nb), sd(ratio) / mean(ratio), cor(indeg, z)};
}

// ----------------------------------------------------------------------- disp

struct Disp {
  std::vector<double> ratio_mean, ratio_median, diff_mean, diff_median;
};

inline std::vector<double> pair_dists(const Rows& pts) {
  std::vector<double> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) out.push_back(dist(pts[i], pts[j]));
  }
  return out;
}

inline Disp disp(const Rows& X, const std::vector<double>& z, const std::vector<double>& qs) {
  std::vector<std::size_t> idx(X.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return z[a] < z[b]; });
  const auto all = pair_dists(X);
  const double am = mean(all), amed = median(all);
  Disp out;
  for (double q : qs) {
    const auto m = static_cast<std::size_t>(std::ceil(q * static_cast<double>(X.size()) - 1e-9));
    Rows best;
    for (std::size_t k = 0; k < m; ++k) best.push_back(X[idx[k]]);
    const auto sub = pair_dists(best);
    out.ratio_mean.push_back(mean(sub) / am);
    out.ratio_median.push_back(median(sub) / amed);
    out.diff_mean.push_back(mean(sub) - am);
    out.diff_median.push_back(median(sub) - amed);
  }
  return out;
}

// ------------------------------------------------------------------------- ic

// Entropy over the six ordered pairs of distinct symbols, log base 6.
inline double entropy_of_symbols(const std::vector<int>& s) {
  std::map<std::pair<int, int>, int> freq;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) freq[{s[i], s[i + 1]}]++;
  const double pairs = static_cast<double>(s.size() - 1);
  double h = 0.0;
  for (const auto& [ab, c] : freq) {
    if (ab.first == ab.second) continue;
    const double p = c / pairs;
    h += -p * std::log(p) / std::log(6.0);
  }
  return h;
}

inline std::vector<int> symbols(const std::vector<double>& slopes, double eps) {
  std::vector<int> s;
  for (double r : slopes) s.push_back(r > eps ? 1 : r < -eps ? -1 : 0);
  return s;
}

// --------------------------------------------------------------------- CART

struct BestSplit {
  int feature = -1;
  double threshold = 0.0;
  double gain = -1.0;
};

inline double gini_of(const std::vector<int>& y) {
  if (y.empty()) return 0.0;
  std::map<int, int> c;
  for (int v : y) c[v]++;
  double g = 1.0;
  for (const auto& [k, n] : c) g -= std::pow(static_cast<double>(n) / static_cast<double>(y.size()), 2);
  return g;
}

// Tries every feature and every midpoint; keeps the first strictly better
// split in (feature, threshold) order.
inline BestSplit exhaustive_split(const Rows& X, const std::vector<int>& y, std::size_t min_leaf) {
  BestSplit best;
  const double parent = gini_of(y);
  const std::size_t n = y.size();
  for (std::size_t f = 0; f < X[0].size(); ++f) {
    std::vector<double> vals;
    for (const auto& r : X) vals.push_back(r[f]);
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
      const double t = 0.5 * (vals[k] + vals[k + 1]);
      std::vector<int> l, r;
      for (std::size_t i = 0; i < n; ++i) (X[i][f] <= t ? l : r).push_back(y[i]);
      if (l.size() < min_leaf || r.size() < min_leaf) continue;
      const double child = (static_cast<double>(l.size()) * gini_of(l) + static_cast<double>(r.size()) * gini_of(r)) / n;
      const double gain = parent - child;
      if (gain > best.gain + 1e-12) best = {static_cast<int>(f), t, gain};
    }
  }
  return best;
}

// ------------------------------------------------------------------- Friedman

// Statistic from the rank-sum definition with the tie-corrected denominator,
// written out for a small table.
inline double friedman_statistic(const Rows& ranks) {
  const double n = static_cast<double>(ranks.size());
  const double k = static_cast<double>(ranks[0].size());
  double ss_treat = 0.0;
  for (std::size_t j = 0; j < ranks[0].size(); ++j) {
    double rj = 0.0;
    for (const auto& row : ranks) rj += row[j];
    ss_treat += std::pow(rj - n * (k + 1.0) / 2.0, 2);
  }
  // total variance of ranks within blocks
  double ss_err = 0.0;
  for (const auto& row : ranks) {
    for (double r : row) ss_err += std::pow(r - (k + 1.0) / 2.0, 2);
  }
  return (k - 1.0) * ss_treat / ss_err;
}

// --------------------------------------------------------------------- misc

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Every regular file under root, keyed by relative path, with its bytes.
inline std::map<std::string, std::string> tree_bytes(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  if (!std::filesystem::exists(root)) return out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[std::filesystem::relative(e.path(), root).string()] = slurp(e.path());
  }
  return out;
}

}  // namespace oracle
