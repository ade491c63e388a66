#pragma once

// Performance statistics over optimizer runs: normalized regret, ERT and ERT
// ratios against Random, rank tables, Friedman test and Nemenyi critical
// difference.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "core.hpp"
#include "optimizers.hpp"

namespace hpoela::metrics {

struct RunRecord {
  std::string problem_id;
  std::string optimizer;
  std::uint64_t seed = 0;
  int replication = 0;
  std::size_t dim = 0;
  double final_best = 0.0;
  double worst = 0.0;
  std::vector<double> incumbent;  // running minimum per evaluation
  std::size_t evals_used = 0;
};

inline RunRecord make_record(const opt::Trace& trace, int replication, std::size_t dim) {
  if (trace.evals.empty()) throw Error(ErrorKind::InvalidInput, "empty trace");
  RunRecord r;
  r.problem_id = trace.problem_id;
  r.optimizer = trace.optimizer;
  r.seed = trace.seed;
  r.replication = replication;
  r.dim = dim;
  r.worst = -std::numeric_limits<double>::infinity();
  for (const auto& e : trace.evals) {
    r.incumbent.push_back(e.incumbent);
    r.worst = std::max(r.worst, e.y);
  }
  r.final_best = r.incumbent.back();
  r.evals_used = trace.evals.size();
  return r;
}

// ------------------------------------------------------------------ regret

/// (incumbent - best_overall) / range for each step.
inline std::vector<double> normalized_regret(std::span<const double> incumbent, double best_overall, double range) {
  if (!(range > 0.0)) throw Error(ErrorKind::DegenerateProblem, "objective range is zero");
  std::vector<double> out(incumbent.size());
  for (std::size_t i = 0; i < incumbent.size(); ++i) {
    if (incumbent[i] < best_overall) throw Error(ErrorKind::InvalidInput, "incumbent below best_overall");
    out[i] = (incumbent[i] - best_overall) / range;
  }
  return out;
}

struct RegretPoint {
  std::string problem_id;
  std::string optimizer;
  std::size_t eval_index = 0;  // 1-based
  double mean = 0.0;
  double se = 0.0;
};

/// Mean and standard error of normalized regret per (problem, optimizer, eval index).
/// Shorter traces are carried forward at their final value.
inline std::vector<RegretPoint> regret_curves(const std::vector<RunRecord>& records) {
  std::map<std::string, std::pair<double, double>> bounds;  // problem -> (min, max)
  for (const auto& r : records) {
    auto [it, fresh] = bounds.try_emplace(r.problem_id, r.final_best, r.worst);
    if (!fresh) {
      it->second.first = std::min(it->second.first, r.final_best);
      it->second.second = std::max(it->second.second, r.worst);
    }
  }
  std::map<std::pair<std::string, std::string>, std::vector<std::vector<double>>> groups;
  for (const auto& r : records) {
    const auto& b = bounds.at(r.problem_id);
    groups[{r.problem_id, r.optimizer}].push_back(normalized_regret(r.incumbent, b.first, b.second - b.first));
  }
  std::vector<RegretPoint> out;
  for (const auto& [key, curves] : groups) {
    std::size_t len = 0;
    for (const auto& c : curves) len = std::max(len, c.size());
    const double n = static_cast<double>(curves.size());
    for (std::size_t t = 0; t < len; ++t) {
      double sum = 0.0;
      for (const auto& c : curves) sum += c[std::min(t, c.size() - 1)];
      const double mean = sum / n;
      double ss = 0.0;
      for (const auto& c : curves) ss += std::pow(c[std::min(t, c.size() - 1)] - mean, 2);
      const double se = curves.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
      out.push_back({key.first, key.second, t + 1, mean, se});
    }
  }
  return out;
}

// --------------------------------------------------------------------- ert

/// Sum of evaluations over all replications divided by the number of successes;
/// nullopt when nothing succeeded.
inline std::optional<double> ert(const std::vector<std::size_t>& evals_used, const std::vector<bool>& success) {
  if (evals_used.empty()) throw Error(ErrorKind::InvalidInput, "ert needs at least one replication");
  if (evals_used.size() != success.size()) throw Error(ErrorKind::InvalidInput, "ert inputs differ in length");
  double total = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < evals_used.size(); ++i) {
    total += static_cast<double>(evals_used[i]);
    hits += success[i] ? 1 : 0;
  }
  if (hits == 0) return std::nullopt;
  return total / static_cast<double>(hits);
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw Error(ErrorKind::InvalidInput, "median of empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct ErtCell {
  std::string problem_id;
  std::string optimizer;
  std::size_t dim = 0;
  double target = 0.0;
  std::size_t successes = 0;
  std::size_t replications = 0;
  double ert = 0.0;       // after the failure penalty
  bool penalized = false;
  double ratio = 0.0;     // ert / ert of Random
};

struct ErtSummary {
  std::size_t dim = 0;
  std::string optimizer;
  double mean_ratio = 0.0;       // arithmetic mean over problems
  double geometric_ratio = 0.0;
  std::size_t problems = 0;
};

struct ErtTable {
  std::vector<ErtCell> cells;  // sorted by (problem, optimizer)
  std::vector<ErtSummary> summary;  // sorted by (dim, optimizer)
};

inline constexpr double kErtPenaltyFactor = 10.0;

/// ERT of every optimizer against the per-problem target "median of Random's
/// final values", penalizing no-success cells with 10x the worst finite ERT.
inline ErtTable ert_ratio_table(const std::vector<RunRecord>& records, const std::string& baseline = "random") {
  std::map<std::string, std::map<std::string, std::vector<const RunRecord*>>> by_problem;
  for (const auto& r : records) by_problem[r.problem_id][r.optimizer].push_back(&r);

  ErtTable table;
  std::map<std::pair<std::size_t, std::string>, std::vector<double>> ratios;
  for (const auto& [pid, by_opt] : by_problem) {
    const auto base_it = by_opt.find(baseline);
    if (base_it == by_opt.end()) throw Error(ErrorKind::MissingBaseline, "no " + baseline + " runs for " + pid);
    std::vector<double> finals;
    for (const auto* r : base_it->second) finals.push_back(r->final_best);
    const double target = median(finals);

    std::vector<ErtCell> cells;
    std::optional<double> worst;
    for (const auto& [name, runs] : by_opt) {
      std::vector<std::size_t> fe;
      std::vector<bool> ok;
      for (const auto* r : runs) {
        const auto hit = std::find_if(r->incumbent.begin(), r->incumbent.end(), [&](double v) { return v <= target; });
        ok.push_back(hit != r->incumbent.end());
        fe.push_back(ok.back() ? static_cast<std::size_t>(hit - r->incumbent.begin()) + 1 : r->evals_used);
      }
      const auto e = ert(fe, ok);
      ErtCell c;
      c.problem_id = pid;
      c.optimizer = name;
      c.dim = runs.front()->dim;
      c.target = target;
      c.replications = runs.size();
      c.successes = static_cast<std::size_t>(std::count(ok.begin(), ok.end(), true));
      c.penalized = !e.has_value();
      c.ert = e.value_or(0.0);
      if (e) worst = std::max(worst.value_or(*e), *e);
      cells.push_back(c);
    }
    double base_ert = 0.0;
    for (auto& c : cells) {
      if (c.penalized) c.ert = kErtPenaltyFactor * *worst;  // baseline always succeeds at its median
      if (c.optimizer == baseline) base_ert = c.ert;
    }
    for (auto& c : cells) {
      c.ratio = c.ert / base_ert;
      ratios[{c.dim, c.optimizer}].push_back(c.ratio);
      table.cells.push_back(c);
    }
  }
  for (const auto& [key, rs] : ratios) {
    ErtSummary s;
    s.dim = key.first;
    s.optimizer = key.second;
    s.problems = rs.size();
    double sum = 0.0, logsum = 0.0;
    for (double v : rs) {
      sum += v;
      logsum += std::log(v);
    }
    s.mean_ratio = sum / static_cast<double>(rs.size());
    s.geometric_ratio = std::exp(logsum / static_cast<double>(rs.size()));
    table.summary.push_back(s);
  }
  return table;
}

// ------------------------------------------------------------------- ranks

struct RankTable {
  std::vector<std::string> problems;
  std::vector<std::string> optimizers;
  Matrix ranks;  // problems x optimizers

  Vector mean_ranks() const { return ranks.colwise().mean().transpose(); }
};

/// Ascending ranks with ties sharing their average rank.
inline std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

/// Per problem, ranks of the mean final value over replications.
inline RankTable rank_by_final(const std::vector<RunRecord>& records) {
  std::set<std::string> problems, optimizers;
  std::map<std::pair<std::string, std::string>, std::pair<double, int>> acc;
  for (const auto& r : records) {
    problems.insert(r.problem_id);
    optimizers.insert(r.optimizer);
    auto& a = acc[{r.problem_id, r.optimizer}];
    a.first += r.final_best;
    a.second += 1;
  }
  RankTable t;
  t.problems.assign(problems.begin(), problems.end());
  t.optimizers.assign(optimizers.begin(), optimizers.end());
  t.ranks.resize(static_cast<Eigen::Index>(t.problems.size()), static_cast<Eigen::Index>(t.optimizers.size()));
  for (std::size_t i = 0; i < t.problems.size(); ++i) {
    std::vector<double> means;
    for (const auto& o : t.optimizers) {
      const auto it = acc.find({t.problems[i], o});
      if (it == acc.end()) throw Error(ErrorKind::IncompleteData, "no runs for " + t.problems[i] + " / " + o);
      means.push_back(it->second.first / it->second.second);
    }
    const auto r = average_ranks(means);
    for (std::size_t j = 0; j < r.size(); ++j) t.ranks(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r[j];
  }
  return t;
}

/// Restriction of a rank table to a subset of problems (rows keep their ranks).
inline RankTable subset_rows(const RankTable& t, const std::vector<std::string>& keep) {
  RankTable s;
  s.optimizers = t.optimizers;
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < t.problems.size(); ++i) {
    if (std::find(keep.begin(), keep.end(), t.problems[i]) != keep.end()) {
      rows.push_back(static_cast<Eigen::Index>(i));
      s.problems.push_back(t.problems[i]);
    }
  }
  s.ranks = t.ranks(rows, Eigen::all);
  return s;
}

struct FriedmanResult {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
};

/// Friedman chi-squared with the tie-corrected denominator.
inline FriedmanResult friedman(const Matrix& ranks) {
  const auto n = ranks.rows();
  const auto k = ranks.cols();
  if (k < 2) throw Error(ErrorKind::InvalidInput, "friedman needs at least two treatments");
  if (n < 2) throw Error(ErrorKind::InvalidInput, "friedman needs at least two blocks");
  const double N = static_cast<double>(n), K = static_cast<double>(k);
  const Vector sums = ranks.colwise().sum().transpose();
  const double num = 12.0 * (sums.array() - N * (K + 1.0) / 2.0).square().sum();
  double ties = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<double> row(static_cast<std::size_t>(k));
    for (Eigen::Index j = 0; j < k; ++j) row[static_cast<std::size_t>(j)] = ranks(i, j);
    std::sort(row.begin(), row.end());
    for (std::size_t a = 0; a < row.size();) {
      std::size_t b = a;
      while (b + 1 < row.size() && row[b + 1] == row[a]) ++b;
      const double t = static_cast<double>(b - a + 1);
      ties += t * t * t - t;
      a = b + 1;
    }
  }
  const double den = N * K * (K + 1.0) - ties / (K - 1.0);
  FriedmanResult res;
  res.df = static_cast<int>(k - 1);
  if (num == 0.0 || den <= 0.0) return res;
  res.statistic = num / den;
  res.p_value = boost::math::gamma_q(0.5 * res.df, 0.5 * res.statistic);
  return res;
}

inline FriedmanResult friedman(const RankTable& t) { return friedman(t.ranks); }

/// Nemenyi critical distance for k treatments over n blocks (alpha 0.05 or 0.10).
inline double nemenyi_cd(int k, std::size_t n, double alpha = 0.05) {
  static constexpr double q05[] = {1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164};
  static constexpr double q10[] = {1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920};
  if (k < 2 || k > 10) throw Error(ErrorKind::UnsupportedK, "nemenyi table covers 2 <= k <= 10");
  if (n < 2) throw Error(ErrorKind::InvalidInput, "nemenyi needs at least two blocks");
  const double* q = nullptr;
  if (std::abs(alpha - 0.05) < 1e-12) {
    q = q05;
  } else if (std::abs(alpha - 0.10) < 1e-12) {
    q = q10;
  } else {
    throw Error(ErrorKind::InvalidInput, "nemenyi alpha must be 0.05 or 0.10");
  }
  const double kd = static_cast<double>(k);
  return q[k - 2] * std::sqrt(kd * (kd + 1.0) / (6.0 * static_cast<double>(n)));
}

}  // namespace hpoela::metrics
