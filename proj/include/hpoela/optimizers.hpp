#pragma once

// Five black-box minimizers behind one entry point, all working in the unit
// cube: random search, grid search, CMA-ES, generalized simulated annealing
// and GP-based Bayesian optimization with expected improvement.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"
#include "design.hpp"
#include "gp.hpp"

namespace hpoela::opt {

enum class Variant { Random, Grid, Cmaes, Gensa, Mbo };

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::Random: return "random";
    case Variant::Grid: return "grid";
    case Variant::Cmaes: return "cmaes";
    case Variant::Gensa: return "gensa";
    case Variant::Mbo: return "mbo";
  }
  return "unknown";
}

inline Variant parse_variant(const std::string& name) {
  for (Variant v : {Variant::Random, Variant::Grid, Variant::Cmaes, Variant::Gensa, Variant::Mbo}) {
    if (name == to_string(v)) return v;
  }
  throw Error(ErrorKind::Config, "unknown optimizer " + name);
}

struct CmaesParams {
  double sigma0 = 0.5;
};

struct GensaParams {
  double visiting = 2.62;     // q_v
  double acceptance = -5.0;   // q_a
  double temperature0 = 5230.0;
};

struct MboParams {
  double init_fraction = 0.08;
  int candidates_per_dim = 1000;
  int local_steps = 50;
  double local_scale = 0.05;
  gp::Settings gp;
};

struct OptimizerSpec {
  Variant variant = Variant::Random;
  CmaesParams cmaes;
  GensaParams gensa;
  MboParams mbo;

  void validate() const {
    if (variant == Variant::Cmaes && !(cmaes.sigma0 > 0.0)) throw Error(ErrorKind::Config, "cmaes sigma0 must be > 0");
    if (variant == Variant::Gensa) {
      if (!(gensa.visiting > 1.0 && gensa.visiting < 3.0)) throw Error(ErrorKind::Config, "gensa q_v must be in (1,3)");
      if (!(gensa.acceptance < 1.0)) throw Error(ErrorKind::Config, "gensa q_a must be < 1");
      if (!(gensa.temperature0 > 0.0)) throw Error(ErrorKind::Config, "gensa temperature must be > 0");
    }
    if (variant == Variant::Mbo) {
      if (!(mbo.init_fraction > 0.0 && mbo.init_fraction < 1.0)) throw Error(ErrorKind::Config, "mbo init fraction in (0,1)");
      if (mbo.candidates_per_dim < 1 || mbo.local_steps < 0) throw Error(ErrorKind::Config, "bad mbo search settings");
    }
  }
};

struct Evaluation {
  int index = 0;  // 1-based
  std::vector<double> x;  // unit cube
  double y = 0.0;
  double incumbent = 0.0;
};

struct Trace {
  std::string problem_id;
  std::string optimizer;
  std::uint64_t seed = 0;
  std::vector<Evaluation> evals;
  std::map<std::string, std::string> meta;

  double final_best() const { return evals.empty() ? std::numeric_limits<double>::infinity() : evals.back().incumbent; }
};

/// Raised when the objective fails mid-run; carries the trace so far.
class RunError : public Error {
 public:
  RunError(const std::string& what, Trace partial) : Error(ErrorKind::Evaluation, what), partial_(std::move(partial)) {}
  const Trace& partial() const { return partial_; }

 private:
  Trace partial_;
};

/// Budget-enforcing evaluator: denormalizes, evaluates, records.
class Evaluator {
 public:
  Evaluator(const Problem& problem, std::size_t budget, Trace& trace) : problem_(problem), budget_(budget), trace_(trace) {}

  std::size_t used() const { return trace_.evals.size(); }
  std::size_t remaining() const { return budget_ - used(); }
  bool exhausted() const { return used() >= budget_; }
  std::size_t dim() const { return problem_.dim(); }

  double operator()(const Vector& u) {
    if (exhausted()) throw Error(ErrorKind::BudgetExceeded, "evaluation budget of " + std::to_string(budget_) + " exceeded");
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      if (!(u[i] >= 0.0 && u[i] <= 1.0)) throw Error(ErrorKind::Domain, "optimizer proposed a point outside the unit cube");
    }
    double y = 0.0;
    try {
      y = problem_.evaluate(design::denormalize(problem_.domain, as_span(u)));
    } catch (const std::exception& e) {
      throw RunError(std::string("evaluation failed: ") + e.what(), trace_);
    }
    if (std::isnan(y)) throw RunError("evaluation returned NaN", trace_);
    Evaluation ev;
    ev.index = static_cast<int>(used()) + 1;
    ev.x = to_std(u);
    ev.y = y;
    ev.incumbent = trace_.evals.empty() ? y : std::min(trace_.evals.back().incumbent, y);
    trace_.evals.push_back(std::move(ev));
    return y;
  }

 private:
  const Problem& problem_;
  std::size_t budget_;
  Trace& trace_;
};

inline Vector random_point(Rng& rng, Eigen::Index d) {
  Vector u(d);
  for (Eigen::Index i = 0; i < d; ++i) u[i] = rng.uniform();
  return u;
}

inline bool in_cube(const Vector& u) { return (u.array() >= 0.0).all() && (u.array() <= 1.0).all(); }

/// Resample via `draw` up to 100 times until inside the cube, then clip.
template <typename Draw>
Vector propose_in_cube(Draw&& draw) {
  Vector u = draw();
  for (int attempt = 1; attempt < 100 && !in_cube(u); ++attempt) u = draw();
  return u.cwiseMax(0.0).cwiseMin(1.0);
}

// -------------------------------------------------------------------- grid

/// Full m^d grid of stratum midpoints with m = floor(budget^(1/d)).
inline std::vector<Vector> make_grid(std::size_t budget, std::size_t d) {
  if (budget < 1) throw Error(ErrorKind::Budget, "grid needs budget >= 1");
  auto pow_int = [](std::size_t b, std::size_t e) {
    std::size_t r = 1;
    for (std::size_t i = 0; i < e; ++i) {
      if (r > std::numeric_limits<std::size_t>::max() / b) return std::numeric_limits<std::size_t>::max();
      r *= b;
    }
    return r;
  };
  auto m = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(budget), 1.0 / static_cast<double>(d))));
  m = std::max<std::size_t>(m, 1);
  while (pow_int(m + 1, d) <= budget) ++m;
  while (m > 1 && pow_int(m, d) > budget) --m;

  const std::size_t total = pow_int(m, d);
  std::vector<Vector> pts;
  pts.reserve(total);
  std::vector<std::size_t> idx(d, 0);
  for (std::size_t k = 0; k < total; ++k) {
    Vector u(static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < d; ++j) u[static_cast<Eigen::Index>(j)] = (static_cast<double>(idx[j]) + 0.5) / static_cast<double>(m);
    pts.push_back(u);
    for (std::size_t j = d; j-- > 0;) {
      if (++idx[j] < m) break;
      idx[j] = 0;
    }
  }
  return pts;
}

// ------------------------------------------------------------------- cmaes

inline int cmaes_population_size(std::size_t d) {
  return 4 + static_cast<int>(std::floor(3.0 * std::log(static_cast<double>(d))));
}

/// Standard (mu/mu_w, lambda)-CMA-ES state in the unit cube.
class Cmaes {
 public:
  Cmaes(std::size_t dim, double sigma0) : d_(static_cast<Eigen::Index>(dim)) {
    const double n = static_cast<double>(dim);
    lambda_ = cmaes_population_size(dim);
    mu_ = lambda_ / 2;
    weights_.resize(mu_);
    for (int i = 0; i < mu_; ++i) weights_[i] = std::log(mu_ + 0.5) - std::log(i + 1.0);
    weights_ /= weights_.sum();
    mueff_ = 1.0 / weights_.squaredNorm();
    cs_ = (mueff_ + 2.0) / (n + mueff_ + 5.0);
    ds_ = 1.0 + 2.0 * std::max(0.0, std::sqrt((mueff_ - 1.0) / (n + 1.0)) - 1.0) + cs_;
    cc_ = (4.0 + mueff_ / n) / (n + 4.0 + 2.0 * mueff_ / n);
    c1_ = 2.0 / ((n + 1.3) * (n + 1.3) + mueff_);
    cmu_ = std::min(1.0 - c1_, 2.0 * (mueff_ - 2.0 + 1.0 / mueff_) / ((n + 2.0) * (n + 2.0) + mueff_));
    chin_ = std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
    mean_ = Vector::Constant(d_, 0.5);
    sigma_ = sigma0;
    C_ = Matrix::Identity(d_, d_);
    B_ = Matrix::Identity(d_, d_);
    D_ = Vector::Ones(d_);
    pc_ = Vector::Zero(d_);
    ps_ = Vector::Zero(d_);
  }

  int lambda() const { return lambda_; }
  const Vector& mean() const { return mean_; }
  double sigma() const { return sigma_; }
  const Matrix& covariance() const { return C_; }

  /// One in-cube candidate from N(mean, sigma^2 C).
  Vector sample(Rng& rng) const {
    return propose_in_cube([&] {
      Vector z(d_);
      for (Eigen::Index i = 0; i < d_; ++i) z[i] = rng.normal();
      return Vector(mean_ + sigma_ * (B_ * D_.cwiseProduct(z)));
    });
  }

  /// Rank-mu and rank-one update from a full evaluated generation.
  void tell(const std::vector<Vector>& xs, const std::vector<double>& fs) {
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
    const double n = static_cast<double>(d_);
    const Vector old_mean = mean_;
    Vector new_mean = Vector::Zero(d_);
    for (int i = 0; i < mu_; ++i) new_mean += weights_[i] * xs[order[static_cast<std::size_t>(i)]];
    const Vector yw = (new_mean - old_mean) / sigma_;
    mean_ = new_mean;

    const Matrix inv_sqrt = B_ * D_.cwiseInverse().asDiagonal() * B_.transpose();
    ps_ = (1.0 - cs_) * ps_ + std::sqrt(cs_ * (2.0 - cs_) * mueff_) * (inv_sqrt * yw);
    ++generation_;
    const double ps_norm = ps_.norm() / std::sqrt(1.0 - std::pow(1.0 - cs_, 2.0 * generation_));
    const bool hsig = ps_norm < (1.4 + 2.0 / (n + 1.0)) * chin_;
    pc_ = (1.0 - cc_) * pc_ + (hsig ? std::sqrt(cc_ * (2.0 - cc_) * mueff_) : 0.0) * yw;

    Matrix rank_mu = Matrix::Zero(d_, d_);
    for (int i = 0; i < mu_; ++i) {
      const Vector yi = (xs[order[static_cast<std::size_t>(i)]] - old_mean) / sigma_;
      rank_mu += weights_[i] * yi * yi.transpose();
    }
    const double delta_h = hsig ? 0.0 : cc_ * (2.0 - cc_);
    C_ = (1.0 - c1_ - cmu_) * C_ + c1_ * (pc_ * pc_.transpose() + delta_h * C_) + cmu_ * rank_mu;
    sigma_ *= std::exp((cs_ / ds_) * (ps_.norm() / chin_ - 1.0));

    C_ = 0.5 * (C_ + C_.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(C_);
    B_ = eig.eigenvectors();
    D_ = eig.eigenvalues().cwiseMax(1e-20).cwiseSqrt();
  }

 private:
  Eigen::Index d_;
  int lambda_ = 0;
  int mu_ = 0;
  Vector weights_;
  double mueff_ = 0.0, cs_ = 0.0, ds_ = 0.0, cc_ = 0.0, c1_ = 0.0, cmu_ = 0.0, chin_ = 0.0;
  Vector mean_;
  double sigma_ = 0.5;
  Matrix C_, B_;
  Vector D_;
  Vector pc_, ps_;
  int generation_ = 0;
};

/// Evaluates one generation; returns false once the budget cannot cover it.
inline bool cmaes_step(Cmaes& es, Evaluator& eval, Rng& rng) {
  std::vector<Vector> xs;
  std::vector<double> fs;
  for (int k = 0; k < es.lambda(); ++k) {
    if (eval.exhausted()) return false;
    xs.push_back(es.sample(rng));
    fs.push_back(eval(xs.back()));
  }
  es.tell(xs, fs);
  return true;
}

// ------------------------------------------------------------------- gensa

/// Temperature after `step` outer iterations (step 0 is the first).
inline double gensa_temperature(double t0, double qv, int step) {
  const double t1 = std::exp((qv - 1.0) * std::log(2.0)) - 1.0;
  const double t2 = std::exp((qv - 1.0) * std::log(static_cast<double>(step) + 2.0)) - 1.0;
  return t0 * t1 / t2;
}

/// Generalized Metropolis acceptance probability of an uphill move.
inline double gensa_acceptance_probability(double delta, double temperature, double qa) {
  if (delta <= 0.0) return 1.0;
  if (!(temperature > 0.0)) return 0.0;
  const double base = 1.0 - (1.0 - qa) * delta / temperature;
  if (base <= 0.0) return 0.0;
  return std::exp(std::log(base) / (1.0 - qa));
}

/// One draw of the Tsallis visiting distribution at the given temperature.
inline double gensa_visit(double qv, double temperature, Rng& rng) {
  const double pi = std::numbers::pi;
  const double factor1 = std::exp(std::log(temperature) / (qv - 1.0));
  const double factor2 = std::exp((4.0 - qv) * std::log(qv - 1.0));
  const double factor3 = std::exp((2.0 - qv) * std::log(2.0) / (qv - 1.0));
  const double factor4 = std::sqrt(pi) * factor1 * factor2 / (factor3 * (3.0 - qv));
  const double factor5 = 1.0 / (qv - 1.0) - 0.5;
  const double d1 = 2.0 - factor5;
  const double factor6 = pi * (1.0 - factor5) / std::sin(pi * (1.0 - factor5)) / std::exp(std::lgamma(d1));
  const double sigmax = std::exp(-(qv - 1.0) * std::log(factor6 / factor4) / (3.0 - qv));
  const double x = sigmax * rng.normal();
  const double y = rng.normal();
  const double den = std::exp((qv - 1.0) * std::log(std::abs(y)) / (3.0 - qv));
  double v = x / den;
  constexpr double kTail = 1e8;
  if (!std::isfinite(v) || std::abs(v) > kTail) v = (v < 0.0 ? -kTail : kTail) * rng.uniform();
  return v;
}

inline double wrap_unit(double v) {
  double w = v - std::floor(v);
  if (w >= 1.0) w = 0.0;
  return w;
}

/// Annealing chain state: current point and energy.
struct GensaState {
  Vector x;
  double energy = 0.0;
  int step = 0;
};

/// One temperature level: a Markov chain of 2d visits, first moving all
/// coordinates, then one coordinate at a time. Returns false when out of budget.
inline bool gensa_step(GensaState& st, const GensaParams& p, Evaluator& eval, Rng& rng) {
  const auto d = st.x.size();
  const double temp = gensa_temperature(p.temperature0, p.visiting, st.step);
  const double temp_step = temp / static_cast<double>(st.step + 1);
  for (Eigen::Index j = 0; j < 2 * d; ++j) {
    if (eval.exhausted()) return false;
    Vector cand = st.x;
    if (j < d) {
      for (Eigen::Index i = 0; i < d; ++i) cand[i] = wrap_unit(cand[i] + gensa_visit(p.visiting, temp, rng));
    } else {
      const Eigen::Index i = j - d;
      cand[i] = wrap_unit(cand[i] + gensa_visit(p.visiting, temp, rng));
    }
    const double e = eval(cand);
    const double delta = e - st.energy;
    if (delta < 0.0 || rng.uniform() <= gensa_acceptance_probability(delta, temp_step, p.acceptance)) {
      st.x = cand;
      st.energy = e;
    }
  }
  ++st.step;
  return true;
}

// --------------------------------------------------------------------- mbo

inline std::size_t mbo_initial_size(std::size_t budget, double fraction = 0.08) {
  return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(budget) - 1e-9));
}

/// Maximizes EI over random candidates plus local refinement of the best one.
/// Candidates whose EI upper bound cannot beat the best exact EI so far are skipped.
inline Vector maximize_ei(const gp::Model& model, double best, Eigen::Index d, const MboParams& p, Rng& rng) {
  const Eigen::Index m = static_cast<Eigen::Index>(p.candidates_per_dim) * d;
  Matrix C(m, d);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) C(i, j) = rng.uniform();
  }
  const Matrix kx = model.cross(C);
  const Vector mean = model.mean_from_cross(kx);
  const Vector sd_bound = model.sd_bound_from_cross(kx);
  std::vector<std::pair<double, Eigen::Index>> bound(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    bound[static_cast<std::size_t>(i)] = {gp::expected_improvement(mean[i], sd_bound[i], best), i};
  }
  std::stable_sort(bound.begin(), bound.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

  double best_ei = -1.0;
  Eigen::Index best_idx = bound.front().second;
  constexpr Eigen::Index kBlock = 64;
  for (std::size_t start = 0; start < bound.size(); start += kBlock) {
    if (bound[start].first <= best_ei) break;
    const std::size_t stop = std::min(bound.size(), start + kBlock);
    std::vector<Eigen::Index> cols;
    for (std::size_t k = start; k < stop; ++k) cols.push_back(bound[k].second);
    const Vector sd = model.sd_from_cross(kx(Eigen::all, cols));
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      const double ei = gp::expected_improvement(mean[cols[k]], sd[kk], best);
      if (ei > best_ei || (ei == best_ei && cols[k] < best_idx)) {
        best_ei = ei;
        best_idx = cols[k];
      }
    }
  }

  Vector x = C.row(best_idx).transpose();
  double scale = p.local_scale;
  for (int s = 0; s < p.local_steps; ++s) {
    Vector cand(d);
    for (Eigen::Index j = 0; j < d; ++j) cand[j] = std::clamp(x[j] + scale * rng.normal(), 0.0, 1.0);
    const auto pred = model.predict(cand.transpose());
    const double ei = gp::expected_improvement(pred.mean[0], pred.sd[0], best);
    if (ei > best_ei) {
      best_ei = ei;
      x = cand;
    } else {
      scale *= 0.9;
    }
  }
  return x;
}

struct MboState {
  Matrix X;
  Vector y;
  Vector log_ls;
  double max_nugget = 0.0;
  int nugget_escalations = 0;
  int fit_failures = 0;
};

/// Fits the surrogate on all data and evaluates the EI maximizer.
inline void mbo_step(MboState& st, const MboParams& p, Evaluator& eval, Rng& rng) {
  const auto d = st.X.cols();
  Vector next;
  try {
    const gp::Model model(st.X, st.y, st.log_ls, p.gp);
    st.log_ls = model.log_lengthscales();
    if (model.nugget() > p.gp.nugget) ++st.nugget_escalations;
    st.max_nugget = std::max(st.max_nugget, model.nugget());
    const double best = model.standardize(st.y.minCoeff());
    next = maximize_ei(model, best, d, p, rng);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::SingularFit) throw;
    ++st.fit_failures;
    next = random_point(rng, d);
  }
  const double y = eval(next);
  st.X.conservativeResize(st.X.rows() + 1, Eigen::NoChange);
  st.X.row(st.X.rows() - 1) = next.transpose();
  st.y.conservativeResize(st.y.size() + 1);
  st.y[st.y.size() - 1] = y;
}

// --------------------------------------------------------------------- run

inline std::size_t minimum_budget(const OptimizerSpec& spec, std::size_t d) {
  switch (spec.variant) {
    case Variant::Cmaes: return static_cast<std::size_t>(cmaes_population_size(d));
    case Variant::Mbo: return 0;  // checked against the initial design below
    default: return 1;
  }
}

/// Runs one optimizer on one problem. Deterministic in (spec, problem, budget, seed).
inline Trace run(const OptimizerSpec& spec, const Problem& problem, std::size_t budget, std::uint64_t seed) {
  spec.validate();
  const std::size_t d = problem.dim();
  if (budget < minimum_budget(spec, d)) throw Error(ErrorKind::Budget, "budget below the optimizer minimum");
  Trace trace;
  trace.problem_id = problem.id;
  trace.optimizer = to_string(spec.variant);
  trace.seed = seed;
  Evaluator eval(problem, budget, trace);
  Rng rng(seed);
  const auto de = static_cast<Eigen::Index>(d);

  switch (spec.variant) {
    case Variant::Random: {
      while (!eval.exhausted()) eval(random_point(rng, de));
      break;
    }
    case Variant::Grid: {
      auto pts = make_grid(budget, d);
      rng.shuffle(pts.begin(), pts.end());
      for (const auto& u : pts) eval(u);
      trace.meta["grid_points"] = std::to_string(pts.size());
      break;
    }
    case Variant::Cmaes: {
      Cmaes es(d, spec.cmaes.sigma0);
      while (cmaes_step(es, eval, rng)) {
      }
      break;
    }
    case Variant::Gensa: {
      GensaState st;
      st.x = random_point(rng, de);
      st.energy = eval(st.x);
      while (gensa_step(st, spec.gensa, eval, rng)) {
      }
      break;
    }
    case Variant::Mbo: {
      const std::size_t n0 = mbo_initial_size(budget, spec.mbo.init_fraction);
      if (n0 < 2 || budget <= n0) throw Error(ErrorKind::Budget, "mbo budget must exceed its initial design");
      MboState st;
      st.X = design::lhs_minmax(n0, d, rng.next(), 100);
      st.y.resize(static_cast<Eigen::Index>(n0));
      for (Eigen::Index i = 0; i < st.X.rows(); ++i) st.y[i] = eval(Vector(st.X.row(i).transpose()));
      st.log_ls = Vector::Constant(de, std::log(0.2));
      while (!eval.exhausted()) mbo_step(st, spec.mbo, eval, rng);
      trace.meta["initial_design"] = std::to_string(n0);
      trace.meta["nugget_escalations"] = std::to_string(st.nugget_escalations);
      trace.meta["fit_failures"] = std::to_string(st.fit_failures);
      break;
    }
  }
  return trace;
}

}  // namespace hpoela::opt
