#include <gtest/gtest.h>

#include <random>

#include "hpoela/bbob.hpp"
#include "hpoela/optimizers.hpp"

using namespace hpoela;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorKind::Io;
}

opt::OptimizerSpec spec_of(opt::Variant v) {
  opt::OptimizerSpec s;
  s.variant = v;
  return s;
}

const Problem& sphere2() {
  static const Problem p = bbob::make_problem(bbob::instantiate(1, 1, 2));
  return p;
}

void expect_well_formed(const opt::Trace& t, std::size_t budget) {
  ASSERT_LE(t.evals.size(), budget);
  double inc = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < t.evals.size(); ++i) {
    const auto& e = t.evals[i];
    EXPECT_EQ(e.index, static_cast<int>(i) + 1);
    inc = std::min(inc, e.y);
    EXPECT_EQ(e.incumbent, inc);
    for (double v : e.x) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

double median_final(opt::Variant v, const Problem& p, std::size_t budget, int seeds) {
  std::vector<double> finals;
  for (int s = 0; s < seeds; ++s) finals.push_back(opt::run(spec_of(v), p, budget, 1000 + s).final_best());
  std::sort(finals.begin(), finals.end());
  return seeds % 2 ? finals[finals.size() / 2] : 0.5 * (finals[finals.size() / 2 - 1] + finals[finals.size() / 2]);
}

}  // namespace

TEST(Variant, NamesRoundTrip) {
  for (auto v : {opt::Variant::Random, opt::Variant::Grid, opt::Variant::Cmaes, opt::Variant::Gensa, opt::Variant::Mbo}) {
    EXPECT_EQ(opt::parse_variant(opt::to_string(v)), v);
  }
  EXPECT_EQ(kind_of([] { opt::parse_variant("bfgs"); }), ErrorKind::Config);
}

TEST(Run, EveryVariantProducesWellFormedTraces) {
  const auto p = bbob::make_problem(bbob::instantiate(15, 2, 3));
  for (auto v : {opt::Variant::Random, opt::Variant::Grid, opt::Variant::Cmaes, opt::Variant::Gensa, opt::Variant::Mbo}) {
    const auto t = opt::run(spec_of(v), p, 150, 3);
    expect_well_formed(t, 150);
    EXPECT_EQ(t.optimizer, opt::to_string(v));
    EXPECT_EQ(t.problem_id, "15_2_3");
    if (v == opt::Variant::Grid) {
      EXPECT_EQ(t.evals.size(), 125u);
    } else {
      EXPECT_EQ(t.evals.size(), 150u);
    }
  }
}

TEST(Run, RandomOnSphere) {
  const auto t = opt::run(spec_of(opt::Variant::Random), sphere2(), 100, 1);
  EXPECT_EQ(t.evals.size(), 100u);
  expect_well_formed(t, 100);
}

TEST(Run, SameSeedGivesBitwiseIdenticalTraces) {
  const auto p = bbob::make_problem(bbob::instantiate(21, 1, 2));
  for (auto v : {opt::Variant::Random, opt::Variant::Grid, opt::Variant::Cmaes, opt::Variant::Gensa, opt::Variant::Mbo}) {
    const auto a = opt::run(spec_of(v), p, 60, 42);
    const auto b = opt::run(spec_of(v), p, 60, 42);
    ASSERT_EQ(a.evals.size(), b.evals.size());
    for (std::size_t i = 0; i < a.evals.size(); ++i) {
      EXPECT_EQ(a.evals[i].x, b.evals[i].x);
      EXPECT_EQ(a.evals[i].y, b.evals[i].y);
    }
    EXPECT_EQ(a.meta, b.meta);
    const auto c = opt::run(spec_of(v), p, 60, 43);
    bool differs = false;
    for (std::size_t i = 0; i < c.evals.size(); ++i) differs |= c.evals[i].x != a.evals[i].x;
    EXPECT_TRUE(differs) << opt::to_string(v);
  }
}

TEST(Run, CmaesBeatsRandomOnSphere) {
  EXPECT_LE(median_final(opt::Variant::Cmaes, sphere2(), 100, 10), median_final(opt::Variant::Random, sphere2(), 100, 10));
}

TEST(Run, MboCmaesRandomOrderingOnSphere) {
  const double mbo = median_final(opt::Variant::Mbo, sphere2(), 100, 5);
  const double cmaes = median_final(opt::Variant::Cmaes, sphere2(), 100, 5);
  const double random = median_final(opt::Variant::Random, sphere2(), 100, 5);
  EXPECT_LE(mbo, cmaes);
  EXPECT_LE(cmaes, random);
}

// --------------------------------------------------------------------- grid

TEST(Grid, Sizes) {
  EXPECT_EQ(opt::make_grid(100, 2).size(), 100u);
  EXPECT_EQ(opt::make_grid(250, 5).size(), 243u);
  EXPECT_EQ(opt::make_grid(150, 3).size(), 125u);
  EXPECT_EQ(opt::make_grid(64, 3).size(), 64u);
  const auto one = opt::make_grid(1, 3);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0], Vector::Constant(3, 0.5));
}

TEST(Grid, StratumMidpointsInLexicographicOrder) {
  const auto g = opt::make_grid(9, 2);
  ASSERT_EQ(g.size(), 9u);
  const double m[] = {1.0 / 6.0, 0.5, 5.0 / 6.0};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      EXPECT_NEAR(g[static_cast<std::size_t>(3 * i + j)][0], m[i], 1e-15);
      EXPECT_NEAR(g[static_cast<std::size_t>(3 * i + j)][1], m[j], 1e-15);
    }
  }
}

TEST(Grid, RunEvaluatesShuffledGrid) {
  const auto t = opt::run(spec_of(opt::Variant::Grid), sphere2(), 100, 5);
  EXPECT_EQ(t.meta.at("grid_points"), "100");
  auto pts = opt::make_grid(100, 2);
  std::vector<std::vector<double>> want, got;
  for (const auto& p : pts) want.push_back(to_std(p));
  for (const auto& e : t.evals) got.push_back(e.x);
  EXPECT_NE(want, got);
  std::sort(want.begin(), want.end());
  std::sort(got.begin(), got.end());
  EXPECT_EQ(want, got);
}

// ---------------------------------------------------------------------- EI

TEST(ExpectedImprovement, Examples) {
  EXPECT_EQ(gp::expected_improvement(1.0, 0.0, 0.5), 0.0);
  EXPECT_EQ(gp::expected_improvement(0.2, 0.0, 0.5), 0.3);
  EXPECT_NEAR(gp::expected_improvement(0.0, 1.0, 0.0), 1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-15);
}

TEST(ExpectedImprovement, MatchesMonteCarlo) {
  std::mt19937_64 gen(2024);
  for (const auto& [mean, sd, best] : std::vector<std::tuple<double, double, double>>{
           {0.0, 1.0, 0.0}, {0.5, 0.3, 0.2}, {-1.0, 2.0, 0.5}, {2.0, 1.0, 0.0}}) {
    std::normal_distribution<double> g(mean, sd);
    double acc = 0.0;
    const int draws = 1000000;
    for (int i = 0; i < draws; ++i) acc += std::max(best - g(gen), 0.0);
    EXPECT_NEAR(gp::expected_improvement(mean, sd, best), acc / draws, 1e-3 * std::max(1.0, sd));
  }
}

TEST(ExpectedImprovement, Nonnegative) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int i = 0; i < 1000; ++i) EXPECT_GE(gp::expected_improvement(u(gen), std::abs(u(gen)), u(gen)), 0.0);
}

// ---------------------------------------------------------------------- GP

TEST(GaussianProcess, InterpolatesTrainingData) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix X(15, 2);
  Vector y(15);
  for (Eigen::Index i = 0; i < 15; ++i) {
    X.row(i) << u(gen), u(gen);
    y[i] = std::sin(5 * X(i, 0)) + X(i, 1) * X(i, 1);
  }
  const gp::Model m(X, y, Vector::Constant(2, std::log(0.2)));
  const auto pred = m.predict(X);
  for (Eigen::Index i = 0; i < 15; ++i) {
    EXPECT_NEAR(pred.mean[i], m.standardize(y[i]), 1e-3);
    EXPECT_LT(pred.sd[i], 1e-2);
  }
  const Matrix far = Matrix::Constant(1, 2, 0.5) + Matrix::Constant(1, 2, 50.0);
  EXPECT_NEAR(m.predict(far).sd[0], m.prior_sd(), 1e-6);
}

TEST(GaussianProcess, SdBoundDominatesExactSd) {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix X(20, 3), C(500, 3);
  Vector y(20);
  for (Eigen::Index i = 0; i < 20; ++i) {
    for (int j = 0; j < 3; ++j) X(i, j) = u(gen);
    y[i] = X.row(i).squaredNorm();
  }
  for (Eigen::Index i = 0; i < 500; ++i) {
    for (int j = 0; j < 3; ++j) C(i, j) = u(gen);
  }
  const gp::Model m(X, y, Vector::Constant(3, std::log(0.2)));
  const Matrix kx = m.cross(C);
  const Vector sd = m.sd_from_cross(kx);
  const Vector bound = m.sd_bound_from_cross(kx);
  for (Eigen::Index i = 0; i < 500; ++i) EXPECT_GE(bound[i] + 1e-12, sd[i]);
}

TEST(Mbo, PrunedSearchFindsExhaustiveEiMaximizer) {
  std::mt19937_64 gen(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix X(12, 2);
  Vector y(12);
  for (Eigen::Index i = 0; i < 12; ++i) {
    X.row(i) << u(gen), u(gen);
    y[i] = bbob::evaluate(bbob::instantiate(15, 1, 2), std::vector<double>{10 * X(i, 0) - 5, 10 * X(i, 1) - 5});
  }
  const gp::Model m(X, y, Vector::Constant(2, std::log(0.2)));
  const double best = m.standardize(y.minCoeff());
  opt::MboParams p;
  p.local_steps = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng a(seed), b(seed);
    const Vector chosen = opt::maximize_ei(m, best, 2, p, a);
    Matrix C(2000, 2);
    for (Eigen::Index i = 0; i < 2000; ++i) {
      for (int j = 0; j < 2; ++j) C(i, j) = b.uniform();
    }
    const auto pred = m.predict(C);
    Eigen::Index arg = 0;
    double top = -1.0;
    for (Eigen::Index i = 0; i < 2000; ++i) {
      const double ei = gp::expected_improvement(pred.mean[i], pred.sd[i], best);
      if (ei > top) {
        top = ei;
        arg = i;
      }
    }
    EXPECT_EQ(chosen, Vector(C.row(arg).transpose())) << seed;
  }
}

TEST(Mbo, InitialDesignSize) {
  EXPECT_EQ(opt::mbo_initial_size(100), 8u);
  EXPECT_EQ(opt::mbo_initial_size(250), 20u);
  EXPECT_EQ(opt::mbo_initial_size(150), 12u);
  const auto t = opt::run(spec_of(opt::Variant::Mbo), sphere2(), 100, 2);
  EXPECT_EQ(t.meta.at("initial_design"), "8");
  EXPECT_EQ(t.meta.at("fit_failures"), "0");
}

// -------------------------------------------------------------------- CMA-ES

TEST(Cmaes, PopulationSize) {
  EXPECT_EQ(opt::cmaes_population_size(2), 6);
  EXPECT_EQ(opt::cmaes_population_size(3), 7);
  EXPECT_EQ(opt::cmaes_population_size(5), 8);
  EXPECT_EQ(opt::cmaes_population_size(10), 10);
}

TEST(Cmaes, StartsAtCubeCentreAndStaysSymmetric) {
  opt::Cmaes es(4, 0.5);
  EXPECT_EQ(es.mean(), Vector::Constant(4, 0.5));
  EXPECT_EQ(es.sigma(), 0.5);
  Rng rng(1);
  std::vector<Vector> xs;
  std::vector<double> fs;
  for (int k = 0; k < es.lambda(); ++k) {
    xs.push_back(es.sample(rng));
    fs.push_back((xs.back().array() - 0.2).square().sum());
  }
  es.tell(xs, fs);
  const Matrix& C = es.covariance();
  EXPECT_LE((C - C.transpose()).cwiseAbs().maxCoeff(), 1e-15 * C.cwiseAbs().maxCoeff());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(C);
  EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
}

// --------------------------------------------------------------------- GENSA

TEST(Gensa, ZeroTemperatureRejectsUphillMoves) {
  for (double delta : {1e-12, 1e-3, 1.0, 1e6}) {
    EXPECT_EQ(opt::gensa_acceptance_probability(delta, 0.0, -5.0), 0.0);
    EXPECT_LT(opt::gensa_acceptance_probability(delta, 1e-300, -5.0), 1e-300);
  }
  EXPECT_EQ(opt::gensa_acceptance_probability(-1.0, 0.0, -5.0), 1.0);
  EXPECT_EQ(opt::gensa_acceptance_probability(0.0, 10.0, -5.0), 1.0);
}

TEST(Gensa, AcceptanceDecreasesWithEnergyGap) {
  double last = 1.0;
  for (double delta : {0.1, 1.0, 10.0, 100.0}) {
    const double p = opt::gensa_acceptance_probability(delta, 1000.0, -5.0);
    EXPECT_LT(p, last);
    EXPECT_GT(p, 0.0);
    last = p;
  }
  // with qa = -5 the acceptance vanishes once 6 * delta / T passes 1
  EXPECT_EQ(opt::gensa_acceptance_probability(170.0, 1000.0, -5.0), 0.0);
  EXPECT_EQ(opt::gensa_acceptance_probability(500.0, 1000.0, -5.0), 0.0);
}

TEST(Gensa, TemperatureScheduleStartsAtT0AndDecreases) {
  EXPECT_NEAR(opt::gensa_temperature(5230.0, 2.62, 0), 5230.0, 1e-9);
  double last = 5230.0;
  for (int s = 1; s < 50; ++s) {
    const double t = opt::gensa_temperature(5230.0, 2.62, s);
    EXPECT_LT(t, last);
    last = t;
  }
}

TEST(Gensa, VisitsAreFiniteAndWrapped) {
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const double v = opt::gensa_visit(2.62, 5230.0, rng);
    ASSERT_TRUE(std::isfinite(v));
    const double w = opt::wrap_unit(v);
    ASSERT_GE(w, 0.0);
    ASSERT_LT(w, 1.0);
  }
  EXPECT_NEAR(opt::wrap_unit(1.25), 0.25, 1e-15);
  EXPECT_NEAR(opt::wrap_unit(-0.25), 0.75, 1e-15);
}

// ------------------------------------------------------------------- budgets

TEST(Budget, BelowVariantMinimum) {
  const auto p5 = bbob::make_problem(bbob::instantiate(1, 1, 5));
  EXPECT_EQ(kind_of([&] { opt::run(spec_of(opt::Variant::Cmaes), p5, 7, 1); }), ErrorKind::Budget);
  EXPECT_EQ(opt::run(spec_of(opt::Variant::Cmaes), p5, 8, 1).evals.size(), 8u);
  EXPECT_EQ(kind_of([&] { opt::run(spec_of(opt::Variant::Mbo), sphere2(), 4, 1); }), ErrorKind::Budget);
  EXPECT_EQ(kind_of([&] { opt::run(spec_of(opt::Variant::Random), sphere2(), 0, 1); }), ErrorKind::Budget);
}

TEST(Budget, EvaluatorRefusesToExceedBudget) {
  opt::Trace t;
  opt::Evaluator ev(sphere2(), 2, t);
  ev(Vector::Constant(2, 0.5));
  ev(Vector::Constant(2, 0.25));
  EXPECT_TRUE(ev.exhausted());
  EXPECT_EQ(kind_of([&] { ev(Vector::Constant(2, 0.5)); }), ErrorKind::BudgetExceeded);
  EXPECT_EQ(t.evals.size(), 2u);
}

TEST(Budget, EvaluatorRejectsPointsOutsideCube) {
  opt::Trace t;
  opt::Evaluator ev(sphere2(), 5, t);
  EXPECT_EQ(kind_of([&] { ev(Vector::Constant(2, 1.5)); }), ErrorKind::Domain);
}

TEST(Run, FailingObjectiveCarriesPartialTrace) {
  Problem p = sphere2();
  auto calls = std::make_shared<int>(0);
  p.evaluate = [calls](std::span<const double>) -> double {
    if (++*calls > 7) throw std::runtime_error("learner crashed");
    return 1.0;
  };
  try {
    opt::run(spec_of(opt::Variant::Random), p, 50, 1);
    FAIL() << "expected RunError";
  } catch (const opt::RunError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Evaluation);
    EXPECT_EQ(e.partial().evals.size(), 7u);
    EXPECT_NE(std::string(e.what()).find("learner crashed"), std::string::npos);
  }
  p.evaluate = [](std::span<const double>) { return std::nan(""); };
  EXPECT_EQ(kind_of([&] { opt::run(spec_of(opt::Variant::Cmaes), p, 50, 1); }), ErrorKind::Evaluation);
}

TEST(Spec, ValidationRejectsBadParameters) {
  auto s = spec_of(opt::Variant::Gensa);
  s.gensa.visiting = 3.5;
  EXPECT_EQ(kind_of([&] { s.validate(); }), ErrorKind::Config);
  s = spec_of(opt::Variant::Cmaes);
  s.cmaes.sigma0 = 0.0;
  EXPECT_EQ(kind_of([&] { s.validate(); }), ErrorKind::Config);
  s = spec_of(opt::Variant::Mbo);
  s.mbo.init_fraction = 1.0;
  EXPECT_EQ(kind_of([&] { s.validate(); }), ErrorKind::Config);
}
