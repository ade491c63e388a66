#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "hpoela/bbob.hpp"
#include "hpoela/design.hpp"

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

// Sorting a column and flooring value*n must give 0..n-1.
bool is_latin(const Matrix& X) {
  const auto n = X.rows();
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    std::vector<long> strata;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (X(i, j) < 0.0 || X(i, j) >= 1.0) return false;
      strata.push_back(static_cast<long>(std::floor(X(i, j) * static_cast<double>(n))));
    }
    std::sort(strata.begin(), strata.end());
    for (long k = 0; k < n; ++k) {
      if (strata[static_cast<std::size_t>(k)] != k) return false;
    }
  }
  return true;
}

}  // namespace

TEST(Lhs, OnePointPerQuartile) {
  const Matrix X = design::lhs_minmax(4, 1, 3, 10);
  std::vector<int> q;
  for (Eigen::Index i = 0; i < 4; ++i) q.push_back(static_cast<int>(X(i, 0) * 4));
  std::sort(q.begin(), q.end());
  EXPECT_EQ(q, (std::vector<int>{0, 1, 2, 3}));
}

TEST(Lhs, LatinPropertyAcrossShapes) {
  for (std::size_t n : {1, 2, 7, 50, 250}) {
    for (std::size_t d : {1, 2, 5}) EXPECT_TRUE(is_latin(design::lhs_minmax(n, d, n * 31 + d, 5))) << n << "x" << d;
  }
}

TEST(Lhs, Deterministic) {
  EXPECT_EQ(design::lhs_minmax(30, 3, 17, 20), design::lhs_minmax(30, 3, 17, 20));
  EXPECT_NE(design::lhs_minmax(30, 3, 17, 20), design::lhs_minmax(30, 3, 18, 20));
}

TEST(Lhs, EmptyDesign) {
  EXPECT_EQ(kind_of([] { design::lhs_minmax(0, 2, 1, 1); }), ErrorKind::EmptyDesign);
}

TEST(Lhs, MaximinBeatsUniformMedian) {
  const double lhs = design::min_pairwise_distance(design::lhs_minmax(50, 2, 123, 100));
  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> uniform;
  for (int r = 0; r < 100; ++r) {
    Matrix X(50, 2);
    for (Eigen::Index i = 0; i < 50; ++i) {
      X(i, 0) = u(gen);
      X(i, 1) = u(gen);
    }
    uniform.push_back(design::min_pairwise_distance(X));
  }
  std::nth_element(uniform.begin(), uniform.begin() + 50, uniform.end());
  EXPECT_GE(lhs, uniform[50]);
}

TEST(Normalize, Examples) {
  const auto box = BoxDomain::uniform(1, -5.0, 5.0);
  const std::vector<double> zero = {0.0}, lo = {-5.0}, hi = {5.0}, out = {5.5};
  EXPECT_EQ(design::normalize(box, zero)[0], 0.5);
  EXPECT_EQ(design::normalize(box, lo)[0], 0.0);
  EXPECT_EQ(design::normalize(box, hi)[0], 1.0);
  EXPECT_EQ(kind_of([&] { design::normalize(box, out); }), ErrorKind::Domain);
}

TEST(Normalize, RoundTrip) {
  const BoxDomain box({-5.0, 0.0, std::log(3.0)}, {5.0, 1e-3, std::log(2000.0)});
  std::mt19937_64 gen(8);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    std::vector<double> x(3);
    for (std::size_t i = 0; i < 3; ++i) x[i] = std::uniform_real_distribution<double>(box.lower[i], box.upper[i])(gen);
    const auto back = design::denormalize(box, as_span(design::normalize(box, x)));
    for (std::size_t i = 0; i < 3; ++i) worst = std::max(worst, std::abs(back[i] - x[i]));
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(Standardize, Examples) {
  Vector y(3);
  y << 1, 2, 3;
  const Vector z = design::standardize_y(y);
  EXPECT_NEAR(z[0], -1.0, 1e-15);
  EXPECT_NEAR(z[1], 0.0, 1e-15);
  EXPECT_NEAR(z[2], 1.0, 1e-15);
  EXPECT_EQ(kind_of([] { design::standardize_y(Vector::Constant(3, 2.0)); }), ErrorKind::DegenerateSample);
}

TEST(Standardize, MomentsAndAffineInvariance) {
  std::mt19937_64 gen(6);
  std::lognormal_distribution<double> ln(0.0, 2.0);
  Vector y(40);
  for (auto& v : y) v = ln(gen);
  const Vector z = design::standardize_y(y);
  EXPECT_NEAR(z.mean(), 0.0, 1e-9);
  EXPECT_NEAR(std::sqrt((z.array() - z.mean()).square().sum() / 39.0), 1.0, 1e-9);
  const Vector z2 = design::standardize_y((3.5 * y.array() - 100.0).matrix());
  EXPECT_LE((z - z2).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Design, EvaluatesProblemOnDenormalizedPoints) {
  const auto inst = bbob::instantiate(1, 1, 2);
  const auto p = bbob::make_problem(inst);
  const auto des = design::make_design(p, 100, 5);
  EXPECT_EQ(des.X.rows(), 100);
  EXPECT_EQ(des.problem_id, "1_1_2");
  for (Eigen::Index i = 0; i < 100; ++i) {
    const Vector x = (-5.0 + 10.0 * des.X.row(i).array()).matrix().transpose();
    EXPECT_NEAR(des.y[i], (x - inst.xopt).squaredNorm() + inst.fopt, 1e-9);
  }
  std::ostringstream os;
  design::write_csv(os, des);
  EXPECT_EQ(os.str().substr(0, 8), "x1,x2,y\n");
}
