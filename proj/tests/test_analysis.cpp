#include <gtest/gtest.h>

#include <random>

#include "hpoela/analysis.hpp"
#include "oracles.hpp"

using namespace hpoela;
using namespace hpoela::analysis;

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

Matrix gaussian(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix X(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) X(i, j) = g(gen);
  }
  return X;
}

// Two tight blobs around (0,0) and (10,10).
Matrix blobs(Eigen::Index per, std::uint64_t seed) {
  Matrix X = 0.3 * gaussian(2 * per, 2, seed);
  X.bottomRows(per).array() += 10.0;
  return X;
}

}  // namespace

// --------------------------------------------------------------------- pca

TEST(Pca, CollinearPointsHaveOneComponent) {
  Matrix X(20, 3);
  for (int i = 0; i < 20; ++i) X.row(i) << i, 2.0 * i + 1.0, -0.5 * i;
  const auto r = pca_fit(X, 2);
  EXPECT_NEAR(r.model.explained_variance_ratio[0], 1.0, 1e-12);
  EXPECT_NEAR(r.model.explained_variance_ratio[1], 0.0, 1e-12);
}

TEST(Pca, LoadingsAreOrthonormalAndScoresMatchTransform) {
  const Matrix X = gaussian(50, 5, 1) * gaussian(5, 5, 2);
  const auto r = pca_fit(X, 4);
  const Matrix G = r.model.loadings.transpose() * r.model.loadings;
  EXPECT_LE((G - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((r.model.transform(X) - r.scores).cwiseAbs().maxCoeff(), 1e-10);
  for (Eigen::Index c = 0; c + 1 < 4; ++c) {
    EXPECT_GE(r.model.explained_variance_ratio[c], r.model.explained_variance_ratio[c + 1]);
  }
  // score variances are the eigenvalues of the correlation matrix; they sum to p
  const double total = (r.scores.array().square().colwise().sum() / 49.0).sum();
  EXPECT_NEAR(total / 5.0, r.model.explained_variance_ratio.sum(), 1e-10);
}

TEST(Pca, FullRankReconstruction) {
  const Matrix X = gaussian(30, 4, 3);
  const auto r = pca_fit(X, 4);
  const Matrix Z = r.scores * r.model.loadings.transpose();
  EXPECT_LE((Z - r.model.standardize(X)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(r.model.explained_variance_ratio.sum(), 1.0, 1e-12);
}

TEST(Pca, SignConventionIsDeterministic) {
  const Matrix X = gaussian(30, 4, 4);
  const auto r = pca_fit(X, 3);
  for (Eigen::Index c = 0; c < 3; ++c) {
    Eigen::Index arg = 0;
    r.model.loadings.col(c).cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(r.model.loadings(arg, c), 0.0);
  }
}

TEST(Pca, Errors) {
  Matrix X = gaussian(10, 3, 5);
  X.col(1).setConstant(4.0);
  EXPECT_EQ(kind_of([&] { pca_fit(X, 2); }), ErrorKind::DegenerateSample);
  EXPECT_EQ(kind_of([] { pca_fit(gaussian(1, 3, 6), 1); }), ErrorKind::InsufficientSample);
  EXPECT_EQ(kind_of([] { pca_fit(gaussian(10, 3, 6), 4); }), ErrorKind::InvalidInput);
}

// ------------------------------------------------------------------ kmeans

TEST(KMeans, SeparatesTwoBlobs) {
  const Matrix X = blobs(15, 7);
  const auto km = kmeans(X, 2, 11);
  for (int i = 0; i < 15; ++i) EXPECT_EQ(km.assignment[static_cast<std::size_t>(i)], 0);
  for (int i = 15; i < 30; ++i) EXPECT_EQ(km.assignment[static_cast<std::size_t>(i)], 1);
  EXPECT_LE(km.centroids.row(0).norm(), 0.5);
}

TEST(KMeans, OneClusterPerDistinctRowHasZeroWithinSs) {
  const Matrix X = gaussian(6, 2, 8);
  EXPECT_NEAR(kmeans(X, 6, 1).within_ss, 0.0, 1e-24);
}

TEST(KMeans, DeterministicAndNotWorseThanSingleRestart) {
  const Matrix X = gaussian(60, 3, 9);
  const auto a = kmeans(X, 4, 5), b = kmeans(X, 4, 5);
  EXPECT_EQ(a.assignment, b.assignment);
  EXPECT_EQ(a.within_ss, b.within_ss);
  EXPECT_LE(a.within_ss, kmeans(X, 4, 5, 1).within_ss + 1e-12);
}

TEST(KMeans, WithinSsMatchesAssignment) {
  const Matrix X = gaussian(40, 2, 10);
  const auto km = kmeans(X, 3, 2);
  double ss = 0.0;
  for (Eigen::Index i = 0; i < 40; ++i) ss += (X.row(i) - km.centroids.row(km.assignment[static_cast<std::size_t>(i)])).squaredNorm();
  EXPECT_NEAR(km.within_ss, ss, 1e-9);
  EXPECT_EQ(kind_of([&] { kmeans(X.topRows(2), 3, 1); }), ErrorKind::InsufficientSample);
}

TEST(Silhouette, BlobsSelectTwoClusters) {
  const auto sel = silhouette_select(blobs(20, 12), 3, 2, 6);
  EXPECT_EQ(sel.best_k, 2);
  EXPECT_GT(sel.mean_width.at(2), 0.9);
  EXPECT_EQ(sel.mean_width.size(), 5u);
}

TEST(Silhouette, BoundedAndMatchesHandCase) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Matrix X = gaussian(25, 2, 100 + s);
    const auto km = kmeans(X, 3, s);
    for (double w : silhouette(X, km.assignment)) {
      EXPECT_GE(w, -1.0);
      EXPECT_LE(w, 1.0);
    }
  }
  // points 0, 1 | 4: a(0)=1, b(0)=4 -> 0.75; a(1)=1, b(1)=3 -> 2/3; singleton -> 0
  Matrix X(3, 1);
  X << 0.0, 1.0, 4.0;
  const auto w = silhouette(X, {0, 0, 1});
  EXPECT_NEAR(w[0], 0.75, 1e-15);
  EXPECT_NEAR(w[1], 2.0 / 3.0, 1e-15);
  EXPECT_EQ(w[2], 0.0);
}

// -------------------------------------------------------------------- cart

TEST(Cart, DepthOneSplitSeparatesClasses) {
  Matrix X(10, 1);
  std::vector<int> y;
  for (int i = 0; i < 10; ++i) {
    X(i, 0) = i;
    y.push_back(i < 5 ? 0 : 1);
  }
  const auto t = cart_train(X, y, {4, 1});
  EXPECT_EQ(t.depth(), 1);
  EXPECT_EQ(t.nodes[0].threshold, 4.5);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(t.predict(X.row(i).transpose()), y[static_cast<std::size_t>(i)]);
}

TEST(Cart, LearnsXor) {
  Matrix X(40, 2);
  std::vector<int> y;
  std::mt19937_64 gen(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 40; ++i) {
    const int a = i % 2, b = (i / 2) % 2;
    X(i, 0) = a + 0.4 * u(gen);
    X(i, 1) = b + 0.4 * u(gen);
    y.push_back(a ^ b);
  }
  const auto t = cart_train(X, y, {4, 1});
  EXPECT_LE(t.depth(), 4);
  for (int i = 0; i < 40; ++i) EXPECT_EQ(t.predict(X.row(i).transpose()), y[static_cast<std::size_t>(i)]);
}

TEST(Cart, BestSplitMatchesExhaustiveSearch) {
  std::mt19937_64 gen(14);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 20, p = 3;
    Matrix X(n, p);
    oracle::Rows rows(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(p)));
    std::vector<int> y;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < p; ++j) {
        const double v = static_cast<double>(gen() % 8);  // ties on purpose
        X(i, j) = v;
        rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = v;
      }
      y.push_back(static_cast<int>(gen() % 3));
    }
    const std::size_t min_leaf = 1 + static_cast<std::size_t>(trial % 4);
    std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), Eigen::Index{0});
    const auto got = best_split(X, y, all, static_cast<int>(min_leaf));
    const auto want = oracle::exhaustive_split(rows, y, min_leaf);
    ASSERT_EQ(got.feature, want.feature) << trial;
    if (want.feature < 0) continue;
    EXPECT_EQ(got.threshold, want.threshold);
    EXPECT_NEAR(got.gain / static_cast<double>(n), want.gain, 1e-12);
  }
}

TEST(Cart, PureNodeIsLeafAndSettingsAreRespected) {
  const Matrix X = gaussian(30, 3, 15);
  EXPECT_EQ(cart_train(X, std::vector<int>(30, 2)).nodes.size(), 1u);
  std::vector<int> y;
  std::mt19937_64 gen(16);
  for (int i = 0; i < 30; ++i) y.push_back(static_cast<int>(gen() % 3));
  const auto t = cart_train(X, y, {2, 5});
  EXPECT_LE(t.depth(), 2);
  for (const auto& nd : t.nodes) {
    if (nd.is_leaf()) EXPECT_GE(nd.n, 5u);
  }
  const auto json = tree_to_json(t, {"a", "b", "c"}, {"x", "y", "z"});
  EXPECT_EQ(json["n"], 30);
  EXPECT_EQ(kind_of([&] { cart_train(X, {1, 2}); }), ErrorKind::InvalidInput);
}

// ---------------------------------------------------------------------- cv

TEST(Cv, MajorityClassifierErrorIsMinorityShare) {
  const Matrix X = gaussian(100, 2, 17);
  std::vector<int> y(100, 0);
  for (int i = 0; i < 30; ++i) y[static_cast<std::size_t>(i)] = 1;
  const Trainer majority = [](const Matrix&, const std::vector<int>& labels) -> Predictor {
    const auto ones = std::count(labels.begin(), labels.end(), 1);
    const int m = 2 * ones > static_cast<long>(labels.size()) ? 1 : 0;
    return [m](const Vector&) { return m; };
  };
  const auto cv = repeated_stratified_cv(X, y, 10, 3, 1, majority);
  EXPECT_NEAR(cv.error, 0.30, 1.0 / 100.0);
  EXPECT_EQ(cv.predictions, 300u);
  EXPECT_EQ(cv.repeat_errors.size(), 3u);
}

TEST(Cv, SeparableDataHasZeroError) {
  const Matrix X = blobs(25, 18);
  std::vector<int> y(50, 0);
  for (int i = 25; i < 50; ++i) y[static_cast<std::size_t>(i)] = 1;
  EXPECT_EQ(repeated_stratified_cv(X, y, 5, 4, 2, cart_trainer()).error, 0.0);
}

TEST(Cv, DeterministicForFixedSeed) {
  const Matrix X = gaussian(60, 3, 19);
  std::vector<int> y;
  for (int i = 0; i < 60; ++i) y.push_back(i % 3);
  const auto a = repeated_stratified_cv(X, y, 5, 3, 9, cart_trainer());
  const auto b = repeated_stratified_cv(X, y, 5, 3, 9, cart_trainer());
  EXPECT_EQ(a.repeat_errors, b.repeat_errors);
}

TEST(Folds, ClassProportionsArePreserved) {
  std::vector<int> y;
  for (int i = 0; i < 73; ++i) y.push_back(i < 40 ? 0 : (i < 61 ? 1 : 2));
  for (std::uint64_t s = 0; s < 100; ++s) {
    Rng rng(s);
    const auto fold = stratified_folds(y, 10, rng);
    std::map<int, std::map<int, int>> per;  // class -> fold -> count
    std::map<int, int> sizes;
    for (std::size_t i = 0; i < y.size(); ++i) {
      ASSERT_GE(fold[i], 0);
      ASSERT_LT(fold[i], 10);
      ++per[y[i]][fold[i]];
      ++sizes[fold[i]];
    }
    for (const auto& [cls, counts] : per) {
      int lo = 1 << 30, hi = 0;
      for (int f = 0; f < 10; ++f) {
        const int c = counts.count(f) ? counts.at(f) : 0;
        lo = std::min(lo, c);
        hi = std::max(hi, c);
      }
      EXPECT_LE(hi - lo, 1);
    }
    int lo = 1 << 30, hi = 0;
    for (const auto& [f, c] : sizes) {
      lo = std::min(lo, c);
      hi = std::max(hi, c);
    }
    EXPECT_LE(hi - lo, 1);
  }
}

TEST(Folds, TooFewMembersIsAStratificationError) {
  std::vector<int> y(20, 0);
  y[0] = 1;
  y[1] = 1;
  Rng rng(1);
  EXPECT_EQ(kind_of([&] { stratified_folds(y, 3, rng); }), ErrorKind::Stratification);
}

// ---------------------------------------------------------------- neighbor

TEST(Neighbors, ExactMatchAndTies) {
  Matrix R(3, 2), Q(2, 2);
  R << 0, 0, 2, 0, 0, 2;
  Q << 2, 0, 1, 1;
  const auto nn = nearest_neighbors({"q1", "q2"}, Q, {"c", "b", "a"}, R);
  EXPECT_EQ(nn[0].neighbor_id, "b");
  EXPECT_EQ(nn[0].distance, 0.0);
  EXPECT_EQ(nn[1].neighbor_id, "a");  // all three at distance sqrt(2)
  EXPECT_NEAR(nn[1].distance, std::sqrt(2.0), 1e-15);
  EXPECT_EQ(kind_of([&] { nearest_neighbors({"q"}, Q.topRows(1), {}, Matrix(0, 2)); }), ErrorKind::InvalidInput);
}

TEST(Neighbors, MatchBruteForce) {
  for (int t = 0; t < 100; ++t) {
    const Matrix R = gaussian(15, 3, 1000 + static_cast<std::uint64_t>(t));
    const Matrix Q = gaussian(4, 3, 2000 + static_cast<std::uint64_t>(t));
    std::vector<std::string> rid, qid;
    for (int i = 0; i < 15; ++i) rid.push_back("r" + std::to_string(i));
    for (int i = 0; i < 4; ++i) qid.push_back("q" + std::to_string(i));
    const auto nn = nearest_neighbors(qid, Q, rid, R);
    for (int i = 0; i < 4; ++i) {
      double best = 1e300;
      for (int j = 0; j < 15; ++j) {
        double d2 = 0.0;
        for (int c = 0; c < 3; ++c) d2 += (Q(i, c) - R(j, c)) * (Q(i, c) - R(j, c));
        best = std::min(best, std::sqrt(d2));
      }
      EXPECT_NEAR(nn[static_cast<std::size_t>(i)].distance, best, 1e-12);
    }
  }
}

// ------------------------------------------------------------ feature rows

TEST(FeatureMatrixTest, SelectClassKeepsOrder) {
  FeatureMatrix fm;
  fm.ids = {"a", "b", "c"};
  fm.classes = {"BBOB", "HPO", "BBOB"};
  fm.dims = {2, 3, 5};
  fm.columns = {"f"};
  fm.values = Matrix(3, 1);
  fm.values << 1, 2, 3;
  const auto b = fm.select_class("BBOB");
  EXPECT_EQ(b.ids, (std::vector<std::string>{"a", "c"}));
  EXPECT_EQ(b.dims, (std::vector<int>{2, 5}));
  EXPECT_EQ(b.values(1, 0), 3.0);
}
