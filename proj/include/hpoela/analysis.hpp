#pragma once

// Meta-level analysis of feature matrices: PCA, k-means with silhouette
// selection, CART classification trees, repeated stratified cross-validation
// and nearest-neighbour lookup in score space.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "core.hpp"

namespace hpoela::analysis {

struct FeatureMatrix {
  std::vector<std::string> ids;
  std::vector<std::string> classes;  // "BBOB" / "HPO"
  std::vector<int> dims;
  std::vector<std::string> columns;
  Matrix values;  // rows x columns

  std::size_t rows() const { return ids.size(); }

  /// Rows whose class equals `cls`, order preserved.
  FeatureMatrix select_class(const std::string& cls) const {
    std::vector<Eigen::Index> keep;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (classes[i] == cls) keep.push_back(static_cast<Eigen::Index>(i));
    }
    return select_rows(keep);
  }

  FeatureMatrix select_rows(const std::vector<Eigen::Index>& rows_) const {
    FeatureMatrix out;
    out.columns = columns;
    for (auto r : rows_) {
      const auto i = static_cast<std::size_t>(r);
      out.ids.push_back(ids[i]);
      out.classes.push_back(classes[i]);
      out.dims.push_back(dims[i]);
    }
    out.values = values(rows_, Eigen::all);
    return out;
  }
};

// --------------------------------------------------------------------- pca

struct PcaModel {
  Vector means;
  Vector scales;
  Matrix loadings;  // features x components
  Vector explained_variance_ratio;

  Matrix standardize(const Matrix& X) const {
    return (X.rowwise() - means.transpose()).array().rowwise() / scales.transpose().array();
  }
  Matrix transform(const Matrix& X) const { return standardize(X) * loadings; }
};

struct PcaResult {
  PcaModel model;
  Matrix scores;
};

/// Centers and scales columns (sd with n-1), then takes the SVD. Each
/// component's largest-magnitude loading is made positive.
inline PcaResult pca_fit(const Matrix& X, Eigen::Index n_components) {
  const auto n = X.rows();
  const auto p = X.cols();
  if (n < 2) throw Error(ErrorKind::InsufficientSample, "pca needs at least two rows");
  if (n_components < 1 || n_components > std::min<Eigen::Index>(n - 1, p)) {
    throw Error(ErrorKind::InvalidInput, "n_components must be in [1, min(rows-1, cols)]");
  }
  PcaResult res;
  auto& m = res.model;
  m.means = X.colwise().mean().transpose();
  m.scales.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double ss = (X.col(j).array() - m.means[j]).square().sum();
    m.scales[j] = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(m.scales[j] > 0.0)) throw Error(ErrorKind::DegenerateSample, "zero-variance column " + std::to_string(j));
  }
  const Matrix Z = m.standardize(X);
  Eigen::JacobiSVD<Matrix> svd(Z, Eigen::ComputeThinV);
  const Vector s2 = svd.singularValues().array().square();
  const double total = s2.sum();
  Matrix V = svd.matrixV().leftCols(n_components);
  for (Eigen::Index c = 0; c < n_components; ++c) {
    Eigen::Index arg = 0;
    for (Eigen::Index j = 1; j < p; ++j) {
      if (std::abs(V(j, c)) > std::abs(V(arg, c))) arg = j;
    }
    if (V(arg, c) < 0.0) V.col(c) *= -1.0;
  }
  m.loadings = V;
  m.explained_variance_ratio = s2.head(n_components) / total;
  res.scores = Z * V;
  return res;
}

// ------------------------------------------------------------------ kmeans

struct KMeansResult {
  std::vector<int> assignment;  // clusters numbered by first appearance
  Matrix centroids;
  double within_ss = 0.0;
};

namespace detail {

inline double sqdist(const Matrix& A, Eigen::Index i, const Matrix& B, Eigen::Index j) {
  return (A.row(i) - B.row(j)).squaredNorm();
}

inline KMeansResult lloyd(const Matrix& X, int k, Rng& rng, int max_iter) {
  const auto n = X.rows();
  Matrix C(k, X.cols());
  // k-means++ seeding
  std::vector<char> chosen(static_cast<std::size_t>(n), 0);
  auto first = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
  C.row(0) = X.row(first);
  chosen[static_cast<std::size_t>(first)] = 1;
  Vector dist(n);
  for (Eigen::Index i = 0; i < n; ++i) dist[i] = sqdist(X, i, C, 0);
  for (int c = 1; c < k; ++c) {
    const double total = dist.sum();
    Eigen::Index pick = -1;
    if (total > 0.0) {
      double u = rng.uniform() * total;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (dist[i] <= 0.0) continue;
        pick = i;
        u -= dist[i];
        if (u < 0.0) break;
      }
    } else {
      std::vector<Eigen::Index> free;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!chosen[static_cast<std::size_t>(i)]) free.push_back(i);
      }
      pick = free[rng.index(free.size())];
    }
    chosen[static_cast<std::size_t>(pick)] = 1;
    C.row(c) = X.row(pick);
    for (Eigen::Index i = 0; i < n; ++i) dist[i] = std::min(dist[i], sqdist(X, i, C, c));
  }

  std::vector<int> assign(static_cast<std::size_t>(n), -1);
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double bd = sqdist(X, i, C, 0);
      for (int c = 1; c < k; ++c) {
        const double d = sqdist(X, i, C, c);
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      if (assign[static_cast<std::size_t>(i)] != best) {
        assign[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    if (!changed) break;
    Matrix sum = Matrix::Zero(k, X.cols());
    std::vector<int> count(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sum.row(assign[static_cast<std::size_t>(i)]) += X.row(i);
      ++count[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])];
    }
    for (int c = 0; c < k; ++c) {
      if (count[static_cast<std::size_t>(c)] > 0) {
        C.row(c) = sum.row(c) / count[static_cast<std::size_t>(c)];
        continue;
      }
      // empty cluster: move it to the point farthest from its centroid
      Eigen::Index far = 0;
      double fd = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double d = sqdist(X, i, C, assign[static_cast<std::size_t>(i)]);
        if (d > fd) {
          fd = d;
          far = i;
        }
      }
      C.row(c) = X.row(far);
    }
  }
  KMeansResult r;
  r.assignment = assign;
  r.centroids = C;
  for (Eigen::Index i = 0; i < n; ++i) r.within_ss += sqdist(X, i, C, assign[static_cast<std::size_t>(i)]);
  return r;
}

/// Renumbers clusters by order of first appearance.
inline void canonicalize(KMeansResult& r) {
  std::map<int, int> remap;
  for (int a : r.assignment) remap.try_emplace(a, static_cast<int>(remap.size()));
  Matrix C(r.centroids.rows(), r.centroids.cols());
  int next = static_cast<int>(remap.size());
  for (int c = 0; c < r.centroids.rows(); ++c) {
    if (!remap.count(c)) remap[c] = next++;
    C.row(remap[c]) = r.centroids.row(c);
  }
  for (int& a : r.assignment) a = remap[a];
  r.centroids = C;
}

}  // namespace detail

/// Best of `restarts` k-means++ / Lloyd runs by within-cluster sum of squares.
inline KMeansResult kmeans(const Matrix& X, int k, std::uint64_t seed, int restarts = 25, int max_iter = 100) {
  if (k < 1) throw Error(ErrorKind::InvalidInput, "k must be >= 1");
  if (X.rows() < k) throw Error(ErrorKind::InsufficientSample, "fewer rows than clusters");
  if (restarts < 1) throw Error(ErrorKind::InvalidInput, "restarts must be >= 1");
  Rng root(seed);
  KMeansResult best;
  best.within_ss = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Rng stream = root.split();
    auto cand = detail::lloyd(X, k, stream, max_iter);
    if (cand.within_ss < best.within_ss) best = std::move(cand);
  }
  detail::canonicalize(best);
  return best;
}

/// Silhouette width per point; points in singleton clusters get 0.
inline std::vector<double> silhouette(const Matrix& X, const std::vector<int>& labels) {
  const auto n = X.rows();
  const int k = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<int> size(static_cast<std::size_t>(k), 0);
  for (int l : labels) ++size[static_cast<std::size_t>(l)];
  std::vector<double> s(static_cast<std::size_t>(n), 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int li = labels[static_cast<std::size_t>(i)];
    if (size[static_cast<std::size_t>(li)] <= 1) continue;
    std::vector<double> sum(static_cast<std::size_t>(k), 0.0);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) sum[static_cast<std::size_t>(labels[static_cast<std::size_t>(j)])] += (X.row(i) - X.row(j)).norm();
    }
    const double a = sum[static_cast<std::size_t>(li)] / (size[static_cast<std::size_t>(li)] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      if (c != li && size[static_cast<std::size_t>(c)] > 0) b = std::min(b, sum[static_cast<std::size_t>(c)] / size[static_cast<std::size_t>(c)]);
    }
    const double m = std::max(a, b);
    s[static_cast<std::size_t>(i)] = m > 0.0 && std::isfinite(b) ? (b - a) / m : 0.0;
  }
  return s;
}

struct SilhouetteSelection {
  int best_k = 0;
  std::map<int, double> mean_width;
  KMeansResult clustering;
};

/// k in [k_min, k_max] maximizing the mean silhouette width; ties go to the smaller k.
inline SilhouetteSelection silhouette_select(const Matrix& X, std::uint64_t seed, int k_min = 2, int k_max = 8, int restarts = 25) {
  if (k_min < 2) throw Error(ErrorKind::InvalidInput, "silhouette needs k >= 2");
  if (k_max < k_min) throw Error(ErrorKind::InvalidInput, "empty k range");
  k_max = std::min<int>(k_max, static_cast<int>(X.rows()) - 1);
  if (k_max < k_min) throw Error(ErrorKind::InsufficientSample, "too few rows for silhouette analysis");
  SilhouetteSelection sel;
  double best = -std::numeric_limits<double>::infinity();
  for (int k = k_min; k <= k_max; ++k) {
    auto km = kmeans(X, k, seed, restarts);
    const auto s = silhouette(X, km.assignment);
    const double mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
    sel.mean_width[k] = mean;
    if (mean > best) {
      best = mean;
      sel.best_k = k;
      sel.clustering = std::move(km);
    }
  }
  return sel;
}

// -------------------------------------------------------------------- cart

struct TreeSettings {
  int max_depth = 4;  // negative: unlimited
  int min_leaf = 5;
};

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int label = 0;
  std::size_t n = 0;
  std::map<int, std::size_t> counts;
  bool is_leaf() const { return feature < 0; }
};

struct TreeModel {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  TreeSettings settings;

  int predict(const double* row) const {
    int i = 0;
    while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
      const auto& nd = nodes[static_cast<std::size_t>(i)];
      i = row[nd.feature] <= nd.threshold ? nd.left : nd.right;
    }
    return nodes[static_cast<std::size_t>(i)].label;
  }

  int predict(const Vector& row) const { return predict(row.data()); }

  int depth(int i = 0) const {
    const auto& nd = nodes[static_cast<std::size_t>(i)];
    return nd.is_leaf() ? 0 : 1 + std::max(depth(nd.left), depth(nd.right));
  }
};

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = -1.0;
};

inline double gini(const std::map<int, std::size_t>& counts, std::size_t n) {
  if (n == 0) return 0.0;
  double s = 1.0;
  for (const auto& [label, c] : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(n);
    s -= p * p;
  }
  return s;
}

/// Best Gini split of the given rows: weighted impurity decrease, midpoint
/// thresholds, ties to the lower feature then the lower threshold.
inline Split best_split(const Matrix& X, const std::vector<int>& y, const std::vector<Eigen::Index>& rows, int min_leaf) {
  const std::size_t n = rows.size();
  std::map<int, std::size_t> total;
  for (auto r : rows) ++total[y[static_cast<std::size_t>(r)]];
  const double parent = gini(total, n) * static_cast<double>(n);
  Split best;
  std::vector<Eigen::Index> order = rows;
  for (Eigen::Index f = 0; f < X.cols(); ++f) {
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return X(a, f) < X(b, f); });
    std::map<int, std::size_t> left;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      ++left[y[static_cast<std::size_t>(order[i])]];
      const double lo = X(order[i], f), hi = X(order[i + 1], f);
      if (!(lo < hi)) continue;
      const std::size_t nl = i + 1, nr = n - nl;
      if (nl < static_cast<std::size_t>(min_leaf) || nr < static_cast<std::size_t>(min_leaf)) continue;
      std::map<int, std::size_t> right = total;
      for (const auto& [label, c] : left) right[label] -= c;
      const double child = gini(left, nl) * static_cast<double>(nl) + gini(right, nr) * static_cast<double>(nr);
      const double gain = parent - child;
      const double thr = lo + 0.5 * (hi - lo);
      if (gain > best.gain + 1e-12) {
        best = {static_cast<int>(f), thr, gain};
      }
    }
  }
  return best;
}

namespace detail {

inline int grow(TreeModel& t, const Matrix& X, const std::vector<int>& y, const std::vector<Eigen::Index>& rows, int depth) {
  TreeNode node;
  node.n = rows.size();
  for (auto r : rows) ++node.counts[y[static_cast<std::size_t>(r)]];
  std::size_t top = 0;
  for (const auto& [label, c] : node.counts) {
    if (c > top) {
      top = c;
      node.label = label;
    }
  }
  const int id = static_cast<int>(t.nodes.size());
  t.nodes.push_back(node);
  const bool pure = node.counts.size() <= 1;
  const bool depth_ok = t.settings.max_depth < 0 || depth < t.settings.max_depth;
  if (pure || !depth_ok || rows.size() < 2 * static_cast<std::size_t>(t.settings.min_leaf)) return id;
  const Split s = best_split(X, y, rows, t.settings.min_leaf);
  if (s.feature < 0) return id;
  std::vector<Eigen::Index> l, r;
  for (auto i : rows) (X(i, s.feature) <= s.threshold ? l : r).push_back(i);
  const int left = grow(t, X, y, l, depth + 1);
  const int right = grow(t, X, y, r, depth + 1);
  auto& nd = t.nodes[static_cast<std::size_t>(id)];
  nd.feature = s.feature;
  nd.threshold = s.threshold;
  nd.left = left;
  nd.right = right;
  return id;
}

}  // namespace detail

/// Greedy CART with Gini impurity. Zero-gain splits are allowed at impure
/// nodes so interaction-only structure (XOR) stays learnable.
inline TreeModel cart_train(const Matrix& X, const std::vector<int>& labels, TreeSettings settings = {}) {
  if (X.rows() == 0) throw Error(ErrorKind::InsufficientSample, "cart needs at least one row");
  if (static_cast<std::size_t>(X.rows()) != labels.size()) throw Error(ErrorKind::InvalidInput, "label count mismatch");
  if (settings.min_leaf < 1) throw Error(ErrorKind::InvalidInput, "min_leaf must be >= 1");
  TreeModel t;
  t.settings = settings;
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(X.rows()));
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  detail::grow(t, X, labels, rows, 0);
  return t;
}

inline int cart_predict(const TreeModel& t, const Vector& row) { return t.predict(row); }

inline nlohmann::json tree_to_json(const TreeModel& t, const std::vector<std::string>& feature_names,
                                   const std::vector<std::string>& label_names, int i = 0) {
  const auto& nd = t.nodes[static_cast<std::size_t>(i)];
  nlohmann::json j;
  j["n"] = nd.n;
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& [label, c] : nd.counts) counts[label_names.at(static_cast<std::size_t>(label))] = c;
  j["counts"] = counts;
  if (nd.is_leaf()) {
    j["label"] = label_names.at(static_cast<std::size_t>(nd.label));
    return j;
  }
  j["feature"] = feature_names.at(static_cast<std::size_t>(nd.feature));
  j["threshold"] = nd.threshold;
  j["left"] = tree_to_json(t, feature_names, label_names, nd.left);
  j["right"] = tree_to_json(t, feature_names, label_names, nd.right);
  return j;
}

// ---------------------------------------------------------------------- cv

using Predictor = std::function<int(const Vector&)>;
using Trainer = std::function<Predictor(const Matrix&, const std::vector<int>&)>;

inline Trainer cart_trainer(TreeSettings settings = {}) {
  return [settings](const Matrix& X, const std::vector<int>& y) -> Predictor {
    auto tree = std::make_shared<TreeModel>(cart_train(X, y, settings));
    return [tree](const Vector& row) { return tree->predict(row); };
  };
}

/// Stratified fold ids: each class is shuffled and dealt round-robin with a
/// counter that continues across classes, so folds differ by at most one
/// member per class and one member overall.
inline std::vector<int> stratified_folds(const std::vector<int>& labels, int folds, Rng& rng) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  for (const auto& [label, members] : by_class) {
    if (members.size() < static_cast<std::size_t>(folds)) {
      throw Error(ErrorKind::Stratification, "class " + std::to_string(label) + " has fewer members than folds");
    }
  }
  std::vector<int> fold(labels.size(), -1);
  std::size_t counter = 0;
  for (auto& [label, members] : by_class) {
    rng.shuffle(members.begin(), members.end());
    for (auto i : members) fold[i] = static_cast<int>(counter++ % static_cast<std::size_t>(folds));
  }
  return fold;
}

struct CvResult {
  double error = 0.0;
  std::size_t predictions = 0;
  std::size_t mistakes = 0;
  std::vector<double> repeat_errors;
};

inline CvResult repeated_stratified_cv(const Matrix& X, const std::vector<int>& labels, int folds, int repeats,
                                       std::uint64_t seed, const Trainer& trainer) {
  if (folds < 2) throw Error(ErrorKind::InvalidInput, "folds must be >= 2");
  if (repeats < 1) throw Error(ErrorKind::InvalidInput, "repeats must be >= 1");
  if (static_cast<std::size_t>(X.rows()) != labels.size()) throw Error(ErrorKind::InvalidInput, "label count mismatch");
  Rng root(seed);
  CvResult res;
  for (int rep = 0; rep < repeats; ++rep) {
    Rng stream = root.split();
    const auto fold = stratified_folds(labels, folds, stream);
    std::size_t wrong = 0;
    for (int f = 0; f < folds; ++f) {
      std::vector<Eigen::Index> train, test;
      for (std::size_t i = 0; i < labels.size(); ++i) (fold[i] == f ? test : train).push_back(static_cast<Eigen::Index>(i));
      std::vector<int> ytrain;
      for (auto i : train) ytrain.push_back(labels[static_cast<std::size_t>(i)]);
      const auto predict = trainer(X(train, Eigen::all), ytrain);
      for (auto i : test) {
        if (predict(X.row(i).transpose()) != labels[static_cast<std::size_t>(i)]) ++wrong;
      }
    }
    res.mistakes += wrong;
    res.predictions += labels.size();
    res.repeat_errors.push_back(static_cast<double>(wrong) / static_cast<double>(labels.size()));
  }
  res.error = static_cast<double>(res.mistakes) / static_cast<double>(res.predictions);
  return res;
}

// ---------------------------------------------------------------- neighbor

struct Neighbor {
  std::string query_id;
  std::string neighbor_id;
  double distance = 0.0;
};

/// Exact nearest reference row per query row; equal distances go to the
/// lexicographically smallest reference id.
inline std::vector<Neighbor> nearest_neighbors(const std::vector<std::string>& query_ids, const Matrix& query,
                                               const std::vector<std::string>& ref_ids, const Matrix& ref) {
  if (ref.rows() == 0) throw Error(ErrorKind::InvalidInput, "empty reference set");
  if (query.cols() != ref.cols()) throw Error(ErrorKind::InvalidInput, "score dimensions differ");
  std::vector<Neighbor> out;
  for (Eigen::Index i = 0; i < query.rows(); ++i) {
    Eigen::Index best = -1;
    double bd = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < ref.rows(); ++j) {
      const double d = (query.row(i) - ref.row(j)).squaredNorm();
      if (d < bd || (d == bd && ref_ids[static_cast<std::size_t>(j)] < ref_ids[static_cast<std::size_t>(best)])) {
        bd = d;
        best = j;
      }
    }
    out.push_back({query_ids[static_cast<std::size_t>(i)], ref_ids[static_cast<std::size_t>(best)], std::sqrt(bd)});
  }
  return out;
}

}  // namespace hpoela::analysis
