#pragma once

// Gaussian-process surrogate with an ARD Matern 5/2 kernel, constant mean and
// a nugget; lengthscales fitted by maximizing the concentrated likelihood.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include "core.hpp"

namespace hpoela::gp {

/// Bounded Nelder-Mead minimizer (bounds enforced by clamping).
inline Vector nelder_mead(const std::function<double(const Vector&)>& f, Vector start, double step, const Vector& lo,
                          const Vector& hi, int max_evals) {
  const auto d = start.size();
  auto clampv = [&](Vector v) { return Vector(v.cwiseMax(lo).cwiseMin(hi)); };
  std::vector<Vector> pts;
  std::vector<double> vals;
  pts.push_back(clampv(start));
  vals.push_back(f(pts.back()));
  int evals = 1;
  for (Eigen::Index i = 0; i < d; ++i) {
    Vector p = start;
    p[i] += (p[i] + step <= hi[i]) ? step : -step;
    pts.push_back(clampv(p));
    vals.push_back(f(pts.back()));
    ++evals;
  }
  std::vector<std::size_t> idx(pts.size());
  while (evals < max_evals) {
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = idx.front();
    const std::size_t worst = idx.back();
    const std::size_t second = idx[idx.size() - 2];
    Vector centroid = Vector::Zero(d);
    for (std::size_t i = 0; i + 1 < idx.size(); ++i) centroid += pts[idx[i]];
    centroid /= static_cast<double>(d);

    const Vector xr = clampv(centroid + (centroid - pts[worst]));
    const double fr = f(xr);
    ++evals;
    if (fr < vals[best]) {
      const Vector xe = clampv(centroid + 2.0 * (centroid - pts[worst]));
      const double fe = f(xe);
      ++evals;
      if (fe < fr) {
        pts[worst] = xe;
        vals[worst] = fe;
      } else {
        pts[worst] = xr;
        vals[worst] = fr;
      }
    } else if (fr < vals[second]) {
      pts[worst] = xr;
      vals[worst] = fr;
    } else {
      const Vector xc = clampv(centroid + 0.5 * (pts[worst] - centroid));
      const double fc = f(xc);
      ++evals;
      if (fc < vals[worst]) {
        pts[worst] = xc;
        vals[worst] = fc;
      } else {
        for (std::size_t i = 0; i < pts.size(); ++i) {
          if (i == best) continue;
          pts[i] = clampv(pts[best] + 0.5 * (pts[i] - pts[best]));
          vals[i] = f(pts[i]);
          ++evals;
        }
      }
    }
  }
  const auto it = std::min_element(vals.begin(), vals.end());
  return pts[static_cast<std::size_t>(it - vals.begin())];
}

/// Matern 5/2 correlation between the rows of A and B, coordinates pre-divided by lengthscales.
inline Matrix matern52(const Matrix& A, const Matrix& B) {
  const Vector a2 = A.rowwise().squaredNorm();
  const Vector b2 = B.rowwise().squaredNorm();
  Matrix d2 = -2.0 * A * B.transpose();
  d2.colwise() += a2;
  d2.rowwise() += b2.transpose();
  const Eigen::ArrayXXd r = d2.array().max(0.0).sqrt() * std::sqrt(5.0);
  return ((1.0 + r + r.square() / 3.0) * (-r).exp()).matrix();
}

struct Settings {
  double nugget = 1e-8;
  double max_nugget = 1e-2;
  double min_lengthscale = 0.01;
  double max_lengthscale = 3.0;
  int likelihood_evals = 20;
};

class Model {
 public:
  /// Fits on X (n x d, unit cube) and y. log_ls0 seeds the lengthscale search.
  Model(const Matrix& X, const Vector& y, Vector log_ls0, const Settings& settings = {}) : X_(X) {
    const auto n = X.rows();
    y_mean_ = y.mean();
    const double sd = n > 1 ? std::sqrt((y.array() - y_mean_).square().sum() / static_cast<double>(n - 1)) : 0.0;
    y_scale_ = sd > 0.0 ? sd : 1.0;
    y_ = (y.array() - y_mean_) / y_scale_;

    const auto d = X.cols();
    const Vector lo = Vector::Constant(d, std::log(settings.min_lengthscale));
    const Vector hi = Vector::Constant(d, std::log(settings.max_lengthscale));
    log_ls0 = log_ls0.cwiseMax(lo).cwiseMin(hi);

    for (double nugget = settings.nugget; nugget <= settings.max_nugget * (1.0 + 1e-9); nugget *= 10.0) {
      nugget_ = nugget;
      if (!std::isfinite(neg_log_likelihood(log_ls0))) continue;
      auto objective = [this](const Vector& v) { return neg_log_likelihood(v); };
      const Vector best = nelder_mead(objective, log_ls0, 0.5, lo, hi, settings.likelihood_evals);
      if (finalize(best)) return;
    }
    throw Error(ErrorKind::SingularFit, "GP covariance not positive definite at any nugget");
  }

  double nugget() const { return nugget_; }
  const Vector& log_lengthscales() const { return log_ls_; }

  /// Concentrated negative log-likelihood; +inf if the covariance is not PD.
  double neg_log_likelihood(const Vector& log_ls) const {
    const Vector inv = (-log_ls).array().exp();
    const Matrix Xs = X_ * inv.asDiagonal();
    Matrix K = matern52(Xs, Xs);
    K.diagonal().array() += nugget_;
    Eigen::LLT<Matrix> llt(K);
    if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    const auto n = static_cast<double>(X_.rows());
    const Vector ones = Vector::Ones(X_.rows());
    const Vector k1 = llt.solve(ones);
    const Vector ky = llt.solve(y_);
    const double mu = ones.dot(ky) / ones.dot(k1);
    const Vector r = y_.array() - mu;
    const double sigma2 = r.dot(llt.solve(r)) / n;
    if (!(sigma2 > 0.0)) return std::numeric_limits<double>::infinity();
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    const double v = 0.5 * (n * std::log(sigma2) + logdet);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  }

  struct Prediction {
    Vector mean;  // standardized units
    Vector sd;
  };

  /// Correlations between the training rows and candidate rows C (n x m).
  Matrix cross(const Matrix& C) const {
    const Vector inv = (-log_ls_).array().exp();
    return matern52(X_ * inv.asDiagonal(), C * inv.asDiagonal());
  }

  /// Posterior mean from a cross-correlation block, in standardized units.
  Vector mean_from_cross(const Matrix& kx) const { return Vector::Constant(kx.cols(), mu_) + kx.transpose() * alpha_; }

  Vector sd_from_cross(const Matrix& kx) const {
    const Matrix v = llt_.matrixL().solve(kx);
    return (sigma2_ * (1.0 + nugget_ - v.colwise().squaredNorm().array())).max(0.0).sqrt().matrix().transpose();
  }

  /// Upper bound on the posterior sd: k'K^-1 k >= max_i k_i^2 / K_ii, so no
  /// triangular solve is needed.
  Vector sd_bound_from_cross(const Matrix& kx) const {
    const Vector kmax2 = kx.array().square().colwise().maxCoeff().transpose();
    const double kii = 1.0 + nugget_;
    return (sigma2_ * (kii - kmax2.array() / kii)).max(0.0).sqrt().matrix();
  }

  Vector predict_mean(const Matrix& C) const { return mean_from_cross(cross(C)); }

  Prediction predict(const Matrix& C) const {
    const Matrix kx = cross(C);
    return {mean_from_cross(kx), sd_from_cross(kx)};
  }

  /// Prior standard deviation: an upper bound for every posterior sd.
  double prior_sd() const { return std::sqrt(sigma2_ * (1.0 + nugget_)); }

  double standardize(double y) const { return (y - y_mean_) / y_scale_; }
  const Vector& y_standardized() const { return y_; }

 private:
  bool finalize(const Vector& log_ls) {
    log_ls_ = log_ls;
    const Vector inv = (-log_ls).array().exp();
    const Matrix Xs = X_ * inv.asDiagonal();
    Matrix K = matern52(Xs, Xs);
    K.diagonal().array() += nugget_;
    llt_.compute(K);
    if (llt_.info() != Eigen::Success) return false;
    const Vector ones = Vector::Ones(X_.rows());
    const Vector k1 = llt_.solve(ones);
    const Vector ky = llt_.solve(y_);
    mu_ = ones.dot(ky) / ones.dot(k1);
    const Vector r = y_.array() - mu_;
    alpha_ = llt_.solve(r);
    sigma2_ = r.dot(alpha_) / static_cast<double>(X_.rows());
    return std::isfinite(sigma2_) && sigma2_ > 0.0;
  }

  Matrix X_;
  Vector y_;
  double y_mean_ = 0.0;
  double y_scale_ = 1.0;
  double nugget_ = 1e-8;
  Vector log_ls_;
  Eigen::LLT<Matrix> llt_;
  Vector alpha_;
  double mu_ = 0.0;
  double sigma2_ = 1.0;
};

inline double normal_pdf(double u) { return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi); }
inline double normal_cdf(double u) { return 0.5 * std::erfc(-u / std::numbers::sqrt2); }

/// Expected improvement below `best` for a Gaussian prediction (mean, sd).
inline double expected_improvement(double mean, double sd, double best) {
  if (!(sd > 0.0)) return std::max(best - mean, 0.0);
  const double u = (best - mean) / sd;
  return std::max((best - mean) * normal_cdf(u) + sd * normal_pdf(u), 0.0);
}

}  // namespace hpoela::gp
