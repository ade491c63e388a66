#pragma once

// The 24 noiseless BBOB functions with seeded instance transformations.

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "core.hpp"

namespace hpoela::bbob {

inline constexpr int kNumFunctions = 24;

/// Per-instance random material. Only the fields a function uses are filled.
struct Transform {
  Matrix rot_r;  // orthogonal
  Matrix rot_q;  // orthogonal
  Vector signs;  // +-1 per coordinate

  // Gallagher peaks (f21, f22): peak centres already rotated by R.
  Matrix peak_centres_rot;          // npeaks x dim
  Vector peak_weights;              // npeaks
  std::vector<Vector> peak_scales;  // per-peak diagonal of the conditioning matrix
};

struct Instance {
  int fid = 0;
  int iid = 0;
  int dim = 0;
  Vector xopt;
  double fopt = 0.0;
  Transform transform;

  std::string id() const { return std::to_string(fid) + "_" + std::to_string(iid) + "_" + std::to_string(dim); }
};

namespace detail {

inline Matrix random_rotation(Rng& rng, int dim) {
  Matrix g(dim, dim);
  for (int j = 0; j < dim; ++j) {
    for (int i = 0; i < dim; ++i) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(dim, dim);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < dim; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

inline double tosz(double x) {
  if (x == 0.0) return 0.0;
  const double xhat = std::log(std::abs(x));
  const double c1 = x > 0.0 ? 10.0 : 5.5;
  const double c2 = x > 0.0 ? 7.9 : 3.1;
  const double s = x > 0.0 ? 1.0 : -1.0;
  return s * std::exp(xhat + 0.049 * (std::sin(c1 * xhat) + std::sin(c2 * xhat)));
}

inline Vector tosz(const Vector& x) {
  Vector out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = tosz(x[i]);
  return out;
}

inline Vector tasy(const Vector& x, double beta) {
  const auto d = x.size();
  Vector out = x;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (x[i] > 0.0) {
      const double frac = d > 1 ? static_cast<double>(i) / static_cast<double>(d - 1) : 0.0;
      out[i] = std::pow(x[i], 1.0 + beta * frac * std::sqrt(x[i]));
    }
  }
  return out;
}

/// Diagonal of the conditioning matrix with exponents spread over the dimensions.
inline Vector lambda_diag(double alpha, Eigen::Index d) {
  Vector out(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double frac = d > 1 ? static_cast<double>(i) / static_cast<double>(d - 1) : 0.0;
    out[i] = std::pow(alpha, 0.5 * frac);
  }
  return out;
}

inline double fpen(const Vector& x) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double e = std::abs(x[i]) - 5.0;
    if (e > 0.0) s += e * e;
  }
  return s;
}

inline double frac_exponent(Eigen::Index i, Eigen::Index d) {
  return d > 1 ? static_cast<double>(i) / static_cast<double>(d - 1) : 0.0;
}

inline double rastrigin_core(const Vector& z) {
  const double d = static_cast<double>(z.size());
  double c = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) c += std::cos(2.0 * std::numbers::pi * z[i]);
  return 10.0 * (d - c) + z.squaredNorm();
}

inline double rosenbrock_core(const Vector& z) {
  double s = 0.0;
  for (Eigen::Index i = 0; i + 1 < z.size(); ++i) {
    const double a = z[i] * z[i] - z[i + 1];
    const double b = z[i] - 1.0;
    s += 100.0 * a * a + b * b;
  }
  return s;
}

inline double schaffer_core(const Vector& z) {
  const auto d = z.size();
  double s = 0.0;
  for (Eigen::Index i = 0; i + 1 < d; ++i) {
    const double si = std::sqrt(z[i] * z[i] + z[i + 1] * z[i + 1]);
    const double rs = std::sqrt(si);
    const double sn = std::sin(50.0 * std::pow(si, 0.2));
    s += rs + rs * sn * sn;
  }
  s /= static_cast<double>(d - 1);
  return s * s;
}

inline double rosen_scale(int dim) { return std::max(1.0, std::sqrt(static_cast<double>(dim)) / 8.0); }

inline void make_gallagher(Instance& inst, Rng& rng, int npeaks) {
  const int d = inst.dim;
  auto& t = inst.transform;
  const double alpha_first = npeaks == 101 ? 1000.0 : 1000.0 * 1000.0;
  std::vector<double> alphas(static_cast<std::size_t>(npeaks - 1));
  for (int j = 0; j < npeaks - 1; ++j) {
    alphas[static_cast<std::size_t>(j)] = std::pow(1000.0, 2.0 * j / static_cast<double>(npeaks - 2));
  }
  rng.shuffle(alphas.begin(), alphas.end());

  Matrix centres(npeaks, d);
  centres.row(0) = inst.xopt.transpose();
  for (int i = 1; i < npeaks; ++i) {
    for (int k = 0; k < d; ++k) centres(i, k) = rng.uniform(-4.9, 4.9);
  }
  t.peak_centres_rot = centres * t.rot_r.transpose();
  t.peak_weights.resize(npeaks);
  t.peak_weights[0] = 10.0;
  for (int i = 1; i < npeaks; ++i) {
    t.peak_weights[i] = 1.1 + 8.0 * (i - 1) / static_cast<double>(npeaks - 2);
  }
  t.peak_scales.clear();
  for (int i = 0; i < npeaks; ++i) {
    const double alpha = i == 0 ? alpha_first : alphas[static_cast<std::size_t>(i - 1)];
    Vector diag = lambda_diag(alpha, d) / std::pow(alpha, 0.25);
    // squared: the quadratic form scales as alpha^((j/(D-1)) - 1/2)
    diag = diag.array().square();
    std::vector<double> perm(diag.data(), diag.data() + d);
    rng.shuffle(perm.begin(), perm.end());
    t.peak_scales.push_back(to_vector(perm));
  }
}

}  // namespace detail

/// Materializes instance (fid, iid, dim). Deterministic in its arguments.
inline Instance instantiate(int fid, int iid, int dim) {
  if (fid < 1 || fid > kNumFunctions) throw Error(ErrorKind::InvalidFunction, "fid must be in 1..24, got " + std::to_string(fid));
  if (iid < 1) throw Error(ErrorKind::InvalidInput, "iid must be >= 1");
  if (dim < 2) throw Error(ErrorKind::InvalidDimension, "dim must be >= 2, got " + std::to_string(dim));

  Instance inst;
  inst.fid = fid;
  inst.iid = iid;
  inst.dim = dim;
  Rng rng(static_cast<std::uint64_t>(fid) * 1000000ULL + static_cast<std::uint64_t>(iid) * 1000ULL +
          static_cast<std::uint64_t>(dim));

  inst.xopt.resize(dim);
  for (int i = 0; i < dim; ++i) inst.xopt[i] = rng.uniform(-4.0, 4.0);
  const double ratio = 100.0 * rng.normal() / rng.normal();
  double fopt = std::clamp(ratio, -1000.0, 1000.0);
  inst.fopt = std::round(fopt * 100.0) / 100.0;

  auto& t = inst.transform;
  t.rot_r = detail::random_rotation(rng, dim);
  t.rot_q = detail::random_rotation(rng, dim);
  t.signs.resize(dim);
  for (int i = 0; i < dim; ++i) t.signs[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;

  switch (fid) {
    case 4:
      for (int i = 0; i < dim; i += 2) inst.xopt[i] = std::abs(inst.xopt[i]);
      break;
    case 5:
      inst.xopt = 5.0 * t.signs;
      break;
    case 8:
      inst.xopt *= 0.75;
      break;
    case 9:
    case 19:
      inst.xopt = t.rot_r.transpose() * Vector::Constant(dim, 0.5 / detail::rosen_scale(dim));
      break;
    case 20:
      inst.xopt = (4.2096874633 / 2.0) * t.signs;
      break;
    case 21:
      detail::make_gallagher(inst, rng, 101);
      break;
    case 22:
      inst.xopt *= 0.98;
      detail::make_gallagher(inst, rng, 21);
      break;
    case 24:
      inst.xopt = 1.25 * t.signs;
      break;
    default:
      break;
  }
  return inst;
}

/// Raw function value at x (no dimension check; see evaluate()).
inline double evaluate_unchecked(const Instance& inst, const Vector& x) {
  using detail::fpen;
  using detail::frac_exponent;
  using detail::lambda_diag;
  using detail::tasy;
  using detail::tosz;
  constexpr double pi = std::numbers::pi;
  const auto& t = inst.transform;
  const Eigen::Index d = x.size();
  const double dd = static_cast<double>(d);
  double f = 0.0;

  switch (inst.fid) {
    case 1: {  // sphere
      f = (x - inst.xopt).squaredNorm();
      break;
    }
    case 2: {  // separable ellipsoid
      const Vector z = tosz(Vector(x - inst.xopt));
      for (Eigen::Index i = 0; i < d; ++i) f += std::pow(10.0, 6.0 * frac_exponent(i, d)) * z[i] * z[i];
      break;
    }
    case 3: {  // separable Rastrigin
      const Vector z = lambda_diag(10.0, d).cwiseProduct(tasy(tosz(Vector(x - inst.xopt)), 0.2));
      f = detail::rastrigin_core(z);
      break;
    }
    case 4: {  // Bueche-Rastrigin
      Vector z = tosz(Vector(x - inst.xopt));
      for (Eigen::Index i = 0; i < d; ++i) {
        double s = std::pow(10.0, 0.5 * frac_exponent(i, d));
        if (z[i] > 0.0 && i % 2 == 0) s *= 10.0;
        z[i] *= s;
      }
      f = detail::rastrigin_core(z) + 100.0 * fpen(x);
      break;
    }
    case 5: {  // linear slope
      for (Eigen::Index i = 0; i < d; ++i) {
        const double s = (inst.xopt[i] > 0.0 ? 1.0 : -1.0) * std::pow(10.0, frac_exponent(i, d));
        const double z = inst.xopt[i] * x[i] < 25.0 ? x[i] : inst.xopt[i];
        f += 5.0 * std::abs(s) - s * z;
      }
      break;
    }
    case 6: {  // attractive sector
      const Vector z = t.rot_q * lambda_diag(10.0, d).asDiagonal() * t.rot_r * (x - inst.xopt);
      double s = 0.0;
      for (Eigen::Index i = 0; i < d; ++i) {
        const double si = z[i] * inst.xopt[i] > 0.0 ? 100.0 : 1.0;
        s += (si * z[i]) * (si * z[i]);
      }
      f = std::pow(tosz(s), 0.9);
      break;
    }
    case 7: {  // step ellipsoid
      const Vector zhat = lambda_diag(10.0, d).asDiagonal() * t.rot_r * (x - inst.xopt);
      Vector ztil(d);
      for (Eigen::Index i = 0; i < d; ++i) {
        ztil[i] = std::abs(zhat[i]) > 0.5 ? std::floor(0.5 + zhat[i]) : std::floor(0.5 + 10.0 * zhat[i]) / 10.0;
      }
      const Vector z = t.rot_q * ztil;
      double s = 0.0;
      for (Eigen::Index i = 0; i < d; ++i) s += std::pow(10.0, 2.0 * frac_exponent(i, d)) * z[i] * z[i];
      f = 0.1 * std::max(std::abs(zhat[0]) / 1e4, s) + fpen(x);
      break;
    }
    case 8: {  // Rosenbrock
      const Vector z = detail::rosen_scale(inst.dim) * (x - inst.xopt) + Vector::Ones(d);
      f = detail::rosenbrock_core(z);
      break;
    }
    case 9: {  // rotated Rosenbrock
      const Vector z = detail::rosen_scale(inst.dim) * (t.rot_r * x) + Vector::Constant(d, 0.5);
      f = detail::rosenbrock_core(z);
      break;
    }
    case 10: {  // ellipsoid
      const Vector z = tosz(Vector(t.rot_r * (x - inst.xopt)));
      for (Eigen::Index i = 0; i < d; ++i) f += std::pow(10.0, 6.0 * frac_exponent(i, d)) * z[i] * z[i];
      break;
    }
    case 11: {  // discus
      const Vector z = tosz(Vector(t.rot_r * (x - inst.xopt)));
      f = 1e6 * z[0] * z[0] + z.tail(d - 1).squaredNorm();
      break;
    }
    case 12: {  // bent cigar
      const Vector z = t.rot_r * tasy(Vector(t.rot_r * (x - inst.xopt)), 0.5);
      f = z[0] * z[0] + 1e6 * z.tail(d - 1).squaredNorm();
      break;
    }
    case 13: {  // sharp ridge
      const Vector z = t.rot_q * lambda_diag(10.0, d).asDiagonal() * t.rot_r * (x - inst.xopt);
      f = z[0] * z[0] + 100.0 * std::sqrt(z.tail(d - 1).squaredNorm());
      break;
    }
    case 14: {  // different powers
      const Vector z = t.rot_r * (x - inst.xopt);
      double s = 0.0;
      for (Eigen::Index i = 0; i < d; ++i) s += std::pow(std::abs(z[i]), 2.0 + 4.0 * frac_exponent(i, d));
      f = std::sqrt(s);
      break;
    }
    case 15: {  // rotated Rastrigin
      const Vector inner = tasy(tosz(Vector(t.rot_r * (x - inst.xopt))), 0.2);
      const Vector z = t.rot_r * lambda_diag(10.0, d).asDiagonal() * t.rot_q * inner;
      f = detail::rastrigin_core(z);
      break;
    }
    case 16: {  // Weierstrass
      const Vector inner = tosz(Vector(t.rot_r * (x - inst.xopt)));
      const Vector z = t.rot_r * lambda_diag(0.01, d).asDiagonal() * t.rot_q * inner;
      double f0 = 0.0;
      for (int k = 0; k < 12; ++k) f0 += std::pow(0.5, k) * std::cos(pi * std::pow(3.0, k));
      double s = 0.0;
      for (Eigen::Index i = 0; i < d; ++i) {
        for (int k = 0; k < 12; ++k) s += std::pow(0.5, k) * std::cos(2.0 * pi * std::pow(3.0, k) * (z[i] + 0.5));
      }
      const double base = s / dd - f0;
      f = 10.0 * base * base * base + 10.0 / dd * fpen(x);
      break;
    }
    case 17:
    case 18: {  // Schaffers F7, moderately / badly conditioned
      const double cond = inst.fid == 17 ? 10.0 : 1000.0;
      const Vector z = lambda_diag(cond, d).asDiagonal() * t.rot_q * tasy(Vector(t.rot_r * (x - inst.xopt)), 0.5);
      f = detail::schaffer_core(z) + 10.0 * fpen(x);
      break;
    }
    case 19: {  // composite Griewank-Rosenbrock
      const Vector z = detail::rosen_scale(inst.dim) * (t.rot_r * x) + Vector::Constant(d, 0.5);
      double s = 0.0;
      for (Eigen::Index i = 0; i + 1 < d; ++i) {
        const double a = z[i] * z[i] - z[i + 1];
        const double b = z[i] - 1.0;
        const double si = 100.0 * a * a + b * b;
        s += si / 4000.0 - std::cos(si);
      }
      f = 10.0 / (dd - 1.0) * s + 10.0;
      break;
    }
    case 20: {  // Schwefel x*sin(x)
      const Vector abs_opt2 = 2.0 * inst.xopt.cwiseAbs();
      const Vector xhat = 2.0 * t.signs.cwiseProduct(x);
      Vector zhat = xhat;
      for (Eigen::Index i = 1; i < d; ++i) zhat[i] = xhat[i] + 0.25 * (xhat[i - 1] - abs_opt2[i - 1]);
      const Vector z = 100.0 * (lambda_diag(10.0, d).cwiseProduct(zhat - abs_opt2) + abs_opt2);
      double s = 0.0;
      for (Eigen::Index i = 0; i < d; ++i) s += z[i] * std::sin(std::sqrt(std::abs(z[i])));
      f = -s / (100.0 * dd) + 4.189828872724339 + 100.0 * fpen(Vector(z / 100.0));
      break;
    }
    case 21:
    case 22: {  // Gallagher 101 / 21 peaks
      const Vector rx = t.rot_r * x;
      double best = 0.0;
      for (Eigen::Index i = 0; i < t.peak_centres_rot.rows(); ++i) {
        const Vector diff = rx - t.peak_centres_rot.row(i).transpose();
        const double q = diff.cwiseProduct(diff).dot(t.peak_scales[static_cast<std::size_t>(i)]);
        best = std::max(best, t.peak_weights[i] * std::exp(-q / (2.0 * dd)));
      }
      const double v = tosz(10.0 - best);
      f = v * v + fpen(x);
      break;
    }
    case 23: {  // Katsuura
      const Vector z = t.rot_q * lambda_diag(100.0, d).asDiagonal() * t.rot_r * (x - inst.xopt);
      double prod = 1.0;
      for (Eigen::Index i = 0; i < d; ++i) {
        double s = 0.0;
        for (int j = 1; j <= 32; ++j) {
          const double p = std::ldexp(1.0, j);
          s += std::abs(p * z[i] - std::round(p * z[i])) / p;
        }
        prod *= std::pow(1.0 + static_cast<double>(i + 1) * s, 10.0 / std::pow(dd, 1.2));
      }
      f = 10.0 / (dd * dd) * prod - 10.0 / (dd * dd) + fpen(x);
      break;
    }
    case 24: {  // Lunacek bi-Rastrigin
      constexpr double mu0 = 2.5;
      const double s = 1.0 - 1.0 / (2.0 * std::sqrt(dd + 20.0) - 8.2);
      const double mu1 = -std::sqrt((mu0 * mu0 - 1.0) / s);
      const Vector xhat = 2.0 * t.signs.cwiseProduct(x);
      const Vector z = t.rot_q * lambda_diag(100.0, d).asDiagonal() * t.rot_r * (xhat - Vector::Constant(d, mu0));
      double s0 = 0.0;
      double s1 = 0.0;
      double c = 0.0;
      for (Eigen::Index i = 0; i < d; ++i) {
        s0 += (xhat[i] - mu0) * (xhat[i] - mu0);
        s1 += (xhat[i] - mu1) * (xhat[i] - mu1);
        c += std::cos(2.0 * pi * z[i]);
      }
      f = std::min(s0, dd + s * s1) + 10.0 * (dd - c) + 1e4 * fpen(x);
      break;
    }
    default:
      throw Error(ErrorKind::InvalidFunction, "fid out of range");
  }
  return f + inst.fopt;
}

inline double evaluate(const Instance& inst, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(inst.dim)) {
    throw Error(ErrorKind::InvalidDimension, "point has length " + std::to_string(x.size()) + ", instance dim " +
                                                 std::to_string(inst.dim));
  }
  require_finite(x);
  return evaluate_unchecked(inst, to_vector(x));
}

/// Cartesian product in fid-major, then iid, then dim order.
inline std::vector<Instance> suite(const std::vector<int>& fids, const std::vector<int>& iids,
                                   const std::vector<int>& dims) {
  std::vector<Instance> out;
  out.reserve(fids.size() * iids.size() * dims.size());
  for (int f : fids) {
    for (int i : iids) {
      for (int d : dims) out.push_back(instantiate(f, i, d));
    }
  }
  return out;
}

inline Problem make_problem(Instance inst) {
  auto shared = std::make_shared<const Instance>(std::move(inst));
  Problem p;
  p.id = shared->id();
  p.cls = ProblemClass::Bbob;
  p.domain = BoxDomain::uniform(static_cast<std::size_t>(shared->dim), -5.0, 5.0);
  p.evaluate = [shared](std::span<const double> x) { return evaluate(*shared, x); };
  return p;
}

}  // namespace hpoela::bbob
