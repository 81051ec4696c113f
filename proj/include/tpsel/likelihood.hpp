#ifndef TPSEL_LIKELIHOOD_HPP
#define TPSEL_LIKELIHOOD_HPP

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "tpsel/data.hpp"

// Log-likelihoods of the two-piece regression models and their analytic
// gradients/Hessians in the unconstrained coordinates
// eta = (theta, log vartheta, atanh alpha).
//
// Conventions: residual r_i = y_i - x_i' theta; the side set A collects
// negative residuals, whose scale is sqrt(vartheta)*(1+alpha); non-negative
// residuals (ties included) use sqrt(vartheta)*(1-alpha).  k = 1 denotes the
// Normal base, k = 2 the Laplace base.

namespace tpsel {

struct DerivResult {
  double value = 0.0;
  VectorXd grad;
  MatrixXd hess;
};

// --- log-likelihood value -------------------------------------------------

inline double loglik(const VectorXd& y, const MatrixXd& Xg, int k,
                     const VectorXd& theta, double vartheta, double alpha) {
  if (Xg.cols() != theta.size())
    throw std::invalid_argument("loglik: theta length mismatch");
  const Eigen::Index n = y.size();
  const VectorXd r = Xg.cols() > 0 ? VectorXd(y - Xg * theta) : y;
  double acc = 0.0;
  if (k == 1) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double c = r(i) < 0.0 ? 1.0 + alpha : 1.0 - alpha;
      const double z = r(i) / c;
      acc += z * z;
    }
    return -0.5 * n * detail::kLog2Pi - 0.5 * n * std::log(vartheta) -
           acc / (2.0 * vartheta);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double c = r(i) < 0.0 ? 1.0 + alpha : 1.0 - alpha;
    acc += std::fabs(r(i)) / c;
  }
  return -n * detail::kLog2 - 0.5 * n * std::log(vartheta) -
         acc / std::sqrt(vartheta);
}

inline double loglik(const Dataset& data, const ModelGamma& gamma,
                     const Params& params) {
  return loglik(data.y, select_columns(data.X, gamma), gamma.k(), params.theta,
                params.vartheta, params.alpha);
}

// --- gradient and Hessian in unconstrained coordinates ---------------------
//
// Layout: [theta (d entries), log_vartheta, atanh_alpha?]; the alpha entry is
// present only when with_alpha (it is dropped for symmetric families and for
// fixed-alpha quantile fits, where eta.atanh_alpha still sets the weights).

inline DerivResult loglik_derivs(const VectorXd& y, const MatrixXd& Xg, int k,
                                 const TransformedParams& eta, bool with_alpha) {
  const Eigen::Index n = y.size();
  const Eigen::Index d = Xg.cols();
  if (d != eta.theta.size())
    throw std::invalid_argument("loglik_derivs: theta length mismatch");
  const double at = eta.atanh_alpha;
  const double t = std::tanh(at);
  const double sech2 = 1.0 - t * t;
  const VectorXd r = d > 0 ? VectorXd(y - Xg * eta.theta) : y;

  const Eigen::Index dim = d + 1 + (with_alpha ? 1 : 0);
  DerivResult out;
  out.grad = VectorXd::Zero(dim);
  out.hess = MatrixXd::Zero(dim, dim);

  if (k == 1) {
    const double e = std::exp(-eta.log_vartheta);
    // Per-observation weights: w = 1/c^2, and the chain-rule factors from
    // d c / d atanh_alpha = s * sech^2 with s = +1 on the negative side.
    VectorXd w(n), sw3(n);  // 1/c^2 and s/c^3
    double S2 = 0.0, S3s = 0.0, S4 = 0.0;  // sum r^2/c^2, sum s r^2/c^3, sum r^2/c^4
    for (Eigen::Index i = 0; i < n; ++i) {
      const double s = r(i) < 0.0 ? 1.0 : -1.0;
      const double c = 1.0 + s * t;
      const double c2 = c * c;
      w(i) = 1.0 / c2;
      sw3(i) = s / (c2 * c);
      const double r2 = r(i) * r(i);
      S2 += r2 / c2;
      S3s += s * r2 / (c2 * c);
      S4 += r2 / (c2 * c2);
    }
    out.value = -0.5 * n * detail::kLog2Pi - 0.5 * n * eta.log_vartheta -
                0.5 * e * S2;
    VectorXd Xt_wr = VectorXd::Zero(d), Xt_swr3 = VectorXd::Zero(d);
    MatrixXd Xt_wX = MatrixXd::Zero(d, d);
    if (d > 0) {
      Xt_wr = Xg.transpose() * (w.array() * r.array()).matrix();
      Xt_swr3 = Xg.transpose() * (sw3.array() * r.array()).matrix();
      Xt_wX = Xg.transpose() * w.asDiagonal() * Xg;
    }
    out.grad.head(d) = e * Xt_wr;
    out.grad(d) = -0.5 * n + 0.5 * e * S2;
    out.hess.topLeftCorner(d, d) = -e * Xt_wX;
    out.hess.block(0, d, d, 1) = -e * Xt_wr;
    out.hess.block(d, 0, 1, d) = -e * Xt_wr.transpose();
    out.hess(d, d) = -0.5 * e * S2;
    if (with_alpha) {
      out.grad(d + 1) = e * sech2 * S3s;
      out.hess.block(0, d + 1, d, 1) = -2.0 * e * sech2 * Xt_swr3;
      out.hess.block(d + 1, 0, 1, d) = out.hess.block(0, d + 1, d, 1).transpose();
      out.hess(d, d + 1) = -e * sech2 * S3s;
      out.hess(d + 1, d) = out.hess(d, d + 1);
      out.hess(d + 1, d + 1) =
          e * (-2.0 * t * sech2 * S3s - 3.0 * sech2 * sech2 * S4);
    }
    return out;
  }

  // k == 2 (Laplace base).  The objective is piecewise linear in theta, so
  // the exact theta-theta block is zero; ties (r == 0) take the one-sided
  // derivative of the non-negative side.
  const double v = std::exp(-0.5 * eta.log_vartheta);
  VectorXd sg(n);            // sign(r)/c
  VectorXd iw2(n);           // 1/c^2 (for the theta-alpha cross block)
  double S1 = 0.0, S2s = 0.0, S3 = 0.0;  // sum |r|/c, sum s|r|/c^2, sum |r|/c^3
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = r(i) < 0.0 ? 1.0 : -1.0;
    const double c = 1.0 + s * t;
    const double sign_r = r(i) < 0.0 ? -1.0 : 1.0;
    const double a = std::fabs(r(i));
    sg(i) = sign_r / c;
    iw2(i) = 1.0 / (c * c);
    S1 += a / c;
    S2s += s * a / (c * c);
    S3 += a / (c * c * c);
  }
  out.value = -n * detail::kLog2 - 0.5 * n * eta.log_vartheta - v * S1;
  VectorXd Xt_sg = VectorXd::Zero(d), Xt_w2 = VectorXd::Zero(d);
  if (d > 0) {
    Xt_sg = Xg.transpose() * sg;
    Xt_w2 = Xg.transpose() * iw2;
  }
  out.grad.head(d) = v * Xt_sg;
  out.grad(d) = -0.5 * n + 0.5 * v * S1;
  // theta-theta block identically zero.
  out.hess.block(0, d, d, 1) = -0.5 * v * Xt_sg;
  out.hess.block(d, 0, 1, d) = out.hess.block(0, d, d, 1).transpose();
  out.hess(d, d) = -0.25 * v * S1;
  if (with_alpha) {
    out.grad(d + 1) = v * sech2 * S2s;
    out.hess.block(0, d + 1, d, 1) = v * sech2 * Xt_w2;
    out.hess.block(d + 1, 0, 1, d) = out.hess.block(0, d + 1, d, 1).transpose();
    out.hess(d, d + 1) = -0.5 * v * sech2 * S2s;
    out.hess(d + 1, d) = out.hess(d, d + 1);
    out.hess(d + 1, d + 1) =
        v * (-2.0 * t * sech2 * S2s - 2.0 * sech2 * sech2 * S3);
  }
  return out;
}

inline DerivResult loglik_derivs(const Dataset& data, const ModelGamma& gamma,
                                 const TransformedParams& eta, bool with_alpha) {
  return loglik_derivs(data.y, select_columns(data.X, gamma), gamma.k(), eta,
                       with_alpha);
}

inline DerivResult loglik_derivs(const Dataset& data, const ModelGamma& gamma,
                                 const TransformedParams& eta) {
  return loglik_derivs(data, gamma, eta, gamma.skew);
}

// --- expected Hessian surrogate for the Laplace base ------------------------
//
// Blockwise limits of the expected two-piece Laplace Hessian, transformed to
// (theta, log vartheta, atanh alpha) by the chain rule at a gradient-zero
// point (Jacobian diag(I, vartheta, 1 - alpha^2)):
//   theta-theta: -X'X / (vartheta (1-alpha^2))
//   lv-lv:       -n/4
//   aa:          -2 n (1-alpha^2)
//   theta-aa:     n xbar / sqrt(vartheta)
// with zero theta-lv and lv-aa blocks.

inline MatrixXd alaplace_expected_hessian(const VectorXd& y, const MatrixXd& Xg,
                                          const TransformedParams& eta,
                                          bool with_alpha) {
  const Eigen::Index n = y.size();
  const Eigen::Index d = Xg.cols();
  const double vt = std::exp(eta.log_vartheta);
  const double a = std::tanh(eta.atanh_alpha);
  const double om = 1.0 - a * a;
  MatrixXd XtX = d > 0 ? MatrixXd(Xg.transpose() * Xg) : MatrixXd(0, 0);
  if (d > 0) {
    Eigen::FullPivLU<MatrixXd> lu(XtX);
    if (lu.rank() < d)
      throw DataError("alaplace_expected_hessian: rank-deficient design");
  }
  const Eigen::Index dim = d + 1 + (with_alpha ? 1 : 0);
  MatrixXd H = MatrixXd::Zero(dim, dim);
  if (d > 0) H.topLeftCorner(d, d) = -XtX / (vt * om);
  H(d, d) = -0.25 * n;
  if (with_alpha) {
    H(d + 1, d + 1) = -2.0 * n * om;
    if (d > 0) {
      VectorXd xbar = Xg.colwise().mean();
      H.block(0, d + 1, d, 1) = (double)n * xbar / std::sqrt(vt);
      H.block(d + 1, 0, 1, d) = H.block(0, d + 1, d, 1).transpose();
    }
  }
  return H;
}

inline MatrixXd alaplace_expected_hessian(const Dataset& data,
                                          const ModelGamma& gamma,
                                          const TransformedParams& eta,
                                          bool with_alpha) {
  return alaplace_expected_hessian(data.y, select_columns(data.X, gamma), eta,
                                   with_alpha);
}

// --- quadratic curvature adjustment -----------------------------------------
//
// Refits each diagonal curvature of a surrogate Hessian hbar by probing the
// actual objective along coordinate axes at the endpoints of the asymptotic
// 95% interval (lambda = +/- 1.96 * sd_j), then rescales
// H* = D^{1/2} hbar D^{1/2}, D = diag(h*_j / hbar_jj).  Coordinates whose
// probe is not concave (h*_j >= 0) keep the surrogate value and are flagged.

struct CurvatureResult {
  MatrixXd adjusted;
  std::vector<bool> fallback;  // per-coordinate: probe rejected, kept hbar_jj
};

inline CurvatureResult curvature_adjust(
    const std::function<double(const VectorXd&)>& objective,
    const VectorXd& eta_mode, const MatrixXd& hbar) {
  const Eigen::Index dim = hbar.rows();
  Eigen::LLT<MatrixXd> llt(-hbar);
  if (llt.info() != Eigen::Success)
    throw NumericalError("curvature_adjust: hbar not negative definite");
  const MatrixXd cov = llt.solve(MatrixXd::Identity(dim, dim));
  const double f0 = objective(eta_mode);
  VectorXd dscale(dim);
  CurvatureResult res;
  res.fallback.assign((std::size_t)dim, false);
  for (Eigen::Index j = 0; j < dim; ++j) {
    const double sd = std::sqrt(cov(j, j));
    const double lam = 1.96 * sd;
    VectorXd e1 = eta_mode, e2 = eta_mode;
    e1(j) += lam;
    e2(j) -= lam;
    const double f1 = objective(e1) - f0;
    const double f2 = objective(e2) - f0;
    // Least-squares fit of (1/2) h lambda^2 through the two probe points.
    const double num = 2.0 * (lam * lam * f1 + lam * lam * f2);
    const double den = 2.0 * lam * lam * lam * lam;
    const double hstar = num / den;
    if (!(hstar < 0.0) || !std::isfinite(hstar)) {
      res.fallback[(std::size_t)j] = true;
      dscale(j) = 1.0;
    } else {
      dscale(j) = std::sqrt(hstar / hbar(j, j));
    }
  }
  res.adjusted = dscale.asDiagonal() * hbar * dscale.asDiagonal();
  return res;
}

}  // namespace tpsel

#endif  // TPSEL_LIKELIHOOD_HPP
