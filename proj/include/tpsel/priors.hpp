#ifndef TPSEL_PRIORS_HPP
#define TPSEL_PRIORS_HPP

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include "tpsel/data.hpp"
#include "tpsel/likelihood.hpp"

// Coefficient, asymmetry, scale, and model-space priors: joint log-density
// with gradient and Hessian in the unconstrained coordinates
// (theta, log vartheta, atanh alpha).
//
// Non-local families (MOM, eMOM, iMOM) vanish at theta_j = 0 and at
// atanh_alpha = 0; the Zellner g-prior is the local comparison prior.  The
// scale prior is always IG(a_vartheta/2, k*b_vartheta/2) on vartheta (k = 1
// for Normal bases, 2 for Laplace bases), expressed on log vartheta with its
// Jacobian.

namespace tpsel {

enum class CoefPrior { MOM, eMOM, iMOM, ZellnerLocal };
enum class ModelPriorKind { BetaBinomial, Uniform, Binomial };

struct PriorSpec {
  CoefPrior coef_family = CoefPrior::MOM;
  double g_theta = 0.348;
  double g_alpha = 0.357;
  double a_vartheta = 0.01;
  double b_vartheta = 0.01;
  ModelPriorKind model_prior = ModelPriorKind::BetaBinomial;
  double a_gamma = 1.0;
  double b_gamma = 1.0;
  // Success probability for the Binomial model prior; must be set explicitly
  // when that prior is selected (no default).
  std::optional<double> binomial_rho;
  // Quantile mode: alpha fixed at this value, excluded from the parameter
  // vector and carrying no prior term.
  std::optional<double> fixed_alpha;

  // Tabulated default dispersions per coefficient-prior family.
  static PriorSpec defaults(CoefPrior f) {
    PriorSpec s;
    s.coef_family = f;
    switch (f) {
      case CoefPrior::MOM: s.g_theta = 0.348; s.g_alpha = 0.357; break;
      case CoefPrior::eMOM: s.g_theta = 0.119; s.g_alpha = 0.122; break;
      case CoefPrior::iMOM: s.g_theta = 0.133; s.g_alpha = 0.136; break;
      case CoefPrior::ZellnerLocal: s.g_theta = 1.0; s.g_alpha = 0.357; break;
    }
    return s;
  }
};

namespace detail {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kSqrt2 = 1.4142135623730950488;
}  // namespace detail

// Whether the asymmetry coordinate carries a prior (and a dimension).
inline bool alpha_active(const ModelGamma& gamma, const PriorSpec& spec) {
  return gamma.skew && !spec.fixed_alpha.has_value();
}

// Joint log prior p(theta, log vartheta [, atanh alpha] | gamma) with
// derivatives.  Layout matches loglik_derivs.  XtX is required for the
// Zellner family (pass the active-columns Gram matrix and n); others ignore
// it.
inline DerivResult coef_logprior_derivs(const TransformedParams& eta,
                                        const ModelGamma& gamma,
                                        const PriorSpec& spec,
                                        const MatrixXd* XtX = nullptr,
                                        Eigen::Index n = 0) {
  const Eigen::Index d = eta.theta.size();
  const bool wa = alpha_active(gamma, spec);
  const Eigen::Index dim = d + 1 + (wa ? 1 : 0);
  const int K = gamma.k();
  const double lv = eta.log_vartheta;
  const double evi = std::exp(-lv);  // 1/vartheta

  DerivResult out;
  out.grad = VectorXd::Zero(dim);
  out.hess = MatrixXd::Zero(dim, dim);
  double lp = 0.0;

  // IG(a/2, K*b/2) scale prior on vartheta, written on log vartheta
  // (includes the e^{log vartheta} change-of-variables factor).
  {
    const double A = 0.5 * spec.a_vartheta;
    const double B = 0.5 * K * spec.b_vartheta;
    lp += A * std::log(B) - std::lgamma(A) - A * lv - B * evi;
    out.grad(d) += -A + B * evi;
    out.hess(d, d) += -B * evi;
  }

  // Coefficient prior.
  switch (spec.coef_family) {
    case CoefPrior::MOM: {
      const double s2 = spec.g_theta * K;  // variance multiplier on vartheta
      for (Eigen::Index j = 0; j < d; ++j) {
        const double th = eta.theta(j);
        if (th == 0.0) { lp = detail::kNegInf; break; }
        lp += 2.0 * std::log(std::fabs(th)) - 1.5 * (std::log(s2) + lv) -
              0.5 * detail::kLog2Pi - th * th * evi / (2.0 * s2);
        out.grad(j) += 2.0 / th - th * evi / s2;
        out.hess(j, j) += -2.0 / (th * th) - evi / s2;
        out.hess(j, d) += th * evi / s2;
        out.hess(d, j) += th * evi / s2;
      }
      out.grad(d) += -1.5 * (double)d + evi * eta.theta.squaredNorm() / (2.0 * s2);
      out.hess(d, d) += -evi * eta.theta.squaredNorm() / (2.0 * s2);
      break;
    }
    case CoefPrior::eMOM: {
      const double s2 = spec.g_theta * K;
      const double ev = std::exp(lv);
      double sum_inv2 = 0.0;
      for (Eigen::Index j = 0; j < d; ++j) {
        const double th = eta.theta(j);
        if (th == 0.0) { lp = detail::kNegInf; break; }
        const double th2 = th * th;
        sum_inv2 += 1.0 / th2;
        lp += detail::kSqrt2 - s2 * ev / th2 -
              0.5 * (detail::kLog2Pi + std::log(s2) + lv) -
              th2 * evi / (2.0 * s2);
        out.grad(j) += 2.0 * s2 * ev / (th2 * th) - th * evi / s2;
        out.hess(j, j) += -6.0 * s2 * ev / (th2 * th2) - evi / s2;
        const double cross = 2.0 * s2 * ev / (th2 * th) + th * evi / s2;
        out.hess(j, d) += cross;
        out.hess(d, j) += cross;
      }
      out.grad(d) += -s2 * ev * sum_inv2 - 0.5 * (double)d +
                     evi * eta.theta.squaredNorm() / (2.0 * s2);
      out.hess(d, d) += -s2 * ev * sum_inv2 - evi * eta.theta.squaredNorm() / (2.0 * s2);
      break;
    }
    case CoefPrior::iMOM: {
      const double g = spec.g_theta;
      const double ev = std::exp(lv);
      double sum_inv2 = 0.0;
      for (Eigen::Index j = 0; j < d; ++j) {
        const double th = eta.theta(j);
        if (th == 0.0) { lp = detail::kNegInf; break; }
        const double th2 = th * th;
        sum_inv2 += 1.0 / th2;
        lp += 0.5 * (std::log(g) + lv) - 0.5 * std::log(M_PI) -
              2.0 * std::log(std::fabs(th)) - g * ev / th2;
        out.grad(j) += -2.0 / th + 2.0 * g * ev / (th2 * th);
        out.hess(j, j) += 2.0 / th2 - 6.0 * g * ev / (th2 * th2);
        out.hess(j, d) += 2.0 * g * ev / (th2 * th);
        out.hess(d, j) += 2.0 * g * ev / (th2 * th);
      }
      out.grad(d) += 0.5 * (double)d - g * ev * sum_inv2;
      out.hess(d, d) += -g * ev * sum_inv2;
      break;
    }
    case CoefPrior::ZellnerLocal: {
      if (d > 0) {
        if (XtX == nullptr || n <= 0)
          throw std::invalid_argument("Zellner prior requires X'X and n");
        const double s = (double)n * K;  // covariance = n*(X'X)^{-1} * K * vartheta
        Eigen::LLT<MatrixXd> llt(*XtX);
        if (llt.info() != Eigen::Success)
          throw std::runtime_error("Zellner prior: X'X not positive definite");
        const double logdetXtX =
            2.0 * MatrixXd(llt.matrixL()).diagonal().array().log().sum();
        const VectorXd Gt = (*XtX) * eta.theta;
        const double quad = eta.theta.dot(Gt);
        lp += -0.5 * (double)d * (detail::kLog2Pi + std::log(s) + lv) +
              0.5 * logdetXtX - quad * evi / (2.0 * s);
        out.grad.head(d) += -Gt * evi / s;
        out.grad(d) += -0.5 * (double)d + quad * evi / (2.0 * s);
        out.hess.topLeftCorner(d, d) += -(*XtX) * evi / s;
        out.hess.block(0, d, d, 1) += Gt * evi / s;
        out.hess.block(d, 0, 1, d) += Gt.transpose() * evi / s;
        out.hess(d, d) += -quad * evi / (2.0 * s);
      }
      break;
    }
  }

  // Asymmetry prior on atanh alpha (independent of theta and vartheta).
  if (wa && std::isfinite(lp)) {
    const double a = eta.atanh_alpha;
    const double g = spec.g_alpha;
    const Eigen::Index ja = d + 1;
    switch (spec.coef_family) {
      case CoefPrior::MOM:
        if (a == 0.0) { lp = detail::kNegInf; break; }
        lp += 2.0 * std::log(std::fabs(a)) - 1.5 * std::log(g) -
              0.5 * detail::kLog2Pi - a * a / (2.0 * g);
        out.grad(ja) += 2.0 / a - a / g;
        out.hess(ja, ja) += -2.0 / (a * a) - 1.0 / g;
        break;
      case CoefPrior::eMOM:
        if (a == 0.0) { lp = detail::kNegInf; break; }
        lp += detail::kSqrt2 - g / (a * a) -
              0.5 * (detail::kLog2Pi + std::log(g)) - a * a / (2.0 * g);
        out.grad(ja) += 2.0 * g / (a * a * a) - a / g;
        out.hess(ja, ja) += -6.0 * g / (a * a * a * a) - 1.0 / g;
        break;
      case CoefPrior::iMOM:
        if (a == 0.0) { lp = detail::kNegInf; break; }
        lp += 0.5 * std::log(g) - 0.5 * std::log(M_PI) -
              2.0 * std::log(std::fabs(a)) - g / (a * a);
        out.grad(ja) += -2.0 / a + 2.0 * g / (a * a * a);
        out.hess(ja, ja) += 2.0 / (a * a) - 6.0 * g / (a * a * a * a);
        break;
      case CoefPrior::ZellnerLocal:
        // Local Gaussian on atanh alpha.
        lp += -0.5 * (detail::kLog2Pi + std::log(g)) - a * a / (2.0 * g);
        out.grad(ja) += -a / g;
        out.hess(ja, ja) += -1.0 / g;
        break;
    }
  }

  if (!std::isfinite(lp)) {
    out.value = detail::kNegInf;
    out.grad.setZero();
    out.hess.setZero();
    return out;
  }
  out.value = lp;
  return out;
}

// Convenience overload pulling the Gram matrix from the dataset (needed for
// the Zellner family only).
inline DerivResult coef_logprior_derivs(const TransformedParams& eta,
                                        const ModelGamma& gamma,
                                        const PriorSpec& spec,
                                        const Dataset& data) {
  if (spec.coef_family == CoefPrior::ZellnerLocal && eta.theta.size() > 0) {
    const MatrixXd Xg = select_columns(data.X, gamma);
    const MatrixXd XtX = Xg.transpose() * Xg;
    return coef_logprior_derivs(eta, gamma, spec, &XtX, data.n());
  }
  return coef_logprior_derivs(eta, gamma, spec);
}

// --- model-space prior -------------------------------------------------------
//
// log p(gamma).  BetaBinomial: log(1/4) + log B(a+p_g, b+p-p_g) - log B(a,b);
// the 1/4 equal-probability factor over the four error families is dropped
// when the family is fixed by configuration.  Models with more active
// parameters than observations get probability zero.
inline double model_logprior(const ModelGamma& gamma, Eigen::Index p,
                             Eigen::Index n, const PriorSpec& spec,
                             bool family_fixed = false) {
  const Eigen::Index pg = gamma.p_gamma();
  if (pg > n) return detail::kNegInf;
  auto logbeta = [](double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  };
  double lp = family_fixed ? 0.0 : -std::log(4.0);
  switch (spec.model_prior) {
    case ModelPriorKind::BetaBinomial:
      lp += logbeta(spec.a_gamma + (double)pg, spec.b_gamma + (double)(p - pg)) -
            logbeta(spec.a_gamma, spec.b_gamma);
      break;
    case ModelPriorKind::Uniform:
      lp += -(double)p * detail::kLog2;
      break;
    case ModelPriorKind::Binomial: {
      if (!spec.binomial_rho)
        throw std::invalid_argument("Binomial model prior requires rho");
      const double rho = *spec.binomial_rho;
      lp += (double)pg * std::log(rho) + (double)(p - pg) * std::log1p(-rho);
      break;
    }
  }
  return lp;
}

}  // namespace tpsel

#endif  // TPSEL_PRIORS_HPP
