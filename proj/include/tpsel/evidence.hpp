#ifndef TPSEL_EVIDENCE_HPP
#define TPSEL_EVIDENCE_HPP

#include <Eigen/Dense>
#include <cmath>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>

#include "tpsel/optimizer.hpp"

// Per-model integrated likelihood p(y | gamma): Laplace approximation around
// the posterior mode, and an importance-sampling estimator with a
// multivariate-t proposal centered at the same mode.

namespace tpsel {

enum class EvidenceMethod { LaplaceApprox, ImportanceSampling };

struct ModelEvidence {
  ModelGamma gamma;
  double log_marginal = 0.0;
  TransformedParams mode;
  MatrixXd hessian_at_mode;  // negative definite (after surrogate/adjustment)
  EvidenceMethod method = EvidenceMethod::LaplaceApprox;
  long is_samples = 0;       // B, for importance sampling
  double ess = 0.0;          // effective sample size of the IS weights
  bool ess_warning = false;  // ESS < 10
  bool curvature_adjusted = false;
  std::vector<bool> curvature_fallback;  // per-coordinate probe rejections
};

struct EvidenceOptions {
  OptimOptions optim;
  // Quadratic curvature adjustment of the Laplace-base surrogate Hessian
  // (applies to k=2 only; off by default).
  bool adjust_curvature = false;
};

namespace detail {

// Generic Laplace log-integral: log f at the mode plus the Gaussian volume
// term from the (negative definite) Hessian.
inline double laplace_log_integral(double log_f_mode, const MatrixXd& H) {
  Eigen::LLT<MatrixXd> llt(MatrixXd(-H));
  if (llt.info() != Eigen::Success)
    throw NumericalError("laplace evidence: Hessian not negative definite");
  const double half_logdet =
      MatrixXd(llt.matrixL()).diagonal().array().log().sum();
  const double dim = (double)H.rows();
  return log_f_mode + 0.5 * dim * kLog2Pi - half_logdet;
}

}  // namespace detail

inline ModelEvidence laplace_evidence(const Dataset& data, const ModelGamma& gamma,
                                      const PriorSpec& spec,
                                      const EvidenceOptions& opts = {}) {
  const MatrixXd Xg = select_columns(data.X, gamma);
  const MatrixXd XtX = Xg.cols() > 0 ? MatrixXd(Xg.transpose() * Xg) : MatrixXd(0, 0);
  const Eigen::Index n = data.n();

  OptimOptions oo = opts.optim;
  if (oo.algorithm == Algorithm::LMA) oo.algorithm = Algorithm::NewtonRaphson;
  FitResult fit = posterior_mode(data, gamma, spec, oo);
  if (!fit.converged)
    throw NumericalError("laplace evidence: posterior mode did not converge");

  DerivResult dr = detail::posterior_derivs(data.y, Xg, gamma, spec,
                                            fit.eta_hat, &XtX, n);
  ModelEvidence ev;
  ev.gamma = gamma;
  ev.mode = fit.eta_hat;
  ev.hessian_at_mode = dr.hess;
  if (opts.adjust_curvature && gamma.k() == 2) {
    const bool wa = alpha_active(gamma, spec);
    const double at_fixed = fit.eta_hat.atanh_alpha;
    auto objective = [&](const VectorXd& v) {
      const TransformedParams cand = unflatten(v, wa, at_fixed);
      return detail::posterior_value(data.y, Xg, gamma, spec, cand, &XtX, n);
    };
    CurvatureResult cr =
        curvature_adjust(objective, flatten(fit.eta_hat, wa), dr.hess);
    ev.hessian_at_mode = cr.adjusted;
    ev.curvature_adjusted = true;
    ev.curvature_fallback = cr.fallback;
  }
  ev.log_marginal =
      detail::laplace_log_integral(fit.logpost_at_mode, ev.hessian_at_mode);
  ev.method = EvidenceMethod::LaplaceApprox;
  return ev;
}

// Importance-sampling estimate with proposal T_3(mode, (-H)^{-1}/3), where H
// is the same Hessian the Laplace step used (surrogate/adjusted for k=2).
inline ModelEvidence importance_evidence(const Dataset& data,
                                         const ModelGamma& gamma,
                                         const PriorSpec& spec, long B,
                                         std::mt19937_64& rng,
                                         const EvidenceOptions& opts = {}) {
  if (B < 1000) throw std::invalid_argument("importance_evidence: B >= 1000 required");
  ModelEvidence ev = laplace_evidence(data, gamma, spec, opts);
  const MatrixXd Xg = select_columns(data.X, gamma);
  const MatrixXd XtX = Xg.cols() > 0 ? MatrixXd(Xg.transpose() * Xg) : MatrixXd(0, 0);
  const Eigen::Index n = data.n();
  const bool wa = alpha_active(gamma, spec);
  const double at_fixed = ev.mode.atanh_alpha;
  const VectorXd mu = flatten(ev.mode, wa);
  const Eigen::Index dim = mu.size();

  Eigen::LLT<MatrixXd> llt(MatrixXd(-ev.hessian_at_mode));
  if (llt.info() != Eigen::Success)
    throw NumericalError("importance evidence: Hessian not negative definite");
  const MatrixXd Hinv_L =
      llt.matrixL().solve(MatrixXd::Identity(dim, dim));  // L^{-1}, (-H) = L L'
  // Scale matrix Sigma = (-H)^{-1}/3; draw x = mu + chol(Sigma) z sqrt(3/g).
  const MatrixXd cholSigma = Hinv_L.transpose() / std::sqrt(3.0);
  const double half_logdet_Sigma =
      -MatrixXd(llt.matrixL()).diagonal().array().log().sum() -
      0.5 * dim * std::log(3.0);
  const double nu = 3.0;
  const double t_const = std::lgamma(0.5 * (nu + dim)) - std::lgamma(0.5 * nu) -
                         0.5 * dim * std::log(nu * M_PI) - half_logdet_Sigma;

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::chi_squared_distribution<double> chi2(nu);
  double max_lw = -std::numeric_limits<double>::infinity();
  std::vector<double> lw((std::size_t)B);
  for (long b = 0; b < B; ++b) {
    VectorXd z(dim);
    for (Eigen::Index j = 0; j < dim; ++j) z(j) = gauss(rng);
    const double g = chi2(rng);
    const VectorXd x = mu + cholSigma * z * std::sqrt(nu / g);
    const TransformedParams cand = unflatten(x, wa, at_fixed);
    const double logf =
        detail::posterior_value(data.y, Xg, gamma, spec, cand, &XtX, n);
    // t density at x: delta = z'z * (nu/g) since x - mu = cholSigma z sqrt(nu/g).
    const double delta = z.squaredNorm() * (nu / g);
    const double logq = t_const - 0.5 * (nu + dim) * std::log1p(delta / nu);
    const double w = logf - logq;
    lw[(std::size_t)b] = w;
    if (std::isfinite(w) && w > max_lw) max_lw = w;
  }
  double sum = 0.0, sum2 = 0.0;
  for (double w : lw) {
    if (!std::isfinite(w)) continue;
    const double e = std::exp(w - max_lw);
    sum += e;
    sum2 += e * e;
  }
  ev.log_marginal = max_lw + std::log(sum) - std::log((double)B);
  ev.method = EvidenceMethod::ImportanceSampling;
  ev.is_samples = B;
  ev.ess = sum2 > 0.0 ? sum * sum / sum2 : 0.0;
  ev.ess_warning = ev.ess < 10.0;
  return ev;
}

// --- memo cache ---------------------------------------------------------------
//
// Evidence keyed by the full model bit pattern (inclusions + skew + thick)
// plus the fixed-alpha value when quantile conditioning is active.  Safe for
// concurrent insert-or-read.
class EvidenceCache {
 public:
  static std::string key(const ModelGamma& g,
                         const std::optional<double>& fixed_alpha) {
    std::ostringstream os;
    for (bool b : g.include) os << (b ? '1' : '0');
    os << '|' << (g.skew ? '1' : '0') << (g.thick ? '1' : '0');
    if (fixed_alpha) os << '|' << *fixed_alpha;
    return os.str();
  }

  bool lookup(const std::string& k, ModelEvidence& out) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = map_.find(k);
    if (it == map_.end()) return false;
    out = it->second;
    return true;
  }

  void insert(const std::string& k, const ModelEvidence& ev) {
    std::lock_guard<std::mutex> lock(mu_);
    map_.emplace(k, ev);
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return map_.size();
  }

 private:
  mutable std::mutex mu_;
  std::unordered_map<std::string, ModelEvidence> map_;
};

}  // namespace tpsel

#endif  // TPSEL_EVIDENCE_HPP
