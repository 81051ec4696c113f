#ifndef TPSEL_OPTIMIZER_HPP
#define TPSEL_OPTIMIZER_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>

#include "tpsel/likelihood.hpp"
#include "tpsel/priors.hpp"

// Maximum-likelihood and posterior-mode estimation for a fixed model.
//
// MLE alternates a closed-form (alpha, vartheta) update at fixed theta with a
// damped Newton step on theta (Levenberg-Marquardt schedule), or runs
// coordinate descent with univariate Newton updates.  Posterior modes are
// found by damped Newton on the joint unconstrained objective, initialized at
// the MLE image.

namespace tpsel {

enum class Algorithm { LMA, CDA, NewtonRaphson };

struct OptimOptions {
  Algorithm algorithm = Algorithm::LMA;
  double tol = 1e-5;
  int max_iter = 200;
  double cda_factor = 2.0;  // damping growth/shrink factor for CDA
  // Optional starting value for theta (default: least-squares fit).
  std::optional<VectorXd> init_theta;
};

struct FitResult {
  TransformedParams eta_hat;
  double loglik_at_mode = 0.0;
  double logpost_at_mode = 0.0;  // loglik + log parameter prior (mode fits)
  int iterations = 0;
  bool converged = false;
};

// --- closed-form (alpha, vartheta) maximizer at fixed theta -----------------

struct Step2Result {
  double alpha_hat = 0.0;
  double vartheta_hat = 1.0;
  bool degenerate = false;  // all residuals zero
};

// Joint maximizer of the log-likelihood over (vartheta, alpha) for fixed
// residuals: side sums s1 (negative residuals), s2 of |r|^{3-k}, exponent
// k/(2+k), vartheta = (s1^e + s2^e)^{2+k} / (4 n^k).
inline Step2Result step2_closed_form(const VectorXd& r, int k) {
  const Eigen::Index n = r.size();
  double s1 = 0.0, s2 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = std::fabs(r(i));
    const double v = k == 1 ? a * a : a;  // |r|^{3-k}
    if (r(i) < 0.0) s1 += v; else s2 += v;
  }
  Step2Result out;
  if (s1 + s2 <= 0.0) {
    out.degenerate = true;
    return out;
  }
  const double e = (double)k / (2.0 + (double)k);
  const double t1 = std::pow(s1, e), t2 = std::pow(s2, e);
  const double amax = std::tanh(kAtanhAlphaMax);
  double a = (t1 - t2) / (t1 + t2);
  if (a > amax) a = amax;
  if (a < -amax) a = -amax;
  out.alpha_hat = a;
  out.vartheta_hat =
      std::pow(t1 + t2, 2.0 + (double)k) / (4.0 * std::pow((double)n, (double)k));
  return out;
}

// Maximizer over vartheta alone at fixed (theta, alpha).
inline double vartheta_fixed_alpha(const VectorXd& r, int k, double alpha) {
  const Eigen::Index n = r.size();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double c = r(i) < 0.0 ? 1.0 + alpha : 1.0 - alpha;
    if (k == 1) acc += (r(i) / c) * (r(i) / c);
    else acc += std::fabs(r(i)) / c;
  }
  if (acc <= 0.0) return 0.0;
  return k == 1 ? acc / (double)n : (acc / (double)n) * (acc / (double)n);
}

namespace detail {

// Least-squares solve with an explicit rank check (no ridge fallback).
inline VectorXd lsq_full_rank(const MatrixXd& Xg, const VectorXd& y) {
  if (Xg.cols() == 0) return VectorXd(0);
  Eigen::ColPivHouseholderQR<MatrixXd> qr(Xg);
  if (qr.rank() < Xg.cols())
    throw DataError("rank-deficient design");
  return qr.solve(y);
}

// theta-block gradient and Hessian of the log-likelihood at (theta, vt,
// alpha) in original coordinates; k=2 uses the asymptotic curvature.
inline void theta_block(const VectorXd& r, const MatrixXd& Xg, int k,
                        double vt, double alpha, VectorXd& g, MatrixXd& H) {
  const Eigen::Index n = r.size(), d = Xg.cols();
  if (k == 1) {
    VectorXd wr(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double c = r(i) < 0.0 ? 1.0 + alpha : 1.0 - alpha;
      w(i) = 1.0 / (c * c);
      wr(i) = w(i) * r(i);
    }
    g = Xg.transpose() * wr / vt;
    H = -(Xg.transpose() * w.asDiagonal() * Xg) / vt;
  } else {
    VectorXd sg(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double c = r(i) < 0.0 ? 1.0 + alpha : 1.0 - alpha;
      sg(i) = (r(i) < 0.0 ? -1.0 : 1.0) / c;
    }
    g = Xg.transpose() * sg / std::sqrt(vt);
    H = -(Xg.transpose() * Xg) / (vt * (1.0 - alpha * alpha));
    (void)d;
  }
}

}  // namespace detail

// --- maximum likelihood ------------------------------------------------------

inline FitResult mle(const Dataset& data, const ModelGamma& gamma,
                     const OptimOptions& opts = {},
                     std::optional<double> fixed_alpha = std::nullopt) {
  const MatrixXd Xg = select_columns(data.X, gamma);
  const VectorXd& y = data.y;
  const int k = gamma.k();
  const Eigen::Index d = Xg.cols();
  const bool est_alpha = gamma.skew && !fixed_alpha.has_value();
  const double alpha0 = fixed_alpha.value_or(0.0);

  VectorXd theta = detail::lsq_full_rank(Xg, y);
  if (opts.init_theta) {
    if (opts.init_theta->size() != d)
      throw std::invalid_argument("mle: init_theta has wrong length");
    theta = *opts.init_theta;
  }
  double alpha = alpha0, vt = 1.0, lambda = 0.0;
  // Persistent per-coordinate damping for CDA.
  VectorXd lam_cda = VectorXd::Zero(d);

  FitResult res;
  double prev_alpha = alpha, prev_vt = vt;
  double prev_ll = -std::numeric_limits<double>::infinity();
  bool have_prev = false;
  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    res.iterations = iter;
    VectorXd r = d > 0 ? VectorXd(y - Xg * theta) : y;
    if (est_alpha) {
      const Step2Result s2 = step2_closed_form(r, k);
      if (s2.degenerate) throw NumericalError("mle: degenerate residuals");
      alpha = s2.alpha_hat;
      vt = s2.vartheta_hat;
    } else {
      vt = vartheta_fixed_alpha(r, k, alpha);
      if (vt <= 0.0) throw NumericalError("mle: degenerate residuals");
    }
    // Damped joint Newton step on theta at the current (alpha, vartheta);
    // returns the accepted step's sup-norm (0 if no improving step exists).
    auto joint_theta_step = [&]() -> double {
      VectorXd rr = y - Xg * theta;
      const double ll = loglik(y, Xg, k, theta, vt, alpha);
      VectorXd g;
      MatrixXd H;
      detail::theta_block(rr, Xg, k, vt, alpha, g, H);
      for (int tries = 0; tries < 50; ++tries) {
        MatrixXd M = H;
        M.diagonal() += lambda * H.diagonal();
        const VectorXd delta = M.ldlt().solve(-g);
        if (delta.allFinite()) {
          const VectorXd cand = theta + delta;
          const double ll_new = loglik(y, Xg, k, cand, vt, alpha);
          if (std::isfinite(ll_new) && ll_new > ll) {
            theta = cand;
            lambda *= 0.5;
            return delta.cwiseAbs().maxCoeff();
          }
        }
        lambda = 1.0 + lambda;
      }
      return 0.0;
    };
    double sup_theta = 0.0;
    if (d > 0 && opts.algorithm != Algorithm::CDA) {
      sup_theta = joint_theta_step();
    } else if (d > 0) {
      // Coordinate descent: univariate damped Newton on each theta_j.
      for (Eigen::Index j = 0; j < d; ++j) {
        double gj = 0.0, hj = 0.0, ll = 0.0;
        const double sv = std::sqrt(vt);
        ll = loglik(y, Xg, k, theta, vt, alpha);
        for (Eigen::Index i = 0; i < y.size(); ++i) {
          const double c = r(i) < 0.0 ? 1.0 + alpha : 1.0 - alpha;
          if (k == 1) {
            gj += r(i) * Xg(i, j) / (c * c);
            hj -= Xg(i, j) * Xg(i, j) / (c * c);
          } else {
            gj += (r(i) < 0.0 ? -1.0 : 1.0) * Xg(i, j) / c;
            hj -= Xg(i, j) * Xg(i, j);
          }
        }
        if (k == 1) { gj /= vt; hj /= vt; }
        else { gj /= sv; hj /= vt * (1.0 - alpha * alpha); }
        if (hj >= 0.0) continue;
        for (int tries = 0; tries < 50; ++tries) {
          const double delta = -gj / (hj * (1.0 + lam_cda(j)));
          const double cand = theta(j) + delta;
          VectorXd r_new = r - Xg.col(j) * delta;
          double ll_new;
          {
            double acc = 0.0;
            for (Eigen::Index i = 0; i < y.size(); ++i) {
              const double c = r_new(i) < 0.0 ? 1.0 + alpha : 1.0 - alpha;
              acc += k == 1 ? (r_new(i) / c) * (r_new(i) / c)
                            : std::fabs(r_new(i)) / c;
            }
            ll_new = k == 1 ? -0.5 * y.size() * detail::kLog2Pi -
                                  0.5 * y.size() * std::log(vt) - acc / (2.0 * vt)
                            : -(double)y.size() * detail::kLog2 -
                                  0.5 * y.size() * std::log(vt) - acc / sv;
          }
          if (std::isfinite(ll_new) && ll_new > ll) {
            const double step = std::fabs(delta);
            if (step > sup_theta) sup_theta = step;
            theta(j) = cand;
            r = r_new;
            lam_cda(j) /= opts.cda_factor;
            break;
          }
          lam_cda(j) = opts.cda_factor + lam_cda(j);
        }
      }
    }
    const double sup = std::max(
        {sup_theta, have_prev ? std::fabs(alpha - prev_alpha) : 1.0,
         have_prev ? std::fabs(vt - prev_vt) : 1.0});
    prev_alpha = alpha;
    prev_vt = vt;
    have_prev = true;
    const bool cda = opts.algorithm == Algorithm::CDA && d > 0;
    if (sup < opts.tol) {
      if (cda && iter < opts.max_iter) {
        // Coordinate descent can stall at a coordinate-wise optimum of the
        // kinked objective; verify with a joint step before declaring
        // convergence, and keep going if it still moves.
        if (joint_theta_step() >= opts.tol) {
          prev_ll = loglik(y, Xg, k, theta, vt, alpha);
          continue;
        }
      }
      if (k == 1 && d > 0) {
        // Smooth objective: also require a small gradient before declaring
        // convergence (the kinked k=2 objective has no vanishing gradient).
        VectorXd rr = y - Xg * theta;
        VectorXd g;
        MatrixXd H;
        detail::theta_block(rr, Xg, k, vt, alpha, g, H);
        if (g.cwiseAbs().maxCoeff() >= 10.0 * opts.tol && iter < opts.max_iter)
          continue;
      }
      res.converged = true;
      break;
    }
    if (k == 2) {
      // The kinked objective can make the Newton step zigzag across a kink
      // with slowly shrinking steps; every update is monotone ascent, so a
      // stalled objective means the maximum has been reached.
      const double ll_end = loglik(y, Xg, k, theta, vt, alpha);
      if (have_prev && ll_end - prev_ll < 1e-10 * (1.0 + std::fabs(ll_end))) {
        if (cda && iter < opts.max_iter && joint_theta_step() >= opts.tol) {
          prev_ll = loglik(y, Xg, k, theta, vt, alpha);
          continue;
        }
        res.converged = true;
        break;
      }
      prev_ll = ll_end;
    }
  }
  // Profile log-likelihood of theta: (alpha, vartheta) maximized out.
  auto profile_ll = [&](const VectorXd& th, double& a_out, double& v_out) {
    VectorXd r = d > 0 ? VectorXd(y - Xg * th) : y;
    if (est_alpha) {
      const Step2Result s2 = step2_closed_form(r, k);
      if (s2.degenerate) return -std::numeric_limits<double>::infinity();
      a_out = s2.alpha_hat;
      v_out = s2.vartheta_hat;
    } else {
      a_out = alpha0;
      v_out = vartheta_fixed_alpha(r, k, alpha0);
      if (v_out <= 0.0) return -std::numeric_limits<double>::infinity();
    }
    return loglik(y, Xg, k, th, v_out, a_out);
  };

  if (k == 2 && d > 0 && y.size() > d) {
    // The profiled kinked objective generically peaks at a vertex where d
    // residuals vanish; the Newton solvers only zigzag towards it with
    // shrinking steps.  Polish with a vertex walk: land on the nearest
    // vertex, then repeatedly move along the best ascent edge (relax one
    // interpolated observation, slide to the next residual crossing) so
    // every algorithm terminates at the identical point.
    const VectorXd theta_in = theta;
    double a_cur = alpha, v_cur = vt;
    const double ll_in = profile_ll(theta, a_cur, v_cur);
    double ll_cur = ll_in;

    // Land on the vertex interpolating the d smallest residuals.
    VectorXd r0 = y - Xg * theta;
    std::vector<Eigen::Index> act(r0.size());
    std::iota(act.begin(), act.end(), Eigen::Index(0));
    std::partial_sort(act.begin(), act.begin() + d, act.end(),
                      [&](Eigen::Index a, Eigen::Index b) {
                        return std::fabs(r0(a)) < std::fabs(r0(b));
                      });
    act.resize((std::size_t)d);
    auto vertex_theta = [&](const std::vector<Eigen::Index>& set,
                            VectorXd& th_out) {
      MatrixXd Xa(d, d);
      VectorXd ya(d);
      for (Eigen::Index i = 0; i < d; ++i) {
        Xa.row(i) = Xg.row(set[(std::size_t)i]);
        ya(i) = y(set[(std::size_t)i]);
      }
      Eigen::ColPivHouseholderQR<MatrixXd> qr(Xa);
      if (qr.rank() < d) return false;
      th_out = qr.solve(ya);
      return true;
    };
    VectorXd th_v;
    bool on_vertex = vertex_theta(act, th_v);
    if (on_vertex) {
      const double ll_v = profile_ll(th_v, a_cur, v_cur);
      if (std::isfinite(ll_v)) {
        theta = th_v;
        ll_cur = ll_v;
      } else {
        on_vertex = false;
      }
    }
    bool walk_optimal = false;
    for (int walk = 0; on_vertex && walk < 200; ++walk) {
      double best_ll = ll_cur;
      VectorXd best_theta;
      std::vector<Eigen::Index> best_set;
      const VectorXd r = y - Xg * theta;
      for (Eigen::Index leave = 0; leave < d; ++leave) {
        // Edge direction: kernel of the remaining d-1 interpolation rows.
        VectorXd u;
        if (d == 1) {
          u = VectorXd::Ones(1);
        } else {
          MatrixXd M(d - 1, d);
          Eigen::Index rix = 0;
          for (Eigen::Index i = 0; i < d; ++i)
            if (i != leave) M.row(rix++) = Xg.row(act[(std::size_t)i]);
          Eigen::FullPivLU<MatrixXd> lu(M);
          if (lu.dimensionOfKernel() != 1) continue;
          u = lu.kernel().col(0);
        }
        for (double sgn : {1.0, -1.0}) {
          const VectorXd du = sgn * u;
          // First crossing of another observation's residual along the edge.
          double tbest = std::numeric_limits<double>::infinity();
          Eigen::Index enter = -1;
          for (Eigen::Index i = 0; i < y.size(); ++i) {
            if (std::find(act.begin(), act.end(), i) != act.end()) continue;
            const double den = Xg.row(i).dot(du);
            if (std::fabs(den) < 1e-14) continue;
            const double t = r(i) / den;
            if (t > 1e-12 && t < tbest) {
              tbest = t;
              enter = i;
            }
          }
          if (enter < 0) continue;
          const VectorXd cand = theta + tbest * du;
          double a_v = alpha, v_v = vt;
          const double ll_v = profile_ll(cand, a_v, v_v);
          if (std::isfinite(ll_v) && ll_v > best_ll + 1e-12) {
            best_ll = ll_v;
            best_theta = cand;
            best_set = act;
            best_set[(std::size_t)leave] = enter;
          }
        }
      }
      if (best_set.empty()) {
        walk_optimal = true;  // no ascent edge: vertex maximizes the profile
        break;
      }
      theta = best_theta;
      ll_cur = best_ll;
      act = best_set;
    }
    // Keep whichever point is better (the walk start may have been worse
    // than the solver's final iterate).
    if (ll_in > ll_cur)
      theta = theta_in;
    else if (walk_optimal)
      res.converged = true;
  }

  // Final (alpha, vartheta) refresh at the accepted theta.
  {
    VectorXd r = d > 0 ? VectorXd(y - Xg * theta) : y;
    if (est_alpha) {
      const Step2Result s2 = step2_closed_form(r, k);
      alpha = s2.alpha_hat;
      vt = s2.vartheta_hat;
    } else {
      vt = vartheta_fixed_alpha(r, k, alpha);
    }
  }
  res.eta_hat.theta = theta;
  res.eta_hat.log_vartheta = std::log(vt);
  res.eta_hat.atanh_alpha = clamp_atanh(std::atanh(alpha));
  res.loglik_at_mode = loglik(y, Xg, k, theta, vt, alpha);
  res.logpost_at_mode = res.loglik_at_mode;
  return res;
}

// --- posterior mode -----------------------------------------------------------

namespace detail {

// Joint objective derivatives: log-likelihood (k=2 theta-theta block replaced
// by the expected curvature so the Hessian is usable) plus log parameter
// prior, in unconstrained coordinates.
inline DerivResult posterior_derivs(const VectorXd& y, const MatrixXd& Xg,
                                    const ModelGamma& gamma,
                                    const PriorSpec& spec,
                                    const TransformedParams& eta,
                                    const MatrixXd* XtX, Eigen::Index n) {
  const bool wa = alpha_active(gamma, spec);
  DerivResult lik = loglik_derivs(y, Xg, gamma.k(), eta, wa);
  if (gamma.k() == 2 && Xg.cols() > 0) {
    const double vt = std::exp(eta.log_vartheta);
    const double a = std::tanh(eta.atanh_alpha);
    lik.hess.topLeftCorner(Xg.cols(), Xg.cols()) =
        -(*XtX) / (vt * (1.0 - a * a));
  }
  const DerivResult pri = coef_logprior_derivs(eta, gamma, spec, XtX, n);
  DerivResult out;
  out.value = lik.value + pri.value;
  out.grad = lik.grad + pri.grad;
  out.hess = lik.hess + pri.hess;
  return out;
}

inline double posterior_value(const VectorXd& y, const MatrixXd& Xg,
                              const ModelGamma& gamma, const PriorSpec& spec,
                              const TransformedParams& eta,
                              const MatrixXd* XtX, Eigen::Index n) {
  const Params p = from_transformed(eta);
  const double ll = loglik(y, Xg, gamma.k(), p.theta, p.vartheta, p.alpha);
  const DerivResult pri = coef_logprior_derivs(eta, gamma, spec, XtX, n);
  return ll + pri.value;
}

inline bool is_nlp(CoefPrior f) { return f != CoefPrior::ZellnerLocal; }

}  // namespace detail

inline FitResult posterior_mode(const Dataset& data, const ModelGamma& gamma,
                                const PriorSpec& spec,
                                const OptimOptions& opts = {}) {
  const MatrixXd Xg = select_columns(data.X, gamma);
  const VectorXd& y = data.y;
  const Eigen::Index d = Xg.cols(), n = data.n();
  const bool wa = alpha_active(gamma, spec);
  const MatrixXd XtX = d > 0 ? MatrixXd(Xg.transpose() * Xg) : MatrixXd(0, 0);
  const bool nlp = detail::is_nlp(spec.coef_family);

  OptimOptions mle_opts = opts;
  if (mle_opts.algorithm == Algorithm::NewtonRaphson)
    mle_opts.algorithm = Algorithm::LMA;
  FitResult init = mle(data, gamma, mle_opts, spec.fixed_alpha);
  TransformedParams eta = init.eta_hat;
  if (spec.fixed_alpha)
    eta.atanh_alpha = clamp_atanh(std::atanh(*spec.fixed_alpha));
  if (!gamma.skew && !spec.fixed_alpha) eta.atanh_alpha = 0.0;

  // Non-local priors vanish at zero: nudge any numerically-zero MLE
  // coordinate off the axis, toward the likelihood gradient's sign.
  const double scale = std::sqrt(std::exp(eta.log_vartheta));
  if (nlp) {
    for (Eigen::Index j = 0; j < d; ++j) {
      if (std::fabs(eta.theta(j)) < 1e-8 * std::max(1.0, scale)) {
        const DerivResult lik = loglik_derivs(y, Xg, gamma.k(), eta, wa);
        const double sgn = lik.grad(j) >= 0.0 ? 1.0 : -1.0;
        eta.theta(j) = sgn * 1e-3 * std::max(1.0, scale);
      }
    }
    if (wa && std::fabs(eta.atanh_alpha) < 1e-8) {
      const DerivResult lik = loglik_derivs(y, Xg, gamma.k(), eta, wa);
      const double sgn = lik.grad(d + 1) >= 0.0 ? 1.0 : -1.0;
      eta.atanh_alpha = sgn * 1e-3;
    }
  }

  const Eigen::Index dim = d + 1 + (wa ? 1 : 0);
  FitResult res;
  double obj = detail::posterior_value(y, Xg, gamma, spec, eta, &XtX, n);
  if (!std::isfinite(obj)) {
    res.eta_hat = eta;
    res.converged = false;
    return res;
  }

  const bool use_cda = opts.algorithm == Algorithm::CDA;
  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    res.iterations = iter;
    double sup = 0.0;
    if (!use_cda) {
      const DerivResult dr =
          detail::posterior_derivs(y, Xg, gamma, spec, eta, &XtX, n);
      double lam = 0.0;
      bool accepted = false;
      for (int tries = 0; tries < 50 && !accepted; ++tries) {
        MatrixXd M = dr.hess;
        M.diagonal().array() -= lam;
        VectorXd delta = M.ldlt().solve(-dr.grad);
        if (delta.allFinite()) {
          VectorXd v = flatten(eta, wa) + delta;
          TransformedParams cand = unflatten(v, wa, eta.atanh_alpha);
          bool flipped = false;
          if (nlp) {
            for (Eigen::Index j = 0; j < d && !flipped; ++j)
              if (cand.theta(j) * eta.theta(j) <= 0.0) flipped = true;
            if (wa && cand.atanh_alpha * eta.atanh_alpha <= 0.0) flipped = true;
          }
          if (!flipped) {
            const double obj_new =
                detail::posterior_value(y, Xg, gamma, spec, cand, &XtX, n);
            if (std::isfinite(obj_new) && obj_new >= obj - 1e-12 * std::fabs(obj)) {
              sup = delta.cwiseAbs().maxCoeff();
              eta = cand;
              obj = obj_new;
              accepted = true;
              break;
            }
          }
        }
        lam = lam == 0.0 ? 1.0 : 2.0 * lam;
      }
      if (!accepted) break;
    } else {
      // Coordinate descent with closed-form log-vartheta update for MOM/k=1.
      for (Eigen::Index jc = 0; jc < dim; ++jc) {
        if (jc == d && spec.coef_family == CoefPrior::MOM && gamma.k() == 1) {
          const Params p = from_transformed(eta);
          VectorXd r = d > 0 ? VectorXd(y - Xg * p.theta) : y;
          double rssw = 0.0;
          for (Eigen::Index i = 0; i < n; ++i) {
            const double c = r(i) < 0.0 ? 1.0 + p.alpha : 1.0 - p.alpha;
            rssw += (r(i) / c) * (r(i) / c);
          }
          const double K = gamma.k();
          const double s = K * spec.b_vartheta +
                           p.theta.squaredNorm() / (spec.g_theta * K) + rssw;
          const double lv_new =
              std::log(s / ((double)n + 3.0 * (double)d + spec.a_vartheta));
          sup = std::max(sup, std::fabs(lv_new - eta.log_vartheta));
          eta.log_vartheta = lv_new;
          obj = detail::posterior_value(y, Xg, gamma, spec, eta, &XtX, n);
          continue;
        }
        const DerivResult dr =
            detail::posterior_derivs(y, Xg, gamma, spec, eta, &XtX, n);
        const double gj = dr.grad(jc), hj = dr.hess(jc, jc);
        if (!(hj < 0.0)) continue;
        double lam = 0.0;
        for (int tries = 0; tries < 50; ++tries) {
          const double delta = -gj / (hj * (1.0 + lam));
          VectorXd v = flatten(eta, wa);
          v(jc) += delta;
          TransformedParams cand = unflatten(v, wa, eta.atanh_alpha);
          bool flipped = nlp && jc < d && cand.theta(jc) * eta.theta(jc) <= 0.0;
          if (nlp && wa && jc == d + 1 &&
              cand.atanh_alpha * eta.atanh_alpha <= 0.0)
            flipped = true;
          if (!flipped) {
            const double obj_new =
                detail::posterior_value(y, Xg, gamma, spec, cand, &XtX, n);
            if (std::isfinite(obj_new) && obj_new >= obj) {
              sup = std::max(sup, std::fabs(delta));
              eta = cand;
              obj = obj_new;
              break;
            }
          }
          lam = opts.cda_factor + lam;
        }
      }
    }
    if (sup < opts.tol) {
      res.converged = true;
      break;
    }
  }
  const Params p = from_transformed(eta);
  res.eta_hat = eta;
  res.loglik_at_mode = loglik(y, Xg, gamma.k(), p.theta, p.vartheta, p.alpha);
  res.logpost_at_mode = obj;
  return res;
}

}  // namespace tpsel

#endif  // TPSEL_OPTIMIZER_HPP
