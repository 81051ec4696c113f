#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "tpsel/optimizer.hpp"
#include "tpsel/twopiece.hpp"

using namespace tpsel;

namespace {

// Profile log-likelihood of (alpha, vartheta) for fixed residuals.
double profile_ll(const VectorXd& r, int k, double vt, double alpha) {
  const Eigen::Index n = r.size();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double c = r(i) < 0.0 ? 1.0 + alpha : 1.0 - alpha;
    acc += k == 1 ? (r(i) / c) * (r(i) / c) : std::fabs(r(i)) / c;
  }
  return k == 1 ? -0.5 * n * std::log(2.0 * M_PI * vt) - acc / (2.0 * vt)
                : -(double)n * std::log(2.0) - 0.5 * n * std::log(vt) -
                      acc / std::sqrt(vt);
}

Dataset make_regression_data(std::mt19937_64& rng, Eigen::Index n, Eigen::Index p,
                    Base base, double vt, double alpha) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Dataset d;
  d.X.resize(n, p);
  d.y.resize(n);
  VectorXd theta(p);
  for (Eigen::Index j = 0; j < p; ++j) theta(j) = gauss(rng);
  TwoPieceParams tp{0.0, vt, alpha, base};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) d.X(i, j) = gauss(rng);
    d.y(i) = d.X.row(i).dot(theta) + tp_sample1(rng, tp);
  }
  return d;
}

}  // namespace

TEST_CASE("closed-form (alpha, vartheta) step beats a dense grid") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    const int k = rep % 2 + 1;
    VectorXd r(30);
    for (Eigen::Index i = 0; i < 30; ++i) r(i) = 2.0 * gauss(rng) + 0.5;
    const Step2Result s2 = step2_closed_form(r, k);
    REQUIRE_FALSE(s2.degenerate);
    const double best = profile_ll(r, k, s2.vartheta_hat, s2.alpha_hat);
    // 200 x 200 grid over alpha and log vartheta around the optimum.
    double grid_best = -1e300;
    for (int ia = 0; ia < 200; ++ia) {
      const double a = -0.995 + 1.99 * ia / 199.0;
      for (int iv = 0; iv < 200; ++iv) {
        const double lv = std::log(s2.vartheta_hat) - 2.0 + 4.0 * iv / 199.0;
        grid_best = std::max(grid_best, profile_ll(r, k, std::exp(lv), a));
      }
    }
    CHECK(best >= grid_best - 1e-12);
    CHECK(best >= grid_best);  // closed form is the exact maximizer

    // Fixed-alpha scale update against a 1-D grid.
    const double af = 0.3;
    const double vt = vartheta_fixed_alpha(r, k, af);
    const double bestf = profile_ll(r, k, vt, af);
    for (int iv = 0; iv < 2000; ++iv) {
      const double lv = std::log(vt) - 1.0 + 2.0 * iv / 1999.0;
      CHECK(bestf >= profile_ll(r, k, std::exp(lv), af) - 1e-10);
    }
  }
  // All-zero residuals are flagged, not silently accepted.
  CHECK(step2_closed_form(VectorXd::Zero(5), 1).degenerate);
}

TEST_CASE("symmetric Normal MLE reduces to ordinary least squares") {
  std::mt19937_64 rng(7);
  Dataset d = make_regression_data(rng, 60, 3, Base::Normal, 1.5, 0.0);
  ModelGamma g{{true, true, true}, false, false};
  const FitResult fit = mle(d, g, {});
  REQUIRE(fit.converged);
  const VectorXd ols =
      (d.X.transpose() * d.X).ldlt().solve(d.X.transpose() * d.y);
  CHECK((fit.eta_hat.theta - ols).cwiseAbs().maxCoeff() < 1e-6);
  const double rss = (d.y - d.X * ols).squaredNorm();
  CHECK(std::exp(fit.eta_hat.log_vartheta) ==
        Catch::Approx(rss / d.n()).epsilon(1e-6));
  CHECK(fit.eta_hat.atanh_alpha == 0.0);
}

TEST_CASE("symmetric Laplace MLE solves least absolute deviations") {
  // With one predictor and no intercept the LAD optimum occurs at a
  // breakpoint theta = y_i / x_i; enumerate them all.
  std::mt19937_64 rng(9);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    Dataset d;
    d.X.resize(15, 1);
    d.y.resize(15);
    for (Eigen::Index i = 0; i < 15; ++i) {
      d.X(i, 0) = gauss(rng) + 2.0;  // keep x away from zero
      d.y(i) = 0.8 * d.X(i, 0) + gauss(rng);
    }
    ModelGamma g{{true}, false, true};
    const FitResult fit = mle(d, g, {});
    REQUIRE(fit.converged);
    auto sad = [&](double th) {
      return (d.y - d.X.col(0) * th).cwiseAbs().sum();
    };
    double best = 1e300;
    for (Eigen::Index i = 0; i < 15; ++i)
      best = std::min(best, sad(d.y(i) / d.X(i, 0)));
    CHECK(sad(fit.eta_hat.theta(0)) <= best + 1e-8);
  }
}

TEST_CASE("two-piece MLE is consistent on large samples") {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 6; ++rep) {
    const Base base = rep % 2 ? Base::Laplace : Base::Normal;
    const double vt = 2.0, alpha = -0.4;
    Dataset d = make_regression_data(rng, 4000, 2, base, vt, alpha);
    ModelGamma g{{true, true}, true, base == Base::Laplace};
    for (Algorithm algo : {Algorithm::LMA, Algorithm::CDA}) {
      OptimOptions opts;
      opts.algorithm = algo;
      const FitResult fit = mle(d, g, opts);
      REQUIRE(fit.converged);
      CHECK(std::tanh(fit.eta_hat.atanh_alpha) == Catch::Approx(alpha).margin(0.07));
      CHECK(std::exp(fit.eta_hat.log_vartheta) == Catch::Approx(vt).epsilon(0.12));
    }
  }
}

TEST_CASE("LMA and CDA find the same maximum") {
  std::mt19937_64 rng(33);
  for (int rep = 0; rep < 40; ++rep) {
    const Base base = rep % 2 ? Base::Laplace : Base::Normal;
    Dataset d = make_regression_data(rng, 80, 3, base, 1.0, rep % 4 < 2 ? 0.5 : -0.2);
    ModelGamma g{{true, true, true}, true, base == Base::Laplace};
    OptimOptions lma, cda;
    cda.algorithm = Algorithm::CDA;
    const FitResult f1 = mle(d, g, lma);
    const FitResult f2 = mle(d, g, cda);
    REQUIRE(f1.converged);
    REQUIRE(f2.converged);
    CHECK(std::fabs(f1.loglik_at_mode - f2.loglik_at_mode) < 1e-4);
    CHECK((flatten(f1.eta_hat, true) - flatten(f2.eta_hat, true))
              .cwiseAbs()
              .maxCoeff() < 1e-3);
    // Both dominate the least-squares starting point.
    const VectorXd ols =
        (d.X.transpose() * d.X).ldlt().solve(d.X.transpose() * d.y);
    VectorXd r = d.y - d.X * ols;
    const Step2Result s2 = step2_closed_form(r, g.k());
    CHECK(f1.loglik_at_mode >=
          profile_ll(r, g.k(), s2.vartheta_hat, s2.alpha_hat) - 1e-9);
  }
}

TEST_CASE("posterior mode under the Zellner prior has the ridge closed form") {
  // Symmetric Normal model: the theta gradient of log-likelihood plus
  // Zellner prior vanishes at theta = (X'X (1 + 1/n))^{-1} X'y regardless of
  // vartheta, so the joint mode has exactly that coefficient vector.
  std::mt19937_64 rng(41);
  Dataset d = make_regression_data(rng, 50, 3, Base::Normal, 1.2, 0.0);
  ModelGamma g{{true, true, true}, false, false};
  PriorSpec spec = PriorSpec::defaults(CoefPrior::ZellnerLocal);
  const FitResult fit = posterior_mode(d, g, spec);
  REQUIRE(fit.converged);
  const MatrixXd XtX = d.X.transpose() * d.X;
  const VectorXd ridge =
      (XtX * (1.0 + 1.0 / d.n())).ldlt().solve(d.X.transpose() * d.y);
  CHECK((fit.eta_hat.theta - ridge).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("non-local posterior modes stay off the axes, in the MLE quadrant") {
  std::mt19937_64 rng(55);
  int checked = 0;
  for (int rep = 0; rep < 60; ++rep) {
    const Base base = rep % 2 ? Base::Laplace : Base::Normal;
    Dataset d = make_regression_data(rng, 70, 2, base, 1.0, 0.3);
    ModelGamma g{{true, true}, true, base == Base::Laplace};
    const CoefPrior fam = static_cast<CoefPrior>(rep % 3);  // MOM/eMOM/iMOM
    PriorSpec spec = PriorSpec::defaults(fam);
    OptimOptions opts;
    if (rep % 5 == 0) opts.algorithm = Algorithm::CDA;
    const FitResult fit = posterior_mode(d, g, spec, opts);
    if (!fit.converged) continue;
    ++checked;
    const FitResult ml = mle(d, g, {});
    for (Eigen::Index j = 0; j < 2; ++j) {
      CHECK(fit.eta_hat.theta(j) != 0.0);
      if (std::fabs(ml.eta_hat.theta(j)) > 1e-6)
        CHECK(fit.eta_hat.theta(j) * ml.eta_hat.theta(j) > 0.0);
    }
    CHECK(fit.eta_hat.atanh_alpha != 0.0);
    // Smooth case: the joint gradient vanishes at the mode.
    if (base == Base::Normal) {
      const MatrixXd Xg = d.X;
      const MatrixXd XtX = Xg.transpose() * Xg;
      const auto dr = detail::posterior_derivs(d.y, Xg, g, spec, fit.eta_hat,
                                               &XtX, d.n());
      CHECK(dr.grad.cwiseAbs().maxCoeff() < 1e-3);
    }
  }
  CHECK(checked >= 55);
}

TEST_CASE("posterior mode improves on its initialization") {
  std::mt19937_64 rng(67);
  for (int rep = 0; rep < 10; ++rep) {
    Dataset d = make_regression_data(rng, 60, 2, Base::Laplace, 1.5, -0.4);
    ModelGamma g{{true, true}, true, true};
    PriorSpec spec = PriorSpec::defaults(CoefPrior::eMOM);
    const FitResult fit = posterior_mode(d, g, spec);
    REQUIRE(fit.converged);
    // Posterior value at the mode beats nearby perturbations.
    const MatrixXd XtX = d.X.transpose() * d.X;
    const double at_mode =
        detail::posterior_value(d.y, d.X, g, spec, fit.eta_hat, &XtX, d.n());
    CHECK(at_mode == Catch::Approx(fit.logpost_at_mode).margin(1e-9));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int t = 0; t < 20; ++t) {
      VectorXd v = flatten(fit.eta_hat, true);
      for (Eigen::Index j = 0; j < v.size(); ++j) v(j) += 0.05 * gauss(rng);
      const double perturbed =
          detail::posterior_value(d.y, d.X, g, spec, unflatten(v, true), &XtX, d.n());
      CHECK(at_mode >= perturbed - 1e-9);
    }
  }
}

TEST_CASE("rank-deficient designs are rejected as a data error") {
  Dataset d;
  d.X.resize(10, 2);
  d.X.col(0).setOnes();
  d.X.col(1).setOnes();  // duplicated column
  d.y = VectorXd::LinSpaced(10, -1.0, 1.0);
  ModelGamma g{{true, true}, false, false};
  CHECK_THROWS_AS(mle(d, g, {}), DataError);
}
