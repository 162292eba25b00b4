#include "geea/theory.hpp"

#include <doctest.h>

#include <cmath>

using namespace geea;
using theory::GaussianStats;

namespace {

GaussianStats g1(double mu, double sigma) {
  GaussianStats g;
  g.mu = Eigen::VectorXd::Constant(1, mu);
  g.sigma = Eigen::VectorXd::Constant(1, sigma);
  return g;
}

}  // namespace

TEST_CASE("closed-form Gaussian KL basics") {
  CHECK(theory::gaussian_kl(g1(0.3, 1.2), g1(0.3, 1.2)) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(theory::gaussian_kl(g1(1, 1), g1(0, 1)) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(theory::gaussian_kl(g1(0, -1), g1(0, 1)), std::invalid_argument);

  // Non-negativity with equality only at p = q.
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    GaussianStats p = g1(rng.uniform(-2, 2), rng.uniform(0.3, 3));
    GaussianStats q = g1(rng.uniform(-2, 2), rng.uniform(0.3, 3));
    const double kl = theory::gaussian_kl(p, q);
    CHECK(kl >= 0.0);
    if (std::abs(p.mu(0) - q.mu(0)) > 1e-3 || std::abs(p.sigma(0) - q.sigma(0)) > 1e-3)
      CHECK(kl > 0.0);
  }
}

TEST_CASE("closed form matches Monte-Carlo on 20 random pairs within 2%") {
  Rng rng(11);
  for (int t = 0; t < 20; ++t) {
    GaussianStats p, q;
    const int dims = 1 + static_cast<int>(rng.uniform_int(3));
    p.mu = rng.normal_matrix(dims, 1).col(0);
    q.mu = rng.normal_matrix(dims, 1).col(0);
    p.sigma = rng.uniform_matrix(dims, 1, 0.6, 1.8).col(0);
    q.sigma = rng.uniform_matrix(dims, 1, 0.6, 1.8).col(0);
    const double exact = theory::gaussian_kl(p, q);
    const double mc = theory::monte_carlo_gaussian_kl(p, q, 100000, rng);
    CHECK(std::abs(exact - mc) <= 0.02 * std::max(std::abs(exact), 0.05));
  }
}

TEST_CASE("proposition 2 identity and limit") {
  Rng rng(5);
  auto rep = theory::verify_proposition2(1000, rng);
  CHECK(rep.identity_ok);
  CHECK(rep.max_identity_residual < 1e-9);
  CHECK(rep.path_monotone);
  CHECK(rep.final_kl_max < 1e-6);
  CHECK(rep.passed());
}

TEST_CASE("proposition 2 degenerate case: all three distributions equal") {
  // zx = zy = z* exactly: both the difference expression and KL(zx, zy)
  // are zero.
  const double a = theory::gaussian_kl(g1(0, 1), g1(0, 1));
  CHECK(a == 0.0);
  const double expanded = -2.0 * std::log(1.0) - 0.5 + ((0 + 0 + 1) * (1 - 1) + 1 + 0) / 2.0;
  CHECK(expanded == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("ELBO decomposition identity and proposition 1 trend") {
  Rng rng(6);
  auto rep = theory::verify_elbo_decomposition(50, rng);
  CHECK(rep.identity_ok);
  CHECK(rep.max_identity_residual < 1e-9);
  CHECK(rep.trend_monotone);
  CHECK(rep.final_prediction_kl <= rep.initial_prediction_kl);
  CHECK(rep.passed());
}

TEST_CASE("predictor equal to the true posterior gives zero prediction KL") {
  // On a 2x2 toy model with q(y|x) = p(y|x), the prediction-matching term
  // vanishes and the ELBO equals log p(x). Verified by direct summation.
  Eigen::MatrixXd joint(2, 2);
  joint << 0.1, 0.3, 0.4, 0.2;
  const Eigen::VectorXd px = joint.rowwise().sum();
  const Eigen::VectorXd py = joint.colwise().sum();
  for (int x = 0; x < 2; ++x) {
    double recon = 0, dm = 0, pred = 0;
    for (int y = 0; y < 2; ++y) {
      const double q = joint(x, y) / px(x);  // true posterior
      recon += q * std::log(joint(x, y) / py(y));
      dm += q * std::log(q / py(y));
      pred += q * std::log(q / (joint(x, y) / px(x)));
    }
    CHECK(pred == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(recon - dm == doctest::Approx(std::log(px(x))).epsilon(1e-12));
  }
}

TEST_CASE("report tables carry pass markers") {
  Rng rng(7);
  auto p2 = theory::verify_proposition2(10, rng);
  auto elbo = theory::verify_elbo_decomposition(5, rng);
  CHECK(theory::proposition2_report_table(p2).find("PASS") != std::string::npos);
  CHECK(theory::elbo_report_table(elbo).find("PASS") != std::string::npos);
}
