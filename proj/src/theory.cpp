#include "geea/theory.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace geea::theory {

GaussianStats GaussianStats::standard(Eigen::Index dims) {
  return {Eigen::VectorXd::Zero(dims), Eigen::VectorXd::Ones(dims)};
}

double gaussian_kl(const GaussianStats& p, const GaussianStats& q) {
  if (p.mu.size() != p.sigma.size() || q.mu.size() != q.sigma.size() || p.mu.size() != q.mu.size())
    throw std::invalid_argument("gaussian_kl: dimension mismatch");
  if ((p.sigma.array() <= 0.0).any() || (q.sigma.array() <= 0.0).any())
    throw std::invalid_argument("gaussian_kl: sigma must be strictly positive");
  double kl = 0.0;
  for (Eigen::Index i = 0; i < p.mu.size(); ++i) {
    const double s1 = p.sigma(i), s2 = q.sigma(i);
    const double dm = p.mu(i) - q.mu(i);
    kl += std::log(s2 / s1) + (s1 * s1 + dm * dm) / (2.0 * s2 * s2) - 0.5;
  }
  return kl;
}

double monte_carlo_gaussian_kl(const GaussianStats& p, const GaussianStats& q, int samples,
                               Rng& rng) {
  if (samples < 1) throw std::invalid_argument("monte_carlo_gaussian_kl: samples must be >= 1");
  auto log_pdf = [](const GaussianStats& g, const Eigen::VectorXd& x) {
    double lp = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double z = (x(i) - g.mu(i)) / g.sigma(i);
      lp += -0.5 * z * z - std::log(g.sigma(i)) - 0.5 * std::log(2.0 * std::numbers::pi);
    }
    return lp;
  };
  double acc = 0.0;
  Eigen::VectorXd x(p.mu.size());
  for (int s = 0; s < samples; ++s) {
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = p.mu(i) + p.sigma(i) * rng.normal();
    acc += log_pdf(p, x) - log_pdf(q, x);
  }
  return acc / samples;
}

Proposition2Report verify_proposition2(int trials, Rng& rng) {
  if (trials < 1) throw std::invalid_argument("verify_proposition2: trials must be >= 1");
  Proposition2Report rep;
  rep.trials = trials;
  rep.identity_ok = true;
  rep.path_monotone = true;

  const GaussianStats standard = GaussianStats::standard(1);
  auto g1 = [](double mu, double sigma) {
    GaussianStats g;
    g.mu = Eigen::VectorXd::Constant(1, mu);
    g.sigma = Eigen::VectorXd::Constant(1, sigma);
    return g;
  };

  for (int t = 0; t < trials; ++t) {
    const double mx = rng.uniform(-2.0, 2.0);
    const double my = rng.uniform(-2.0, 2.0);
    const double sx = rng.uniform(0.5, 2.0);
    const double sy = rng.uniform(0.5, 2.0);

    const double a = gaussian_kl(g1(mx, sx), standard);
    const double b = gaussian_kl(g1(my, sy), standard);
    const double c = gaussian_kl(g1(mx, sx), g1(my, sy));
    // Expanded form of KL(zx,z*) + KL(zy,z*) - KL(zx,zy) after substituting
    // the standard normal target.
    const double expanded =
        -2.0 * std::log(sy) - 0.5 +
        ((mx * mx + my * my + sx * sx) * (sy * sy - 1.0) + sy * sy * sy * sy + 2.0 * mx * my) /
            (2.0 * sy * sy);
    const double residual = std::abs(expanded - (a + b - c));
    rep.max_identity_residual = std::max(rep.max_identity_residual, residual);

    // Drive (mu, log sigma) linearly to (0, 0) in 10 steps; the anchor KLs
    // shrink to zero and KL(zx, zy) must follow without ever rising.
    double prev = c;
    double final_kl = c;
    for (int k = 1; k <= 10; ++k) {
      const double s = static_cast<double>(10 - k) / 10.0;
      const double kl = gaussian_kl(g1(s * mx, std::exp(s * std::log(sx))),
                                    g1(s * my, std::exp(s * std::log(sy))));
      if (kl > prev + 1e-12) rep.path_monotone = false;
      prev = kl;
      final_kl = kl;
    }
    rep.final_kl_max = std::max(rep.final_kl_max, final_kl);
  }
  rep.identity_ok = rep.max_identity_residual < 1e-9;
  if (rep.final_kl_max >= 1e-6) rep.path_monotone = false;
  return rep;
}

namespace {

struct ToyModel {
  // Joint distribution over nx * ny discrete states plus predictor logits.
  Eigen::MatrixXd joint;   // nx x ny, sums to 1
  Eigen::MatrixXd logits;  // nx x ny

  Eigen::VectorXd marginal_x() const { return joint.rowwise().sum(); }
  Eigen::VectorXd marginal_y() const { return joint.colwise().sum(); }

  Eigen::MatrixXd predictor() const {  // q(y|x), row-stochastic
    Eigen::MatrixXd q = logits;
    for (Eigen::Index x = 0; x < q.rows(); ++x) {
      const double m = q.row(x).maxCoeff();
      q.row(x) = (q.row(x).array() - m).exp();
      q.row(x) /= q.row(x).sum();
    }
    return q;
  }
};

struct ElboTerms {
  double reconstruction = 0.0;
  double distribution_match = 0.0;
  double prediction_match = 0.0;
};

// Exhaustive summation of the three decomposition terms for one x.
ElboTerms elbo_terms(const ToyModel& m, const Eigen::MatrixXd& q, Eigen::Index x) {
  const Eigen::VectorXd px = m.marginal_x();
  const Eigen::VectorXd py = m.marginal_y();
  ElboTerms t;
  for (Eigen::Index y = 0; y < m.joint.cols(); ++y) {
    const double qy = q(x, y);
    if (qy <= 0.0) continue;
    const double p_x_given_y = m.joint(x, y) / py(y);
    const double p_y_given_x = m.joint(x, y) / px(x);
    t.reconstruction += qy * std::log(p_x_given_y);
    t.distribution_match += qy * std::log(qy / py(y));
    t.prediction_match += qy * std::log(qy / p_y_given_x);
  }
  return t;
}

double weighted_prediction_kl(const ToyModel& m, const Eigen::MatrixXd& q) {
  const Eigen::VectorXd px = m.marginal_x();
  double total = 0.0;
  for (Eigen::Index x = 0; x < m.joint.rows(); ++x)
    total += px(x) * elbo_terms(m, q, x).prediction_match;
  return total;
}

double weighted_elbo(const ToyModel& m, const Eigen::MatrixXd& q) {
  const Eigen::VectorXd px = m.marginal_x();
  double total = 0.0;
  for (Eigen::Index x = 0; x < m.joint.rows(); ++x) {
    const ElboTerms t = elbo_terms(m, q, x);
    total += px(x) * (t.reconstruction - t.distribution_match);
  }
  return total;
}

// d(weighted ELBO)/d(logits): softmax gradient of
// sum_y q_y (log p(x,y) - log q_y) per row.
Eigen::MatrixXd elbo_gradient(const ToyModel& m, const Eigen::MatrixXd& q) {
  const Eigen::VectorXd px = m.marginal_x();
  Eigen::MatrixXd grad(m.logits.rows(), m.logits.cols());
  for (Eigen::Index x = 0; x < m.joint.rows(); ++x) {
    double expectation = 0.0;
    for (Eigen::Index y = 0; y < m.joint.cols(); ++y)
      expectation += q(x, y) * (std::log(m.joint(x, y)) - std::log(q(x, y)));
    for (Eigen::Index y = 0; y < m.joint.cols(); ++y) {
      const double score = std::log(m.joint(x, y)) - std::log(q(x, y));
      grad(x, y) = px(x) * q(x, y) * (score - expectation);
    }
  }
  return grad;
}

ToyModel random_toy_model(Eigen::Index nx, Eigen::Index ny, Rng& rng) {
  ToyModel m;
  m.joint = rng.uniform_matrix(nx, ny, 0.05, 1.0);
  m.joint /= m.joint.sum();
  m.logits = rng.normal_matrix(nx, ny);
  return m;
}

}  // namespace

ElboReport verify_elbo_decomposition(int trials, Rng& rng) {
  if (trials < 1) throw std::invalid_argument("verify_elbo_decomposition: trials must be >= 1");
  ElboReport rep;
  rep.trials = trials;

  constexpr Eigen::Index nx = 5, ny = 7;
  for (int t = 0; t < trials; ++t) {
    const ToyModel m = random_toy_model(nx, ny, rng);
    const Eigen::MatrixXd q = m.predictor();
    const Eigen::VectorXd px = m.marginal_x();
    for (Eigen::Index x = 0; x < nx; ++x) {
      const ElboTerms terms = elbo_terms(m, q, x);
      const double residual = std::abs(
          std::log(px(x)) -
          (terms.reconstruction - terms.distribution_match + terms.prediction_match));
      rep.max_identity_residual = std::max(rep.max_identity_residual, residual);
    }
  }
  rep.identity_ok = rep.max_identity_residual < 1e-9;

  // Trend: backtracking ascent on the ELBO; each accepted step must not
  // increase the prediction-matching KL.
  ToyModel m = random_toy_model(nx, ny, rng);
  rep.trend_monotone = true;
  double kl = weighted_prediction_kl(m, m.predictor());
  rep.initial_prediction_kl = kl;
  double lr = 0.5;
  for (int step = 0; step < 100; ++step) {
    const Eigen::MatrixXd q = m.predictor();
    const double elbo = weighted_elbo(m, q);
    const Eigen::MatrixXd grad = elbo_gradient(m, q);
    Eigen::MatrixXd accepted = m.logits;
    double trial_lr = lr;
    for (int tries = 0; tries < 60; ++tries) {
      Eigen::MatrixXd candidate = m.logits + trial_lr * grad;
      ToyModel probe = m;
      probe.logits = candidate;
      if (weighted_elbo(probe, probe.predictor()) >= elbo) {
        accepted = candidate;
        lr = trial_lr;
        break;
      }
      trial_lr *= 0.5;
    }
    m.logits = accepted;
    const double next_kl = weighted_prediction_kl(m, m.predictor());
    if (next_kl > kl + 1e-12) rep.trend_monotone = false;
    kl = next_kl;
  }
  rep.final_prediction_kl = kl;
  return rep;
}

std::string proposition2_report_table(const Proposition2Report& r) {
  std::ostringstream os;
  os << "proposition 2 (" << r.trials << " trials)\n";
  os << "  difference identity   " << (r.identity_ok ? "PASS" : "FAIL")
     << "  max residual " << r.max_identity_residual << "\n";
  os << "  limit path            " << (r.path_monotone ? "PASS" : "FAIL")
     << "  final KL(zx,zy) max " << r.final_kl_max << "\n";
  return os.str();
}

std::string elbo_report_table(const ElboReport& r) {
  std::ostringstream os;
  os << "ELBO decomposition (" << r.trials << " trials)\n";
  os << "  identity              " << (r.identity_ok ? "PASS" : "FAIL")
     << "  max residual " << r.max_identity_residual << "\n";
  os << "  proposition 1 trend   " << (r.trend_monotone ? "PASS" : "FAIL")
     << "  prediction KL " << r.initial_prediction_kl << " -> " << r.final_prediction_kl << "\n";
  return os.str();
}

}  // namespace geea::theory
