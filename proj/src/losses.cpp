#include "geea/losses.hpp"

#include <nlohmann/json.hpp>

#include <stdexcept>

namespace geea {

void LossWeights::validate() const {
  for (double w : flow)
    if (w < 0.0) throw std::invalid_argument("LossWeights: flow weights must be >= 0");
  if (distribution < 0.0 || prior < 0.0 || post < 0.0 || prediction < 0.0)
    throw std::invalid_argument("LossWeights: term weights must be >= 0");
}

ad::Var prediction_match_loss(const ad::Var& x_joint, const ad::Var& y_joint, double temperature,
                              bool in_batch_negatives) {
  if (x_joint.rows() != y_joint.rows() || x_joint.cols() != y_joint.cols())
    throw std::invalid_argument("prediction_match_loss: embedding shapes differ");
  if (temperature <= 0.0)
    throw std::invalid_argument("prediction_match_loss: temperature must be > 0");
  const Eigen::Index batch = x_joint.rows();
  if (batch < 1) throw std::invalid_argument("prediction_match_loss: empty batch");
  if (in_batch_negatives && batch < 2)
    throw std::invalid_argument("prediction_match_loss: in-batch negatives need batch >= 2");

  ad::Var scores = ad::scale(
      ad::matmul_nt(nn::l2_normalize_rows(x_joint), nn::l2_normalize_rows(y_joint)),
      1.0 / temperature);
  ad::Var probs = ad::clamp(ad::sigmoid(scores), kProbFloor, 1.0 - kProbFloor);

  const ad::Matrix eye = ad::Matrix::Identity(batch, batch);
  ad::Var positives = ad::mul(ad::Var::constant(eye), ad::vlog(probs));
  ad::Var per_pair = positives;
  if (in_batch_negatives) {
    const ad::Matrix off = ad::Matrix::Ones(batch, batch) - eye;
    ad::Var negatives = ad::scale(
        ad::mul(ad::Var::constant(off), ad::vlog(ad::rsub_scalar(1.0, probs))),
        1.0 / static_cast<double>(batch - 1));
    per_pair = ad::add(positives, negatives);
  }
  return ad::scale(ad::neg(ad::sum(per_pair)), 1.0 / static_cast<double>(batch));
}

ad::Var gaussian_kl_mean(const ad::Var& mu, const ad::Var& sigma) {
  if (mu.rows() != sigma.rows() || mu.cols() != sigma.cols())
    throw std::invalid_argument("gaussian_kl_mean: mu/sigma shapes differ");
  if ((sigma.value().array() <= 0.0).any())
    throw std::invalid_argument("gaussian_kl_mean: sigma must be strictly positive");
  // KL(N(mu, sigma^2) || N(0, 1)) = -log sigma + (sigma^2 + mu^2)/2 - 1/2.
  ad::Var quad = ad::scale(ad::add(ad::square(sigma), ad::square(mu)), 0.5);
  return ad::mean(ad::sub(ad::add_scalar(quad, -0.5), ad::vlog(sigma)));
}

ad::Var distribution_match_modal(const VaeOutput& self_xx, const VaeOutput& self_yy) {
  return ad::add(gaussian_kl_mean(self_xx.mu, self_xx.sigma),
                 gaussian_kl_mean(self_yy.mu, self_yy.sigma));
}

ad::Var prior_reconstruction_loss(const ad::Var& prediction, const ad::Matrix& target_features,
                                  Modal modal) {
  if (prediction.rows() != target_features.rows() || prediction.cols() != target_features.cols())
    throw std::invalid_argument(std::string("prior_reconstruction_loss: ") + modal_name(modal) +
                                " prediction/label shape mismatch (" +
                                std::to_string(prediction.rows()) + "x" +
                                std::to_string(prediction.cols()) + " vs " +
                                std::to_string(target_features.rows()) + "x" +
                                std::to_string(target_features.cols()) + ")");
  ad::Var labels = ad::Var::constant(target_features);
  if (modal == Modal::Image) return nn::mse(prediction, labels);
  return nn::bce_mean(prediction, labels, kProbFloor);
}

ad::Var post_reconstruction_loss(const PerModal<ad::Var>& recon_subs, const EncoderParams& enc,
                                 const ad::Var& true_joint) {
  ad::Var refused = fuse(recon_subs, enc);
  if (refused.rows() != true_joint.rows() || refused.cols() != true_joint.cols())
    throw std::invalid_argument("post_reconstruction_loss: joint embedding shape mismatch");
  return nn::mse(refused, ad::detach(true_joint));
}

double total_loss(const LossBreakdown& parts, const LossWeights& weights,
                  const TermToggles& enabled) {
  weights.validate();
  auto require = [](const std::map<std::string, double>& m, const std::string& key,
                    const char* what) {
    auto it = m.find(key);
    if (it == m.end())
      throw std::invalid_argument(std::string("total_loss: missing ") + what + " part '" + key +
                                  "'");
    return it->second;
  };

  double total = 0.0;
  if (enabled.prediction) {
    if (!parts.prediction_match)
      throw std::invalid_argument("total_loss: missing prediction match part");
    total += weights.prediction * *parts.prediction_match;
  }
  if (enabled.distribution) {
    double dm = 0.0;
    for (Modal m : kModals) dm += require(parts.distribution_match, modal_name(m), "distribution");
    total += weights.distribution * dm;
  }
  if (enabled.prior || enabled.post) {
    for (Flow f : kFlows) {
      double flow_term = 0.0;
      if (enabled.prior) {
        double prior_sum = 0.0;
        for (Modal m : kModals)
          prior_sum += require(parts.prior, std::string(flow_name(f)) + "." + modal_name(m),
                               "prior reconstruction");
        flow_term += weights.prior * prior_sum;
      }
      if (enabled.post)
        flow_term += weights.post * require(parts.post, flow_name(f), "post reconstruction");
      total += weights.flow_weight(f) * flow_term;
    }
  }
  return total;
}

std::string loss_log_line(long step, const LossBreakdown& parts) {
  nlohmann::ordered_json j;
  j["step"] = step;
  j["l_ns"] = parts.prediction_match ? nlohmann::json(*parts.prediction_match)
                                     : nlohmann::json(nullptr);
  j["l_dm"] = parts.distribution_match;
  j["l_prior_by_flow_modal"] = parts.prior;
  j["l_post_by_flow"] = parts.post;
  j["total"] = parts.total;
  return j.dump();
}

}  // namespace geea
