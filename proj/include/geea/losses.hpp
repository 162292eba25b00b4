#pragma once

#include "geea/decoders.hpp"
#include "geea/encoder.hpp"
#include "geea/mvae.hpp"

#include <map>
#include <optional>
#include <string>

namespace geea {

inline constexpr double kProbFloor = 1e-7;

struct LossWeights {
  // Flow weights in (xx, yy, xy, yx) order.
  std::array<double, 4> flow = {1.0, 1.0, 5.0, 5.0};
  double distribution = 0.5;
  double prior = 1.0;
  double post = 1.0;
  double prediction = 1.0;

  double flow_weight(Flow f) const { return flow[static_cast<std::size_t>(f)]; }
  void validate() const;
};

struct TermToggles {
  bool prediction = true;
  bool distribution = true;
  bool prior = true;
  bool post = true;
};

// Cross-entropy over cosine similarity scores: in-batch positives (x_i, y_i)
// pushed to label 1, all other pairs to label 0, the negative side
// normalized by batch-1 per anchor. With full in-batch negatives both
// ranking directions yield the same value, so the symmetric average equals a
// single evaluation.
ad::Var prediction_match_loss(const ad::Var& x_joint, const ad::Var& y_joint, double temperature,
                              bool in_batch_negatives = true);

// Mean per-sample, per-dimension analytic KL of N(mu, sigma^2) against
// N(0, I). Throws if any sigma entry is non-positive.
ad::Var gaussian_kl_mean(const ad::Var& mu, const ad::Var& sigma);

// Distribution match for one modal: the two self-flow KL terms summed.
// Mutual-flow latents are deliberately left out.
ad::Var distribution_match_modal(const VaeOutput& self_xx, const VaeOutput& self_yy);

// Graph/attr: mean BCE of the prediction against the multi-hot feature
// labels; image: mean squared error against the fixed feature vector.
ad::Var prior_reconstruction_loss(const ad::Var& prediction, const ad::Matrix& target_features,
                                  Modal modal);

// MSE between the re-fused reconstructed sub-embeddings and a
// gradient-blocked copy of the true joint embedding.
ad::Var post_reconstruction_loss(const PerModal<ad::Var>& recon_subs, const EncoderParams& enc,
                                 const ad::Var& true_joint);

// Scalar loss breakdown for logging and for assembling the weighted total.
struct LossBreakdown {
  std::optional<double> prediction_match;
  std::map<std::string, double> distribution_match;  // modal -> value
  std::map<std::string, double> prior;               // "flow.modal" -> value
  std::map<std::string, double> post;                // flow -> value
  double total = 0.0;
};

// total = sum_f w_f * (w_prior * sum_m prior(f,m) + w_post * post(f))
//       + w_dm * sum_m dm(m) + w_pred * prediction.
// Throws when a part required by an enabled term is missing.
double total_loss(const LossBreakdown& parts, const LossWeights& weights,
                  const TermToggles& enabled = {});

// One JSON line per optimizer step for the training log.
std::string loss_log_line(long step, const LossBreakdown& parts);

}  // namespace geea
