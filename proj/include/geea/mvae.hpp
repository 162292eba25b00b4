#pragma once

#include "geea/encoder.hpp"
#include "geea/nn.hpp"

#include <map>
#include <optional>
#include <vector>

namespace geea {

// The four encode/decode directions. xx and yy reconstruct the input entity
// itself (self flows, any entity); xy and yx reconstruct the aligned
// counterpart (mutual flows, seed pairs only).
enum class Flow { XX, YY, XY, YX };

constexpr std::array<Flow, 4> kFlows = {Flow::XX, Flow::YY, Flow::XY, Flow::YX};
const char* flow_name(Flow f);
inline bool is_self(Flow f) { return f == Flow::XX || f == Flow::YY; }
inline bool is_mutual(Flow f) { return !is_self(f); }
// Which side's features the flow reconstructs.
inline Side flow_target_side(Flow f) {
  return (f == Flow::XX || f == Flow::YX) ? Side::Source : Side::Target;
}

struct VaeOutput {
  ad::Var reconstruction;  // batch x d
  ad::Var z;               // batch x d_z
  ad::Var mu;
  ad::Var sigma;           // strictly positive
  ad::Matrix eps;          // the drawn noise; z = mu + sigma .* eps
};

// One modal's VAE. The same cell serves all four flows of that modal.
struct VaeCell {
  std::vector<nn::DenseBlock> encoder_stack;
  std::shared_ptr<ad::Tensor> mu_w, mu_b;
  std::shared_ptr<ad::Tensor> logvar_w, logvar_b;
  std::vector<nn::DenseBlock> decoder_stack;
  std::shared_ptr<ad::Tensor> out_w, out_b;

  static VaeCell create(const std::string& name, int d, int d_z, const std::vector<int>& hidden,
                        Rng& rng);
  std::vector<std::shared_ptr<ad::Tensor>> tensors() const;
};

struct MvaeConfig {
  int d = 300;
  int d_z = 300;
  std::vector<int> hidden = {300, 300};
};

struct MvaeParams {
  MvaeConfig config;
  PerModal<VaeCell> cells;

  static MvaeParams create(const MvaeConfig& cfg, Rng& rng);
  std::vector<std::shared_ptr<ad::Tensor>> all() const;
};

// Encode, reparameterize (z = mu + sigma .* eps) and decode one batch of
// sub-embeddings. sigma comes from exp(0.5 * logvar_head) so it is positive
// for any finite parameters. Pass rng = nullptr for eps = 0 (deterministic
// evaluation).
VaeOutput vae_forward(const ad::Var& input, const VaeCell& cell, Rng* noise_rng,
                      const ForwardOptions& opt = {});
VaeOutput vae_forward(const ad::Var& input, const VaeCell& cell, const ad::Matrix& eps,
                      const ForwardOptions& opt = {});

struct FlowBatch {
  std::optional<PerModal<ad::Var>> source;  // sub-embeddings of the x batch
  std::optional<PerModal<ad::Var>> target;  // sub-embeddings of the y batch
  bool supervised = false;                  // rows are seed-aligned (x_i, y_i)
};

// Runs the requested flows, one VaeOutput per modal each, all with the
// shared per-modal cells. Mutual flows require a supervised batch.
std::map<Flow, PerModal<VaeOutput>> run_flows(const FlowBatch& batch,
                                              const std::vector<Flow>& flows,
                                              const MvaeParams& params, Rng* noise_rng,
                                              const ForwardOptions& opt = {});

// z ~ N(0, I) through each modal decoder: sub-embeddings for new entities.
PerModal<ad::Var> sample_unconditional(int count, const MvaeParams& params, Rng& rng);

}  // namespace geea
