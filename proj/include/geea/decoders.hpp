#pragma once

#include "geea/encoder.hpp"
#include "geea/nn.hpp"

#include <vector>

namespace geea {

// Maps a reconstructed sub-embedding back to concrete features of one KG:
// neighborhood / attribute probabilities, or a regressed image vector.
// Hidden layers are affine + layer norm with ReLU, the last hidden layer
// uses tanh.
struct FeatureDecoder {
  std::vector<nn::DenseBlock> hidden;
  std::shared_ptr<ad::Tensor> out_w, out_b;
  int out_width = 0;

  static FeatureDecoder create(const std::string& name, int in_dim,
                               const std::vector<int>& hidden_sizes, int out_width, Rng& rng);
  std::vector<std::shared_ptr<ad::Tensor>> tensors() const;
};

struct DecoderConfig {
  std::vector<int> hidden = {300, 1000};
};

// One decoder per (modal, KG side); output widths follow the side's
// vocabulary sizes.
struct DecoderParams {
  PerModal<FeatureDecoder> source;
  PerModal<FeatureDecoder> target;

  static DecoderParams create(const DecoderConfig& cfg, int d, const AlignmentDataset& ds,
                              Rng& rng);
  const FeatureDecoder& get(Modal m, Side s) const {
    return s == Side::Source ? source[m] : target[m];
  }
  std::vector<std::shared_ptr<ad::Tensor>> all() const;
};

// Graph/attr modals return sigmoid probabilities over the target KG's
// vocabulary; the image modal returns an unconstrained regression onto the
// fixed feature vector. Throws if the decoder's output width does not match
// the view.
ad::Var decode_modal(const ad::Var& sub_embedding, Modal modal, const FeatureDecoder& decoder,
                     const KgView& target_view, const ForwardOptions& opt = {});

struct DiscretizePolicy {
  double threshold = 0.5;
  int top_k = 0;  // > 0: report the k most probable ids instead
};

struct SynthesizedRecord {
  std::vector<int> neighbors;
  std::vector<double> neighbor_scores;
  std::vector<int> attributes;
  std::vector<double> attribute_scores;
  int nearest_image = -1;
  double image_distance = 0.0;
};

// Turns prediction matrices into concrete feature sets: ids above threshold
// (or top-k) for graph/attr, and the nearest existing image feature by
// cosine distance for the image modal.
std::vector<SynthesizedRecord> discretize_prediction(const ad::Matrix& graph_probs,
                                                     const ad::Matrix& attr_probs,
                                                     const ad::Matrix& image_pred,
                                                     const KnowledgeGraph& target_kg,
                                                     const DiscretizePolicy& policy = {});

}  // namespace geea
