#pragma once

#include "geea/autodiff.hpp"
#include "geea/kgdata.hpp"
#include "geea/rng.hpp"

#include <array>
#include <memory>
#include <vector>

namespace geea {

enum class Side { Source, Target };
enum class Modal { Graph, Attr, Image };

constexpr std::array<Modal, 3> kModals = {Modal::Graph, Modal::Attr, Modal::Image};
const char* modal_name(Modal m);
const char* side_name(Side s);

template <typename T>
struct PerModal {
  T graph;
  T attr;
  T image;

  T& operator[](Modal m) {
    switch (m) {
      case Modal::Graph: return graph;
      case Modal::Attr: return attr;
      default: return image;
    }
  }
  const T& operator[](Modal m) const {
    switch (m) {
      case Modal::Graph: return graph;
      case Modal::Attr: return attr;
      default: return image;
    }
  }
};

// Immutable per-KG constants derived from the discrete features: the
// normalized adjacency driving neighbor aggregation, the multi-hot inputs
// and the label matrices the decoders are scored against.
struct KgView {
  int entity_count = 0;
  int attribute_count = 0;
  int d_img = 0;
  std::shared_ptr<const ad::SpMatrix> adj_norm;       // n x n, self loops, row-stochastic
  std::shared_ptr<const ad::SpMatrix> attr_multihot;  // n x n_attr
  Eigen::SparseMatrix<double, Eigen::RowMajor> neighbor_labels;  // n x n, no self loops
  ad::Matrix image;                                   // n x d_img

  static KgView build(const KnowledgeGraph& kg);

  int modal_width(Modal m) const;
  ad::Matrix graph_label_rows(const std::vector<Eigen::Index>& ids) const;
  ad::Matrix attr_label_rows(const std::vector<Eigen::Index>& ids) const;
  ad::Matrix image_rows(const std::vector<Eigen::Index>& ids) const;
};

struct EncoderConfig {
  int d = 300;
  int d_joint = 300;
  int gnn_layers = 2;
};

// Per-modal encoders plus the fusion layer. Entity tables and attribute
// projections are per KG (the vocabularies differ); the aggregation layers,
// image projection and fusion layer are shared across both KGs.
struct EncoderParams {
  EncoderConfig config;
  std::shared_ptr<ad::Tensor> source_table, target_table;
  std::vector<std::shared_ptr<ad::Tensor>> layer_w, layer_b;
  std::shared_ptr<ad::Tensor> source_attr_w, source_attr_b;
  std::shared_ptr<ad::Tensor> target_attr_w, target_attr_b;
  std::shared_ptr<ad::Tensor> image_w, image_b;
  std::shared_ptr<ad::Tensor> fusion_w, fusion_b;

  static EncoderParams create(const EncoderConfig& cfg, const AlignmentDataset& ds, Rng& rng);
  std::vector<std::shared_ptr<ad::Tensor>> all() const;
};

struct ModalEmbeddings {
  ad::Var graph, attr, image, joint;
  PerModal<ad::Var> subs() const { return {graph, attr, image}; }
};

struct ForwardOptions {
  bool training = false;
  double dropout = 0.0;
  Rng* rng = nullptr;  // required when training with dropout > 0
};

// Sub-embeddings plus joint = fusion(concat(subs)) for the given entities.
ModalEmbeddings encode(const KgView& view, const std::vector<Eigen::Index>& ids,
                       const EncoderParams& params, Side side, const ForwardOptions& opt = {});

// The fusion map alone; post reconstruction re-enters here with
// reconstructed sub-embeddings.
ad::Var fuse(const ad::Var& graph, const ad::Var& attr, const ad::Var& image,
             const EncoderParams& params);
ad::Var fuse(const PerModal<ad::Var>& subs, const EncoderParams& params);

std::vector<Eigen::Index> all_entity_ids(const KgView& view);

}  // namespace geea
