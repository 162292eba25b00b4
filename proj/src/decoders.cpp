#include "geea/decoders.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace geea {

FeatureDecoder FeatureDecoder::create(const std::string& name, int in_dim,
                                      const std::vector<int>& hidden_sizes, int out_width,
                                      Rng& rng) {
  FeatureDecoder dec;
  dec.out_width = out_width;
  int in = in_dim;
  for (std::size_t i = 0; i < hidden_sizes.size(); ++i) {
    dec.hidden.push_back(
        nn::DenseBlock::create(name + ".h" + std::to_string(i), in, hidden_sizes[i], rng));
    in = hidden_sizes[i];
  }
  dec.out_w = std::make_shared<ad::Tensor>(name + ".out.w", nn::xavier_uniform(in, out_width, rng));
  dec.out_b = std::make_shared<ad::Tensor>(name + ".out.b", ad::Matrix::Zero(1, out_width));
  return dec;
}

std::vector<std::shared_ptr<ad::Tensor>> FeatureDecoder::tensors() const {
  std::vector<std::shared_ptr<ad::Tensor>> out;
  for (const auto& blk : hidden) {
    auto t = blk.tensors();
    out.insert(out.end(), t.begin(), t.end());
  }
  out.push_back(out_w);
  out.push_back(out_b);
  return out;
}

DecoderParams DecoderParams::create(const DecoderConfig& cfg, int d, const AlignmentDataset& ds,
                                    Rng& rng) {
  DecoderParams p;
  auto make_side = [&](const KnowledgeGraph& kg, Side s) {
    PerModal<FeatureDecoder> side;
    const std::string prefix = std::string("decoder.") + side_name(s) + ".";
    side.graph = FeatureDecoder::create(prefix + "graph", d, cfg.hidden, kg.entity_count, rng);
    side.attr = FeatureDecoder::create(prefix + "attr", d, cfg.hidden, kg.attribute_count, rng);
    side.image = FeatureDecoder::create(prefix + "image", d, cfg.hidden, kg.image_dim(), rng);
    return side;
  };
  p.source = make_side(ds.source, Side::Source);
  p.target = make_side(ds.target, Side::Target);
  return p;
}

std::vector<std::shared_ptr<ad::Tensor>> DecoderParams::all() const {
  std::vector<std::shared_ptr<ad::Tensor>> out;
  for (const auto* side : {&source, &target}) {
    for (Modal m : kModals) {
      auto t = (*side)[m].tensors();
      out.insert(out.end(), t.begin(), t.end());
    }
  }
  return out;
}

ad::Var decode_modal(const ad::Var& sub_embedding, Modal modal, const FeatureDecoder& decoder,
                     const KgView& target_view, const ForwardOptions& opt) {
  if (decoder.out_width != target_view.modal_width(modal))
    throw std::invalid_argument(std::string("decode_modal: decoder width ") +
                                std::to_string(decoder.out_width) + " does not match " +
                                modal_name(modal) + " vocabulary " +
                                std::to_string(target_view.modal_width(modal)));
  if (opt.training && opt.dropout > 0.0 && opt.rng == nullptr)
    throw std::invalid_argument("decode_modal: dropout requires an rng");

  ad::Var h = sub_embedding;
  for (std::size_t i = 0; i < decoder.hidden.size(); ++i) {
    const int activation = (i + 1 == decoder.hidden.size()) ? 1 : 0;  // tanh on the last
    h = decoder.hidden[i].forward(h, activation);
    if (opt.training && opt.dropout > 0.0) h = nn::dropout(h, opt.dropout, true, *opt.rng);
  }
  ad::Var logits = nn::affine(h, ad::Var::leaf(*decoder.out_w), ad::Var::leaf(*decoder.out_b));
  return modal == Modal::Image ? logits : ad::sigmoid(logits);
}

namespace {

void pick_ids(const ad::Matrix& probs, Eigen::Index row, const DiscretizePolicy& policy,
              std::vector<int>& ids, std::vector<double>& scores) {
  ids.clear();
  scores.clear();
  const Eigen::Index n = probs.cols();
  if (policy.top_k > 0) {
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (probs(row, a) != probs(row, b)) return probs(row, a) > probs(row, b);
      return a < b;
    });
    const int k = std::min<int>(policy.top_k, static_cast<int>(n));
    for (int i = 0; i < k; ++i) {
      ids.push_back(order[static_cast<std::size_t>(i)]);
      scores.push_back(probs(row, order[static_cast<std::size_t>(i)]));
    }
  } else {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (probs(row, j) > policy.threshold) {
        ids.push_back(static_cast<int>(j));
        scores.push_back(probs(row, j));
      }
    }
  }
}

}  // namespace

std::vector<SynthesizedRecord> discretize_prediction(const ad::Matrix& graph_probs,
                                                     const ad::Matrix& attr_probs,
                                                     const ad::Matrix& image_pred,
                                                     const KnowledgeGraph& target_kg,
                                                     const DiscretizePolicy& policy) {
  const Eigen::Index batch = graph_probs.rows();
  if (attr_probs.rows() != batch || image_pred.rows() != batch)
    throw std::invalid_argument("discretize_prediction: batch sizes differ across modals");

  // Candidate pool for the nearest-image lookup: entities with a real
  // feature; fall back to all rows when none is real.
  std::vector<int> pool;
  for (int i = 0; i < target_kg.entity_count; ++i)
    if (target_kg.image_mask[static_cast<std::size_t>(i)]) pool.push_back(i);
  if (pool.empty())
    for (int i = 0; i < target_kg.entity_count; ++i) pool.push_back(i);
  const ad::Matrix features = target_kg.image_features.cast<double>();

  std::vector<SynthesizedRecord> records;
  records.reserve(static_cast<std::size_t>(batch));
  for (Eigen::Index r = 0; r < batch; ++r) {
    SynthesizedRecord rec;
    pick_ids(graph_probs, r, policy, rec.neighbors, rec.neighbor_scores);
    pick_ids(attr_probs, r, policy, rec.attributes, rec.attribute_scores);

    const Eigen::VectorXd q = image_pred.row(r);
    const double qn = q.norm();
    double best = 2.0 + 1e-9;
    for (int id : pool) {
      const Eigen::VectorXd f = features.row(id);
      const double denom = qn * f.norm();
      const double cos_sim = denom > 0.0 ? q.dot(f) / denom : 0.0;
      const double dist = 1.0 - cos_sim;
      if (dist < best) {
        best = dist;
        rec.nearest_image = id;
      }
    }
    rec.image_distance = best;
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace geea
