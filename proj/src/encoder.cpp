#include "geea/encoder.hpp"

#include "geea/nn.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace geea {

const char* modal_name(Modal m) {
  switch (m) {
    case Modal::Graph: return "graph";
    case Modal::Attr: return "attr";
    default: return "image";
  }
}

const char* side_name(Side s) { return s == Side::Source ? "source" : "target"; }

KgView KgView::build(const KnowledgeGraph& kg) {
  KgView v;
  v.entity_count = kg.entity_count;
  v.attribute_count = kg.attribute_count;
  v.d_img = kg.image_dim();

  std::vector<std::set<int>> neighbors(static_cast<std::size_t>(kg.entity_count));
  for (const auto& t : kg.triples) {
    neighbors[static_cast<std::size_t>(t[0])].insert(t[2]);
    neighbors[static_cast<std::size_t>(t[2])].insert(t[0]);
  }

  {
    std::vector<Eigen::Triplet<double>> trips;
    for (int i = 0; i < kg.entity_count; ++i) {
      const auto& nb = neighbors[static_cast<std::size_t>(i)];
      const double w = 1.0 / static_cast<double>(nb.size() + (nb.count(i) ? 0 : 1));
      trips.emplace_back(i, i, w);
      for (int j : nb)
        if (j != i) trips.emplace_back(i, j, w);
    }
    auto adj = std::make_shared<ad::SpMatrix>(kg.entity_count, kg.entity_count);
    adj->setFromTriplets(trips.begin(), trips.end());
    v.adj_norm = std::move(adj);
  }
  {
    std::vector<Eigen::Triplet<double>> trips;
    for (const auto& [e, a] : kg.attributes) trips.emplace_back(e, a, 1.0);
    auto mh = std::make_shared<ad::SpMatrix>(kg.entity_count, kg.attribute_count);
    mh->setFromTriplets(trips.begin(), trips.end());
    v.attr_multihot = std::move(mh);
  }
  {
    std::vector<Eigen::Triplet<double>> trips;
    for (int i = 0; i < kg.entity_count; ++i)
      for (int j : neighbors[static_cast<std::size_t>(i)])
        if (j != i) trips.emplace_back(i, j, 1.0);
    v.neighbor_labels.resize(kg.entity_count, kg.entity_count);
    v.neighbor_labels.setFromTriplets(trips.begin(), trips.end());
  }
  v.image = kg.image_features.cast<double>();
  return v;
}

int KgView::modal_width(Modal m) const {
  switch (m) {
    case Modal::Graph: return entity_count;
    case Modal::Attr: return attribute_count;
    default: return d_img;
  }
}

namespace {

ad::Matrix sparse_rows_dense(const Eigen::SparseMatrix<double, Eigen::RowMajor>& m,
                             const std::vector<Eigen::Index>& ids) {
  ad::Matrix out = ad::Matrix::Zero(static_cast<Eigen::Index>(ids.size()), m.cols());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(m, ids[k]); it; ++it)
      out(static_cast<Eigen::Index>(k), it.col()) = it.value();
  }
  return out;
}

void check_ids(const std::vector<Eigen::Index>& ids, int count, const char* what) {
  for (Eigen::Index id : ids)
    if (id < 0 || id >= count)
      throw std::invalid_argument(std::string(what) + ": entity id " + std::to_string(id) +
                                  " out of range [0, " + std::to_string(count) + ")");
}

}  // namespace

ad::Matrix KgView::graph_label_rows(const std::vector<Eigen::Index>& ids) const {
  check_ids(ids, entity_count, "graph_label_rows");
  return sparse_rows_dense(neighbor_labels, ids);
}

ad::Matrix KgView::attr_label_rows(const std::vector<Eigen::Index>& ids) const {
  check_ids(ids, entity_count, "attr_label_rows");
  Eigen::SparseMatrix<double, Eigen::RowMajor> rm(*attr_multihot);
  return sparse_rows_dense(rm, ids);
}

ad::Matrix KgView::image_rows(const std::vector<Eigen::Index>& ids) const {
  check_ids(ids, entity_count, "image_rows");
  ad::Matrix out(static_cast<Eigen::Index>(ids.size()), image.cols());
  for (std::size_t k = 0; k < ids.size(); ++k)
    out.row(static_cast<Eigen::Index>(k)) = image.row(ids[k]);
  return out;
}

EncoderParams EncoderParams::create(const EncoderConfig& cfg, const AlignmentDataset& ds,
                                    Rng& rng) {
  if (ds.source.image_dim() != ds.target.image_dim())
    throw std::invalid_argument("encoder: image feature dims differ between KGs (" +
                                std::to_string(ds.source.image_dim()) + " vs " +
                                std::to_string(ds.target.image_dim()) + ")");
  EncoderParams p;
  p.config = cfg;
  const double table_limit = 1.0 / std::sqrt(static_cast<double>(cfg.d));
  p.source_table = std::make_shared<ad::Tensor>(
      "encoder.source_table",
      rng.uniform_matrix(ds.source.entity_count, cfg.d, -table_limit, table_limit));
  p.target_table = std::make_shared<ad::Tensor>(
      "encoder.target_table",
      rng.uniform_matrix(ds.target.entity_count, cfg.d, -table_limit, table_limit));
  for (int l = 0; l < cfg.gnn_layers; ++l) {
    p.layer_w.push_back(std::make_shared<ad::Tensor>("encoder.gnn" + std::to_string(l) + ".w",
                                                     nn::xavier_uniform(cfg.d, cfg.d, rng)));
    p.layer_b.push_back(std::make_shared<ad::Tensor>("encoder.gnn" + std::to_string(l) + ".b",
                                                     ad::Matrix::Zero(1, cfg.d)));
  }
  p.source_attr_w = std::make_shared<ad::Tensor>(
      "encoder.source_attr.w", nn::xavier_uniform(ds.source.attribute_count, cfg.d, rng));
  p.source_attr_b =
      std::make_shared<ad::Tensor>("encoder.source_attr.b", ad::Matrix::Zero(1, cfg.d));
  p.target_attr_w = std::make_shared<ad::Tensor>(
      "encoder.target_attr.w", nn::xavier_uniform(ds.target.attribute_count, cfg.d, rng));
  p.target_attr_b =
      std::make_shared<ad::Tensor>("encoder.target_attr.b", ad::Matrix::Zero(1, cfg.d));
  p.image_w = std::make_shared<ad::Tensor>(
      "encoder.image.w", nn::xavier_uniform(ds.source.image_dim(), cfg.d, rng));
  p.image_b = std::make_shared<ad::Tensor>("encoder.image.b", ad::Matrix::Zero(1, cfg.d));
  p.fusion_w = std::make_shared<ad::Tensor>("encoder.fusion.w",
                                            nn::xavier_uniform(3 * cfg.d, cfg.d_joint, rng));
  p.fusion_b = std::make_shared<ad::Tensor>("encoder.fusion.b", ad::Matrix::Zero(1, cfg.d_joint));
  return p;
}

std::vector<std::shared_ptr<ad::Tensor>> EncoderParams::all() const {
  std::vector<std::shared_ptr<ad::Tensor>> out = {source_table, target_table};
  for (std::size_t l = 0; l < layer_w.size(); ++l) {
    out.push_back(layer_w[l]);
    out.push_back(layer_b[l]);
  }
  out.insert(out.end(), {source_attr_w, source_attr_b, target_attr_w, target_attr_b, image_w,
                         image_b, fusion_w, fusion_b});
  return out;
}

ModalEmbeddings encode(const KgView& view, const std::vector<Eigen::Index>& ids,
                       const EncoderParams& params, Side side, const ForwardOptions& opt) {
  check_ids(ids, view.entity_count, "encode");
  if (opt.training && opt.dropout > 0.0 && opt.rng == nullptr)
    throw std::invalid_argument("encode: dropout requires an rng");

  const auto& table = side == Side::Source ? params.source_table : params.target_table;
  const auto& attr_w = side == Side::Source ? params.source_attr_w : params.target_attr_w;
  const auto& attr_b = side == Side::Source ? params.source_attr_b : params.target_attr_b;
  if (table->value.rows() != view.entity_count)
    throw std::invalid_argument("encode: entity table does not match the KG view");

  auto drop = [&](const ad::Var& x) {
    return opt.training && opt.dropout > 0.0 ? nn::dropout(x, opt.dropout, true, *opt.rng) : x;
  };

  // Entity table through gnn_layers rounds of neighbor mean aggregation,
  // each followed by an affine map and tanh.
  ad::Var h = ad::Var::leaf(*table);
  for (std::size_t l = 0; l < params.layer_w.size(); ++l) {
    h = ad::vtanh(nn::affine(ad::spmm(view.adj_norm, h), ad::Var::leaf(*params.layer_w[l]),
                             ad::Var::leaf(*params.layer_b[l])));
  }
  ad::Var graph = drop(ad::gather_rows(h, ids));

  ad::Var attr_full =
      ad::add_rowvec(ad::spmm(view.attr_multihot, ad::Var::leaf(*attr_w)), ad::Var::leaf(*attr_b));
  ad::Var attr = drop(ad::gather_rows(attr_full, ids));

  ad::Var image = drop(nn::affine(ad::Var::constant(view.image_rows(ids)),
                                  ad::Var::leaf(*params.image_w), ad::Var::leaf(*params.image_b)));

  ModalEmbeddings out;
  out.graph = graph;
  out.attr = attr;
  out.image = image;
  out.joint = fuse(graph, attr, image, params);
  return out;
}

ad::Var fuse(const ad::Var& graph, const ad::Var& attr, const ad::Var& image,
             const EncoderParams& params) {
  const int d = params.config.d;
  if (graph.cols() != d || attr.cols() != d || image.cols() != d)
    throw std::invalid_argument("fuse: sub-embedding width does not match configured d");
  if (graph.rows() != attr.rows() || graph.rows() != image.rows())
    throw std::invalid_argument("fuse: sub-embedding batch sizes differ");
  return nn::affine(ad::concat_cols({graph, attr, image}), ad::Var::leaf(*params.fusion_w),
                    ad::Var::leaf(*params.fusion_b));
}

ad::Var fuse(const PerModal<ad::Var>& subs, const EncoderParams& params) {
  return fuse(subs.graph, subs.attr, subs.image, params);
}

std::vector<Eigen::Index> all_entity_ids(const KgView& view) {
  std::vector<Eigen::Index> ids(static_cast<std::size_t>(view.entity_count));
  for (int i = 0; i < view.entity_count; ++i) ids[static_cast<std::size_t>(i)] = i;
  return ids;
}

}  // namespace geea
