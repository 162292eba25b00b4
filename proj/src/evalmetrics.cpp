#include "geea/evalmetrics.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace geea {

namespace {

constexpr std::uint64_t kSweepSalt = 0x5357454550ULL;  // "SWEEP"

Eigen::MatrixXd normalized_rows(const ad::Matrix& m) {
  Eigen::MatrixXd out = m;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double n = out.row(i).norm();
    if (n > 0.0) out.row(i) /= n;
  }
  return out;
}

DirectionReport rank_direction(const ad::Matrix& queries, const ad::Matrix& candidates,
                               const std::vector<int>& query_ids,
                               const std::vector<int>& true_ids,
                               const std::vector<int>& candidate_ids) {
  // queries/candidates are full embedding tables; similarity is cosine.
  Eigen::MatrixXd qn(static_cast<Eigen::Index>(query_ids.size()), queries.cols());
  for (std::size_t i = 0; i < query_ids.size(); ++i) qn.row(static_cast<Eigen::Index>(i)) = queries.row(query_ids[i]);
  Eigen::MatrixXd cn(static_cast<Eigen::Index>(candidate_ids.size()), candidates.cols());
  for (std::size_t i = 0; i < candidate_ids.size(); ++i) cn.row(static_cast<Eigen::Index>(i)) = candidates.row(candidate_ids[i]);
  qn = normalized_rows(qn);
  cn = normalized_rows(cn);
  const Eigen::MatrixXd sims = qn * cn.transpose();

  DirectionReport rep;
  rep.ranks.reserve(query_ids.size());
  double h1 = 0, h10 = 0, rr = 0;
  for (std::size_t i = 0; i < query_ids.size(); ++i) {
    const auto row = sims.row(static_cast<Eigen::Index>(i));
    std::size_t true_pos = candidate_ids.size();
    for (std::size_t c = 0; c < candidate_ids.size(); ++c)
      if (candidate_ids[c] == true_ids[i]) {
        true_pos = c;
        break;
      }
    if (true_pos == candidate_ids.size())
      throw std::invalid_argument("evaluate_alignment: true entity missing from candidate set");
    const double true_sim = row(static_cast<Eigen::Index>(true_pos));
    int rank = 1;
    for (std::size_t c = 0; c < candidate_ids.size(); ++c) {
      if (c == true_pos) continue;
      const double s = row(static_cast<Eigen::Index>(c));
      if (s > true_sim || (s == true_sim && candidate_ids[c] < true_ids[i])) ++rank;
    }
    rep.ranks.push_back(rank);
    if (rank <= 1) h1 += 1;
    if (rank <= 10) h10 += 1;
    rr += 1.0 / rank;
  }
  const double n = static_cast<double>(query_ids.size());
  rep.hits1 = h1 / n;
  rep.hits10 = h10 / n;
  rep.mrr = rr / n;
  return rep;
}

}  // namespace

AlignmentReport evaluate_alignment(const ad::Matrix& source_joint, const ad::Matrix& target_joint,
                                   const std::vector<std::pair<int, int>>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("evaluate_alignment: no test pairs");
  std::vector<int> src_ids, tgt_ids;
  for (const auto& [s, t] : pairs) {
    if (s < 0 || s >= source_joint.rows())
      throw std::invalid_argument("evaluate_alignment: pair references missing source embedding " +
                                  std::to_string(s));
    if (t < 0 || t >= target_joint.rows())
      throw std::invalid_argument("evaluate_alignment: pair references missing target embedding " +
                                  std::to_string(t));
    src_ids.push_back(s);
    tgt_ids.push_back(t);
  }

  AlignmentReport rep;
  rep.forward = rank_direction(source_joint, target_joint, src_ids, tgt_ids, tgt_ids);
  rep.backward = rank_direction(target_joint, source_joint, tgt_ids, src_ids, src_ids);
  rep.hits1 = 0.5 * (rep.forward.hits1 + rep.backward.hits1);
  rep.hits10 = 0.5 * (rep.forward.hits10 + rep.backward.hits10);
  rep.mrr = 0.5 * (rep.forward.mrr + rep.backward.mrr);
  return rep;
}

double frechet_distance(const Eigen::VectorXd& mu1, const ad::Matrix& c1,
                        const Eigen::VectorXd& mu2, const ad::Matrix& c2, bool* divergent) {
  if (mu1.size() != mu2.size() || c1.rows() != c1.cols() || c2.rows() != c2.cols() ||
      c1.rows() != mu1.size() || c2.rows() != mu2.size())
    throw std::invalid_argument("frechet_distance: inconsistent Gaussian dimensions");
  if (divergent) *divergent = false;

  const ad::Matrix s1 = 0.5 * (c1 + c1.transpose());
  const ad::Matrix s2 = 0.5 * (c2 + c2.transpose());

  // Tr((C1 C2)^{1/2}) from the eigenvalues of the (non-symmetric) product.
  const ad::Matrix prod = s1 * s2;
  Eigen::EigenSolver<ad::Matrix> solver(prod, false);
  double tr_sqrt = 0.0;
  bool bad = solver.info() != Eigen::Success;
  if (!bad) {
    const double scale = std::max(1.0, prod.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < prod.rows(); ++i) {
      const std::complex<double> ev = solver.eigenvalues()(i);
      if (std::abs(ev.imag()) > 1e-6 * scale || ev.real() < -1e-6 * scale) {
        bad = true;
        break;
      }
      tr_sqrt += std::sqrt(std::max(ev.real(), 0.0));
    }
  }
  if (bad) {
    if (divergent) *divergent = true;
    return std::numeric_limits<double>::infinity();
  }

  double fid = (mu1 - mu2).squaredNorm() + s1.trace() + s2.trace() - 2.0 * tr_sqrt;
  if (fid < 1e-6) fid = 0.0;
  return fid;
}

double frechet_distance_from_samples(const ad::Matrix& generated, const ad::Matrix& real,
                                     bool* divergent) {
  if (generated.rows() < 2 || real.rows() < 2)
    throw std::invalid_argument("frechet_distance_from_samples: need at least 2 samples per set");
  if (generated.cols() != real.cols())
    throw std::invalid_argument("frechet_distance_from_samples: dimension mismatch");
  auto fit = [](const ad::Matrix& x) {
    Eigen::VectorXd mu = x.colwise().mean();
    ad::Matrix centered = x.rowwise() - mu.transpose();
    ad::Matrix cov = centered.transpose() * centered / static_cast<double>(x.rows() - 1);
    return std::make_pair(std::move(mu), std::move(cov));
  };
  auto [mu1, c1] = fit(generated);
  auto [mu2, c2] = fit(real);
  return frechet_distance(mu1, c1, mu2, c2, divergent);
}

SynthesisReport evaluate_synthesis(const GeeaModel& model, const AlignmentDataset& ds,
                                   std::uint64_t sample_seed, int sample_count) {
  if (ds.dangling_pairs.empty())
    throw std::invalid_argument("evaluate_synthesis: dataset has no dangling pairs");
  if (!ds.target_full)
    throw std::invalid_argument(
        "evaluate_synthesis: dataset lacks the unpurged target view (target_full)");

  const KgView src_view = KgView::build(ds.source);
  const KgView tgt_full_view = KgView::build(*ds.target_full);

  std::vector<Eigen::Index> x_ids, y_ids;
  for (const auto& [s, t] : ds.dangling_pairs) {
    x_ids.push_back(s);
    y_ids.push_back(t);
  }

  // Conditional x->y with eps = 0: deterministic reconstructions.
  ModalEmbeddings x_emb = encode(src_view, x_ids, model.encoder, Side::Source);
  PerModal<VaeOutput> outs;
  for (Modal m : kModals)
    outs[m] = vae_forward(x_emb.subs()[m], model.mvae.cells[m], nullptr);

  SynthesisReport rep;
  double pre_sum = 0.0;
  for (Modal m : kModals) {
    ad::Var pred = decode_modal(outs[m].reconstruction, m, model.decoders.get(m, Side::Target),
                                tgt_full_view);
    ad::Matrix labels = m == Modal::Graph  ? tgt_full_view.graph_label_rows(y_ids)
                        : m == Modal::Attr ? tgt_full_view.attr_label_rows(y_ids)
                                           : tgt_full_view.image_rows(y_ids);
    pre_sum += prior_reconstruction_loss(pred, labels, m).scalar_value();
  }
  rep.pre = 100.0 * pre_sum / 3.0;

  PerModal<ad::Var> recon{outs.graph.reconstruction, outs.attr.reconstruction,
                          outs.image.reconstruction};
  ModalEmbeddings y_emb = encode(tgt_full_view, y_ids, model.encoder, Side::Target);
  rep.re = 100.0 * post_reconstruction_loss(recon, model.encoder, y_emb.joint).scalar_value();

  // Unconditional samples against the real target embedding population.
  const int count = sample_count > 0 ? sample_count : tgt_full_view.entity_count;
  Rng sample_rng(sample_seed);
  PerModal<ad::Var> sampled = sample_unconditional(count, model.mvae, sample_rng);
  const ad::Matrix generated = fuse(sampled, model.encoder).value();
  const ad::Matrix real = joint_embedding_table(model, tgt_full_view, Side::Target);
  rep.fid = frechet_distance_from_samples(generated, real, &rep.divergent);
  return rep;
}

std::vector<RatioPoint> sweep_training_ratio(const AlignmentDataset& ds,
                                             const std::vector<double>& ratios,
                                             const TrainConfig& cfg) {
  for (double r : ratios)
    if (!(r > 0.0 && r <= 1.0))
      throw std::invalid_argument("sweep_training_ratio: ratios must be in (0, 1]");

  std::vector<RatioPoint> points;
  for (double ratio : ratios) {
    AlignmentDataset sub = ds;
    if (ratio < 1.0) {
      auto seeds = ds.seed_alignments;
      Rng rng = Rng(cfg.seed).fork(kSweepSalt);
      rng.shuffle(seeds);
      const auto keep = static_cast<std::size_t>(
          std::ceil(ratio * static_cast<double>(seeds.size()) - 1e-9));
      seeds.resize(std::max<std::size_t>(keep, 1));
      sub.seed_alignments = std::move(seeds);
    }
    TrainState state = fit(sub, cfg);
    const KgView src_view = KgView::build(sub.source);
    const KgView tgt_view = KgView::build(sub.target);
    const ad::Matrix src_joint = joint_embedding_table(state.model, src_view, Side::Source);
    const ad::Matrix tgt_joint = joint_embedding_table(state.model, tgt_view, Side::Target);
    points.push_back({ratio, evaluate_alignment(src_joint, tgt_joint, sub.test_alignments)});
  }
  return points;
}

std::string alignment_report_json(const AlignmentReport& r) {
  nlohmann::ordered_json j;
  j["hits1"] = r.hits1;
  j["hits10"] = r.hits10;
  j["mrr"] = r.mrr;
  j["forward"] = {{"hits1", r.forward.hits1}, {"hits10", r.forward.hits10}, {"mrr", r.forward.mrr}};
  j["backward"] = {
      {"hits1", r.backward.hits1}, {"hits10", r.backward.hits10}, {"mrr", r.backward.mrr}};
  return j.dump(2);
}

std::string alignment_report_table(const AlignmentReport& r) {
  std::ostringstream os;
  os << "direction   hits@1   hits@10      mrr\n";
  auto line = [&os](const char* name, const DirectionReport& d) {
    os << name;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "  %7.4f   %7.4f  %7.4f\n", d.hits1, d.hits10, d.mrr);
    os << buf;
  };
  line("src->tgt ", r.forward);
  line("tgt->src ", r.backward);
  char buf[96];
  std::snprintf(buf, sizeof(buf), "average    %7.4f   %7.4f  %7.4f\n", r.hits1, r.hits10, r.mrr);
  os << buf;
  return os.str();
}

std::string synthesis_report_json(const SynthesisReport& r) {
  nlohmann::ordered_json j;
  j["pre"] = r.pre;
  j["re"] = r.re;
  if (std::isfinite(r.fid))
    j["fid"] = r.fid;
  else
    j["fid"] = "inf";
  j["divergent"] = r.divergent;
  return j.dump(2);
}

std::string synthesis_report_table(const SynthesisReport& r) {
  std::ostringstream os;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "PRE(x1e-2)  RE(x1e-2)        FID\n%10.4f %10.4f %10.4f%s\n",
                r.pre, r.re, r.fid, r.divergent ? "  (divergent)" : "");
  os << buf;
  return os.str();
}

}  // namespace geea
