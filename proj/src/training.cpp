#include "geea/training.hpp"

#include "geea/evalmetrics.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <stdexcept>

namespace geea {

namespace {

// Salt for the per-epoch stream. Every epoch re-seeds from the config seed
// so a zero-learning-rate run repeats its losses exactly.
constexpr std::uint64_t kEpochSalt = 0x45504f4348ULL;  // "EPOCH"
constexpr std::uint64_t kInitSalt = 0x494e4954ULL;     // "INIT"

std::vector<std::vector<Eigen::Index>> make_batches(std::vector<Eigen::Index> ids,
                                                    std::size_t batch_size, Rng& rng) {
  rng.shuffle(ids);
  std::vector<std::vector<Eigen::Index>> batches;
  for (std::size_t off = 0; off < ids.size(); off += batch_size) {
    const std::size_t len = std::min(batch_size, ids.size() - off);
    batches.emplace_back(ids.begin() + static_cast<long>(off),
                         ids.begin() + static_cast<long>(off + len));
  }
  return batches;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (batch_size < 2) throw std::invalid_argument("TrainConfig: batch_size must be >= 2");
  if (unsup_batch_size < 2)
    throw std::invalid_argument("TrainConfig: unsup_batch_size must be >= 2");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
  if (optimizer != "adam") throw std::invalid_argument("TrainConfig: unsupported optimizer '" +
                                                       optimizer + "'");
  if (dropout < 0.0 || dropout >= 1.0)
    throw std::invalid_argument("TrainConfig: dropout must be in [0, 1)");
  if (!(temperature > 0.0)) throw std::invalid_argument("TrainConfig: temperature must be > 0");
  if (patience < 0) throw std::invalid_argument("TrainConfig: patience must be >= 0");
  if (eval_every < 1) throw std::invalid_argument("TrainConfig: eval_every must be >= 1");
  if (dims.d < 1 || dims.d_joint < 1 || dims.d_z < 1 || dims.gnn_layers < 0)
    throw std::invalid_argument("TrainConfig: invalid model dims");
  weights.validate();
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config: " + path.string());
  nlohmann::json j;
  in >> j;

  TrainConfig cfg;
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.unsup_batch_size = j.value("unsup_batch_size", cfg.unsup_batch_size);
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.optimizer = j.value("optimizer", cfg.optimizer);
  cfg.dropout = j.value("dropout", cfg.dropout);
  cfg.temperature = j.value("temperature", cfg.temperature);
  cfg.grad_clip = j.value("grad_clip", cfg.grad_clip);
  cfg.patience = j.value("patience", cfg.patience);
  cfg.eval_every = j.value("eval_every", cfg.eval_every);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("dims")) {
    const auto& d = j.at("dims");
    cfg.dims.d = d.value("d", cfg.dims.d);
    cfg.dims.d_joint = d.value("d_joint", cfg.dims.d_joint);
    cfg.dims.d_z = d.value("d_z", cfg.dims.d_z);
    cfg.dims.gnn_layers = d.value("gnn_layers", cfg.dims.gnn_layers);
    if (d.contains("vae_hidden")) cfg.dims.vae_hidden = d.at("vae_hidden").get<std::vector<int>>();
    if (d.contains("decoder_hidden"))
      cfg.dims.decoder_hidden = d.at("decoder_hidden").get<std::vector<int>>();
  }
  if (j.contains("loss_weights")) {
    const auto& w = j.at("loss_weights");
    if (w.contains("flows")) {
      auto flows = w.at("flows").get<std::vector<double>>();
      if (flows.size() != 4)
        throw std::runtime_error(path.string() + ": loss_weights.flows must have 4 entries");
      std::copy(flows.begin(), flows.end(), cfg.weights.flow.begin());
    }
    cfg.weights.distribution = w.value("distribution", cfg.weights.distribution);
    cfg.weights.prior = w.value("prior", cfg.weights.prior);
    cfg.weights.post = w.value("post", cfg.weights.post);
    cfg.weights.prediction = w.value("prediction", cfg.weights.prediction);
  }
  if (j.contains("terms")) {
    const auto& t = j.at("terms");
    cfg.terms.prediction = t.value("prediction", cfg.terms.prediction);
    cfg.terms.distribution = t.value("distribution", cfg.terms.distribution);
    cfg.terms.prior = t.value("prior", cfg.terms.prior);
    cfg.terms.post = t.value("post", cfg.terms.post);
  }
  cfg.validate();
  return cfg;
}

void save_train_config(const TrainConfig& cfg, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["unsup_batch_size"] = cfg.unsup_batch_size;
  j["learning_rate"] = cfg.learning_rate;
  j["optimizer"] = cfg.optimizer;
  j["dropout"] = cfg.dropout;
  j["temperature"] = cfg.temperature;
  j["grad_clip"] = cfg.grad_clip;
  j["patience"] = cfg.patience;
  j["eval_every"] = cfg.eval_every;
  j["seed"] = cfg.seed;
  j["dims"] = {{"d", cfg.dims.d},
               {"d_joint", cfg.dims.d_joint},
               {"d_z", cfg.dims.d_z},
               {"gnn_layers", cfg.dims.gnn_layers},
               {"vae_hidden", cfg.dims.vae_hidden},
               {"decoder_hidden", cfg.dims.decoder_hidden}};
  j["loss_weights"] = {{"flows", cfg.weights.flow},
                       {"distribution", cfg.weights.distribution},
                       {"prior", cfg.weights.prior},
                       {"post", cfg.weights.post},
                       {"prediction", cfg.weights.prediction}};
  j["terms"] = {{"prediction", cfg.terms.prediction},
                {"distribution", cfg.terms.distribution},
                {"prior", cfg.terms.prior},
                {"post", cfg.terms.post}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config: " + path.string());
  out << j.dump(2) << '\n';
}

GeeaModel GeeaModel::create(const TrainConfig& cfg, const AlignmentDataset& ds, Rng& rng) {
  GeeaModel m;
  EncoderConfig ec{cfg.dims.d, cfg.dims.d_joint, cfg.dims.gnn_layers};
  m.encoder = EncoderParams::create(ec, ds, rng);
  MvaeConfig mc{cfg.dims.d, cfg.dims.d_z, cfg.dims.vae_hidden};
  m.mvae = MvaeParams::create(mc, rng);
  DecoderConfig dc{cfg.dims.decoder_hidden};
  m.decoders = DecoderParams::create(dc, cfg.dims.d, ds, rng);
  return m;
}

std::vector<std::shared_ptr<ad::Tensor>> GeeaModel::all_tensors() const {
  auto out = encoder.all();
  auto mv = mvae.all();
  out.insert(out.end(), mv.begin(), mv.end());
  auto dc = decoders.all();
  out.insert(out.end(), dc.begin(), dc.end());
  return out;
}

ad::Matrix joint_embedding_table(const GeeaModel& model, const KgView& view, Side side) {
  return encode(view, all_entity_ids(view), model.encoder, side).joint.value();
}

void TrainState::snapshot_best(double mrr) {
  best_valid_mrr = mrr;
  best_epoch = epoch;
  best_values.clear();
  for (const auto& t : model.all_tensors()) best_values.push_back(t->value);
}

void TrainState::restore_best() {
  if (best_values.empty()) return;
  auto tensors = model.all_tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i) tensors[i]->value = best_values[i];
}

TrainState init_train_state(const TrainConfig& cfg, const AlignmentDataset& ds) {
  cfg.validate();
  Rng init_rng = Rng(cfg.seed).fork(kInitSalt);
  TrainState state;
  state.model = GeeaModel::create(cfg, ds, init_rng);
  state.optimizer = std::make_unique<nn::Adam>(state.model.all_tensors(), cfg.learning_rate,
                                               cfg.grad_clip);
  return state;
}

EpochMetrics train_epoch(TrainState& state, const AlignmentDataset& ds, const KgView& src_view,
                         const KgView& tgt_view, const TrainConfig& cfg, Rng& rng) {
  const GeeaModel& model = state.model;
  ForwardOptions train_opt{true, cfg.dropout, &rng};

  // Supervised batches partition S; unsupervised batches partition each
  // entity set. The shorter streams cycle.
  auto sup_pairs = ds.seed_alignments;
  rng.shuffle(sup_pairs);
  std::vector<std::vector<std::pair<int, int>>> sup_batches;
  for (std::size_t off = 0; off < sup_pairs.size(); off += static_cast<std::size_t>(cfg.batch_size)) {
    const std::size_t len =
        std::min(static_cast<std::size_t>(cfg.batch_size), sup_pairs.size() - off);
    sup_batches.emplace_back(sup_pairs.begin() + static_cast<long>(off),
                             sup_pairs.begin() + static_cast<long>(off + len));
  }
  auto x_batches = make_batches(all_entity_ids(src_view),
                                static_cast<std::size_t>(cfg.unsup_batch_size), rng);
  auto y_batches = make_batches(all_entity_ids(tgt_view),
                                static_cast<std::size_t>(cfg.unsup_batch_size), rng);

  const std::size_t n_steps =
      std::max({sup_batches.size(), x_batches.size(), y_batches.size(), std::size_t{1}});

  EpochMetrics metrics;
  for (std::size_t s = 0; s < n_steps; ++s) {
    LossBreakdown parts;
    std::vector<ad::Var> weighted_terms;
    const bool need_recon = cfg.terms.prior || cfg.terms.post;

    auto add_flow_losses = [&](Flow flow, const PerModal<VaeOutput>& outs,
                               const KgView& view, const std::vector<Eigen::Index>& target_ids,
                               const ad::Var& true_joint) {
      const Side side = flow_target_side(flow);
      if (cfg.terms.prior) {
        for (Modal m : kModals) {
          ad::Var pred = decode_modal(outs[m].reconstruction, m, model.decoders.get(m, side),
                                      view, train_opt);
          ad::Matrix labels = m == Modal::Graph   ? view.graph_label_rows(target_ids)
                              : m == Modal::Attr  ? view.attr_label_rows(target_ids)
                                                  : view.image_rows(target_ids);
          ad::Var l = prior_reconstruction_loss(pred, labels, m);
          parts.prior[std::string(flow_name(flow)) + "." + modal_name(m)] = l.scalar_value();
          weighted_terms.push_back(
              ad::scale(l, cfg.weights.flow_weight(flow) * cfg.weights.prior));
        }
      }
      if (cfg.terms.post) {
        PerModal<ad::Var> recon{outs.graph.reconstruction, outs.attr.reconstruction,
                                outs.image.reconstruction};
        ad::Var l = post_reconstruction_loss(recon, model.encoder, true_joint);
        parts.post[flow_name(flow)] = l.scalar_value();
        weighted_terms.push_back(ad::scale(l, cfg.weights.flow_weight(flow) * cfg.weights.post));
      }
    };

    // Supervised part: prediction match plus the two mutual flows.
    if (!sup_batches.empty()) {
      const auto& batch = sup_batches[s % sup_batches.size()];
      std::vector<Eigen::Index> x_ids, y_ids;
      for (const auto& [sx, ty] : batch) {
        x_ids.push_back(sx);
        y_ids.push_back(ty);
      }
      ModalEmbeddings x_emb = encode(src_view, x_ids, model.encoder, Side::Source, train_opt);
      ModalEmbeddings y_emb = encode(tgt_view, y_ids, model.encoder, Side::Target, train_opt);

      if (cfg.terms.prediction) {
        ad::Var l = prediction_match_loss(x_emb.joint, y_emb.joint, cfg.temperature,
                                          batch.size() >= 2);
        parts.prediction_match = l.scalar_value();
        weighted_terms.push_back(ad::scale(l, cfg.weights.prediction));
      }
      if (need_recon) {
        FlowBatch fb{x_emb.subs(), y_emb.subs(), true};
        auto outs = run_flows(fb, {Flow::XY, Flow::YX}, model.mvae, &rng, train_opt);
        add_flow_losses(Flow::XY, outs.at(Flow::XY), tgt_view, y_ids, y_emb.joint);
        add_flow_losses(Flow::YX, outs.at(Flow::YX), src_view, x_ids, x_emb.joint);
      }
    }

    // Unsupervised part: self flows with distribution matching.
    if (cfg.terms.distribution || need_recon) {
      const auto& x_ids = x_batches[s % x_batches.size()];
      const auto& y_ids = y_batches[s % y_batches.size()];
      ModalEmbeddings x_emb = encode(src_view, x_ids, model.encoder, Side::Source, train_opt);
      ModalEmbeddings y_emb = encode(tgt_view, y_ids, model.encoder, Side::Target, train_opt);
      FlowBatch fb{x_emb.subs(), y_emb.subs(), false};
      auto outs = run_flows(fb, {Flow::XX, Flow::YY}, model.mvae, &rng, train_opt);

      if (cfg.terms.distribution) {
        for (Modal m : kModals) {
          ad::Var l = distribution_match_modal(outs.at(Flow::XX)[m], outs.at(Flow::YY)[m]);
          parts.distribution_match[modal_name(m)] = l.scalar_value();
          weighted_terms.push_back(ad::scale(l, cfg.weights.distribution));
        }
      }
      if (need_recon) {
        add_flow_losses(Flow::XX, outs.at(Flow::XX), src_view, x_ids, x_emb.joint);
        add_flow_losses(Flow::YY, outs.at(Flow::YY), tgt_view, y_ids, y_emb.joint);
      }
    }

    if (weighted_terms.empty())
      throw std::runtime_error("train_epoch: no loss terms enabled");
    ad::Var total = weighted_terms.front();
    for (std::size_t i = 1; i < weighted_terms.size(); ++i)
      total = ad::add(total, weighted_terms[i]);
    parts.total = total.scalar_value();
    if (!std::isfinite(parts.total)) {
      throw std::runtime_error("train_epoch: non-finite loss at step " +
                               std::to_string(state.global_step) +
                               " (optimizer divergence); log line: " +
                               loss_log_line(state.global_step, parts));
    }

    state.optimizer->zero_grad();
    ad::backward(total);
    state.optimizer->step();

    metrics.steps.push_back({state.global_step, parts});
    metrics.mean_total += parts.total;
    ++state.global_step;
  }
  metrics.mean_total /= static_cast<double>(metrics.steps.size());
  ++state.epoch;
  return metrics;
}

TrainState fit(const AlignmentDataset& ds, const TrainConfig& cfg, const FitCallbacks& cb) {
  cfg.validate();
  TrainState state = init_train_state(cfg, ds);
  const KgView src_view = KgView::build(ds.source);
  const KgView tgt_view = KgView::build(ds.target);

  if (ds.valid_alignments.empty())
    std::cerr << "fit: no validation alignments; early stopping disabled, running all "
              << cfg.epochs << " epochs\n";

  int stale_evals = 0;
  for (int e = 0; e < cfg.epochs; ++e) {
    Rng epoch_rng = Rng(cfg.seed).fork(kEpochSalt);
    EpochMetrics metrics = train_epoch(state, ds, src_view, tgt_view, cfg, epoch_rng);
    if (cb.on_step)
      for (const auto& rec : metrics.steps) cb.on_step(rec);

    std::optional<double> valid_mrr;
    if (!ds.valid_alignments.empty() && (e + 1) % cfg.eval_every == 0) {
      const ad::Matrix src_joint = joint_embedding_table(state.model, src_view, Side::Source);
      const ad::Matrix tgt_joint = joint_embedding_table(state.model, tgt_view, Side::Target);
      valid_mrr = evaluate_alignment(src_joint, tgt_joint, ds.valid_alignments).mrr;
      if (*valid_mrr > state.best_valid_mrr) {
        state.snapshot_best(*valid_mrr);
        stale_evals = 0;
      } else {
        ++stale_evals;
      }
    }
    if (cb.on_epoch) cb.on_epoch(state.epoch, valid_mrr, metrics);
    if (!ds.valid_alignments.empty() && stale_evals > cfg.patience) break;
  }
  state.restore_best();
  return state;
}

}  // namespace geea
