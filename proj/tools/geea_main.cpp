// geea: entity alignment and entity synthesis over multi-modal KG pairs.
#include "geea/checkpoint.hpp"
#include "geea/evalmetrics.hpp"
#include "geea/kgdata.hpp"
#include "geea/theory.hpp"
#include "geea/training.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace geea;

namespace {

struct LoadedModel {
  TrainConfig config;
  AlignmentDataset dataset;
  GeeaModel model;
};

AlignmentDataset load_with_optional_split(const std::string& data_dir, double dangling_fraction,
                                          std::uint64_t seed) {
  AlignmentDataset ds = load_dataset(data_dir);
  if (dangling_fraction > 0.0) ds = build_synthesis_split(ds, dangling_fraction, seed);
  return ds;
}

LoadedModel load_model(const std::string& ckpt_dir, const std::string& data_dir,
                       double dangling_fraction, std::uint64_t seed) {
  LoadedModel lm{load_train_config(fs::path(ckpt_dir) / "config.json"),
                 load_with_optional_split(data_dir, dangling_fraction, seed),
                 GeeaModel{}};
  Rng rng(lm.config.seed);
  lm.model = GeeaModel::create(lm.config, lm.dataset, rng);
  load_checkpoint(fs::path(ckpt_dir) / "params.bin", lm.model.all_tensors());
  return lm;
}

std::string entity_name(const KnowledgeGraph& kg, int id) {
  return kg.entity_names.empty() ? "e" + std::to_string(id)
                                 : kg.entity_names[static_cast<std::size_t>(id)];
}

nlohmann::ordered_json record_to_json(const SynthesizedRecord& rec, const KnowledgeGraph& kg) {
  nlohmann::ordered_json j;
  j["neighbors"] = nlohmann::json::array();
  for (int id : rec.neighbors) j["neighbors"].push_back(entity_name(kg, id));
  j["attributes"] = nlohmann::json::array();
  for (int id : rec.attributes) j["attributes"].push_back("a" + std::to_string(id));
  j["nearest_image_entity"] =
      rec.nearest_image >= 0 ? entity_name(kg, rec.nearest_image) : "";
  nlohmann::ordered_json scores;
  scores["neighbors"] = rec.neighbor_scores;
  scores["attributes"] = rec.attribute_scores;
  scores["image_distance"] = rec.image_distance;
  j["scores"] = scores;
  return j;
}

int run_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_dir, double dangling_fraction,
              std::optional<std::uint64_t> seed) {
  TrainConfig cfg = load_train_config(config_path);
  if (seed) cfg.seed = *seed;
  AlignmentDataset ds = load_with_optional_split(data_dir, dangling_fraction, cfg.seed);

  fs::create_directories(out_dir);
  std::ofstream log(fs::path(out_dir) / "train_log.jsonl");
  if (!log) throw std::runtime_error("cannot write train log in " + out_dir);

  FitCallbacks cb;
  cb.on_step = [&](const StepRecord& rec) { log << loss_log_line(rec.step, rec.losses) << '\n'; };
  cb.on_epoch = [&](long epoch, std::optional<double> mrr, const EpochMetrics& m) {
    std::cerr << "epoch " << epoch << "  loss " << m.mean_total;
    if (mrr) std::cerr << "  valid_mrr " << *mrr;
    std::cerr << '\n';
  };

  TrainState state = fit(ds, cfg, cb);
  save_checkpoint(fs::path(out_dir) / "params.bin", state.model.all_tensors());
  save_train_config(cfg, fs::path(out_dir) / "config.json");
  std::cerr << "checkpoint written to " << out_dir << " (best epoch " << state.best_epoch
            << ", valid MRR " << state.best_valid_mrr << ")\n";
  return 0;
}

int run_eval_align(const std::string& ckpt_dir, const std::string& data_dir) {
  LoadedModel lm = load_model(ckpt_dir, data_dir, 0.0, 0);
  const KgView src = KgView::build(lm.dataset.source);
  const KgView tgt = KgView::build(lm.dataset.target);
  AlignmentReport rep =
      evaluate_alignment(joint_embedding_table(lm.model, src, Side::Source),
                         joint_embedding_table(lm.model, tgt, Side::Target),
                         lm.dataset.test_alignments);
  std::cout << alignment_report_table(rep);
  std::cout << alignment_report_json(rep) << '\n';
  return 0;
}

int run_eval_synth(const std::string& ckpt_dir, const std::string& data_dir,
                   double dangling_fraction, std::uint64_t seed) {
  LoadedModel lm = load_model(ckpt_dir, data_dir, dangling_fraction, seed);
  if (lm.dataset.dangling_pairs.empty())
    throw std::runtime_error(
        "eval-synth: no dangling pairs; pass --dangling-fraction to split the test set");
  SynthesisReport rep = evaluate_synthesis(lm.model, lm.dataset, seed);
  std::cout << synthesis_report_table(rep);
  std::cout << synthesis_report_json(rep) << '\n';
  return 0;
}

int run_synthesize(const std::string& ckpt_dir, const std::string& data_dir,
                   const std::string& mode, int count, double dangling_fraction,
                   std::uint64_t seed, const std::string& out_file, int top_k) {
  LoadedModel lm = load_model(ckpt_dir, data_dir, dangling_fraction, seed);
  const AlignmentDataset& ds = lm.dataset;
  const KnowledgeGraph& target_kg = ds.target_full ? *ds.target_full : ds.target;
  const KgView tgt_view = KgView::build(target_kg);

  PerModal<ad::Var> subs;
  if (mode == "unconditional") {
    Rng rng(seed);
    subs = sample_unconditional(count, lm.model.mvae, rng);
  } else if (mode == "conditional") {
    // Dangling sources when a split is present, else test-pair sources.
    std::vector<Eigen::Index> ids;
    const auto& pool = ds.dangling_pairs.empty() ? ds.test_alignments : ds.dangling_pairs;
    for (const auto& [s, t] : pool) {
      ids.push_back(s);
      if (static_cast<int>(ids.size()) >= count) break;
    }
    if (ids.empty()) throw std::runtime_error("synthesize: no source entities to condition on");
    const KgView src_view = KgView::build(ds.source);
    ModalEmbeddings emb = encode(src_view, ids, lm.model.encoder, Side::Source);
    for (Modal m : kModals)
      subs[m] = vae_forward(emb.subs()[m], lm.model.mvae.cells[m], nullptr).reconstruction;
  } else {
    throw CLI::ValidationError("--mode must be 'conditional' or 'unconditional'");
  }

  ad::Matrix graph_probs, attr_probs, image_pred;
  graph_probs = decode_modal(subs.graph, Modal::Graph,
                             lm.model.decoders.get(Modal::Graph, Side::Target), tgt_view)
                    .value();
  attr_probs = decode_modal(subs.attr, Modal::Attr,
                            lm.model.decoders.get(Modal::Attr, Side::Target), tgt_view)
                   .value();
  image_pred = decode_modal(subs.image, Modal::Image,
                            lm.model.decoders.get(Modal::Image, Side::Target), tgt_view)
                   .value();

  DiscretizePolicy policy;
  policy.top_k = top_k;
  auto records = discretize_prediction(graph_probs, attr_probs, image_pred, target_kg, policy);

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_file.empty()) {
    file.open(out_file);
    if (!file) throw std::runtime_error("cannot write " + out_file);
    out = &file;
  }
  for (const auto& rec : records) *out << record_to_json(rec, target_kg).dump() << '\n';
  return 0;
}

int run_sweep(const std::string& config_path, const std::string& data_dir,
              const std::vector<double>& ratios, const std::string& out_file,
              std::optional<std::uint64_t> seed) {
  TrainConfig cfg = load_train_config(config_path);
  if (seed) cfg.seed = *seed;
  AlignmentDataset ds = load_dataset(data_dir);
  auto points = sweep_training_ratio(ds, ratios, cfg);

  std::ostringstream csv;
  csv << "ratio,metric,value\n";
  std::cout << "ratio    hits@1   hits@10      mrr\n";
  for (const auto& p : points) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%5.2f   %7.4f   %7.4f  %7.4f\n", p.ratio, p.report.hits1,
                  p.report.hits10, p.report.mrr);
    std::cout << buf;
    csv << p.ratio << ",hits1," << p.report.hits1 << '\n';
    csv << p.ratio << ",hits10," << p.report.hits10 << '\n';
    csv << p.ratio << ",mrr," << p.report.mrr << '\n';
  }
  if (!out_file.empty()) {
    std::ofstream f(out_file);
    if (!f) throw std::runtime_error("cannot write " + out_file);
    f << csv.str();
  } else {
    std::cout << csv.str();
  }
  return 0;
}

int run_verify_theory(int trials, std::uint64_t seed) {
  Rng rng(seed);
  bool all_ok = true;

  // Closed-form KL against Monte-Carlo on 20 random diagonal Gaussians.
  double worst_rel = 0.0;
  for (int t = 0; t < 20; ++t) {
    theory::GaussianStats p, q;
    const int dims = 1 + static_cast<int>(rng.uniform_int(3));
    p.mu = rng.normal_matrix(dims, 1).col(0);
    q.mu = rng.normal_matrix(dims, 1).col(0);
    p.sigma = rng.uniform_matrix(dims, 1, 0.6, 1.8).col(0);
    q.sigma = rng.uniform_matrix(dims, 1, 0.6, 1.8).col(0);
    const double exact = theory::gaussian_kl(p, q);
    const double mc = theory::monte_carlo_gaussian_kl(p, q, 100000, rng);
    worst_rel = std::max(worst_rel, std::abs(exact - mc) / std::max(std::abs(exact), 0.05));
  }
  const bool mc_ok = worst_rel < 0.02;
  all_ok = all_ok && mc_ok;
  std::cout << "gaussian KL vs Monte-Carlo   " << (mc_ok ? "PASS" : "FAIL")
            << "  worst relative error " << worst_rel << "\n";

  auto p2 = theory::verify_proposition2(trials, rng);
  std::cout << theory::proposition2_report_table(p2);
  all_ok = all_ok && p2.passed();

  auto elbo = theory::verify_elbo_decomposition(std::max(1, trials / 10), rng);
  std::cout << theory::elbo_report_table(elbo);
  all_ok = all_ok && elbo.passed();

  std::cout << (all_ok ? "all theory checks passed" : "theory checks FAILED") << "\n";
  return all_ok ? 0 : 1;
}

int run_stats(const std::string& data_dir) {
  AlignmentDataset ds = load_dataset(data_dir);
  DatasetStatistics st = compute_statistics(ds);
  auto kg_json = [](const KgStatistics& k) {
    return nlohmann::ordered_json{{"entities", k.entities},
                                  {"relations", k.relations},
                                  {"attributes", k.attributes},
                                  {"images", k.images}};
  };
  nlohmann::ordered_json j;
  j["source"] = kg_json(st.source);
  j["target"] = kg_json(st.target);
  j["test_alignments"] = st.test_alignments;
  j["known_alignments"] = st.known_alignments;
  j["unknown_alignments"] = st.unknown_alignments;
  j["seed_alignments"] = st.seed_alignments;
  j["valid_alignments"] = st.valid_alignments;

  std::cout << "side     entities  relations  attributes  images\n";
  char buf[128];
  std::snprintf(buf, sizeof(buf), "source   %8d  %9d  %10d  %6d\n", st.source.entities,
                st.source.relations, st.source.attributes, st.source.images);
  std::cout << buf;
  std::snprintf(buf, sizeof(buf), "target   %8d  %9d  %10d  %6d\n", st.target.entities,
                st.target.relations, st.target.attributes, st.target.images);
  std::cout << buf;
  std::cout << "alignments: seed " << st.seed_alignments << ", valid " << st.valid_alignments
            << ", test " << st.test_alignments << " (known " << st.known_alignments
            << ", unknown " << st.unknown_alignments << ")\n";
  std::cout << j.dump(2) << '\n';
  return 0;
}

int run_prepare(const std::string& data_dir, const std::string& out_dir, bool synthetic,
                const SyntheticConfig& synth_cfg, double dangling_fraction,
                std::uint64_t seed) {
  AlignmentDataset ds;
  if (synthetic) {
    ds = generate_synthetic_pair(synth_cfg, seed);
  } else {
    if (data_dir.empty())
      throw CLI::ValidationError("prepare needs --data unless --synthetic is given");
    ds = load_dataset(data_dir);
  }
  if (dangling_fraction > 0.0) ds = build_synthesis_split(ds, dangling_fraction, seed);
  save_dataset(ds, out_dir);
  DatasetStatistics st = compute_statistics(ds);
  std::cerr << "wrote dataset to " << out_dir << " (" << st.source.entities << "/"
            << st.target.entities << " entities, " << st.seed_alignments << " seeds, "
            << st.known_alignments << " test, " << st.unknown_alignments << " dangling)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"generative entity alignment and entity synthesis"};
  app.require_subcommand(1);

  std::string config_path, data_dir, out_path, ckpt_dir, mode = "unconditional";
  std::uint64_t seed = 42;
  bool seed_given = false;
  double dangling_fraction = 0.0;
  double synth_eval_fraction = 0.3;
  int count = 5, trials = 1000, top_k = 0;
  std::vector<double> ratios;
  bool synthetic = false;
  SyntheticConfig synth_cfg;

  auto add_seed = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "random seed")->each([&](const std::string&) {
      seed_given = true;
    });
  };

  CLI::App* prepare = app.add_subcommand("prepare", "generate or re-split a dataset directory");
  prepare->add_option("--data", data_dir, "input dataset directory");
  prepare->add_option("--out", out_path, "output dataset directory")->required();
  prepare->add_flag("--synthetic", synthetic, "generate a synthetic KG pair");
  prepare->add_option("--entities", synth_cfg.entities, "synthetic: entities per KG");
  prepare->add_option("--relations", synth_cfg.relations, "synthetic: relation vocabulary");
  prepare->add_option("--attributes", synth_cfg.attributes, "synthetic: attribute vocabulary");
  prepare->add_option("--d-img", synth_cfg.d_img, "synthetic: image feature width");
  prepare->add_option("--noise", synth_cfg.noise_level, "synthetic: structure/image noise level");
  prepare->add_option("--seed-fraction", synth_cfg.seed_fraction,
                      "synthetic: share of pairs used as seed alignments");
  prepare->add_option("--dangling-fraction", dangling_fraction,
                      "move this share of test pairs to the dangling split");
  add_seed(prepare);

  CLI::App* train = app.add_subcommand("train", "fit a model and write a checkpoint");
  train->add_option("--config", config_path, "train config JSON")->required();
  train->add_option("--data", data_dir, "dataset directory")->required();
  train->add_option("--out", out_path, "checkpoint output directory")->required();
  train->add_option("--dangling-fraction", dangling_fraction,
                    "train on the purged view of a synthesis split");
  add_seed(train);

  CLI::App* eval_align = app.add_subcommand("eval-align", "entity alignment metrics");
  eval_align->add_option("--ckpt", ckpt_dir, "checkpoint directory")->required();
  eval_align->add_option("--data", data_dir, "dataset directory")->required();

  CLI::App* eval_synth = app.add_subcommand("eval-synth", "entity synthesis metrics");
  eval_synth->add_option("--ckpt", ckpt_dir, "checkpoint directory")->required();
  eval_synth->add_option("--data", data_dir, "dataset directory (unpurged)")->required();
  eval_synth->add_option("--dangling-fraction", synth_eval_fraction,
                         "rebuild the synthesis split at this fraction");
  add_seed(eval_synth);

  CLI::App* synth = app.add_subcommand("synthesize", "emit synthesized entity records");
  synth->add_option("--ckpt", ckpt_dir, "checkpoint directory")->required();
  synth->add_option("--data", data_dir, "dataset directory")->required();
  synth->add_option("--mode", mode, "conditional | unconditional");
  synth->add_option("--count", count, "number of entities to synthesize");
  synth->add_option("--dangling-fraction", dangling_fraction,
                    "condition on the dangling split at this fraction");
  synth->add_option("--out", out_path, "write JSON lines here instead of stdout");
  synth->add_option("--top-k", top_k, "report top-k ids instead of thresholding");
  add_seed(synth);

  CLI::App* sweep = app.add_subcommand("sweep-ratio", "alignment quality vs seed-set size");
  sweep->add_option("--config", config_path, "train config JSON")->required();
  sweep->add_option("--data", data_dir, "dataset directory")->required();
  sweep->add_option("--ratios", ratios, "seed-alignment ratios in (0, 1]")
      ->required()
      ->delimiter(',');
  sweep->add_option("--out", out_path, "CSV output file");
  add_seed(sweep);

  CLI::App* verify = app.add_subcommand("verify-theory", "numerical checks of the propositions");
  verify->add_option("--trials", trials, "number of random trials");
  add_seed(verify);

  CLI::App* stats = app.add_subcommand("stats", "dataset statistics");
  stats->add_option("--data", data_dir, "dataset directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(prepare))
      return run_prepare(data_dir, out_path, synthetic, synth_cfg, dangling_fraction, seed);
    if (app.got_subcommand(train))
      return run_train(config_path, data_dir, out_path, dangling_fraction,
                       seed_given ? std::optional<std::uint64_t>(seed) : std::nullopt);
    if (app.got_subcommand(eval_align)) return run_eval_align(ckpt_dir, data_dir);
    if (app.got_subcommand(eval_synth))
      return run_eval_synth(ckpt_dir, data_dir, synth_eval_fraction, seed);
    if (app.got_subcommand(synth))
      return run_synthesize(ckpt_dir, data_dir, mode, count, dangling_fraction, seed, out_path,
                            top_k);
    if (app.got_subcommand(sweep))
      return run_sweep(config_path, data_dir, ratios, out_path,
                       seed_given ? std::optional<std::uint64_t>(seed) : std::nullopt);
    if (app.got_subcommand(verify)) return run_verify_theory(trials, seed);
    if (app.got_subcommand(stats)) return run_stats(data_dir);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
