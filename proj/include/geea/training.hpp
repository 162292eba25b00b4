#pragma once

#include "geea/decoders.hpp"
#include "geea/encoder.hpp"
#include "geea/losses.hpp"
#include "geea/mvae.hpp"
#include "geea/nn.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace geea {

struct ModelDims {
  int d = 300;
  int d_joint = 300;
  int d_z = 300;
  int gnn_layers = 2;
  std::vector<int> vae_hidden = {300, 300};
  std::vector<int> decoder_hidden = {300, 1000};
};

struct TrainConfig {
  int epochs = 200;
  int batch_size = 2500;        // supervised batches from S
  int unsup_batch_size = 2800;  // self-flow batches from X and Y
  double learning_rate = 0.001;
  std::string optimizer = "adam";
  double dropout = 0.5;
  double temperature = 0.1;  // prediction-match similarity temperature
  double grad_clip = 5.0;
  int patience = 20;
  int eval_every = 1;
  std::uint64_t seed = 42;
  ModelDims dims;
  LossWeights weights;
  TermToggles terms;

  void validate() const;
};

TrainConfig load_train_config(const std::filesystem::path& path);
void save_train_config(const TrainConfig& cfg, const std::filesystem::path& path);

struct GeeaModel {
  EncoderParams encoder;
  MvaeParams mvae;
  DecoderParams decoders;

  static GeeaModel create(const TrainConfig& cfg, const AlignmentDataset& ds, Rng& rng);
  std::vector<std::shared_ptr<ad::Tensor>> all_tensors() const;
};

// Joint embeddings for every entity of one side, deterministic (no dropout,
// no sampling).
ad::Matrix joint_embedding_table(const GeeaModel& model, const KgView& view, Side side);

struct StepRecord {
  long step = 0;
  LossBreakdown losses;
};

struct EpochMetrics {
  double mean_total = 0.0;
  std::vector<StepRecord> steps;
};

struct TrainState {
  GeeaModel model;
  std::unique_ptr<nn::Adam> optimizer;
  long epoch = 0;
  long global_step = 0;
  double best_valid_mrr = -1.0;
  long best_epoch = -1;
  std::vector<ad::Matrix> best_values;

  void snapshot_best(double mrr);
  void restore_best();
};

TrainState init_train_state(const TrainConfig& cfg, const AlignmentDataset& ds);

// One pass over the supervised and unsupervised batch streams: mutual flows
// with prediction/prior/post losses on seed batches, self flows with
// distribution/prior/post losses on unsupervised batches, one joint
// optimizer step per paired batch. Throws on a non-finite loss.
EpochMetrics train_epoch(TrainState& state, const AlignmentDataset& ds, const KgView& src_view,
                         const KgView& tgt_view, const TrainConfig& cfg, Rng& rng);

struct FitCallbacks {
  std::function<void(const StepRecord&)> on_step;
  // valid_mrr is empty on epochs without an evaluation.
  std::function<void(long epoch, std::optional<double> valid_mrr, const EpochMetrics&)> on_epoch;
};

// Runs train_epoch until `epochs` or until the validation MRR has not
// improved for `patience` evaluated epochs, then restores the best
// checkpoint. With an empty validation set it falls back to the fixed epoch
// count.
TrainState fit(const AlignmentDataset& ds, const TrainConfig& cfg, const FitCallbacks& cb = {});

}  // namespace geea
