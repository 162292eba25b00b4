#pragma once

#include "geea/training.hpp"

#include <string>
#include <vector>

namespace geea {

struct DirectionReport {
  double hits1 = 0.0;
  double hits10 = 0.0;
  double mrr = 0.0;
  std::vector<int> ranks;  // one per query, 1-based
};

struct AlignmentReport {
  DirectionReport forward;   // source -> target ranking
  DirectionReport backward;  // target -> source ranking
  double hits1 = 0.0;        // direction averages
  double hits10 = 0.0;
  double mrr = 0.0;
};

// Ranks each test entity's candidates (the pairs' entities on the other
// side) by cosine similarity, descending, ties broken by ascending entity
// id. Both directions are computed and averaged. The embedding tables are
// indexed by entity id; a pair referencing a row outside them throws.
AlignmentReport evaluate_alignment(const ad::Matrix& source_joint, const ad::Matrix& target_joint,
                                   const std::vector<std::pair<int, int>>& pairs);

struct SynthesisReport {
  double pre = 0.0;  // prior-feature reconstruction error, reported x10^2
  double re = 0.0;   // joint-embedding reconstruction error, reported x10^2
  double fid = 0.0;
  bool divergent = false;  // FID covariance square root failed
};

// Frechet distance between two Gaussians:
// |mu1-mu2|^2 + Tr(C1 + C2 - 2 (C1 C2)^{1/2}). Sets *divergent when the
// product's square root is numerically invalid (non-PSD after
// symmetrization).
double frechet_distance(const Eigen::VectorXd& mu1, const ad::Matrix& c1,
                        const Eigen::VectorXd& mu2, const ad::Matrix& c2,
                        bool* divergent = nullptr);

// Gaussian fit (mean + full covariance, n-1 normalization) of row samples,
// then frechet_distance.
double frechet_distance_from_samples(const ad::Matrix& generated, const ad::Matrix& real,
                                     bool* divergent = nullptr);

// Conditional synthesis quality on the dangling split (x->y flow, eps = 0)
// plus FID of unconditional samples against the real target embeddings.
// Requires dataset.target_full and a non-empty dangling set.
SynthesisReport evaluate_synthesis(const GeeaModel& model, const AlignmentDataset& ds,
                                   std::uint64_t sample_seed = 7, int sample_count = 0);

struct RatioPoint {
  double ratio = 0.0;
  AlignmentReport report;
};

// Re-splits the seed set at each ratio, trains from scratch and evaluates
// on the unchanged test set.
std::vector<RatioPoint> sweep_training_ratio(const AlignmentDataset& ds,
                                             const std::vector<double>& ratios,
                                             const TrainConfig& cfg);

std::string alignment_report_json(const AlignmentReport& r);
std::string alignment_report_table(const AlignmentReport& r);
std::string synthesis_report_json(const SynthesisReport& r);
std::string synthesis_report_table(const SynthesisReport& r);

}  // namespace geea
