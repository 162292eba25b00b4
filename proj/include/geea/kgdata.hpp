#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace geea {

// One knowledge graph: entities with relational triples, attribute
// assignments and a fixed image-feature vector per entity. Ids are dense
// (0 .. count-1) after construction. Immutable once built.
struct KnowledgeGraph {
  int entity_count = 0;
  int relation_count = 0;
  int attribute_count = 0;
  std::vector<std::array<int, 3>> triples;       // (head, relation, tail), deduplicated
  std::vector<std::pair<int, int>> attributes;   // (entity, attribute), deduplicated
  Eigen::MatrixXf image_features;                // entity_count x d_img
  std::vector<bool> image_mask;                  // true = real feature, false = synthesized
  std::vector<std::string> entity_names;         // side table for reporting
  // Seed of the standard-normal fill rule for entities without a real
  // image feature. Derived per KG side at load/generation time.
  std::uint64_t image_seed = 42;

  int image_dim() const { return static_cast<int>(image_features.cols()); }
  int image_count() const;

  // Throws std::runtime_error on any invariant violation.
  void validate() const;
};

struct AlignmentDataset {
  KnowledgeGraph source;
  KnowledgeGraph target;
  std::vector<std::pair<int, int>> seed_alignments;   // S
  std::vector<std::pair<int, int>> test_alignments;   // T
  std::vector<std::pair<int, int>> valid_alignments;  // early-stopping split
  std::vector<std::pair<int, int>> dangling_pairs;    // synthesis evaluation set
  // Unpurged target view, populated by build_synthesis_split. Holds the
  // held-out features that synthesis evaluation scores against.
  std::optional<KnowledgeGraph> target_full;

  void validate() const;
};

struct KgStatistics {
  int entities = 0;
  int relations = 0;
  int attributes = 0;
  int images = 0;
};

struct DatasetStatistics {
  KgStatistics source;
  KgStatistics target;
  int test_alignments = 0;     // total, known + unknown
  int known_alignments = 0;    // remaining test pairs
  int unknown_alignments = 0;  // dangling pairs
  int seed_alignments = 0;
  int valid_alignments = 0;
};

struct SyntheticConfig {
  int entities = 200;
  int relations = 20;
  int attributes = 30;
  int d_img = 16;
  double noise_level = 0.1;
  double seed_fraction = 0.3;
  // Average relational degree: about this many triples per entity are
  // sampled before deduplication.
  int triples_per_entity = 5;
};

// Loads the tab-separated dataset layout (ent_ids_*, triples_*, attrs_*,
// img_features_*.f32, ref/sup/val/dangling pairs). Ids are densely
// re-indexed per KG; entities without an image row (all-zero row in the
// .f32 file, or a missing file) get a standard-normal feature drawn from
// `image_seed` and image_mask = false.
AlignmentDataset load_dataset(const std::filesystem::path& dir, std::uint64_t image_seed = 42);

// Writes the same layout. Synthesized image rows are saved as zeros so a
// reload regenerates them from the same seed.
void save_dataset(const AlignmentDataset& ds, const std::filesystem::path& dir);

// Moves ceil(fraction * |T|) test pairs into dangling_pairs and removes all
// triples, attributes and image features of their target entities from the
// target training view. The original target KG is kept in `target_full`.
AlignmentDataset build_synthesis_split(const AlignmentDataset& ds, double dangling_fraction,
                                       std::uint64_t seed);

// Two isomorphic-up-to-noise KGs with a known ground-truth bijection.
// noise_level perturbs target image features additively and drops/adds a
// matching share of target triples and attributes.
AlignmentDataset generate_synthetic_pair(const SyntheticConfig& cfg, std::uint64_t seed);

DatasetStatistics compute_statistics(const AlignmentDataset& ds);

}  // namespace geea
