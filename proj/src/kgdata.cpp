#include "geea/kgdata.hpp"

#include "geea/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace geea {

namespace {

constexpr std::uint64_t kSourceSalt = 1;
constexpr std::uint64_t kTargetSalt = 2;
// Default dataset-level seed for the missing-image fill rule. Kept
// independent of generation seeds so a saved dataset reloads identically.
constexpr std::uint64_t kDefaultImageSeed = 42;

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  if (!fields.empty() && !fields.back().empty() && fields.back().back() == '\r')
    fields.back().pop_back();
  return fields;
}

long parse_int(const std::string& s, const std::string& file, int line_no) {
  try {
    std::size_t used = 0;
    long v = std::stol(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    fail(file + ":" + std::to_string(line_no) + ": expected integer, got '" + s + "'");
  }
}

// Calls fn(line_no, fields) for every non-empty line.
void for_each_line(const std::filesystem::path& path,
                   const std::function<void(int, const std::vector<std::string>&)>& fn) {
  std::ifstream in(path);
  if (!in) fail("missing or unreadable file: " + path.string());
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    fn(line_no, split_tabs(line));
  }
}

bool file_exists(const std::filesystem::path& p) {
  std::error_code ec;
  return std::filesystem::exists(p, ec);
}

void require_file(const std::filesystem::path& p) {
  if (!file_exists(p)) fail("missing file: " + p.string());
}

// Standard-normal fill for entities without a real image feature. Seeded
// per entity so the result does not depend on which entities are missing.
void fill_missing_images(KnowledgeGraph& kg, std::uint64_t image_seed) {
  for (int i = 0; i < kg.entity_count; ++i) {
    if (kg.image_mask[i]) continue;
    Rng row_rng = Rng(image_seed).fork(static_cast<std::uint64_t>(i));
    for (int j = 0; j < kg.image_dim(); ++j)
      kg.image_features(i, j) = static_cast<float>(row_rng.normal());
  }
}

Eigen::MatrixXf read_f32_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("missing or unreadable file: " + path.string());
  std::uint64_t header[2];
  if (!in.read(reinterpret_cast<char*>(header), sizeof(header)))
    fail(path.string() + ": truncated header");
  const auto rows = static_cast<Eigen::Index>(header[0]);
  const auto cols = static_cast<Eigen::Index>(header[1]);
  std::vector<float> buf(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
  if (!buf.empty() &&
      !in.read(reinterpret_cast<char*>(buf.data()),
               static_cast<std::streamsize>(buf.size() * sizeof(float))))
    fail(path.string() + ": truncated data (expected " + std::to_string(rows) + "x" +
         std::to_string(cols) + " floats)");
  Eigen::MatrixXf m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      m(i, j) = buf[static_cast<std::size_t>(i) * cols + static_cast<std::size_t>(j)];
  return m;
}

void write_f32_matrix(const std::filesystem::path& path, const Eigen::MatrixXf& m,
                      const std::vector<bool>& mask) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write file: " + path.string());
  std::uint64_t header[2] = {static_cast<std::uint64_t>(m.rows()),
                             static_cast<std::uint64_t>(m.cols())};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  std::vector<float> row(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const bool real = mask.empty() || mask[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = real ? m(i, j) : 0.0f;
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
}

struct IdMaps {
  std::unordered_map<long, int> entity;  // original id -> dense id
};

KnowledgeGraph load_kg(const std::filesystem::path& dir, const std::string& suffix,
                       std::uint64_t image_seed, IdMaps& maps) {
  KnowledgeGraph kg;
  kg.image_seed = image_seed;

  const auto ent_path = dir / ("ent_ids_" + suffix);
  require_file(ent_path);
  for_each_line(ent_path, [&](int line_no, const std::vector<std::string>& f) {
    if (f.size() < 2)
      fail(ent_path.string() + ":" + std::to_string(line_no) + ": expected 'id<TAB>name'");
    long orig = parse_int(f[0], ent_path.string(), line_no);
    if (!maps.entity.emplace(orig, kg.entity_count).second)
      fail(ent_path.string() + ":" + std::to_string(line_no) + ": duplicate entity id " +
           std::to_string(orig));
    kg.entity_names.push_back(f[1]);
    ++kg.entity_count;
  });

  auto dense_entity = [&](long orig, const std::string& file, int line_no) {
    auto it = maps.entity.find(orig);
    if (it == maps.entity.end())
      fail(file + ":" + std::to_string(line_no) + ": unknown entity id " + std::to_string(orig));
    return it->second;
  };

  // Relations and attributes carry no declaration file; distinct original
  // ids are re-indexed by ascending value so already-dense inputs map to
  // themselves.
  const auto tri_path = dir / ("triples_" + suffix);
  require_file(tri_path);
  std::vector<std::array<long, 3>> raw_triples;
  std::set<long> rel_ids;
  for_each_line(tri_path, [&](int line_no, const std::vector<std::string>& f) {
    if (f.size() < 3)
      fail(tri_path.string() + ":" + std::to_string(line_no) + ": expected 'head<TAB>rel<TAB>tail'");
    long h = parse_int(f[0], tri_path.string(), line_no);
    long r = parse_int(f[1], tri_path.string(), line_no);
    long t = parse_int(f[2], tri_path.string(), line_no);
    dense_entity(h, tri_path.string(), line_no);
    dense_entity(t, tri_path.string(), line_no);
    raw_triples.push_back({h, r, t});
    rel_ids.insert(r);
  });
  std::map<long, int> rel_map;
  for (long r : rel_ids) rel_map.emplace(r, static_cast<int>(rel_map.size()));
  kg.relation_count = static_cast<int>(rel_map.size());
  std::set<std::array<int, 3>> triple_set;
  for (const auto& t : raw_triples)
    triple_set.insert({maps.entity.at(t[0]), rel_map.at(t[1]), maps.entity.at(t[2])});
  kg.triples.assign(triple_set.begin(), triple_set.end());

  const auto attr_path = dir / ("attrs_" + suffix);
  require_file(attr_path);
  std::vector<std::pair<long, long>> raw_attrs;
  std::set<long> attr_ids;
  for_each_line(attr_path, [&](int line_no, const std::vector<std::string>& f) {
    if (f.size() < 2)
      fail(attr_path.string() + ":" + std::to_string(line_no) + ": expected 'entity<TAB>attr'");
    long e = parse_int(f[0], attr_path.string(), line_no);
    long a = parse_int(f[1], attr_path.string(), line_no);
    dense_entity(e, attr_path.string(), line_no);
    raw_attrs.emplace_back(e, a);
    attr_ids.insert(a);
  });
  std::map<long, int> attr_map;
  for (long a : attr_ids) attr_map.emplace(a, static_cast<int>(attr_map.size()));
  kg.attribute_count = static_cast<int>(attr_map.size());
  std::set<std::pair<int, int>> attr_set;
  for (const auto& [e, a] : raw_attrs) attr_set.insert({maps.entity.at(e), attr_map.at(a)});
  kg.attributes.assign(attr_set.begin(), attr_set.end());

  const auto img_path = dir / ("img_features_" + suffix + ".f32");
  require_file(img_path);
  Eigen::MatrixXf img = read_f32_matrix(img_path);
  if (img.rows() != kg.entity_count)
    fail(img_path.string() + ": expected " + std::to_string(kg.entity_count) + " rows, got " +
         std::to_string(img.rows()));
  kg.image_features = std::move(img);
  kg.image_mask.resize(static_cast<std::size_t>(kg.entity_count));
  for (int i = 0; i < kg.entity_count; ++i)
    kg.image_mask[static_cast<std::size_t>(i)] = !kg.image_features.row(i).isZero(0.0f);
  fill_missing_images(kg, image_seed);
  return kg;
}

std::vector<std::pair<int, int>> load_pairs(const std::filesystem::path& path, const IdMaps& src,
                                            const IdMaps& tgt) {
  std::vector<std::pair<int, int>> pairs;
  for_each_line(path, [&](int line_no, const std::vector<std::string>& f) {
    if (f.size() < 2)
      fail(path.string() + ":" + std::to_string(line_no) + ": expected 'src<TAB>tgt'");
    long s = parse_int(f[0], path.string(), line_no);
    long t = parse_int(f[1], path.string(), line_no);
    auto si = src.entity.find(s);
    auto ti = tgt.entity.find(t);
    if (si == src.entity.end())
      fail(path.string() + ":" + std::to_string(line_no) + ": unknown source entity id " +
           std::to_string(s));
    if (ti == tgt.entity.end())
      fail(path.string() + ":" + std::to_string(line_no) + ": unknown target entity id " +
           std::to_string(t));
    pairs.emplace_back(si->second, ti->second);
  });
  return pairs;
}

void write_pairs(const std::filesystem::path& path, const std::vector<std::pair<int, int>>& pairs) {
  std::ofstream out(path);
  if (!out) fail("cannot write file: " + path.string());
  for (const auto& [s, t] : pairs) out << s << '\t' << t << '\n';
}

void check_pair_list(const std::vector<std::pair<int, int>>& pairs, const std::string& name,
                     int src_count, int tgt_count) {
  std::unordered_set<int> src_seen, tgt_seen;
  for (const auto& [s, t] : pairs) {
    if (s < 0 || s >= src_count)
      fail(name + ": source entity id " + std::to_string(s) + " out of range");
    if (t < 0 || t >= tgt_count)
      fail(name + ": target entity id " + std::to_string(t) + " out of range");
    if (!src_seen.insert(s).second)
      fail(name + ": source entity " + std::to_string(s) + " appears in more than one pair");
    if (!tgt_seen.insert(t).second)
      fail(name + ": target entity " + std::to_string(t) + " appears in more than one pair");
  }
}

std::size_t ceil_fraction(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
}

}  // namespace

int KnowledgeGraph::image_count() const {
  return static_cast<int>(std::count(image_mask.begin(), image_mask.end(), true));
}

void KnowledgeGraph::validate() const {
  for (const auto& t : triples) {
    if (t[0] < 0 || t[0] >= entity_count || t[2] < 0 || t[2] >= entity_count)
      fail("triple references entity id out of range");
    if (t[1] < 0 || t[1] >= relation_count) fail("triple references relation id out of range");
  }
  for (const auto& [e, a] : attributes) {
    if (e < 0 || e >= entity_count) fail("attribute assignment references entity id out of range");
    if (a < 0 || a >= attribute_count) fail("attribute assignment references attribute id out of range");
  }
  {
    auto sorted = triples;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      fail("duplicate triple");
  }
  {
    auto sorted = attributes;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      fail("duplicate (entity, attribute) pair");
  }
  if (image_features.rows() != entity_count) fail("image feature row count != entity count");
  if (image_mask.size() != static_cast<std::size_t>(entity_count))
    fail("image mask size != entity count");
  if (entity_names.size() != static_cast<std::size_t>(entity_count))
    fail("entity name table size != entity count");
}

void AlignmentDataset::validate() const {
  source.validate();
  target.validate();
  check_pair_list(seed_alignments, "seed_alignments", source.entity_count, target.entity_count);
  check_pair_list(test_alignments, "test_alignments", source.entity_count, target.entity_count);
  check_pair_list(valid_alignments, "valid_alignments", source.entity_count, target.entity_count);
  check_pair_list(dangling_pairs, "dangling_pairs", source.entity_count, target.entity_count);
  std::set<std::pair<int, int>> all;
  auto check_disjoint = [&](const std::vector<std::pair<int, int>>& pairs, const char* name) {
    for (const auto& p : pairs)
      if (!all.insert(p).second)
        fail(std::string(name) + ": pair (" + std::to_string(p.first) + ", " +
             std::to_string(p.second) + ") appears in more than one alignment set");
  };
  check_disjoint(seed_alignments, "seed_alignments");
  check_disjoint(test_alignments, "test_alignments");
  check_disjoint(valid_alignments, "valid_alignments");
  check_disjoint(dangling_pairs, "dangling_pairs");
  if (target_full) {
    target_full->validate();
    if (target_full->entity_count != target.entity_count)
      fail("target_full entity count differs from target training view");
  }
}

AlignmentDataset load_dataset(const std::filesystem::path& dir, std::uint64_t image_seed) {
  AlignmentDataset ds;
  IdMaps src_maps, tgt_maps;
  ds.source = load_kg(dir, "1", mix_seed(image_seed + kSourceSalt), src_maps);
  ds.target = load_kg(dir, "2", mix_seed(image_seed + kTargetSalt), tgt_maps);

  require_file(dir / "ref_pairs");
  require_file(dir / "sup_pairs");
  ds.test_alignments = load_pairs(dir / "ref_pairs", src_maps, tgt_maps);
  ds.seed_alignments = load_pairs(dir / "sup_pairs", src_maps, tgt_maps);
  if (file_exists(dir / "val_pairs"))
    ds.valid_alignments = load_pairs(dir / "val_pairs", src_maps, tgt_maps);
  if (file_exists(dir / "dangling_pairs"))
    ds.dangling_pairs = load_pairs(dir / "dangling_pairs", src_maps, tgt_maps);

  // No validation split supplied: carve 5% off the seed set so early
  // stopping has something to watch.
  if (ds.valid_alignments.empty() && !ds.seed_alignments.empty()) {
    const std::size_t k = ds.seed_alignments.size() / 20;
    if (k > 0) {
      ds.valid_alignments.assign(ds.seed_alignments.end() - static_cast<long>(k),
                                 ds.seed_alignments.end());
      ds.seed_alignments.resize(ds.seed_alignments.size() - k);
    }
  }

  ds.validate();
  return ds;
}

void save_dataset(const AlignmentDataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write_kg = [&](const KnowledgeGraph& kg, const std::string& suffix) {
    {
      std::ofstream out(dir / ("ent_ids_" + suffix));
      if (!out) fail("cannot write file: " + (dir / ("ent_ids_" + suffix)).string());
      for (int i = 0; i < kg.entity_count; ++i)
        out << i << '\t' << kg.entity_names[static_cast<std::size_t>(i)] << '\n';
    }
    {
      std::ofstream out(dir / ("triples_" + suffix));
      if (!out) fail("cannot write file: " + (dir / ("triples_" + suffix)).string());
      for (const auto& t : kg.triples) out << t[0] << '\t' << t[1] << '\t' << t[2] << '\n';
    }
    {
      std::ofstream out(dir / ("attrs_" + suffix));
      if (!out) fail("cannot write file: " + (dir / ("attrs_" + suffix)).string());
      for (const auto& [e, a] : kg.attributes) out << e << '\t' << a << '\n';
    }
    write_f32_matrix(dir / ("img_features_" + suffix + ".f32"), kg.image_features, kg.image_mask);
  };
  write_kg(ds.source, "1");
  write_kg(ds.target, "2");
  write_pairs(dir / "ref_pairs", ds.test_alignments);
  write_pairs(dir / "sup_pairs", ds.seed_alignments);
  if (!ds.valid_alignments.empty()) write_pairs(dir / "val_pairs", ds.valid_alignments);
  if (!ds.dangling_pairs.empty()) write_pairs(dir / "dangling_pairs", ds.dangling_pairs);
}

AlignmentDataset build_synthesis_split(const AlignmentDataset& ds, double dangling_fraction,
                                       std::uint64_t seed) {
  if (!(dangling_fraction > 0.0 && dangling_fraction < 1.0))
    throw std::invalid_argument("build_synthesis_split: dangling_fraction must be in (0, 1)");
  if (ds.test_alignments.empty())
    throw std::invalid_argument("build_synthesis_split: dataset has no test alignments");

  AlignmentDataset out = ds;
  out.target_full = ds.target;

  auto shuffled = ds.test_alignments;
  Rng rng(seed);
  rng.shuffle(shuffled);
  const std::size_t k = ceil_fraction(dangling_fraction, shuffled.size());
  out.dangling_pairs.assign(shuffled.begin(), shuffled.begin() + static_cast<long>(k));
  out.test_alignments.assign(shuffled.begin() + static_cast<long>(k), shuffled.end());

  std::unordered_set<int> removed;
  for (const auto& [s, t] : out.dangling_pairs) removed.insert(t);

  KnowledgeGraph& tgt = out.target;
  std::erase_if(tgt.triples, [&](const std::array<int, 3>& t) {
    return removed.count(t[0]) > 0 || removed.count(t[2]) > 0;
  });
  std::erase_if(tgt.attributes,
                [&](const std::pair<int, int>& ea) { return removed.count(ea.first) > 0; });
  for (int t : removed) {
    tgt.image_mask[static_cast<std::size_t>(t)] = false;
    tgt.image_features.row(t).setZero();
  }
  fill_missing_images(tgt, tgt.image_seed);

  out.validate();
  return out;
}

AlignmentDataset generate_synthetic_pair(const SyntheticConfig& cfg, std::uint64_t seed) {
  if (cfg.entities < 1 || cfg.relations < 1 || cfg.attributes < 1 || cfg.d_img < 1 ||
      cfg.triples_per_entity < 1)
    throw std::invalid_argument("generate_synthetic_pair: all counts must be >= 1");
  if (cfg.noise_level < 0.0)
    throw std::invalid_argument("generate_synthetic_pair: noise_level must be >= 0");
  if (!(cfg.seed_fraction > 0.0 && cfg.seed_fraction <= 1.0))
    throw std::invalid_argument("generate_synthetic_pair: seed_fraction must be in (0, 1]");

  Rng rng(seed);
  const int n = cfg.entities;

  AlignmentDataset ds;
  KnowledgeGraph& src = ds.source;
  src.entity_count = n;
  src.relation_count = cfg.relations;
  src.attribute_count = cfg.attributes;
  src.image_seed = mix_seed(kDefaultImageSeed + kSourceSalt);
  for (int i = 0; i < n; ++i) src.entity_names.push_back("src_e" + std::to_string(i));

  std::set<std::array<int, 3>> triples;
  const int attempts = n * cfg.triples_per_entity;
  for (int k = 0; k < attempts; ++k) {
    int h = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n)));
    int t = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n)));
    if (n > 1 && h == t) continue;
    int r = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(cfg.relations)));
    triples.insert({h, r, t});
  }
  src.triples.assign(triples.begin(), triples.end());

  std::set<std::pair<int, int>> attrs;
  for (int e = 0; e < n; ++e) {
    const int k = 1 + static_cast<int>(rng.uniform_int(4));
    for (int j = 0; j < k; ++j)
      attrs.insert({e, static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(cfg.attributes)))});
  }
  src.attributes.assign(attrs.begin(), attrs.end());

  src.image_features = rng.normal_matrix(n, cfg.d_img).cast<float>();
  src.image_mask.assign(static_cast<std::size_t>(n), true);

  // Ground-truth bijection: source entity e corresponds to target perm[e].
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  rng.shuffle(perm);

  KnowledgeGraph& tgt = ds.target;
  tgt.entity_count = n;
  tgt.relation_count = cfg.relations;
  tgt.attribute_count = cfg.attributes;
  tgt.image_seed = mix_seed(kDefaultImageSeed + kTargetSalt);
  tgt.entity_names.assign(static_cast<std::size_t>(n), "");
  for (int i = 0; i < n; ++i) tgt.entity_names[static_cast<std::size_t>(i)] = "tgt_e" + std::to_string(i);

  std::set<std::array<int, 3>> tgt_triples;
  for (const auto& t : src.triples)
    tgt_triples.insert({perm[static_cast<std::size_t>(t[0])], t[1], perm[static_cast<std::size_t>(t[2])]});
  std::set<std::pair<int, int>> tgt_attrs;
  for (const auto& [e, a] : src.attributes) tgt_attrs.insert({perm[static_cast<std::size_t>(e)], a});

  tgt.image_features.resize(n, cfg.d_img);
  for (int e = 0; e < n; ++e) {
    for (int j = 0; j < cfg.d_img; ++j)
      tgt.image_features(perm[static_cast<std::size_t>(e)], j) =
          src.image_features(e, j) + static_cast<float>(cfg.noise_level * rng.normal());
  }
  tgt.image_mask.assign(static_cast<std::size_t>(n), true);

  if (cfg.noise_level > 0.0) {
    // Structural noise: drop and add a matching share of triples/attributes.
    const double drop_p = 0.5 * cfg.noise_level;
    std::set<std::array<int, 3>> kept;
    for (const auto& t : tgt_triples)
      if (rng.uniform() >= drop_p) kept.insert(t);
    const int additions = static_cast<int>(std::lround(drop_p * static_cast<double>(tgt_triples.size())));
    for (int k = 0; k < additions; ++k) {
      int h = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n)));
      int t = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n)));
      if (n > 1 && h == t) continue;
      kept.insert({h, static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(cfg.relations))), t});
    }
    tgt_triples = std::move(kept);

    std::set<std::pair<int, int>> kept_attrs;
    for (const auto& a : tgt_attrs)
      if (rng.uniform() >= drop_p) kept_attrs.insert(a);
    const int attr_additions =
        static_cast<int>(std::lround(drop_p * static_cast<double>(tgt_attrs.size())));
    for (int k = 0; k < attr_additions; ++k)
      kept_attrs.insert({static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n))),
                         static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(cfg.attributes)))});
    tgt_attrs = std::move(kept_attrs);
  }
  tgt.triples.assign(tgt_triples.begin(), tgt_triples.end());
  tgt.attributes.assign(tgt_attrs.begin(), tgt_attrs.end());

  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(static_cast<std::size_t>(n));
  for (int e = 0; e < n; ++e) pairs.emplace_back(e, perm[static_cast<std::size_t>(e)]);
  rng.shuffle(pairs);
  const std::size_t n_seed =
      static_cast<std::size_t>(std::lround(cfg.seed_fraction * static_cast<double>(n)));
  ds.seed_alignments.assign(pairs.begin(), pairs.begin() + static_cast<long>(n_seed));
  const std::size_t remaining = pairs.size() - n_seed;
  const std::size_t n_valid = remaining > 0 ? std::max<std::size_t>(1, remaining / 10) : 0;
  ds.valid_alignments.assign(pairs.begin() + static_cast<long>(n_seed),
                             pairs.begin() + static_cast<long>(n_seed + n_valid));
  ds.test_alignments.assign(pairs.begin() + static_cast<long>(n_seed + n_valid), pairs.end());

  ds.validate();
  return ds;
}

DatasetStatistics compute_statistics(const AlignmentDataset& ds) {
  DatasetStatistics st;
  auto kg_stats = [](const KnowledgeGraph& kg) {
    KgStatistics s;
    s.entities = kg.entity_count;
    s.relations = kg.relation_count;
    s.attributes = kg.attribute_count;
    s.images = kg.image_count();
    return s;
  };
  st.source = kg_stats(ds.source);
  st.target = kg_stats(ds.target);
  st.known_alignments = static_cast<int>(ds.test_alignments.size());
  st.unknown_alignments = static_cast<int>(ds.dangling_pairs.size());
  st.test_alignments = st.known_alignments + st.unknown_alignments;
  st.seed_alignments = static_cast<int>(ds.seed_alignments.size());
  st.valid_alignments = static_cast<int>(ds.valid_alignments.size());
  return st;
}

}  // namespace geea
