#include "geea/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

namespace geea {

namespace {

constexpr char kMagic[8] = {'G', 'E', 'E', 'A', 'P', 'A', 'R', '1'};

void write_u64(std::ofstream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::ifstream& in, const std::string& path) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(v)))
    throw std::runtime_error(path + ": truncated checkpoint");
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const std::vector<std::shared_ptr<ad::Tensor>>& tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
  out.write(kMagic, sizeof(kMagic));
  write_u64(out, tensors.size());
  std::vector<float> buf;
  for (const auto& t : tensors) {
    write_u64(out, t->name.size());
    out.write(t->name.data(), static_cast<std::streamsize>(t->name.size()));
    write_u64(out, static_cast<std::uint64_t>(t->value.rows()));
    write_u64(out, static_cast<std::uint64_t>(t->value.cols()));
    buf.resize(static_cast<std::size_t>(t->value.size()));
    for (Eigen::Index i = 0; i < t->value.rows(); ++i)
      for (Eigen::Index j = 0; j < t->value.cols(); ++j)
        buf[static_cast<std::size_t>(i * t->value.cols() + j)] = static_cast<float>(t->value(i, j));
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void load_checkpoint(const std::filesystem::path& path,
                     const std::vector<std::shared_ptr<ad::Tensor>>& tensors) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error(path.string() + ": not a parameter checkpoint");

  struct Entry {
    Eigen::Index rows, cols;
    std::vector<float> data;
  };
  std::unordered_map<std::string, Entry> entries;
  const std::uint64_t count = read_u64(in, path.string());
  for (std::uint64_t k = 0; k < count; ++k) {
    const std::uint64_t name_len = read_u64(in, path.string());
    std::string name(name_len, '\0');
    if (!in.read(name.data(), static_cast<std::streamsize>(name_len)))
      throw std::runtime_error(path.string() + ": truncated checkpoint");
    Entry e;
    e.rows = static_cast<Eigen::Index>(read_u64(in, path.string()));
    e.cols = static_cast<Eigen::Index>(read_u64(in, path.string()));
    e.data.resize(static_cast<std::size_t>(e.rows) * static_cast<std::size_t>(e.cols));
    if (!e.data.empty() &&
        !in.read(reinterpret_cast<char*>(e.data.data()),
                 static_cast<std::streamsize>(e.data.size() * sizeof(float))))
      throw std::runtime_error(path.string() + ": truncated checkpoint");
    entries.emplace(std::move(name), std::move(e));
  }

  for (const auto& t : tensors) {
    auto it = entries.find(t->name);
    if (it == entries.end())
      throw std::runtime_error(path.string() + ": parameter '" + t->name + "' not in checkpoint");
    const Entry& e = it->second;
    if (e.rows != t->value.rows() || e.cols != t->value.cols())
      throw std::runtime_error(path.string() + ": parameter '" + t->name + "' has shape " +
                               std::to_string(e.rows) + "x" + std::to_string(e.cols) +
                               ", expected " + std::to_string(t->value.rows()) + "x" +
                               std::to_string(t->value.cols()));
    for (Eigen::Index i = 0; i < e.rows; ++i)
      for (Eigen::Index j = 0; j < e.cols; ++j)
        t->value(i, j) = static_cast<double>(e.data[static_cast<std::size_t>(i * e.cols + j)]);
  }
}

}  // namespace geea
