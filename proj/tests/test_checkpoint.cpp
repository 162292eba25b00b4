#include "geea/checkpoint.hpp"

#include "geea/rng.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace geea;
namespace fs = std::filesystem;

namespace {

std::vector<char> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct TempFile {
  fs::path path;
  explicit TempFile(const char* name) {
    path = fs::temp_directory_path() / name;
  }
  ~TempFile() { fs::remove(path); }
};

}  // namespace

TEST_CASE("checkpoint archive round-trips bit exactly") {
  Rng rng(1);
  std::vector<std::shared_ptr<ad::Tensor>> tensors = {
      std::make_shared<ad::Tensor>("a.w", rng.normal_matrix(4, 3)),
      std::make_shared<ad::Tensor>("b.bias", rng.normal_matrix(1, 7)),
      std::make_shared<ad::Tensor>("empty", ad::Matrix::Zero(0, 5)),
  };

  TempFile f1("geea_ckpt_roundtrip_1.bin");
  TempFile f2("geea_ckpt_roundtrip_2.bin");
  save_checkpoint(f1.path, tensors);

  // Load into fresh tensors, save again: the two archives must be
  // byte-identical (values pass through the f32 representation once).
  std::vector<std::shared_ptr<ad::Tensor>> fresh = {
      std::make_shared<ad::Tensor>("a.w", ad::Matrix::Zero(4, 3)),
      std::make_shared<ad::Tensor>("b.bias", ad::Matrix::Zero(1, 7)),
      std::make_shared<ad::Tensor>("empty", ad::Matrix::Zero(0, 5)),
  };
  load_checkpoint(f1.path, fresh);
  save_checkpoint(f2.path, fresh);
  CHECK(read_bytes(f1.path) == read_bytes(f2.path));

  // And a second load reproduces the same doubles.
  std::vector<std::shared_ptr<ad::Tensor>> again = {
      std::make_shared<ad::Tensor>("a.w", ad::Matrix::Zero(4, 3)),
      std::make_shared<ad::Tensor>("b.bias", ad::Matrix::Zero(1, 7)),
      std::make_shared<ad::Tensor>("empty", ad::Matrix::Zero(0, 5)),
  };
  load_checkpoint(f2.path, again);
  CHECK(again[0]->value == fresh[0]->value);
  CHECK(again[1]->value == fresh[1]->value);
}

TEST_CASE("missing names and shape mismatches are rejected") {
  Rng rng(2);
  std::vector<std::shared_ptr<ad::Tensor>> tensors = {
      std::make_shared<ad::Tensor>("x", rng.normal_matrix(2, 2))};
  TempFile f("geea_ckpt_validate.bin");
  save_checkpoint(f.path, tensors);

  std::vector<std::shared_ptr<ad::Tensor>> wrong_name = {
      std::make_shared<ad::Tensor>("y", ad::Matrix::Zero(2, 2))};
  CHECK_THROWS_AS(load_checkpoint(f.path, wrong_name), std::runtime_error);

  std::vector<std::shared_ptr<ad::Tensor>> wrong_shape = {
      std::make_shared<ad::Tensor>("x", ad::Matrix::Zero(3, 2))};
  CHECK_THROWS_AS(load_checkpoint(f.path, wrong_shape), std::runtime_error);

  CHECK_THROWS_AS(load_checkpoint("/nonexistent/geea.bin", tensors), std::runtime_error);
}

TEST_CASE("corrupt magic is rejected") {
  TempFile f("geea_ckpt_magic.bin");
  std::ofstream out(f.path, std::ios::binary);
  out << "NOTACKPTxxxxxxxxxxxxxxxx";
  out.close();
  std::vector<std::shared_ptr<ad::Tensor>> tensors = {
      std::make_shared<ad::Tensor>("x", ad::Matrix::Zero(1, 1))};
  CHECK_THROWS_AS(load_checkpoint(f.path, tensors), std::runtime_error);
}
