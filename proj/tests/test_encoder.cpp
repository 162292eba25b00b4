#include "geea/encoder.hpp"

#include "geea/kgdata.hpp"
#include "geea/nn.hpp"

#include <doctest.h>

#include <cmath>

using namespace geea;
using ad::Matrix;
using ad::Var;

namespace {

struct Fixture {
  AlignmentDataset ds;
  KgView src_view, tgt_view;
  EncoderParams params;

  explicit Fixture(std::uint64_t seed = 3, int entities = 30) {
    ds = generate_synthetic_pair({entities, 4, 6, 5, 0.1, 0.3, 3}, seed);
    src_view = KgView::build(ds.source);
    tgt_view = KgView::build(ds.target);
    Rng rng(seed + 1);
    params = EncoderParams::create({8, 8, 1}, ds, rng);
  }
};

std::vector<Eigen::Index> ids_upto(int n) {
  std::vector<Eigen::Index> ids;
  for (int i = 0; i < n; ++i) ids.push_back(i);
  return ids;
}

}  // namespace

TEST_CASE("encode is deterministic outside training") {
  Fixture f;
  auto ids = ids_upto(10);
  ModalEmbeddings a = encode(f.src_view, ids, f.params, Side::Source);
  ModalEmbeddings b = encode(f.src_view, ids, f.params, Side::Source);
  CHECK(a.graph.value() == b.graph.value());
  CHECK(a.attr.value() == b.attr.value());
  CHECK(a.image.value() == b.image.value());
  CHECK(a.joint.value() == b.joint.value());
}

TEST_CASE("all encoder outputs are finite") {
  Fixture f;
  ModalEmbeddings e = encode(f.src_view, ids_upto(30), f.params, Side::Source);
  CHECK(e.graph.value().allFinite());
  CHECK(e.attr.value().allFinite());
  CHECK(e.image.value().allFinite());
  CHECK(e.joint.value().allFinite());
}

TEST_CASE("zero fusion weights collapse the joint embedding to the bias") {
  Fixture f;
  f.params.fusion_w->value.setZero();
  f.params.fusion_b->value.setConstant(0.25);
  ModalEmbeddings e = encode(f.src_view, ids_upto(7), f.params, Side::Source);
  CHECK((e.joint.value().array() == 0.25).all());
}

TEST_CASE("fuse on the sub-embeddings equals the encoded joint exactly") {
  Fixture f;
  ModalEmbeddings e = encode(f.tgt_view, ids_upto(9), f.params, Side::Target);
  Var refused = fuse(e.graph, e.attr, e.image, f.params);
  CHECK(refused.value() == e.joint.value());
}

TEST_CASE("fuse is a row-wise map: permuting rows permutes outputs") {
  Fixture f;
  std::vector<Eigen::Index> ids{0, 3, 5, 11};
  std::vector<Eigen::Index> perm_ids{5, 0, 11, 3};
  ModalEmbeddings a = encode(f.src_view, ids, f.params, Side::Source);
  ModalEmbeddings b = encode(f.src_view, perm_ids, f.params, Side::Source);
  // id 0 sits at row 0 of a and row 1 of b, etc.
  CHECK(a.joint.value().row(0) == b.joint.value().row(1));
  CHECK(a.joint.value().row(1) == b.joint.value().row(3));
  CHECK(a.joint.value().row(2) == b.joint.value().row(0));
  CHECK(a.joint.value().row(3) == b.joint.value().row(2));
}

TEST_CASE("fuse rejects inconsistent shapes") {
  Fixture f;
  ModalEmbeddings e = encode(f.src_view, ids_upto(4), f.params, Side::Source);
  Var bad = Var::constant(Matrix::Zero(4, 5));
  CHECK_THROWS_AS(fuse(bad, e.attr, e.image, f.params), std::invalid_argument);
  Var short_batch = Var::constant(Matrix::Zero(3, 8));
  CHECK_THROWS_AS(fuse(short_batch, e.attr, e.image, f.params), std::invalid_argument);
}

TEST_CASE("out-of-range entity ids are rejected") {
  Fixture f;
  CHECK_THROWS_AS(encode(f.src_view, {0, 99}, f.params, Side::Source), std::invalid_argument);
}

TEST_CASE("joint depends only on the entity's own sub-embedding rows") {
  // Row-wise locality: change entity 5's attribute projection input only;
  // every other row of the joint is untouched.
  Fixture f;
  auto ids = ids_upto(12);
  Matrix before = encode(f.src_view, ids, f.params, Side::Source).joint.value();

  // Perturb the image feature of entity 5 (feeds only row 5's image column).
  KgView perturbed = f.src_view;
  perturbed.image(5, 0) += 1.0;
  Matrix after = encode(perturbed, ids, f.params, Side::Source).joint.value();
  for (int r = 0; r < 12; ++r) {
    if (r == 5)
      CHECK(before.row(r) != after.row(r));
    else
      CHECK(before.row(r) == after.row(r));
  }
}

TEST_CASE("one aggregation layer sees exactly the 1-hop neighborhood") {
  // Build a dataset with a known tiny graph: 0-1, 1-2 edges; entity 3
  // isolated.
  AlignmentDataset ds = generate_synthetic_pair({4, 2, 2, 3, 0.0, 0.5, 1}, 8);
  ds.source.triples = {{0, 0, 1}, {1, 1, 2}};
  ds.target.triples = ds.source.triples;
  KgView view = KgView::build(ds.source);
  Rng rng(4);
  EncoderParams params = EncoderParams::create({6, 6, 1}, ds, rng);

  auto graph_table = [&](void) {
    return encode(view, {0, 1, 2, 3}, params, Side::Source).graph.value();
  };
  Matrix base = graph_table();

  // Perturbing entity 0's base vector must change rows 0 (self) and 1
  // (neighbor), and leave 2 and 3 untouched.
  params.source_table->value(0, 2) += 0.7;
  Matrix bumped = graph_table();
  CHECK(base.row(0) != bumped.row(0));
  CHECK(base.row(1) != bumped.row(1));
  CHECK(base.row(2) == bumped.row(2));
  CHECK(base.row(3) == bumped.row(3));

  // An isolated entity only ever sees itself.
  params.source_table->value(3, 1) -= 0.4;
  Matrix bumped2 = graph_table();
  CHECK(bumped.row(0) == bumped2.row(0));
  CHECK(bumped.row(1) == bumped2.row(1));
  CHECK(bumped.row(2) == bumped2.row(2));
  CHECK(bumped.row(3) != bumped2.row(3));
}

TEST_CASE("analytic fusion-weight gradient matches central finite differences") {
  Fixture f(5, 12);
  auto ids = ids_upto(10);
  auto build = [&] {
    return ad::mean(ad::square(encode(f.src_view, ids, f.params, Side::Source).joint));
  };

  f.params.fusion_w->zero_grad();
  f.params.fusion_b->zero_grad();
  ad::backward(build());
  const Matrix analytic_w = f.params.fusion_w->grad;
  const Matrix analytic_b = f.params.fusion_b->grad;

  const double h = 1e-5;
  double worst = 0.0;
  auto probe = [&](ad::Tensor& t, const Matrix& analytic) {
    for (Eigen::Index k = 0; k < t.value.size(); ++k) {
      double* entry = t.value.data() + k;
      const double saved = *entry;
      *entry = saved + h;
      const double up = build().scalar_value();
      *entry = saved - h;
      const double down = build().scalar_value();
      *entry = saved;
      const double fd = (up - down) / (2.0 * h);
      if (std::abs(fd) < 1e-9 && std::abs(analytic(k)) < 1e-9) continue;
      worst = std::max(worst,
                       std::abs(fd - analytic(k)) / std::max(std::abs(fd), std::abs(analytic(k))));
    }
  };
  probe(*f.params.fusion_w, analytic_w);
  probe(*f.params.fusion_b, analytic_b);
  CHECK(worst < 1e-4);

  // And the same for a graph aggregation weight, which flows through the
  // sparse aggregation path.
  f.params.layer_w[0]->zero_grad();
  ad::backward(build());
  const Matrix analytic_l = f.params.layer_w[0]->grad;
  worst = 0.0;
  probe(*f.params.layer_w[0], analytic_l);
  CHECK(worst < 1e-4);
}

TEST_CASE("dropout is applied only in training mode") {
  Fixture f;
  Rng rng(9);
  ForwardOptions train_opt{true, 0.5, &rng};
  ModalEmbeddings dropped = encode(f.src_view, ids_upto(10), f.params, Side::Source, train_opt);
  ModalEmbeddings plain = encode(f.src_view, ids_upto(10), f.params, Side::Source);
  CHECK(dropped.graph.value() != plain.graph.value());
  // eval mode twice: identical
  ModalEmbeddings plain2 = encode(f.src_view, ids_upto(10), f.params, Side::Source);
  CHECK(plain.joint.value() == plain2.joint.value());
}
