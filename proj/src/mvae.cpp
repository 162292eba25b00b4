#include "geea/mvae.hpp"

#include <stdexcept>

namespace geea {

const char* flow_name(Flow f) {
  switch (f) {
    case Flow::XX: return "xx";
    case Flow::YY: return "yy";
    case Flow::XY: return "xy";
    default: return "yx";
  }
}

VaeCell VaeCell::create(const std::string& name, int d, int d_z, const std::vector<int>& hidden,
                        Rng& rng) {
  if (d < 1 || d_z < 1) throw std::invalid_argument("VaeCell: dims must be >= 1");
  VaeCell cell;
  int in = d;
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    cell.encoder_stack.push_back(
        nn::DenseBlock::create(name + ".enc" + std::to_string(i), in, hidden[i], rng));
    in = hidden[i];
  }
  cell.mu_w = std::make_shared<ad::Tensor>(name + ".mu.w", nn::xavier_uniform(in, d_z, rng));
  cell.mu_b = std::make_shared<ad::Tensor>(name + ".mu.b", ad::Matrix::Zero(1, d_z));
  cell.logvar_w =
      std::make_shared<ad::Tensor>(name + ".logvar.w", nn::xavier_uniform(in, d_z, rng));
  // Start near-deterministic (sigma ~ e^-2) so early reconstructions track
  // mu instead of latent noise; the distribution match grows sigma later.
  cell.logvar_b =
      std::make_shared<ad::Tensor>(name + ".logvar.b", ad::Matrix::Constant(1, d_z, -4.0));

  int din = d_z;
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    const int out = hidden[hidden.size() - 1 - i];
    cell.decoder_stack.push_back(
        nn::DenseBlock::create(name + ".dec" + std::to_string(i), din, out, rng));
    din = out;
  }
  cell.out_w = std::make_shared<ad::Tensor>(name + ".out.w", nn::xavier_uniform(din, d, rng));
  cell.out_b = std::make_shared<ad::Tensor>(name + ".out.b", ad::Matrix::Zero(1, d));
  return cell;
}

std::vector<std::shared_ptr<ad::Tensor>> VaeCell::tensors() const {
  std::vector<std::shared_ptr<ad::Tensor>> out;
  for (const auto& blk : encoder_stack) {
    auto t = blk.tensors();
    out.insert(out.end(), t.begin(), t.end());
  }
  out.insert(out.end(), {mu_w, mu_b, logvar_w, logvar_b});
  for (const auto& blk : decoder_stack) {
    auto t = blk.tensors();
    out.insert(out.end(), t.begin(), t.end());
  }
  out.insert(out.end(), {out_w, out_b});
  return out;
}

MvaeParams MvaeParams::create(const MvaeConfig& cfg, Rng& rng) {
  MvaeParams p;
  p.config = cfg;
  p.cells.graph = VaeCell::create("mvae.graph", cfg.d, cfg.d_z, cfg.hidden, rng);
  p.cells.attr = VaeCell::create("mvae.attr", cfg.d, cfg.d_z, cfg.hidden, rng);
  p.cells.image = VaeCell::create("mvae.image", cfg.d, cfg.d_z, cfg.hidden, rng);
  return p;
}

std::vector<std::shared_ptr<ad::Tensor>> MvaeParams::all() const {
  std::vector<std::shared_ptr<ad::Tensor>> out;
  for (Modal m : kModals) {
    auto t = cells[m].tensors();
    out.insert(out.end(), t.begin(), t.end());
  }
  return out;
}

namespace {

ad::Var run_decoder(const ad::Var& z, const VaeCell& cell, const ForwardOptions& opt) {
  ad::Var h = z;
  for (const auto& blk : cell.decoder_stack) {
    h = blk.forward(h, 0);
    if (opt.training && opt.dropout > 0.0) h = nn::dropout(h, opt.dropout, true, *opt.rng);
  }
  return nn::affine(h, ad::Var::leaf(*cell.out_w), ad::Var::leaf(*cell.out_b));
}

}  // namespace

VaeOutput vae_forward(const ad::Var& input, const VaeCell& cell, const ad::Matrix& eps,
                      const ForwardOptions& opt) {
  if (!input.value().allFinite())
    throw std::invalid_argument("vae_forward: non-finite input");
  if (opt.training && opt.dropout > 0.0 && opt.rng == nullptr)
    throw std::invalid_argument("vae_forward: dropout requires an rng");

  ad::Var h = input;
  for (const auto& blk : cell.encoder_stack) {
    h = blk.forward(h, 0);
    if (opt.training && opt.dropout > 0.0) h = nn::dropout(h, opt.dropout, true, *opt.rng);
  }

  VaeOutput out;
  out.mu = nn::affine(h, ad::Var::leaf(*cell.mu_w), ad::Var::leaf(*cell.mu_b));
  // The sigma head is read as log-variance; exp keeps sigma positive and the
  // closed-form Gaussian KL applicable.
  ad::Var logvar = nn::affine(h, ad::Var::leaf(*cell.logvar_w), ad::Var::leaf(*cell.logvar_b));
  out.sigma = ad::vexp(ad::scale(logvar, 0.5));
  if (eps.rows() != out.mu.rows() || eps.cols() != out.mu.cols())
    throw std::invalid_argument("vae_forward: eps shape does not match mu");
  out.eps = eps;
  out.z = ad::add(out.mu, ad::mul(out.sigma, ad::Var::constant(eps)));
  out.reconstruction = run_decoder(out.z, cell, opt);
  return out;
}

VaeOutput vae_forward(const ad::Var& input, const VaeCell& cell, Rng* noise_rng,
                      const ForwardOptions& opt) {
  const Eigen::Index rows = input.rows();
  const Eigen::Index d_z = cell.mu_w->value.cols();
  ad::Matrix eps =
      noise_rng ? noise_rng->normal_matrix(rows, d_z) : ad::Matrix::Zero(rows, d_z);
  return vae_forward(input, cell, eps, opt);
}

std::map<Flow, PerModal<VaeOutput>> run_flows(const FlowBatch& batch,
                                              const std::vector<Flow>& flows,
                                              const MvaeParams& params, Rng* noise_rng,
                                              const ForwardOptions& opt) {
  std::map<Flow, PerModal<VaeOutput>> out;
  for (Flow f : flows) {
    if (is_mutual(f) && !batch.supervised)
      throw std::logic_error(std::string("run_flows: mutual flow ") + flow_name(f) +
                             " requested on an unsupervised batch");
    const bool from_source = (f == Flow::XX || f == Flow::XY);
    const auto& input = from_source ? batch.source : batch.target;
    if (!input)
      throw std::invalid_argument(std::string("run_flows: flow ") + flow_name(f) +
                                  " needs the " + (from_source ? "source" : "target") +
                                  " batch");
    PerModal<VaeOutput> per_modal;
    for (Modal m : kModals)
      per_modal[m] = vae_forward((*input)[m], params.cells[m], noise_rng, opt);
    out.emplace(f, std::move(per_modal));
  }
  return out;
}

PerModal<ad::Var> sample_unconditional(int count, const MvaeParams& params, Rng& rng) {
  if (count < 1) throw std::invalid_argument("sample_unconditional: count must be >= 1");
  PerModal<ad::Var> out;
  for (Modal m : kModals) {
    ad::Var z = ad::Var::constant(rng.normal_matrix(count, params.config.d_z));
    out[m] = run_decoder(z, params.cells[m], {});
  }
  return out;
}

}  // namespace geea
