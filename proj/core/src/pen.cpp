#include "dcabc/pen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>

#include "dcabc/binary_io.hpp"
#include "dcabc/error.hpp"

namespace dcabc {

// Trajectories per pass. Small chunks keep the window activations cache
// resident; a whole batch at once is slower per trajectory.
constexpr std::size_t kPenChunk = 4;

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstLayerW = Eigen::Map<const RowMat>;
using LayerW = Eigen::Map<RowMat>;
using ConstLayerB = Eigen::Map<const Eigen::VectorXd>;
using LayerB = Eigen::Map<Eigen::VectorXd>;

constexpr std::array<char, 6> kMagic{'D', 'C', 'P', 'E', 'N', '\0'};

struct Offsets {
  std::array<std::size_t, 5> w{};
  std::array<std::size_t, 5> b{};
};

Offsets offsets_of(const PenArchitecture& arch) {
  Offsets o;
  std::size_t pos = 0;
  const auto layers = arch.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    o.w[l] = pos;
    pos += static_cast<std::size_t>(layers[l].in) * static_cast<std::size_t>(layers[l].out);
    o.b[l] = pos;
    pos += static_cast<std::size_t>(layers[l].out);
  }
  return o;
}

}  // namespace

std::vector<PenArchitecture::Layer> PenArchitecture::layers() const {
  const int window = (markov_order + 1) * state_dim;
  return {{window, inner_hidden},
          {inner_hidden, inner_hidden},
          {inner_hidden, representation},
          {markov_order * state_dim + representation, outer_hidden},
          {outer_hidden, output_dim}};
}

std::size_t PenArchitecture::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers()) n += static_cast<std::size_t>(l.in + 1) * static_cast<std::size_t>(l.out);
  return n;
}

void PenArchitecture::validate() const {
  if (state_dim < 1 || markov_order < 1 || inner_hidden < 1 || representation < 1 || outer_hidden < 1 ||
      output_dim < 1)
    throw DomainError("PEN architecture sizes must be positive");
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& rows) {
  Standardizer s;
  const double n = static_cast<double>(rows.rows());
  s.mean = rows.colwise().mean().transpose();
  s.scale.resize(rows.cols());
  for (Eigen::Index c = 0; c < rows.cols(); ++c) {
    const double var = (rows.col(c).array() - s.mean[c]).square().sum() / n;
    const double sd = std::sqrt(var);
    s.scale[c] = sd > 1e-12 * std::max(1.0, std::abs(s.mean[c])) ? sd : 1.0;
  }
  return s;
}

Standardizer Standardizer::identity(Eigen::Index dim) {
  return {Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim)};
}

PenNetwork::PenNetwork(PenArchitecture arch)
    : arch_(arch),
      params_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(arch.parameter_count()))),
      input_(Standardizer::identity(arch.state_dim)),
      target_(Standardizer::identity(arch.output_dim)) {
  arch_.validate();
}

void PenNetwork::initialize(Engine& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  const auto layers = arch_.layers();
  const Offsets off = offsets_of(arch_);
  params_.setZero();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const bool relu_follows = l != 2 && l != 4;
    const double sd = std::sqrt((relu_follows ? 2.0 : 1.0) / layers[l].in);
    const auto count = static_cast<std::size_t>(layers[l].in) * static_cast<std::size_t>(layers[l].out);
    for (std::size_t i = 0; i < count; ++i) params_[static_cast<Eigen::Index>(off.w[l] + i)] = sd * n(rng);
  }
}

void PenNetwork::check_input(const Eigen::MatrixXd& x) const {
  if (x.cols() != arch_.state_dim) throw DomainError("PEN input has the wrong state dimension");
  if (x.rows() < arch_.markov_order + 1) throw DomainError("PEN input is shorter than one window");
  if (expected_length_ > 0 && x.rows() != expected_length_)
    throw DomainError("PEN input length " + std::to_string(x.rows()) + " differs from the training length " +
                      std::to_string(expected_length_));
}

Eigen::MatrixXd PenNetwork::predict_standardized(const std::vector<const Eigen::MatrixXd*>& xs,
                                                 PenWorkspace& ws) const {
  if (xs.empty()) return Eigen::MatrixXd(arch_.output_dim, 0);
  const int order = arch_.markov_order;
  const int d = arch_.state_dim;
  const Eigen::Index len = xs.front()->rows();
  for (const auto* x : xs) {
    check_input(*x);
    if (x->rows() != len) throw DomainError("PEN batch mixes trajectory lengths");
  }
  const Eigen::Index windows = len - order;
  const auto batch = static_cast<Eigen::Index>(xs.size());
  const auto layers = arch_.layers();
  const Offsets off = offsets_of(arch_);
  auto W = [&](int l) {
    return ConstLayerW(params_.data() + off.w[static_cast<std::size_t>(l)], layers[static_cast<std::size_t>(l)].out,
                       layers[static_cast<std::size_t>(l)].in);
  };
  auto b = [&](int l) {
    return ConstLayerB(params_.data() + off.b[static_cast<std::size_t>(l)], layers[static_cast<std::size_t>(l)].out);
  };

  ws.a0.resize((order + 1) * d, batch * windows);
  ws.u.resize(order * d + arch_.representation, batch);
  for (Eigen::Index t = 0; t < batch; ++t) {
    const Eigen::MatrixXd& x = *xs[static_cast<std::size_t>(t)];
    for (Eigen::Index l = 0; l < windows; ++l)
      for (int o = 0; o <= order; ++o)
        for (int c = 0; c < d; ++c)
          ws.a0(o * d + c, t * windows + l) = (x(l + o, c) - input_.mean[c]) / input_.scale[c];
    for (int o = 0; o < order; ++o)
      for (int c = 0; c < d; ++c) ws.u(o * d + c, t) = (x(o, c) - input_.mean[c]) / input_.scale[c];
  }

  ws.z1.noalias() = W(0) * ws.a0;
  ws.z1.colwise() += b(0);
  ws.a1 = ws.z1.cwiseMax(0.0);
  ws.z2.noalias() = W(1) * ws.a1;
  ws.z2.colwise() += b(1);
  ws.a2 = ws.z2.cwiseMax(0.0);
  ws.phi.noalias() = W(2) * ws.a2;
  ws.phi.colwise() += b(2);
  for (Eigen::Index t = 0; t < batch; ++t)
    ws.u.block(order * d, t, arch_.representation, 1) = ws.phi.middleCols(t * windows, windows).rowwise().mean();

  ws.g1.noalias() = W(3) * ws.u;
  ws.g1.colwise() += b(3);
  ws.h = ws.g1.cwiseMax(0.0);
  ws.out.noalias() = W(4) * ws.h;
  ws.out.colwise() += b(4);
  return ws.out;
}

Eigen::MatrixXd PenNetwork::forward_batch_standardized(const std::vector<const Eigen::MatrixXd*>& xs) const {
  PenWorkspace ws;
  Eigen::MatrixXd out(arch_.output_dim, static_cast<Eigen::Index>(xs.size()));
  for (std::size_t first = 0; first < xs.size(); first += kPenChunk) {
    const std::size_t count = std::min(kPenChunk, xs.size() - first);
    const std::vector<const Eigen::MatrixXd*> chunk(xs.begin() + static_cast<std::ptrdiff_t>(first),
                                                    xs.begin() + static_cast<std::ptrdiff_t>(first + count));
    out.middleCols(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(count)) =
        predict_standardized(chunk, ws);
  }
  return out;
}

Eigen::MatrixXd PenNetwork::forward_batch(const std::vector<const Eigen::MatrixXd*>& xs) const {
  Eigen::MatrixXd out = forward_batch_standardized(xs);
  for (Eigen::Index t = 0; t < out.cols(); ++t)
    out.col(t) = (out.col(t).array() * target_.scale.array() + target_.mean.array()).matrix();
  return out;
}

Eigen::VectorXd PenNetwork::forward(const Trajectory& x) const { return forward_batch({&x.values}).col(0); }

double PenNetwork::loss_and_gradient(const std::vector<const Eigen::MatrixXd*>& xs,
                                     const Eigen::MatrixXd& targets_std, Eigen::VectorXd* grad) const {
  if (xs.size() > kPenChunk) {
    // Chunk-weighted average of the per-chunk means, for cache locality.
    if (targets_std.cols() != static_cast<Eigen::Index>(xs.size()))
      throw DomainError("PEN targets have the wrong shape");
    double total = 0.0;
    Eigen::VectorXd chunk_grad;
    if (grad) grad->setZero(params_.size());
    for (std::size_t first = 0; first < xs.size(); first += kPenChunk) {
      const std::size_t count = std::min(kPenChunk, xs.size() - first);
      const std::vector<const Eigen::MatrixXd*> chunk(xs.begin() + static_cast<std::ptrdiff_t>(first),
                                                      xs.begin() + static_cast<std::ptrdiff_t>(first + count));
      const auto cols = targets_std.middleCols(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(count));
      const double frac = static_cast<double>(count) / static_cast<double>(xs.size());
      total += frac * loss_and_gradient(chunk, cols, grad ? &chunk_grad : nullptr);
      if (grad) *grad += frac * chunk_grad;
    }
    return total;
  }
  PenWorkspace ws;
  const Eigen::MatrixXd pred = predict_standardized(xs, ws);
  if (targets_std.rows() != pred.rows() || targets_std.cols() != pred.cols())
    throw DomainError("PEN targets have the wrong shape");
  const Eigen::MatrixXd diff = pred - targets_std;
  const double count = static_cast<double>(diff.size());
  const double loss = diff.squaredNorm() / count;
  if (!grad) return loss;

  const int order = arch_.markov_order;
  const int d = arch_.state_dim;
  const Eigen::Index batch = pred.cols();
  const Eigen::Index windows = ws.a0.cols() / batch;
  const auto layers = arch_.layers();
  const Offsets off = offsets_of(arch_);
  grad->setZero(params_.size());
  auto W = [&](int l) {
    return ConstLayerW(params_.data() + off.w[static_cast<std::size_t>(l)], layers[static_cast<std::size_t>(l)].out,
                       layers[static_cast<std::size_t>(l)].in);
  };
  auto gW = [&](int l) {
    return LayerW(grad->data() + off.w[static_cast<std::size_t>(l)], layers[static_cast<std::size_t>(l)].out,
                  layers[static_cast<std::size_t>(l)].in);
  };
  auto gb = [&](int l) {
    return LayerB(grad->data() + off.b[static_cast<std::size_t>(l)], layers[static_cast<std::size_t>(l)].out);
  };

  const Eigen::MatrixXd d_out = diff * (2.0 / count);
  gW(4).noalias() = d_out * ws.h.transpose();
  gb(4) = d_out.rowwise().sum();
  Eigen::MatrixXd d_g1 = W(4).transpose() * d_out;
  d_g1 = d_g1.cwiseProduct((ws.g1.array() > 0.0).cast<double>().matrix());
  gW(3).noalias() = d_g1 * ws.u.transpose();
  gb(3) = d_g1.rowwise().sum();
  const Eigen::MatrixXd d_u = W(3).transpose() * d_g1;

  // Mean pooling spreads each trajectory's gradient evenly over its windows.
  Eigen::MatrixXd d_phi(arch_.representation, batch * windows);
  for (Eigen::Index t = 0; t < batch; ++t)
    d_phi.middleCols(t * windows, windows) =
        (d_u.block(order * d, t, arch_.representation, 1) / static_cast<double>(windows)).replicate(1, windows);
  gW(2).noalias() = d_phi * ws.a2.transpose();
  gb(2) = d_phi.rowwise().sum();
  Eigen::MatrixXd d_z2 = W(2).transpose() * d_phi;
  d_z2.array() *= (ws.z2.array() > 0.0).cast<double>();
  gW(1).noalias() = d_z2 * ws.a1.transpose();
  gb(1) = d_z2.rowwise().sum();
  Eigen::MatrixXd d_z1 = W(1).transpose() * d_z2;
  d_z1.array() *= (ws.z1.array() > 0.0).cast<double>();
  gW(0).noalias() = d_z1 * ws.a0.transpose();
  gb(0) = d_z1.rowwise().sum();
  return loss;
}

Eigen::VectorXd PenNetwork::standardize_target(const Eigen::VectorXd& theta) const {
  return ((theta - target_.mean).array() / target_.scale.array()).matrix();
}

Eigen::VectorXd PenNetwork::destandardize_target(const Eigen::VectorXd& z) const {
  return (z.array() * target_.scale.array() + target_.mean.array()).matrix();
}

void PenNetwork::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(kMagic.data(), kMagic.size());
  binio::put_u8(out, kPenFileVersion);
  for (int v : {arch_.state_dim, arch_.markov_order, arch_.inner_hidden, arch_.representation, arch_.outer_hidden,
                arch_.output_dim, expected_length_})
    binio::put_u64(out, static_cast<std::uint64_t>(v));
  const auto layers = arch_.layers();
  binio::put_u64(out, layers.size());
  for (const auto& l : layers) {
    binio::put_u64(out, static_cast<std::uint64_t>(l.in));
    binio::put_u64(out, static_cast<std::uint64_t>(l.out));
  }
  for (const Standardizer* s : {&input_, &target_}) {
    binio::put_u64(out, static_cast<std::uint64_t>(s->mean.size()));
    for (Eigen::Index i = 0; i < s->mean.size(); ++i) binio::put_f64(out, s->mean[i]);
    for (Eigen::Index i = 0; i < s->scale.size(); ++i) binio::put_f64(out, s->scale[i]);
  }
  binio::put_u64(out, static_cast<std::uint64_t>(params_.size()));
  for (Eigen::Index i = 0; i < params_.size(); ++i) binio::put_f64(out, params_[i]);
  if (!out) throw Error("failed writing " + path.string());
}

PenNetwork PenNetwork::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::array<char, 6> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw Error(path.string() + ": not a PEN weights file");
  const unsigned char version = binio::get_u8(in);
  if (version != kPenFileVersion) throw Error(path.string() + ": unsupported PEN file version");
  PenArchitecture arch;
  arch.state_dim = static_cast<int>(binio::get_u64(in));
  arch.markov_order = static_cast<int>(binio::get_u64(in));
  arch.inner_hidden = static_cast<int>(binio::get_u64(in));
  arch.representation = static_cast<int>(binio::get_u64(in));
  arch.outer_hidden = static_cast<int>(binio::get_u64(in));
  arch.output_dim = static_cast<int>(binio::get_u64(in));
  const int expected = static_cast<int>(binio::get_u64(in));
  PenNetwork net(arch);
  net.expected_length_ = expected;
  const auto layers = arch.layers();
  if (binio::get_u64(in) != layers.size()) throw Error(path.string() + ": layer count mismatch");
  for (const auto& l : layers)
    if (binio::get_u64(in) != static_cast<std::uint64_t>(l.in) ||
        binio::get_u64(in) != static_cast<std::uint64_t>(l.out))
      throw Error(path.string() + ": layer sizes do not match the architecture");
  for (Standardizer* s : {&net.input_, &net.target_}) {
    const auto n = static_cast<Eigen::Index>(binio::get_u64(in));
    s->mean.resize(n);
    s->scale.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) s->mean[i] = binio::get_f64(in);
    for (Eigen::Index i = 0; i < n; ++i) s->scale[i] = binio::get_f64(in);
  }
  if (net.input_.mean.size() != arch.state_dim || net.target_.mean.size() != arch.output_dim)
    throw Error(path.string() + ": standardization sizes do not match the architecture");
  const auto n = static_cast<Eigen::Index>(binio::get_u64(in));
  if (n != net.params_.size()) throw Error(path.string() + ": parameter count mismatch");
  for (Eigen::Index i = 0; i < n; ++i) net.params_[i] = binio::get_f64(in);
  return net;
}

}  // namespace dcabc
