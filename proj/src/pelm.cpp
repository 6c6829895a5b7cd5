#include "mdrbm/pelm.hpp"

namespace mdrbm {

namespace {

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t hash) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    hash ^= p[i];
    hash *= 0x100000001B3ull;
  }
  return hash;
}

}  // namespace

PelmParams::PelmParams(Vector b0, Matrix w0, std::string provenance, std::string origin)
    : b0_(std::move(b0)), w0_(std::move(w0)), provenance_(std::move(provenance)), origin_(std::move(origin)) {
  require(b0_.size() == w0_.rows(), "pelm: bias length must equal weight rows");
  require(w0_.rows() >= 1 && w0_.cols() >= 1, "pelm: empty layer");
  if (!(b0_.allFinite() && w0_.allFinite())) throw NumericError("pelm: non-finite parameter");
}

std::uint64_t PelmParams::checksum() const {
  std::uint64_t h = 0xCBF29CE484222325ull;
  h = fnv1a(b0_.data(), sizeof(double) * static_cast<std::size_t>(b0_.size()), h);
  h = fnv1a(w0_.data(), sizeof(double) * static_cast<std::size_t>(w0_.size()), h);
  return h;
}

namespace pelm {

Vector potentials(const PelmParams& layer, const Eigen::Ref<const Vector>& x) {
  require(x.size() == layer.inputs(), "pelm: input length does not match layer");
  return layer.w0() * x + layer.b0();
}

Matrix batch_potentials(const PelmParams& layer, const Eigen::Ref<const Matrix>& inputs) {
  require(inputs.cols() == layer.inputs(), "pelm: input width does not match layer");
  Matrix u = inputs * layer.w0().transpose();
  u.rowwise() += layer.b0().transpose();
  return u;
}

Matrix sample_from_potentials(const Eigen::Ref<const Vector>& potentials, Eigen::Index count,
                              const RngStream& rng) {
  require(count >= 1, "pelm: sample count must be positive");
  // The support is {-1, +1}, so the logistic argument is 2u.
  const Eigen::ArrayXd plus = (1.0 + (-2.0 * potentials.array()).exp()).inverse();
  Matrix z(count, potentials.size());
  Eigen::ArrayXd uniforms(potentials.size());
  for (Eigen::Index s = 0; s < count; ++s) {
    RngStream stream = rng.substream(static_cast<std::uint64_t>(s));
    stream.fill_uniform32(std::span<double>(uniforms.data(), static_cast<std::size_t>(uniforms.size())));
    z.row(s) = (uniforms < plus).select(1.0, Eigen::ArrayXd::Constant(uniforms.size(), -1.0)).transpose();
  }
  return z;
}

PelmSampleBatch sample(const PelmParams& layer, const Eigen::Ref<const Vector>& x, Eigen::Index count,
                       const RngStream& rng, Eigen::Index source) {
  return {sample_from_potentials(potentials(layer, x), count, rng), source};
}

Vector deterministic(const PelmParams& layer, const Eigen::Ref<const Vector>& x) {
  return potentials(layer, x).array().tanh().matrix();
}

Matrix batch_deterministic(const PelmParams& layer, const Eigen::Ref<const Matrix>& inputs) {
  return batch_potentials(layer, inputs).array().tanh().matrix();
}

}  // namespace pelm
}  // namespace mdrbm
