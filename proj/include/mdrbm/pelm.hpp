#ifndef MDRBM_PELM_HPP
#define MDRBM_PELM_HPP

#include "mdrbm/core.hpp"
#include "mdrbm/rng.hpp"

#include <cstdint>
#include <string>

namespace mdrbm {

/// Frozen input layer: biases b0 (width) and weights w0 (width x n).
///
/// Values are fixed at construction; only const access is exposed, so no
/// training routine can modify them.
class PelmParams {
 public:
  PelmParams() = default;
  PelmParams(Vector b0, Matrix w0, std::string provenance, std::string origin);

  const Vector& b0() const { return b0_; }
  const Matrix& w0() const { return w0_; }
  Eigen::Index width() const { return w0_.rows(); }
  Eigen::Index inputs() const { return w0_.cols(); }
  /// "random" or "gbrbm".
  const std::string& provenance() const { return provenance_; }
  /// Seed or pretraining run id the layer came from.
  const std::string& origin() const { return origin_; }
  bool frozen() const { return true; }

  /// FNV-1a over the raw bytes of b0 and w0.
  std::uint64_t checksum() const;

 private:
  Vector b0_;
  Matrix w0_;
  std::string provenance_;
  std::string origin_;
};

/// S configurations of the +/-1 layer drawn for one input.
struct PelmSampleBatch {
  Matrix samples;  // S x width, entries exactly -1 or +1
  Eigen::Index source = -1;
  Eigen::Index count() const { return samples.rows(); }
};

namespace pelm {

/// u(x) = b0 + w0 x.
Vector potentials(const PelmParams& layer, const Eigen::Ref<const Vector>& x);
/// Row-wise potentials for a batch of inputs (B x width).
Matrix batch_potentials(const PelmParams& layer, const Eigen::Ref<const Matrix>& inputs);

/// Draws S configurations; sample nu uses rng.substream(nu).
PelmSampleBatch sample(const PelmParams& layer, const Eigen::Ref<const Vector>& x, Eigen::Index count,
                       const RngStream& rng, Eigen::Index source = -1);

/// Same law, starting from precomputed potentials.
Matrix sample_from_potentials(const Eigen::Ref<const Vector>& potentials, Eigen::Index count,
                              const RngStream& rng);

/// tanh(u(x)), the mean of the stochastic layer.
Vector deterministic(const PelmParams& layer, const Eigen::Ref<const Vector>& x);
Matrix batch_deterministic(const PelmParams& layer, const Eigen::Ref<const Matrix>& inputs);

}  // namespace pelm
}  // namespace mdrbm

#endif  // MDRBM_PELM_HPP
