#ifndef MDRBM_GBRBM_HPP
#define MDRBM_GBRBM_HPP

#include "mdrbm/adam.hpp"
#include "mdrbm/pelm.hpp"
#include "mdrbm/training.hpp"

#include <functional>

namespace mdrbm {

/// Gaussian-Bernoulli RBM with energy
///   E(z, x) = sum_i x_i^2 / (2 sigma_i^2) - c.x - b0.z - z^T w0 x,
/// where sigma_i^2 = exp(s_i). The weight term is not scaled by 1/sigma^2.
struct GbrbmParams {
  Vector b0;  // hidden biases (width)
  Matrix w0;  // width x n
  Vector c;   // visible biases (n)
  Vector s;   // log visible variances (n)

  /// Gaussian weights with standard deviation `weight_scale`, zero biases, unit variances.
  static GbrbmParams init(Eigen::Index inputs, Eigen::Index width, RngStream& rng, double weight_scale = 0.01);
  static GbrbmParams zeros(Eigen::Index inputs, Eigen::Index width);

  Eigen::Index inputs() const { return w0.cols(); }
  Eigen::Index width() const { return w0.rows(); }
  Vector variances() const { return s.array().exp().matrix(); }

  void validate() const;
  std::vector<BlockView> blocks();
};

struct VisibleGaussian {
  Vector mean;
  Vector variance;
};

struct GbrbmTrainConfig {
  TrainConfig train{100, 100, {}, 0, false};
  int cd_steps = 1;
  /// Called after every epoch with the current parameters.
  std::function<void(const GbrbmParams&, int)> on_epoch;
};

struct GbrbmTrainResult {
  GbrbmParams params;
  History history;
};

namespace gbrbm {

/// P(z_j = +1 | x) = 1 / (1 + e^{-2 u_j(x)}); depends on b0 and w0 only.
Vector hidden_conditional(const GbrbmParams& params, const Eigen::Ref<const Vector>& x);

/// x_i | z ~ N(sigma_i^2 (c_i + sum_j w0_ji z_j), sigma_i^2).
VisibleGaussian visible_conditional(const GbrbmParams& params, const Eigen::Ref<const Vector>& z);

/// One Gibbs sweep z | x then x | z, starting from `x`.
Vector gibbs_sweep(const GbrbmParams& params, const Eigen::Ref<const Vector>& x, RngStream& rng);

/// CD-k estimate of the gradient of the mean marginal log-likelihood.
/// Row b of `batch` runs its chain on rng.substream(b). `objective` receives
/// the mean free-energy gap between data and reconstructions.
GbrbmParams cd_update(const GbrbmParams& params, const Eigen::Ref<const Matrix>& batch, int cd_steps,
                      const RngStream& rng, double* objective = nullptr);

/// Exact mean ln G(x) by enumerating the hidden layer (width <= 12).
double exact_log_likelihood(const GbrbmParams& params, const Eigen::Ref<const Matrix>& inputs);

/// Unsupervised mini-batch Adam ascent with CD-k gradient estimates.
GbrbmTrainResult train(const GbrbmParams& params, const Matrix& inputs, const GbrbmTrainConfig& config,
                       const RngStream& rng);

/// Freezes b0 and w0 into an input layer tagged "gbrbm"; c and s are dropped.
PelmParams export_pelm(const GbrbmParams& params, const std::string& run_id);

}  // namespace gbrbm
}  // namespace mdrbm

#endif  // MDRBM_GBRBM_HPP
