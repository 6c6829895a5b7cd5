#ifndef MDRBM_DRBM_HPP
#define MDRBM_DRBM_HPP

#include "mdrbm/adam.hpp"
#include "mdrbm/dataset.hpp"
#include "mdrbm/training.hpp"

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace mdrbm {

/// Discriminative RBM parameters: hidden biases b1 (H), output biases b2 (K),
/// input-hidden weights w1 (H x n) and hidden-output weights w2 (K x H).
struct DrbmParams {
  Vector b1;
  Vector b2;
  Matrix w1;
  Matrix w2;

  static DrbmParams zeros(Eigen::Index inputs, Eigen::Index hidden, Eigen::Index classes);
  /// Xavier weights, zero biases.
  static DrbmParams xavier(Eigen::Index inputs, Eigen::Index hidden, Eigen::Index classes, RngStream& rng);

  Eigen::Index inputs() const { return w1.cols(); }
  Eigen::Index hidden() const { return w1.rows(); }
  Eigen::Index classes() const { return w2.rows(); }

  /// Throws UsageError on inconsistent shapes, NumericError on non-finite entries.
  void validate() const;
  std::vector<BlockView> blocks();
  DrbmParams& operator+=(const DrbmParams& other);
  DrbmParams& operator*=(double s);
};

struct ClassDistribution {
  Vector log_probs;
  Vector probs;

  static ClassDistribution from_log_probs(Vector log_probs);
  Eigen::Index argmax() const { return mdrbm::argmax(probs); }
};

namespace drbm {

/// K x H matrix of lambda_kj = b1_j + w2_kj + (w1 x)_j: everything multiplying h_j when t = 1_k.
Matrix class_potentials(const DrbmParams& params, const Eigen::Ref<const Vector>& x);

/// Per-class free energies F_k = b2_k + sum_j ln 2cosh(lambda_kj) for each row of `inputs` (B x K).
Matrix free_energies(const DrbmParams& params, const Eigen::Ref<const Matrix>& inputs);

/// Row-wise normalized log class probabilities (B x K).
Matrix log_probs(const DrbmParams& params, const Eigen::Ref<const Matrix>& inputs);

ClassDistribution class_log_probs(const DrbmParams& params, const Eigen::Ref<const Vector>& x);

Eigen::Index predict(const DrbmParams& params, const Eigen::Ref<const Vector>& x);

/// Mean log-likelihood of the true classes.
double log_likelihood(const DrbmParams& params, const Dataset& data);

/// sum_b weight_b * d ln P(label_b | input_b) / d theta for a batch of inputs.
///
/// When `log_prob_out` is non-null it receives ln P(label_b | input_b) per row.
DrbmParams weighted_log_prob_gradient(const DrbmParams& params, const Eigen::Ref<const Matrix>& inputs,
                                      std::span<const int> labels, const Eigen::Ref<const Vector>& weights,
                                      Vector* log_prob_out = nullptr);

/// As above, with weights computed from the per-row ln P(label_b | input_b) by `weigh`.
/// The forward pass is shared between the weighting and the gradient.
DrbmParams adaptive_log_prob_gradient(const DrbmParams& params, const Eigen::Ref<const Matrix>& inputs,
                                      std::span<const int> labels,
                                      const std::function<Vector(const Vector&)>& weigh,
                                      Vector* log_prob_out = nullptr);

/// Gradient of the mean log-likelihood over `rows` of `data`.
DrbmParams gradients(const DrbmParams& params, const Dataset& data, std::span<const Eigen::Index> rows);

/// Fraction of rows whose argmax class matches the label.
double accuracy(const DrbmParams& params, const Dataset& data);

/// Shuffled mini-batch Adam ascent of the log-likelihood. `heldout` drives best-model tracking.
TrainResult<DrbmParams> train(const DrbmParams& params, const Dataset& data, const TrainConfig& config,
                              const RngStream& rng, const Dataset* heldout = nullptr);

}  // namespace drbm
}  // namespace mdrbm

#endif  // MDRBM_DRBM_HPP
