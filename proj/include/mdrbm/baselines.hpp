#ifndef MDRBM_BASELINES_HPP
#define MDRBM_BASELINES_HPP

#include "mdrbm/drbm.hpp"
#include "mdrbm/pelm.hpp"

namespace mdrbm {

/// DRBM fed with the deterministic layer output z = tanh(u(x)).
struct ElmDrbmModel {
  PelmParams pelm;
  DrbmParams drbm;

  void validate() const;
};

struct ElmDrbmTrainResult {
  ElmDrbmModel final_model;
  ElmDrbmModel best_model;
  int best_epoch = 0;
  History history;
};

/// Four-layer feed-forward classifier n -> width -> hidden -> K with rectifier hidden units.
struct MlpParams {
  Matrix w1;  // width x n
  Vector b1;
  Matrix w2;  // hidden x width
  Vector b2;
  Matrix w3;  // K x hidden
  Vector b3;

  static MlpParams zeros(Eigen::Index inputs, Eigen::Index width, Eigen::Index hidden, Eigen::Index classes);
  /// He-initialized weights, zero biases.
  static MlpParams he(Eigen::Index inputs, Eigen::Index width, Eigen::Index hidden, Eigen::Index classes,
                      RngStream& rng);

  Eigen::Index inputs() const { return w1.cols(); }
  Eigen::Index classes() const { return w3.rows(); }
  void validate() const;
  std::vector<BlockView> blocks();
};

namespace baselines {

ClassDistribution elm_drbm_infer(const ElmDrbmModel& model, const Eigen::Ref<const Vector>& x);
double elm_drbm_accuracy(const ElmDrbmModel& model, const Dataset& data);

/// Maps the dataset through the frozen layer once, then trains the DRBM on the result.
ElmDrbmTrainResult elm_drbm_train(const ElmDrbmModel& model, const Dataset& data, const TrainConfig& config,
                                  const RngStream& rng, const Dataset* heldout = nullptr);

ClassDistribution mlp_forward(const MlpParams& params, const Eigen::Ref<const Vector>& x);
/// Row-wise log class probabilities (B x K).
Matrix mlp_log_probs(const MlpParams& params, const Eigen::Ref<const Matrix>& inputs);
double mlp_accuracy(const MlpParams& params, const Dataset& data);
/// Mean log-likelihood of the true classes (negated cross-entropy).
double mlp_log_likelihood(const MlpParams& params, const Dataset& data);

/// Backpropagated gradient of the mean log-likelihood over `rows`.
MlpParams mlp_gradients(const MlpParams& params, const Dataset& data, std::span<const Eigen::Index> rows,
                        double* objective = nullptr);

TrainResult<MlpParams> mlp_train(const MlpParams& params, const Dataset& data, const TrainConfig& config,
                                 const RngStream& rng, const Dataset* heldout = nullptr);

}  // namespace baselines
}  // namespace mdrbm

#endif  // MDRBM_BASELINES_HPP
