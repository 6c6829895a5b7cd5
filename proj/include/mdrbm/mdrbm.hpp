#ifndef MDRBM_MDRBM_HPP
#define MDRBM_MDRBM_HPP

#include "mdrbm/drbm.hpp"
#include "mdrbm/pelm.hpp"

namespace mdrbm {

/// A trainable DRBM stacked on a frozen stochastic +/-1 layer.
struct MdrbmModel {
  PelmParams pelm;
  DrbmParams drbm;

  /// Throws UsageError when the DRBM input width differs from the layer width.
  void validate() const;
};

struct SampleConfig {
  Eigen::Index s_train = 5;
  Eigen::Index s_infer = 50;
};

struct MdrbmTrainConfig {
  TrainConfig train;
  SampleConfig sampling;
};

struct MdrbmTrainResult {
  MdrbmModel final_model;
  MdrbmModel best_model;
  int best_epoch = 0;
  History history;
};

namespace mdrbm_model {

/// Largest layer width accepted by the enumeration routines.
inline constexpr Eigen::Index kMaxEnumerationWidth = 12;

/// Monte-Carlo class distribution: the mean of P(t | z) over `samples` draws of z, mixed in log space.
ClassDistribution class_probs(const MdrbmModel& model, const Eigen::Ref<const Vector>& x, Eigen::Index samples,
                              const RngStream& rng);

/// Exact mixture over all 2^width layer configurations.
ClassDistribution exact_class_probs(const MdrbmModel& model, const Eigen::Ref<const Vector>& x);

Eigen::Index predict(const MdrbmModel& model, const Eigen::Ref<const Vector>& x, Eigen::Index samples,
                     const RngStream& rng);

/// Sampled log class probabilities for every row (B x K); row r uses rng.substream(first_row + r).
Matrix sampled_log_probs(const MdrbmModel& model, const Eigen::Ref<const Matrix>& inputs, Eigen::Index samples,
                         const RngStream& rng, Eigen::Index first_row = 0);

double accuracy(const MdrbmModel& model, const Dataset& data, Eigen::Index samples, const RngStream& rng);

/// Self-normalized Monte-Carlo gradient of the mean log-likelihood over `rows`.
///
/// Datum `rows[i]` draws its samples from rng.substream(rows[i]). When
/// `objective` is non-null it receives the mean of ln(S^-1 sum_nu P(t | z_nu)).
DrbmParams sampled_gradients(const MdrbmModel& model, const Dataset& data, std::span<const Eigen::Index> rows,
                             Eigen::Index samples, const RngStream& rng, double* objective = nullptr);

/// Exact gradient over `rows` by enumerating z with posterior weights P(z | t, x).
DrbmParams exact_gradients(const MdrbmModel& model, const Dataset& data, std::span<const Eigen::Index> rows);

/// Exact mean log-likelihood over `rows` by enumeration.
double exact_log_likelihood(const MdrbmModel& model, const Dataset& data, std::span<const Eigen::Index> rows);

/// Ascends the likelihood in the DRBM parameters with fresh layer samples every epoch.
MdrbmTrainResult train(const MdrbmModel& model, const Dataset& data, const MdrbmTrainConfig& config,
                       const RngStream& rng, const Dataset* heldout = nullptr);

}  // namespace mdrbm_model
}  // namespace mdrbm

#endif  // MDRBM_MDRBM_HPP
