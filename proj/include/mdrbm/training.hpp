#ifndef MDRBM_TRAINING_HPP
#define MDRBM_TRAINING_HPP

#include "mdrbm/adam.hpp"
#include "mdrbm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace mdrbm {

struct TrainConfig {
  int epochs = 300;
  Eigen::Index batch_size = 100;
  AdamConfig adam;
  /// Held-out accuracy is measured every `eval_every` epochs and at the last epoch.
  int eval_every = 1;
  bool verbose = false;
};

struct EpochRecord {
  int epoch = 0;
  /// Mean of the per-batch objective (log-likelihood estimate) seen during the epoch.
  double train_objective = 0.0;
  /// NaN when no held-out evaluation ran this epoch.
  double heldout_accuracy = std::numeric_limits<double>::quiet_NaN();
};

using History = std::vector<EpochRecord>;

template <typename Params>
struct TrainResult {
  Params final_params;
  /// Parameters with the highest held-out accuracy (equals final_params without held-out data).
  Params best_params;
  int best_epoch = 0;
  double best_accuracy = std::numeric_limits<double>::quiet_NaN();
  History history;
};

/// Objective value and gradient of one mini-batch.
template <typename Params>
struct BatchStep {
  Params gradient;
  double objective = 0.0;
};

// Stream ids reserved for the training loop.
inline constexpr std::uint64_t kShuffleStream = 0x5348'5546'464C'4531ull;
inline constexpr std::uint64_t kSampleStream = 0x5341'4D50'4C45'5331ull;

std::vector<Eigen::Index> shuffled_rows(Eigen::Index n, RngStream rng);

Eigen::Index clamp_batch_size(Eigen::Index requested, Eigen::Index n);

/// Shuffled mini-batch Adam ascent shared by every trainable model.
///
/// `step(params, rows, epoch)` returns the batch gradient of the objective;
/// `evaluate(params, epoch)` optionally returns a held-out accuracy.
template <typename Params, typename StepFn, typename EvalFn>
TrainResult<Params> minibatch_ascent(Params params, Eigen::Index n, const TrainConfig& config,
                                     const RngStream& rng, StepFn&& step, EvalFn&& evaluate) {
  require(n > 0, "train: empty dataset");
  require(config.epochs >= 0, "train: negative epoch count");
  const Eigen::Index batch = clamp_batch_size(config.batch_size, n);

  TrainResult<Params> result{params, params, 0, std::numeric_limits<double>::quiet_NaN(), {}};
  AdamState adam(config.adam);
  const RngStream shuffle_root = rng.substream(kShuffleStream);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto order = shuffled_rows(n, shuffle_root.substream(static_cast<std::uint64_t>(epoch)));
    double objective_sum = 0.0;
    int batches = 0;
    for (Eigen::Index start = 0; start < n; start += batch) {
      const Eigen::Index len = std::min(batch, n - start);
      std::span<const Eigen::Index> rows(order.data() + start, static_cast<std::size_t>(len));
      BatchStep<Params> s = step(std::as_const(params), rows, epoch);
      objective_sum += s.objective;
      ++batches;
      adam.ascend(params.blocks(), s.gradient.blocks());
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_objective = objective_sum / batches;
    const bool due = config.eval_every > 0 && (epoch % config.eval_every == 0 || epoch == config.epochs);
    if (due) {
      if (std::optional<double> acc = evaluate(std::as_const(params), epoch)) {
        record.heldout_accuracy = *acc;
        if (std::isnan(result.best_accuracy) || *acc > result.best_accuracy) {
          result.best_accuracy = *acc;
          result.best_epoch = epoch;
          result.best_params = params;
        }
      }
    }
    if (config.verbose) {
      std::cerr << "epoch " << epoch << " objective " << record.train_objective;
      if (!std::isnan(record.heldout_accuracy)) std::cerr << " heldout " << record.heldout_accuracy;
      std::cerr << '\n';
    }
    result.history.push_back(record);
  }

  result.final_params = params;
  if (std::isnan(result.best_accuracy)) {
    result.best_params = params;
    result.best_epoch = config.epochs;
  }
  return result;
}

}  // namespace mdrbm

#endif  // MDRBM_TRAINING_HPP
