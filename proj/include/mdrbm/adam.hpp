#ifndef MDRBM_ADAM_HPP
#define MDRBM_ADAM_HPP

#include "mdrbm/core.hpp"

#include <vector>

namespace mdrbm {

/// Flat view over one parameter block (a weight matrix or a bias vector).
using BlockView = Eigen::Map<Eigen::VectorXd>;

template <typename Derived>
BlockView flat(Eigen::PlainObjectBase<Derived>& m) {
  return BlockView(m.data(), m.size());
}

struct AdamConfig {
  double rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam taking steps in the ascent direction.
///
/// Moments are allocated on the first step to the shapes of the blocks passed
/// in; later steps must pass the same block layout.
class AdamState {
 public:
  explicit AdamState(AdamConfig config = {}) : config_(config) {}

  void ascend(std::vector<BlockView> params, const std::vector<BlockView>& grads);

  long step_count() const { return steps_; }
  const AdamConfig& config() const { return config_; }
  const std::vector<Eigen::VectorXd>& first_moment() const { return first_; }
  const std::vector<Eigen::VectorXd>& second_moment() const { return second_; }

 private:
  AdamConfig config_;
  std::vector<Eigen::VectorXd> first_;
  std::vector<Eigen::VectorXd> second_;
  long steps_ = 0;
};

}  // namespace mdrbm

#endif  // MDRBM_ADAM_HPP
