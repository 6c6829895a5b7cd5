#include "mdrbm/adam.hpp"

#include <cmath>

namespace mdrbm {

void AdamState::ascend(std::vector<BlockView> params, const std::vector<BlockView>& grads) {
  require(params.size() == grads.size(), "adam: parameter and gradient block counts differ");
  if (first_.empty()) {
    for (const auto& p : params) {
      first_.push_back(Eigen::VectorXd::Zero(p.size()));
      second_.push_back(Eigen::VectorXd::Zero(p.size()));
    }
  }
  require(first_.size() == params.size(), "adam: block layout changed between steps");
  for (std::size_t b = 0; b < params.size(); ++b) {
    require(params[b].size() == grads[b].size() && params[b].size() == first_[b].size(),
            "adam: shape mismatch in block " + std::to_string(b));
    if (!grads[b].allFinite()) throw NumericError("adam: non-finite gradient in block " + std::to_string(b));
  }

  ++steps_;
  const double t = static_cast<double>(steps_);
  const double correct1 = 1.0 - std::pow(config_.beta1, t);
  const double correct2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto& m = first_[b];
    auto& v = second_[b];
    const auto& g = grads[b];
    m = config_.beta1 * m + (1.0 - config_.beta1) * g;
    v.array() = config_.beta2 * v.array() + (1.0 - config_.beta2) * g.array().square();
    params[b].array() += config_.rate * (m.array() / correct1) /
                         ((v.array() / correct2).sqrt() + config_.epsilon);
  }
}

}  // namespace mdrbm
