#include "mdrbm/init.hpp"

#include <cmath>

namespace mdrbm {

Matrix init_xavier(Eigen::Index fan_in, Eigen::Index fan_out, RngStream& rng) {
  require(fan_in >= 1 && fan_out >= 1, "init_xavier: fan sizes must be positive");
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix w(fan_out, fan_in);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = bound * (2.0 * rng.uniform() - 1.0);
  return w;
}

Matrix init_he(Eigen::Index fan_in, Eigen::Index fan_out, RngStream& rng) {
  require(fan_in >= 1 && fan_out >= 1, "init_he: fan sizes must be positive");
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  Matrix w(fan_out, fan_in);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = stddev * rng.normal();
  return w;
}

Matrix init_gaussian_scaled(Eigen::Index rows, Eigen::Index n, RngStream& rng) {
  require(n >= 1 && rows >= 1, "init_gaussian_scaled: sizes must be positive");
  const double stddev = 1.0 / std::sqrt(static_cast<double>(n));
  Matrix w(rows, n);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = stddev * rng.normal();
  return w;
}

}  // namespace mdrbm
