#ifndef MDRBM_INIT_HPP
#define MDRBM_INIT_HPP

#include "mdrbm/core.hpp"
#include "mdrbm/rng.hpp"

namespace mdrbm {

// Weight matrices are laid out fan_out x fan_in (one row per receiving unit).

/// Uniform on +/- sqrt(6 / (fan_in + fan_out)).
Matrix init_xavier(Eigen::Index fan_in, Eigen::Index fan_out, RngStream& rng);

/// Gaussian with variance 2 / fan_in.
Matrix init_he(Eigen::Index fan_in, Eigen::Index fan_out, RngStream& rng);

/// rows x n Gaussian with standard deviation 1 / sqrt(n).
Matrix init_gaussian_scaled(Eigen::Index rows, Eigen::Index n, RngStream& rng);

}  // namespace mdrbm

#endif  // MDRBM_INIT_HPP
