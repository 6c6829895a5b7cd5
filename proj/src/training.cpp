#include "mdrbm/training.hpp"

namespace mdrbm {

std::vector<Eigen::Index> shuffled_rows(Eigen::Index n, RngStream rng) {
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  for (std::size_t i = rows.size(); i > 1; --i) {
    std::swap(rows[i - 1], rows[rng.below(i)]);
  }
  return rows;
}

Eigen::Index clamp_batch_size(Eigen::Index requested, Eigen::Index n) {
  require(requested >= 1, "train: batch size must be positive");
  if (requested > n) {
    std::cerr << "warning: batch size " << requested << " exceeds dataset size " << n
              << "; clamping to " << n << '\n';
    return n;
  }
  return requested;
}

}  // namespace mdrbm
