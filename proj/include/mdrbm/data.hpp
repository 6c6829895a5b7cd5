#ifndef MDRBM_DATA_HPP
#define MDRBM_DATA_HPP

#include "mdrbm/dataset.hpp"
#include "mdrbm/rng.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mdrbm::data {

/// IDX image/label pair (MNIST layout). Pixels are scaled to [0, 1].
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 const std::string& name = "idx");

/// CIFAR-10 binary batches (3073-byte records), converted to BT.601 luma in [0, 1].
Dataset load_cifar10(const std::vector<std::filesystem::path>& batches, const std::string& name = "cifar10");

/// Delimited text with a header row. Labels map to indices in first-appearance order.
Dataset load_csv(const std::filesystem::path& path, const std::string& label_column, char delimiter = ',',
                 const std::string& name = "csv", std::vector<std::string>* class_names = nullptr);

/// BT.601 luma of an 8-bit RGB triple, scaled to [0, 1].
double bt601_luma(std::uint8_t r, std::uint8_t g, std::uint8_t b);

struct StandardizationStats {
  Vector mean;
  /// Per-feature standard deviation; features with std below kMinStd use 1.
  Vector std;

  static constexpr double kMinStd = 1e-8;

  static StandardizationStats fit(const Matrix& inputs);
  Matrix apply(const Matrix& inputs) const;
};

struct Standardized {
  StandardizationStats stats;
  Dataset train;
  std::vector<Dataset> others;
};

/// Fits statistics on `train` only and applies them to every dataset.
Standardized standardize(const Dataset& train, const std::vector<Dataset>& others = {});

/// Draws `count` rows without replacement; stratified draws count/K per class (remainder to low labels).
Dataset subsample(const Dataset& data, Eigen::Index count, const RngStream& rng, bool stratified = false);

/// Seeded split of a pooled dataset into disjoint train and test parts.
std::pair<Dataset, Dataset> split(const Dataset& pool, Eigen::Index train_count, Eigen::Index test_count,
                                  const RngStream& rng);

/// inputs + eta with eta i.i.d. N(0, sigma^2); row r draws from rng.substream(r).
Matrix add_awgn(const Matrix& inputs, double sigma, const RngStream& rng);

}  // namespace mdrbm::data

#endif  // MDRBM_DATA_HPP
