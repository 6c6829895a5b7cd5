#ifndef MDRBM_DATASET_HPP
#define MDRBM_DATASET_HPP

#include "mdrbm/core.hpp"

#include <span>
#include <string>
#include <vector>

namespace mdrbm {

/// Inputs with one-hot targets. Rows of `inputs` and `targets` are data points.
class Dataset {
 public:
  Dataset() = default;
  Dataset(Matrix inputs, std::vector<int> labels, int classes, std::string name = {});

  const Matrix& inputs() const { return inputs_; }
  Matrix& mutable_inputs() { return inputs_; }
  const Matrix& targets() const { return targets_; }
  const std::vector<int>& labels() const { return labels_; }

  Eigen::Index size() const { return inputs_.rows(); }
  Eigen::Index features() const { return inputs_.cols(); }
  int classes() const { return classes_; }
  const std::string& name() const { return name_; }
  bool empty() const { return size() == 0; }

  /// Rows selected by `indices`, in that order.
  Dataset select(std::span<const Eigen::Index> indices, std::string name = {}) const;
  /// Same targets with replaced inputs (used for transformed feature spaces).
  Dataset with_inputs(Matrix inputs) const;

 private:
  Matrix inputs_;
  Matrix targets_;
  std::vector<int> labels_;
  int classes_ = 0;
  std::string name_;
};

/// Gathers the labels of a batch of rows.
std::vector<int> gather_labels(const Dataset& data, std::span<const Eigen::Index> rows);
/// Gathers the inputs of a batch of rows.
Matrix gather_inputs(const Dataset& data, std::span<const Eigen::Index> rows);

std::vector<Eigen::Index> all_rows(const Dataset& data);

}  // namespace mdrbm

#endif  // MDRBM_DATASET_HPP
