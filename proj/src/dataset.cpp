#include "mdrbm/dataset.hpp"

#include <numeric>

namespace mdrbm {

Dataset::Dataset(Matrix inputs, std::vector<int> labels, int classes, std::string name)
    : inputs_(std::move(inputs)), labels_(std::move(labels)), classes_(classes), name_(std::move(name)) {
  require(classes_ >= 1, "dataset: class count must be positive");
  require(static_cast<Eigen::Index>(labels_.size()) == inputs_.rows(),
          "dataset: label count does not match input rows");
  if (!inputs_.allFinite()) throw NumericError("dataset '" + name_ + "': non-finite input");
  targets_ = Matrix::Zero(inputs_.rows(), classes_);
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    require(labels_[i] >= 0 && labels_[i] < classes_,
            "dataset: label " + std::to_string(labels_[i]) + " out of range");
    targets_(static_cast<Eigen::Index>(i), labels_[i]) = 1.0;
  }
}

Dataset Dataset::select(std::span<const Eigen::Index> indices, std::string name) const {
  std::vector<int> labels;
  labels.reserve(indices.size());
  for (auto i : indices) labels.push_back(labels_[static_cast<std::size_t>(i)]);
  return Dataset(gather_inputs(*this, indices), std::move(labels), classes_,
                 name.empty() ? name_ : std::move(name));
}

Dataset Dataset::with_inputs(Matrix inputs) const {
  return Dataset(std::move(inputs), labels_, classes_, name_);
}

std::vector<int> gather_labels(const Dataset& data, std::span<const Eigen::Index> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(data.labels()[static_cast<std::size_t>(r)]);
  return out;
}

Matrix gather_inputs(const Dataset& data, std::span<const Eigen::Index> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), data.features());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] >= 0 && rows[i] < data.size(), "dataset: row index out of range");
    out.row(static_cast<Eigen::Index>(i)) = data.inputs().row(rows[i]);
  }
  return out;
}

std::vector<Eigen::Index> all_rows(const Dataset& data) {
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(data.size()));
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  return rows;
}

}  // namespace mdrbm
