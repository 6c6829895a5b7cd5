#include "mdrbm/drbm.hpp"

#include "mdrbm/init.hpp"

namespace mdrbm {

namespace {

constexpr Eigen::Index kChunk = 2048;

// Hidden pre-activations shared by every class: inputs * w1^T + b1 (B x H).
Matrix hidden_drive(const DrbmParams& p, const Eigen::Ref<const Matrix>& inputs) {
  require(inputs.cols() == p.inputs(), "drbm: input width " + std::to_string(inputs.cols()) +
                                           " does not match model width " + std::to_string(p.inputs()));
  Matrix drive = inputs * p.w1.transpose();
  drive.rowwise() += p.b1.transpose();
  return drive;
}

Matrix free_energies_from_drive(const DrbmParams& p, const Matrix& drive) {
  // Row blocks keep the per-class temporaries in cache.
  constexpr Eigen::Index kRows = 64;
  Matrix f(drive.rows(), p.classes());
  Eigen::ArrayXXd lambda(kRows, drive.cols());
  for (Eigen::Index start = 0; start < drive.rows(); start += kRows) {
    const Eigen::Index len = std::min(kRows, drive.rows() - start);
    for (Eigen::Index k = 0; k < p.classes(); ++k) {
      lambda.topRows(len) = (drive.middleRows(start, len).rowwise() + p.w2.row(k)).array();
      f.col(k).segment(start, len) = row_sums_log_2cosh(lambda.topRows(len)).matrix();
    }
  }
  f.rowwise() += p.b2.transpose();
  return f;
}

void normalize_rows(Matrix& f) {
  for (Eigen::Index b = 0; b < f.rows(); ++b) {
    f.row(b).array() -= log_sum_exp(f.row(b));
  }
}

}  // namespace

DrbmParams DrbmParams::zeros(Eigen::Index inputs, Eigen::Index hidden, Eigen::Index classes) {
  require(inputs >= 1 && hidden >= 1 && classes >= 1, "drbm: layer sizes must be positive");
  return {Vector::Zero(hidden), Vector::Zero(classes), Matrix::Zero(hidden, inputs),
          Matrix::Zero(classes, hidden)};
}

DrbmParams DrbmParams::xavier(Eigen::Index inputs, Eigen::Index hidden, Eigen::Index classes,
                              RngStream& rng) {
  DrbmParams p = zeros(inputs, hidden, classes);
  p.w1 = init_xavier(inputs, hidden, rng);
  p.w2 = init_xavier(hidden, classes, rng);
  return p;
}

void DrbmParams::validate() const {
  require(w1.rows() == b1.size(), "drbm: w1 rows must equal hidden bias length");
  require(w2.cols() == w1.rows(), "drbm: w2 cols must equal hidden width");
  require(w2.rows() == b2.size(), "drbm: w2 rows must equal class count");
  require(w1.cols() >= 1 && w1.rows() >= 1 && w2.rows() >= 1, "drbm: empty layer");
  if (!(b1.allFinite() && b2.allFinite() && w1.allFinite() && w2.allFinite())) {
    throw NumericError("drbm: non-finite parameter");
  }
}

std::vector<BlockView> DrbmParams::blocks() { return {flat(b1), flat(b2), flat(w1), flat(w2)}; }

DrbmParams& DrbmParams::operator+=(const DrbmParams& o) {
  b1 += o.b1;
  b2 += o.b2;
  w1 += o.w1;
  w2 += o.w2;
  return *this;
}

DrbmParams& DrbmParams::operator*=(double s) {
  b1 *= s;
  b2 *= s;
  w1 *= s;
  w2 *= s;
  return *this;
}

ClassDistribution ClassDistribution::from_log_probs(Vector log_probs) {
  ClassDistribution d;
  d.probs = log_probs.array().exp().matrix();
  d.log_probs = std::move(log_probs);
  return d;
}

namespace drbm {

Matrix class_potentials(const DrbmParams& params, const Eigen::Ref<const Vector>& x) {
  require(x.size() == params.inputs(), "drbm: input length does not match model width");
  const Vector drive = params.w1 * x + params.b1;
  Matrix lambda = params.w2;
  lambda.rowwise() += drive.transpose();
  return lambda;
}

Matrix free_energies(const DrbmParams& params, const Eigen::Ref<const Matrix>& inputs) {
  return free_energies_from_drive(params, hidden_drive(params, inputs));
}

Matrix log_probs(const DrbmParams& params, const Eigen::Ref<const Matrix>& inputs) {
  Matrix f = free_energies(params, inputs);
  normalize_rows(f);
  return f;
}

ClassDistribution class_log_probs(const DrbmParams& params, const Eigen::Ref<const Vector>& x) {
  require(x.size() == params.inputs(), "drbm: input length does not match model width");
  const Matrix lp = log_probs(params, x.transpose());
  return ClassDistribution::from_log_probs(lp.row(0).transpose());
}

Eigen::Index predict(const DrbmParams& params, const Eigen::Ref<const Vector>& x) {
  return class_log_probs(params, x).argmax();
}

double log_likelihood(const DrbmParams& params, const Dataset& data) {
  require(!data.empty(), "drbm: log_likelihood of an empty dataset");
  double total = 0.0;
  for (Eigen::Index start = 0; start < data.size(); start += kChunk) {
    const Eigen::Index len = std::min(kChunk, data.size() - start);
    const Matrix lp = log_probs(params, data.inputs().middleRows(start, len));
    for (Eigen::Index b = 0; b < len; ++b) total += lp(b, data.labels()[static_cast<std::size_t>(start + b)]);
  }
  return total / static_cast<double>(data.size());
}

DrbmParams weighted_log_prob_gradient(const DrbmParams& params, const Eigen::Ref<const Matrix>& inputs,
                                      std::span<const int> labels, const Eigen::Ref<const Vector>& weights,
                                      Vector* log_prob_out) {
  require(weights.size() == inputs.rows(), "drbm: weight count differs from batch size");
  const Vector fixed = weights;
  return adaptive_log_prob_gradient(
      params, inputs, labels, [&](const Vector&) { return fixed; }, log_prob_out);
}

DrbmParams adaptive_log_prob_gradient(const DrbmParams& params, const Eigen::Ref<const Matrix>& inputs,
                                      std::span<const int> labels,
                                      const std::function<Vector(const Vector&)>& weigh,
                                      Vector* log_prob_out) {
  const Eigen::Index batch = inputs.rows();
  require(batch >= 1, "drbm: empty batch");
  require(static_cast<Eigen::Index>(labels.size()) == batch, "drbm: batch and label counts differ");

  const Matrix drive = hidden_drive(params, inputs);
  const Eigen::Index hidden = params.hidden();
  const Eigen::Index classes = params.classes();

  Matrix f = free_energies_from_drive(params, drive);
  normalize_rows(f);

  Vector log_prob(batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const int label = labels[static_cast<std::size_t>(b)];
    require(label >= 0 && label < classes, "drbm: label out of range");
    log_prob(b) = f(b, label);
  }
  const Vector weights = weigh(log_prob);
  require(weights.size() == batch, "drbm: weight count differs from batch size");

  // coeff_bk = weight_b * (delta_{k, label_b} - P(k | input_b))
  Matrix coeff = -f.array().exp().matrix();
  for (Eigen::Index b = 0; b < batch; ++b) coeff(b, labels[static_cast<std::size_t>(b)]) += 1.0;
  coeff = weights.asDiagonal() * coeff;
  if (log_prob_out) *log_prob_out = std::move(log_prob);

  DrbmParams grad = DrbmParams::zeros(params.inputs(), hidden, classes);
  grad.b2 = coeff.colwise().sum().transpose();
  // Second pass over row blocks recomputes tanh(lambda) instead of storing it per class.
  constexpr Eigen::Index kRows = 64;
  Matrix responsibility = Matrix::Zero(batch, hidden);
  Eigen::ArrayXXd lambda(kRows, hidden);
  Eigen::ArrayXXd decay(kRows, hidden);
  Eigen::ArrayXXd tanh_lambda(kRows, hidden);
  for (Eigen::Index start = 0; start < batch; start += kRows) {
    const Eigen::Index len = std::min(kRows, batch - start);
    auto resp = responsibility.middleRows(start, len);
    for (Eigen::Index k = 0; k < classes; ++k) {
      // Eigen's double tanh is scalar; this form vectorizes.
      lambda.topRows(len) = (drive.middleRows(start, len).rowwise() + params.w2.row(k)).array();
      decay.topRows(len) = (-2.0 * lambda.topRows(len).abs()).exp();
      tanh_lambda.topRows(len) =
          lambda.topRows(len).sign() * (1.0 - decay.topRows(len)) / (1.0 + decay.topRows(len));
      tanh_lambda.topRows(len).colwise() *= coeff.col(k).segment(start, len).array();
      grad.w2.row(k) += tanh_lambda.topRows(len).colwise().sum().matrix();
      resp += tanh_lambda.topRows(len).matrix();
    }
  }
  grad.b1 = responsibility.colwise().sum().transpose();
  grad.w1.noalias() = responsibility.transpose() * inputs;
  return grad;
}

DrbmParams gradients(const DrbmParams& params, const Dataset& data, std::span<const Eigen::Index> rows) {
  require(!rows.empty(), "drbm: empty batch");
  const Matrix inputs = gather_inputs(data, rows);
  const std::vector<int> labels = gather_labels(data, rows);
  const Vector weights = Vector::Constant(inputs.rows(), 1.0 / static_cast<double>(inputs.rows()));
  return weighted_log_prob_gradient(params, inputs, labels, weights);
}

double accuracy(const DrbmParams& params, const Dataset& data) {
  require(!data.empty(), "drbm: accuracy of an empty dataset");
  Eigen::Index correct = 0;
  for (Eigen::Index start = 0; start < data.size(); start += kChunk) {
    const Eigen::Index len = std::min(kChunk, data.size() - start);
    const Matrix f = free_energies(params, data.inputs().middleRows(start, len));
    for (Eigen::Index b = 0; b < len; ++b) {
      if (mdrbm::argmax(f.row(b)) == data.labels()[static_cast<std::size_t>(start + b)]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

TrainResult<DrbmParams> train(const DrbmParams& params, const Dataset& data, const TrainConfig& config,
                              const RngStream& rng, const Dataset* heldout) {
  params.validate();
  require(data.features() == params.inputs(), "drbm: dataset width does not match model");
  auto step = [&](const DrbmParams& p, std::span<const Eigen::Index> rows, int) {
    const Matrix inputs = gather_inputs(data, rows);
    const std::vector<int> labels = gather_labels(data, rows);
    const Vector weights = Vector::Constant(inputs.rows(), 1.0 / static_cast<double>(inputs.rows()));
    Vector log_prob;
    BatchStep<DrbmParams> s{weighted_log_prob_gradient(p, inputs, labels, weights, &log_prob), 0.0};
    s.objective = log_prob.mean();
    return s;
  };
  auto evaluate = [&](const DrbmParams& p, int) -> std::optional<double> {
    if (!heldout) return std::nullopt;
    return accuracy(p, *heldout);
  };
  return minibatch_ascent(params, data.size(), config, rng, step, evaluate);
}

}  // namespace drbm
}  // namespace mdrbm
