#include "mdrbm/baselines.hpp"

#include "mdrbm/init.hpp"

namespace mdrbm {

void ElmDrbmModel::validate() const {
  drbm.validate();
  require(drbm.inputs() == pelm.width(), "elm-drbm: DRBM input width differs from layer width");
}

MlpParams MlpParams::zeros(Eigen::Index inputs, Eigen::Index width, Eigen::Index hidden, Eigen::Index classes) {
  require(inputs >= 1 && width >= 1 && hidden >= 1 && classes >= 1, "mlp: layer sizes must be positive");
  return {Matrix::Zero(width, inputs),  Vector::Zero(width),  Matrix::Zero(hidden, width),
          Vector::Zero(hidden),         Matrix::Zero(classes, hidden), Vector::Zero(classes)};
}

MlpParams MlpParams::he(Eigen::Index inputs, Eigen::Index width, Eigen::Index hidden, Eigen::Index classes,
                        RngStream& rng) {
  MlpParams p = zeros(inputs, width, hidden, classes);
  p.w1 = init_he(inputs, width, rng);
  p.w2 = init_he(width, hidden, rng);
  p.w3 = init_he(hidden, classes, rng);
  return p;
}

void MlpParams::validate() const {
  require(w1.rows() == b1.size() && w2.cols() == w1.rows() && w2.rows() == b2.size() &&
              w3.cols() == w2.rows() && w3.rows() == b3.size(),
          "mlp: layer widths do not chain");
  if (!(w1.allFinite() && w2.allFinite() && w3.allFinite() && b1.allFinite() && b2.allFinite() &&
        b3.allFinite())) {
    throw NumericError("mlp: non-finite parameter");
  }
}

std::vector<BlockView> MlpParams::blocks() {
  return {flat(w1), flat(b1), flat(w2), flat(b2), flat(w3), flat(b3)};
}

namespace baselines {

namespace {

struct Forward {
  Matrix a1, h1, a2, h2, log_probs;
};

Forward forward(const MlpParams& p, const Eigen::Ref<const Matrix>& x) {
  require(x.cols() == p.inputs(), "mlp: input width does not match model");
  Forward f;
  f.a1 = x * p.w1.transpose();
  f.a1.rowwise() += p.b1.transpose();
  f.h1 = f.a1.cwiseMax(0.0);
  f.a2 = f.h1 * p.w2.transpose();
  f.a2.rowwise() += p.b2.transpose();
  f.h2 = f.a2.cwiseMax(0.0);
  f.log_probs = f.h2 * p.w3.transpose();
  f.log_probs.rowwise() += p.b3.transpose();
  for (Eigen::Index r = 0; r < f.log_probs.rows(); ++r) f.log_probs.row(r).array() -= log_sum_exp(f.log_probs.row(r));
  return f;
}

double count_correct(const Matrix& scores, const Dataset& data) {
  Eigen::Index correct = 0;
  for (Eigen::Index b = 0; b < scores.rows(); ++b) {
    if (mdrbm::argmax(scores.row(b)) == data.labels()[static_cast<std::size_t>(b)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace

ClassDistribution elm_drbm_infer(const ElmDrbmModel& model, const Eigen::Ref<const Vector>& x) {
  return drbm::class_log_probs(model.drbm, pelm::deterministic(model.pelm, x));
}

double elm_drbm_accuracy(const ElmDrbmModel& model, const Dataset& data) {
  require(!data.empty(), "elm-drbm: accuracy of an empty dataset");
  return drbm::accuracy(model.drbm, data.with_inputs(pelm::batch_deterministic(model.pelm, data.inputs())));
}

ElmDrbmTrainResult elm_drbm_train(const ElmDrbmModel& model, const Dataset& data, const TrainConfig& config,
                                  const RngStream& rng, const Dataset* heldout) {
  model.validate();
  const std::uint64_t layer_checksum = model.pelm.checksum();
  const Dataset features = data.with_inputs(pelm::batch_deterministic(model.pelm, data.inputs()));
  std::optional<Dataset> heldout_features;
  if (heldout) heldout_features = heldout->with_inputs(pelm::batch_deterministic(model.pelm, heldout->inputs()));
  auto result = drbm::train(model.drbm, features, config, rng, heldout_features ? &*heldout_features : nullptr);
  if (model.pelm.checksum() != layer_checksum) throw NumericError("elm-drbm: frozen layer changed during training");
  return {ElmDrbmModel{model.pelm, std::move(result.final_params)},
          ElmDrbmModel{model.pelm, std::move(result.best_params)}, result.best_epoch, std::move(result.history)};
}

ClassDistribution mlp_forward(const MlpParams& params, const Eigen::Ref<const Vector>& x) {
  require(x.size() == params.inputs(), "mlp: input length does not match model");
  const Forward f = forward(params, x.transpose());
  return ClassDistribution::from_log_probs(f.log_probs.row(0).transpose());
}

Matrix mlp_log_probs(const MlpParams& params, const Eigen::Ref<const Matrix>& inputs) {
  return forward(params, inputs).log_probs;
}

double mlp_accuracy(const MlpParams& params, const Dataset& data) {
  require(!data.empty(), "mlp: accuracy of an empty dataset");
  return count_correct(mlp_log_probs(params, data.inputs()), data);
}

double mlp_log_likelihood(const MlpParams& params, const Dataset& data) {
  require(!data.empty(), "mlp: log-likelihood of an empty dataset");
  const Matrix lp = mlp_log_probs(params, data.inputs());
  double total = 0.0;
  for (Eigen::Index b = 0; b < lp.rows(); ++b) total += lp(b, data.labels()[static_cast<std::size_t>(b)]);
  return total / static_cast<double>(data.size());
}

MlpParams mlp_gradients(const MlpParams& params, const Dataset& data, std::span<const Eigen::Index> rows,
                        double* objective) {
  require(!rows.empty(), "mlp: empty batch");
  const Matrix x = gather_inputs(data, rows);
  const std::vector<int> labels = gather_labels(data, rows);
  const Forward f = forward(params, x);
  const double scale = 1.0 / static_cast<double>(rows.size());

  // Ascent on the mean log-likelihood: d/d(logits) = (onehot - p) / B.
  Matrix d3 = -f.log_probs.array().exp().matrix();
  double total = 0.0;
  for (std::size_t b = 0; b < labels.size(); ++b) {
    d3(static_cast<Eigen::Index>(b), labels[b]) += 1.0;
    total += f.log_probs(static_cast<Eigen::Index>(b), labels[b]);
  }
  d3 *= scale;
  if (objective) *objective = total * scale;

  MlpParams g = MlpParams::zeros(params.inputs(), params.w1.rows(), params.w2.rows(), params.classes());
  g.w3.noalias() = d3.transpose() * f.h2;
  g.b3 = d3.colwise().sum().transpose();
  const Matrix d2 = ((d3 * params.w3).array() * (f.a2.array() > 0.0).cast<double>()).matrix();
  g.w2.noalias() = d2.transpose() * f.h1;
  g.b2 = d2.colwise().sum().transpose();
  const Matrix d1 = ((d2 * params.w2).array() * (f.a1.array() > 0.0).cast<double>()).matrix();
  g.w1.noalias() = d1.transpose() * x;
  g.b1 = d1.colwise().sum().transpose();
  return g;
}

TrainResult<MlpParams> mlp_train(const MlpParams& params, const Dataset& data, const TrainConfig& config,
                                 const RngStream& rng, const Dataset* heldout) {
  params.validate();
  require(data.features() == params.inputs(), "mlp: dataset width does not match model");
  auto step = [&](const MlpParams& p, std::span<const Eigen::Index> rows, int) {
    BatchStep<MlpParams> s;
    s.gradient = mlp_gradients(p, data, rows, &s.objective);
    return s;
  };
  auto evaluate = [&](const MlpParams& p, int) -> std::optional<double> {
    if (!heldout) return std::nullopt;
    return mlp_accuracy(p, *heldout);
  };
  return minibatch_ascent(params, data.size(), config, rng, step, evaluate);
}

}  // namespace baselines
}  // namespace mdrbm
