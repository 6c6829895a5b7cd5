#include "mdrbm/mdrbm.hpp"

#include <cmath>

namespace mdrbm {

namespace {

constexpr std::uint64_t kEvalStream = 0x4556'414C'5354'5231ull;
constexpr Eigen::Index kChunk = 256;

// All 2^width configurations of the +/-1 layer, one per row; bit j of the row index selects z_j.
Matrix enumerate_layer(Eigen::Index width) {
  if (width > mdrbm_model::kMaxEnumerationWidth) {
    throw CapabilityError("mdrbm: enumeration limited to width " +
                          std::to_string(mdrbm_model::kMaxEnumerationWidth) + ", got " + std::to_string(width));
  }
  const Eigen::Index count = Eigen::Index{1} << width;
  Matrix z(count, width);
  for (Eigen::Index c = 0; c < count; ++c) {
    for (Eigen::Index j = 0; j < width; ++j) z(c, j) = ((c >> j) & 1) ? 1.0 : -1.0;
  }
  return z;
}

// ln B(z | x) for every enumerated z.
Vector layer_log_mass(const Matrix& configs, const Vector& potentials) {
  const double log_norm = log_2cosh_array(potentials.array()).sum();
  return (configs * potentials).array() - log_norm;
}

Vector softmax(const Vector& v) {
  return (v.array() - log_sum_exp(v)).exp().matrix();
}

}  // namespace

void MdrbmModel::validate() const {
  drbm.validate();
  require(drbm.inputs() == pelm.width(), "mdrbm: DRBM input width " + std::to_string(drbm.inputs()) +
                                             " differs from layer width " + std::to_string(pelm.width()));
}

namespace mdrbm_model {

namespace {

Matrix sampled_log_probs(const PelmParams& layer, const DrbmParams& top, const Eigen::Ref<const Matrix>& inputs,
                         Eigen::Index samples, const RngStream& rng, Eigen::Index first_row) {
  require(samples >= 1, "mdrbm: sample count must be positive");
  const Eigen::Index classes = top.classes();
  const Eigen::Index width = layer.width();
  Matrix out(inputs.rows(), classes);
  const double log_count = std::log(static_cast<double>(samples));

  for (Eigen::Index start = 0; start < inputs.rows(); start += kChunk) {
    const Eigen::Index len = std::min(kChunk, inputs.rows() - start);
    const Matrix u = pelm::batch_potentials(layer, inputs.middleRows(start, len));
    Matrix z(len * samples, width);
    for (Eigen::Index b = 0; b < len; ++b) {
      z.middleRows(b * samples, samples) = pelm::sample_from_potentials(
          u.row(b).transpose(), samples, rng.substream(static_cast<std::uint64_t>(first_row + start + b)));
    }
    const Matrix lp = drbm::log_probs(top, z);
    for (Eigen::Index b = 0; b < len; ++b) {
      for (Eigen::Index k = 0; k < classes; ++k) {
        out(start + b, k) = log_sum_exp(lp.col(k).segment(b * samples, samples)) - log_count;
      }
      out.row(start + b).array() -= log_sum_exp(out.row(start + b));
    }
  }
  return out;
}

double sampled_accuracy(const PelmParams& layer, const DrbmParams& top, const Dataset& data, Eigen::Index samples,
                        const RngStream& rng) {
  require(!data.empty(), "mdrbm: accuracy of an empty dataset");
  const Matrix lp = sampled_log_probs(layer, top, data.inputs(), samples, rng, 0);
  Eigen::Index correct = 0;
  for (Eigen::Index b = 0; b < data.size(); ++b) {
    if (mdrbm::argmax(lp.row(b)) == data.labels()[static_cast<std::size_t>(b)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

DrbmParams sampled_gradients(const PelmParams& layer, const DrbmParams& top, const Dataset& data,
                             std::span<const Eigen::Index> rows, Eigen::Index samples, const RngStream& rng,
                             double* objective) {
  require(!rows.empty(), "mdrbm: empty batch");
  require(samples >= 1, "mdrbm: sample count must be positive");
  const auto batch = static_cast<Eigen::Index>(rows.size());
  const Matrix inputs = gather_inputs(data, rows);
  const Matrix u = pelm::batch_potentials(layer, inputs);

  Matrix z(batch * samples, layer.width());
  std::vector<int> labels;
  labels.reserve(static_cast<std::size_t>(batch * samples));
  for (Eigen::Index b = 0; b < batch; ++b) {
    const Eigen::Index row = rows[static_cast<std::size_t>(b)];
    z.middleRows(b * samples, samples) =
        pelm::sample_from_potentials(u.row(b).transpose(), samples, rng.substream(static_cast<std::uint64_t>(row)));
    labels.insert(labels.end(), static_cast<std::size_t>(samples), data.labels()[static_cast<std::size_t>(row)]);
  }

  // omega_{mu nu} = P(t | z_nu) / sum_nu' P(t | z_nu'), in log space; then the batch mean.
  const double log_count = std::log(static_cast<double>(samples));
  double objective_sum = 0.0;
  auto weigh = [&](const Vector& log_prob) {
    Vector w(log_prob.size());
    for (Eigen::Index b = 0; b < batch; ++b) {
      const auto seg = log_prob.segment(b * samples, samples);
      const double norm = log_sum_exp(seg);
      w.segment(b * samples, samples) = (seg.array() - norm).exp().matrix() / static_cast<double>(batch);
      objective_sum += norm - log_count;
    }
    return w;
  };
  DrbmParams grad = drbm::adaptive_log_prob_gradient(top, z, labels, weigh);
  if (objective) *objective = objective_sum / static_cast<double>(batch);
  return grad;
}

}  // namespace

Matrix sampled_log_probs(const MdrbmModel& model, const Eigen::Ref<const Matrix>& inputs, Eigen::Index samples,
                         const RngStream& rng, Eigen::Index first_row) {
  return sampled_log_probs(model.pelm, model.drbm, inputs, samples, rng, first_row);
}

ClassDistribution class_probs(const MdrbmModel& model, const Eigen::Ref<const Vector>& x, Eigen::Index samples,
                              const RngStream& rng) {
  require(x.size() == model.pelm.inputs(), "mdrbm: input length does not match layer");
  const Matrix lp = sampled_log_probs(model, x.transpose(), samples, rng);
  return ClassDistribution::from_log_probs(lp.row(0).transpose());
}

ClassDistribution exact_class_probs(const MdrbmModel& model, const Eigen::Ref<const Vector>& x) {
  const Matrix configs = enumerate_layer(model.pelm.width());
  const Vector log_mass = layer_log_mass(configs, pelm::potentials(model.pelm, x));
  const Matrix lp = drbm::log_probs(model.drbm, configs);
  Vector mixed(model.drbm.classes());
  for (Eigen::Index k = 0; k < mixed.size(); ++k) mixed(k) = log_sum_exp(log_mass + lp.col(k));
  mixed.array() -= log_sum_exp(mixed);
  return ClassDistribution::from_log_probs(std::move(mixed));
}

Eigen::Index predict(const MdrbmModel& model, const Eigen::Ref<const Vector>& x, Eigen::Index samples,
                     const RngStream& rng) {
  return class_probs(model, x, samples, rng).argmax();
}

double accuracy(const MdrbmModel& model, const Dataset& data, Eigen::Index samples, const RngStream& rng) {
  return sampled_accuracy(model.pelm, model.drbm, data, samples, rng);
}

DrbmParams sampled_gradients(const MdrbmModel& model, const Dataset& data, std::span<const Eigen::Index> rows,
                             Eigen::Index samples, const RngStream& rng, double* objective) {
  return sampled_gradients(model.pelm, model.drbm, data, rows, samples, rng, objective);
}

DrbmParams exact_gradients(const MdrbmModel& model, const Dataset& data, std::span<const Eigen::Index> rows) {
  require(!rows.empty(), "mdrbm: empty batch");
  const Matrix configs = enumerate_layer(model.pelm.width());
  const Eigen::Index count = configs.rows();
  const auto batch = static_cast<double>(rows.size());
  DrbmParams total = DrbmParams::zeros(model.drbm.inputs(), model.drbm.hidden(), model.drbm.classes());
  for (const Eigen::Index row : rows) {
    const Vector log_mass = layer_log_mass(configs, pelm::potentials(model.pelm, data.inputs().row(row).transpose()));
    const std::vector<int> labels(static_cast<std::size_t>(count), data.labels()[static_cast<std::size_t>(row)]);
    // Posterior P(z | t, x) is proportional to P(t | z) B(z | x).
    auto weigh = [&](const Vector& log_prob) { return Vector(softmax(log_prob + log_mass) / batch); };
    total += drbm::adaptive_log_prob_gradient(model.drbm, configs, labels, weigh);
  }
  return total;
}

double exact_log_likelihood(const MdrbmModel& model, const Dataset& data, std::span<const Eigen::Index> rows) {
  require(!rows.empty(), "mdrbm: empty batch");
  double total = 0.0;
  for (const Eigen::Index row : rows) {
    const auto dist = exact_class_probs(model, data.inputs().row(row).transpose());
    total += dist.log_probs(data.labels()[static_cast<std::size_t>(row)]);
  }
  return total / static_cast<double>(rows.size());
}

MdrbmTrainResult train(const MdrbmModel& model, const Dataset& data, const MdrbmTrainConfig& config,
                       const RngStream& rng, const Dataset* heldout) {
  model.validate();
  require(data.features() == model.pelm.inputs(), "mdrbm: dataset width does not match layer");
  require(config.sampling.s_train >= 1 && config.sampling.s_infer >= 1, "mdrbm: sample counts must be positive");
  const std::uint64_t layer_checksum = model.pelm.checksum();
  const RngStream sample_root = rng.substream(kSampleStream);
  const RngStream eval_root = rng.substream(kEvalStream);

  auto step = [&](const DrbmParams& p, std::span<const Eigen::Index> rows, int epoch) {
    BatchStep<DrbmParams> s;
    s.gradient = sampled_gradients(model.pelm, p, data, rows, config.sampling.s_train,
                                   sample_root.substream(static_cast<std::uint64_t>(epoch)), &s.objective);
    return s;
  };
  auto evaluate = [&](const DrbmParams& p, int epoch) -> std::optional<double> {
    if (!heldout) return std::nullopt;
    return sampled_accuracy(model.pelm, p, *heldout, config.sampling.s_infer,
                    eval_root.substream(static_cast<std::uint64_t>(epoch)));
  };
  auto result = minibatch_ascent(model.drbm, data.size(), config.train, rng, step, evaluate);

  if (model.pelm.checksum() != layer_checksum) throw NumericError("mdrbm: frozen layer changed during training");
  return {MdrbmModel{model.pelm, std::move(result.final_params)}, MdrbmModel{model.pelm, std::move(result.best_params)},
          result.best_epoch, std::move(result.history)};
}

}  // namespace mdrbm_model
}  // namespace mdrbm
