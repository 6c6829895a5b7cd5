#include "mdrbm/gbrbm.hpp"

#include <cmath>
#include <numbers>

namespace mdrbm {

namespace {

constexpr Eigen::Index kMaxWidth = 12;

Matrix hidden_potentials(const GbrbmParams& p, const Eigen::Ref<const Matrix>& x) {
  Matrix u = x * p.w0.transpose();
  u.rowwise() += p.b0.transpose();
  return u;
}

// -F(x) = -sum x^2/(2 sigma^2) + c.x + sum_j ln 2cosh(u_j(x)), per row.
Vector negative_free_energy(const GbrbmParams& p, const Eigen::Ref<const Matrix>& x) {
  const Eigen::ArrayXd inv_var = (-p.s.array()).exp();
  const Matrix u = hidden_potentials(p, x);
  Vector out = (x * p.c).array() - 0.5 * (x.array().square().rowwise() * inv_var.transpose()).rowwise().sum();
  out.array() += row_sums_log_2cosh(u.array());
  return out;
}

}  // namespace

GbrbmParams GbrbmParams::zeros(Eigen::Index inputs, Eigen::Index width) {
  require(inputs >= 1 && width >= 1, "gbrbm: layer sizes must be positive");
  return {Vector::Zero(width), Matrix::Zero(width, inputs), Vector::Zero(inputs), Vector::Zero(inputs)};
}

GbrbmParams GbrbmParams::init(Eigen::Index inputs, Eigen::Index width, RngStream& rng, double weight_scale) {
  GbrbmParams p = zeros(inputs, width);
  for (Eigen::Index i = 0; i < p.w0.size(); ++i) p.w0.data()[i] = weight_scale * rng.normal();
  return p;
}

void GbrbmParams::validate() const {
  require(b0.size() == w0.rows() && c.size() == w0.cols() && s.size() == w0.cols(),
          "gbrbm: inconsistent parameter shapes");
  require(w0.rows() >= 1 && w0.cols() >= 1, "gbrbm: empty layer");
  if (!(b0.allFinite() && w0.allFinite() && c.allFinite() && s.allFinite())) {
    throw NumericError("gbrbm: non-finite parameter");
  }
}

std::vector<BlockView> GbrbmParams::blocks() { return {flat(b0), flat(w0), flat(c), flat(s)}; }

namespace gbrbm {

Vector hidden_conditional(const GbrbmParams& params, const Eigen::Ref<const Vector>& x) {
  require(x.size() == params.inputs(), "gbrbm: input length does not match model");
  const Vector u = params.w0 * x + params.b0;
  return (1.0 + (-2.0 * u.array()).exp()).inverse().matrix();
}

VisibleGaussian visible_conditional(const GbrbmParams& params, const Eigen::Ref<const Vector>& z) {
  require(z.size() == params.width(), "gbrbm: hidden vector length does not match model");
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    require(z(j) == 1.0 || z(j) == -1.0, "gbrbm: hidden entries must be -1 or +1");
  }
  VisibleGaussian g;
  g.variance = params.variances();
  g.mean = g.variance.cwiseProduct(params.c + params.w0.transpose() * z);
  return g;
}

Vector gibbs_sweep(const GbrbmParams& params, const Eigen::Ref<const Vector>& x, RngStream& rng) {
  const Vector plus = hidden_conditional(params, x);
  Vector z(plus.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = rng.uniform() < plus(j) ? 1.0 : -1.0;
  const VisibleGaussian g = visible_conditional(params, z);
  Vector next(g.mean.size());
  for (Eigen::Index i = 0; i < next.size(); ++i) next(i) = g.mean(i) + std::sqrt(g.variance(i)) * rng.normal();
  return next;
}

GbrbmParams cd_update(const GbrbmParams& params, const Eigen::Ref<const Matrix>& batch, int cd_steps,
                      const RngStream& rng, double* objective) {
  require(cd_steps >= 1, "gbrbm: CD needs at least one Gibbs step");
  require(batch.rows() >= 1, "gbrbm: empty batch");
  require(batch.cols() == params.inputs(), "gbrbm: batch width does not match model");
  const Eigen::Index rows = batch.rows();
  const Eigen::Index width = params.width();
  const Eigen::Index inputs = params.inputs();
  const Eigen::ArrayXd variance = params.s.array().exp();
  const Eigen::ArrayXd stddev = variance.sqrt();

  std::vector<RngStream> streams;
  streams.reserve(static_cast<std::size_t>(rows));
  for (Eigen::Index b = 0; b < rows; ++b) streams.push_back(rng.substream(static_cast<std::uint64_t>(b)));

  const Matrix data_u = hidden_potentials(params, batch);
  Matrix x = batch;
  Matrix u = data_u;
  Matrix z(rows, width);
  for (int step = 0; step < cd_steps; ++step) {
    const Eigen::ArrayXXd plus = (1.0 + (-2.0 * u.array()).exp()).inverse();
    for (Eigen::Index b = 0; b < rows; ++b) {
      auto& stream = streams[static_cast<std::size_t>(b)];
      for (Eigen::Index j = 0; j < width; ++j) z(b, j) = stream.uniform() < plus(b, j) ? 1.0 : -1.0;
    }
    x = z * params.w0;
    x.rowwise() += params.c.transpose();
    x.array().rowwise() *= variance.transpose();
    for (Eigen::Index b = 0; b < rows; ++b) {
      auto& stream = streams[static_cast<std::size_t>(b)];
      for (Eigen::Index i = 0; i < inputs; ++i) x(b, i) += stddev(i) * stream.normal();
    }
    u = hidden_potentials(params, x);
  }

  // Positive and negative statistics use E[z | x] = tanh(u).
  const Matrix data_h = data_u.array().tanh().matrix();
  const Matrix model_h = u.array().tanh().matrix();
  const double scale = 1.0 / static_cast<double>(rows);
  GbrbmParams grad = GbrbmParams::zeros(inputs, width);
  grad.b0 = scale * (data_h - model_h).colwise().sum().transpose();
  grad.w0.noalias() = scale * (data_h.transpose() * batch - model_h.transpose() * x);
  grad.c = scale * (batch - x).colwise().sum().transpose();
  grad.s = (0.5 * scale) * ((batch.array().square() - x.array().square()).colwise().sum().transpose() *
                            (-params.s.array()).exp())
                               .matrix();
  if (objective) *objective = (negative_free_energy(params, batch) - negative_free_energy(params, x)).mean();
  return grad;
}

double exact_log_likelihood(const GbrbmParams& params, const Eigen::Ref<const Matrix>& inputs) {
  params.validate();
  if (params.width() > kMaxWidth) {
    throw CapabilityError("gbrbm: exact likelihood limited to width " + std::to_string(kMaxWidth) + ", got " +
                          std::to_string(params.width()));
  }
  require(inputs.rows() >= 1 && inputs.cols() == params.inputs(), "gbrbm: input shape does not match model");
  const Eigen::ArrayXd variance = params.s.array().exp();
  const Eigen::Index count = Eigen::Index{1} << params.width();
  Vector terms(count);
  Vector z(params.width());
  for (Eigen::Index cfg = 0; cfg < count; ++cfg) {
    for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = ((cfg >> j) & 1) ? 1.0 : -1.0;
    const Eigen::ArrayXd drive = (params.c + params.w0.transpose() * z).array();
    terms(cfg) = params.b0.dot(z) + 0.5 * (variance * drive.square()).sum();
  }
  const double log_partition =
      log_sum_exp(terms) + 0.5 * (2.0 * std::numbers::pi * variance).log().sum();
  return negative_free_energy(params, inputs).mean() - log_partition;
}

GbrbmTrainResult train(const GbrbmParams& params, const Matrix& inputs, const GbrbmTrainConfig& config,
                       const RngStream& rng) {
  params.validate();
  require(inputs.cols() == params.inputs(), "gbrbm: input width does not match model");
  const RngStream sample_root = rng.substream(kSampleStream);
  auto step = [&](const GbrbmParams& p, std::span<const Eigen::Index> rows, int epoch) {
    const Matrix batch = inputs(std::vector<Eigen::Index>(rows.begin(), rows.end()), Eigen::placeholders::all);
    BatchStep<GbrbmParams> s;
    s.gradient = cd_update(p, batch, config.cd_steps,
                           sample_root.substream(static_cast<std::uint64_t>(epoch)).substream(
                               static_cast<std::uint64_t>(rows.front())),
                           &s.objective);
    return s;
  };
  auto evaluate = [&](const GbrbmParams& p, int epoch) -> std::optional<double> {
    if (config.on_epoch) config.on_epoch(p, epoch);
    return std::nullopt;
  };
  TrainConfig loop = config.train;
  if (config.on_epoch) loop.eval_every = 1;
  auto result = minibatch_ascent(params, inputs.rows(), loop, rng, step, evaluate);
  result.final_params.validate();
  return {std::move(result.final_params), std::move(result.history)};
}

PelmParams export_pelm(const GbrbmParams& params, const std::string& run_id) {
  params.validate();
  return PelmParams(params.b0, params.w0, "gbrbm", run_id);
}

}  // namespace gbrbm
}  // namespace mdrbm
