#include "doctest.h"
#include "oracles.hpp"

#include "mdrbm/gbrbm.hpp"
#include "mdrbm/pelm.hpp"

#include <cmath>
#include <numbers>

using namespace mdrbm;

namespace {

GbrbmParams random_gbrbm(Eigen::Index n, Eigen::Index width, RngStream& rng) {
  GbrbmParams p = GbrbmParams::zeros(n, width);
  p.b0 = oracle::random_vector(width, rng, 0.5);
  p.w0 = oracle::random_matrix(width, n, rng, 0.5);
  p.c = oracle::random_vector(n, rng, 0.5);
  p.s = oracle::random_vector(n, rng, 0.3);
  return p;
}

// Mean ln G(x) from the z-sum of exp(-E) over the closed-form partition function.
double reference_log_likelihood(const GbrbmParams& p, const Matrix& x) {
  const Eigen::Index width = p.width();
  const Eigen::Index configs = Eigen::Index{1} << width;
  const Vector var = p.s.array().exp().matrix();
  Vector log_z_terms(configs);
  Matrix zs(configs, width);
  for (Eigen::Index c = 0; c < configs; ++c) {
    for (Eigen::Index j = 0; j < width; ++j) zs(c, j) = ((c >> j) & 1) ? 1.0 : -1.0;
    const Vector z = zs.row(c).transpose();
    const Vector drive = p.c + p.w0.transpose() * z;
    double t = p.b0.dot(z);
    for (Eigen::Index i = 0; i < p.inputs(); ++i) {
      t += 0.5 * std::log(2.0 * std::numbers::pi * var(i)) + 0.5 * var(i) * drive(i) * drive(i);
    }
    log_z_terms(c) = t;
  }
  const double log_z = log_sum_exp(log_z_terms);
  double total = 0.0;
  Vector terms(configs);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const Vector xr = x.row(r).transpose();
    for (Eigen::Index c = 0; c < configs; ++c) {
      const Vector z = zs.row(c).transpose();
      double neg_energy = p.c.dot(xr) + p.b0.dot(z) + z.dot(p.w0 * xr);
      for (Eigen::Index i = 0; i < p.inputs(); ++i) neg_energy -= xr(i) * xr(i) / (2.0 * var(i));
      terms(c) = neg_energy;
    }
    total += log_sum_exp(terms) - log_z;
  }
  return total / static_cast<double>(x.rows());
}

}  // namespace

TEST_CASE("hidden conditional") {
  const GbrbmParams zero = GbrbmParams::zeros(3, 2);
  CHECK(gbrbm::hidden_conditional(zero, Vector::Ones(3)).isApprox(Vector::Constant(2, 0.5)));

  GbrbmParams p = GbrbmParams::zeros(1, 1);
  p.b0 << 0.5;
  CHECK(gbrbm::hidden_conditional(p, Vector::Zero(1))(0) == doctest::Approx(0.7310586).epsilon(1e-7));

  RngStream rng(3);
  const GbrbmParams q = random_gbrbm(4, 3, rng);
  const Vector x = oracle::random_vector(4, rng);
  GbrbmParams moved = q;
  moved.c = oracle::random_vector(4, rng, 3.0);
  moved.s = oracle::random_vector(4, rng, 2.0);
  CHECK(gbrbm::hidden_conditional(q, x) == gbrbm::hidden_conditional(moved, x));

  const PelmParams layer = gbrbm::export_pelm(q, "run");
  const Vector u = pelm::potentials(layer, x);
  const Vector law = (1.0 + (-2.0 * u.array()).exp()).inverse().matrix();
  CHECK((gbrbm::hidden_conditional(q, x) - law).norm() < 1e-15);
}

TEST_CASE("visible conditional") {
  GbrbmParams p = GbrbmParams::zeros(1, 1);
  p.s << std::log(2.0);
  p.c << 0.5;
  p.w0 << 0.3;
  Vector plus(1);
  plus << 1.0;
  const VisibleGaussian g = gbrbm::visible_conditional(p, plus);
  CHECK(g.mean(0) == doctest::Approx(1.6));
  CHECK(g.variance(0) == doctest::Approx(2.0));

  const VisibleGaussian flat_case = gbrbm::visible_conditional(GbrbmParams::zeros(2, 3), Vector::Ones(3));
  CHECK(flat_case.mean.isZero());
  CHECK(flat_case.variance.isApprox(Vector::Ones(2)));

  Vector bad(1);
  bad << 0.5;
  CHECK_THROWS_AS(gbrbm::visible_conditional(p, bad), UsageError);

  // A saturated hidden bias pins z = +1, so a sweep samples x | z = +1.
  p.b0 << 60.0;
  RngStream rng(12);
  const int draws = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double x = gbrbm::gibbs_sweep(p, Vector::Zero(1), rng)(0);
    sum += x;
    sq += x * x;
  }
  const double mean = sum / draws;
  CHECK(std::abs(mean - 1.6) < 3.0 * std::sqrt(2.0 / draws));
  CHECK((sq / draws - mean * mean) == doctest::Approx(2.0).epsilon(0.03));
}

TEST_CASE("exact log-likelihood") {
  SUBCASE("factorized case is a standard normal") {
    RngStream rng(1);
    const Matrix x = oracle::random_matrix(4, 3, rng);
    double expected = 0.0;
    for (Eigen::Index r = 0; r < 4; ++r) {
      for (Eigen::Index i = 0; i < 3; ++i) expected += -0.5 * x(r, i) * x(r, i) - 0.5 * std::log(2.0 * std::numbers::pi);
    }
    CHECK(gbrbm::exact_log_likelihood(GbrbmParams::zeros(3, 2), x) == doctest::Approx(expected / 4.0).epsilon(1e-12));
  }
  SUBCASE("matches the enumeration reference") {
    RngStream rng(5);
    for (int trial = 0; trial < 10; ++trial) {
      const GbrbmParams p = random_gbrbm(3, 4, rng);
      const Matrix x = oracle::random_matrix(6, 3, rng);
      CHECK(gbrbm::exact_log_likelihood(p, x) == doctest::Approx(reference_log_likelihood(p, x)).epsilon(1e-10));
    }
  }
  SUBCASE("hidden permutation invariance") {
    RngStream rng(6);
    const GbrbmParams p = random_gbrbm(2, 3, rng);
    GbrbmParams q = p;
    q.b0 << p.b0(2), p.b0(0), p.b0(1);
    q.w0.row(0) = p.w0.row(2);
    q.w0.row(1) = p.w0.row(0);
    q.w0.row(2) = p.w0.row(1);
    const Matrix x = oracle::random_matrix(5, 2, rng);
    CHECK(gbrbm::exact_log_likelihood(q, x) == doctest::Approx(gbrbm::exact_log_likelihood(p, x)).epsilon(1e-13));
  }
  SUBCASE("capability limit") {
    CHECK_THROWS_AS(gbrbm::exact_log_likelihood(GbrbmParams::zeros(2, 13), Matrix::Zero(1, 2)), CapabilityError);
  }
}

TEST_CASE("CD gradient agrees with the exact likelihood gradient") {
  RngStream rng(31);
  int positive = 0, sign_total = 0, sign_agree = 0;
  const int trials = 20;
  for (int trial = 0; trial < trials; ++trial) {
    const GbrbmParams p = random_gbrbm(2, 3, rng);
    const Matrix x = oracle::random_matrix(400, 2, rng, 1.5);
    const auto exact = oracle::finite_difference(p, [&](const GbrbmParams& q) {
      return gbrbm::exact_log_likelihood(q, x);
    });
    const auto cd = oracle::flatten(gbrbm::cd_update(p, x, 50, rng.substream(static_cast<std::uint64_t>(trial))));
    double dot = 0.0;
    for (std::size_t i = 0; i < cd.size(); ++i) {
      dot += cd[i] * exact[i];
      ++sign_total;
      if ((cd[i] > 0) == (exact[i] > 0)) ++sign_agree;
    }
    if (dot > 0) ++positive;
  }
  CHECK(positive >= trials * 95 / 100);
  CHECK(sign_agree >= sign_total * 80 / 100);
}

TEST_CASE("CD update is deterministic and validates input") {
  RngStream rng(2);
  const GbrbmParams p = random_gbrbm(3, 2, rng);
  const Matrix x = oracle::random_matrix(10, 3, rng);
  double obj_a = 0, obj_b = 0;
  const auto a = oracle::flatten(gbrbm::cd_update(p, x, 1, RngStream(4), &obj_a));
  const auto b = oracle::flatten(gbrbm::cd_update(p, x, 1, RngStream(4), &obj_b));
  CHECK(a == b);
  CHECK(obj_a == obj_b);
  CHECK_THROWS_AS(gbrbm::cd_update(p, x, 0, RngStream(4)), UsageError);
  CHECK_THROWS_AS(gbrbm::cd_update(p, Matrix::Zero(0, 3), 1, RngStream(4)), UsageError);
}

TEST_CASE("training improves the likelihood of a two-component mixture") {
  RngStream data_rng(8);
  Matrix x(400, 2);
  for (Eigen::Index r = 0; r < 400; ++r) {
    const double centre = (r % 2) ? 1.5 : -1.5;
    x(r, 0) = centre + 0.5 * data_rng.normal();
    x(r, 1) = -centre + 0.5 * data_rng.normal();
  }
  RngStream init(1);
  const GbrbmParams start = GbrbmParams::init(2, 2, init);
  GbrbmTrainConfig config;
  config.train.epochs = 50;
  config.train.batch_size = 40;
  config.train.adam.rate = 0.01;
  std::vector<double> curve{gbrbm::exact_log_likelihood(start, x)};
  config.on_epoch = [&](const GbrbmParams& p, int) { curve.push_back(gbrbm::exact_log_likelihood(p, x)); };
  const GbrbmTrainResult result = gbrbm::train(start, x, config, RngStream(3));
  CHECK(curve.size() == 51);
  CHECK(curve.back() > curve.front());
  CHECK(result.history.size() == 50);

  const GbrbmTrainResult again = gbrbm::train(start, x, config, RngStream(3));
  CHECK(oracle::flatten(again.params) == oracle::flatten(result.params));

  GbrbmTrainConfig none = config;
  none.train.epochs = 0;
  none.on_epoch = nullptr;
  CHECK(oracle::flatten(gbrbm::train(start, x, none, RngStream(3)).params) == oracle::flatten(start));
}

TEST_CASE("export keeps the layer parameters only") {
  RngStream rng(9);
  const GbrbmParams p = random_gbrbm(3, 2, rng);
  const PelmParams layer = gbrbm::export_pelm(p, "gbrbm-run0");
  CHECK(layer.b0() == p.b0);
  CHECK(layer.w0() == p.w0);
  CHECK(layer.provenance() == "gbrbm");
  CHECK(layer.origin() == "gbrbm-run0");
  CHECK(layer.frozen());
}
