#include "doctest.h"
#include "oracles.hpp"

#include "mdrbm/drbm.hpp"

#include <cmath>

using namespace mdrbm;

namespace {

// Two Gaussian blobs separated along the diagonal.
Dataset separable_toy(Eigen::Index n_rows, RngStream rng) {
  Matrix x(n_rows, 2);
  std::vector<int> labels(static_cast<std::size_t>(n_rows));
  for (Eigen::Index r = 0; r < n_rows; ++r) {
    const int label = static_cast<int>(r % 2);
    const double centre = label ? 2.0 : -2.0;
    x(r, 0) = centre + 0.5 * rng.normal();
    x(r, 1) = centre + 0.5 * rng.normal();
    labels[static_cast<std::size_t>(r)] = label;
  }
  return Dataset(x, labels, 2, "toy");
}

}  // namespace

TEST_CASE("class potentials") {
  DrbmParams p = DrbmParams::zeros(2, 1, 1);
  p.b1 << 0.5;
  p.w2 << 1.0;
  p.w1 << 1.0, -1.0;
  Vector x(2);
  x << 2.0, 1.0;
  CHECK(drbm::class_potentials(p, x)(0, 0) == doctest::Approx(2.5));

  RngStream rng(2);
  const DrbmParams q = oracle::random_drbm(3, 4, 3, rng);
  const Matrix lambda = drbm::class_potentials(q, Vector::Zero(3));
  for (Eigen::Index k = 0; k < 3; ++k) {
    for (Eigen::Index j = 0; j < 4; ++j) CHECK(lambda(k, j) == doctest::Approx(q.b1(j) + q.w2(k, j)));
  }
  CHECK(drbm::class_potentials(DrbmParams::zeros(3, 4, 2), Vector::Ones(3)).isZero());
  CHECK_THROWS_AS(drbm::class_potentials(q, Vector::Zero(2)), UsageError);
}

TEST_CASE("class probabilities match enumeration") {
  RngStream rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const DrbmParams p = oracle::random_drbm(2, 3, 2, rng);
    const Vector x = oracle::random_vector(2, rng);
    const ClassDistribution d = drbm::class_log_probs(p, x);
    const Vector expected = oracle::drbm_log_probs(p, x);
    for (Eigen::Index k = 0; k < 2; ++k) CHECK(std::abs(d.log_probs(k) - expected(k)) < 1e-10);
    CHECK(std::abs(d.probs.sum() - 1.0) < 1e-12);
    CHECK(drbm::predict(p, x) == argmax(expected));
  }
}

TEST_CASE("zero model is uniform and predicts index 0") {
  const DrbmParams p = DrbmParams::zeros(3, 4, 5);
  const ClassDistribution d = drbm::class_log_probs(p, Vector::Ones(3));
  for (Eigen::Index k = 0; k < 5; ++k) CHECK(d.probs(k) == doctest::Approx(0.2));
  CHECK(drbm::predict(p, Vector::Ones(3)) == 0);

  DrbmParams biased = DrbmParams::zeros(3, 4, 5);
  biased.b2(1) = 5.0;
  CHECK(drbm::predict(biased, Vector::Ones(3)) == 1);
}

TEST_CASE("large parameters do not overflow") {
  RngStream rng(5);
  DrbmParams p = oracle::random_drbm(4, 6, 3, rng);
  p *= 1e3;
  const ClassDistribution d = drbm::class_log_probs(p, oracle::random_vector(4, rng));
  CHECK(d.probs.allFinite());
  CHECK(d.log_probs.allFinite());
  CHECK(std::abs(d.probs.sum() - 1.0) < 1e-12);
}

TEST_CASE("log-likelihood") {
  RngStream rng(8);
  const Matrix x = oracle::random_matrix(6, 3, rng);
  const Dataset data(x, {0, 1, 2, 1, 0, 2}, 3);
  CHECK(drbm::log_likelihood(DrbmParams::zeros(3, 4, 3), data) == doctest::Approx(-std::log(3.0)));

  const DrbmParams p = oracle::random_drbm(3, 4, 3, rng);
  double expected = 0.0;
  for (Eigen::Index r = 0; r < 6; ++r) {
    expected += oracle::drbm_log_probs(p, x.row(r).transpose())(data.labels()[static_cast<std::size_t>(r)]);
  }
  CHECK(std::abs(drbm::log_likelihood(p, data) - expected / 6.0) < 1e-10);
  CHECK(drbm::log_likelihood(p, data) <= 0.0);

  DrbmParams saturated = DrbmParams::zeros(3, 4, 3);
  saturated.b2(0) = 50.0;
  CHECK(drbm::log_likelihood(saturated, data.select(std::vector<Eigen::Index>{0})) ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(drbm::log_likelihood(p, Dataset()), UsageError);
}

TEST_CASE("gradients match central finite differences") {
  RngStream rng(21);
  const DrbmParams p = oracle::random_drbm(3, 4, 3, rng);
  const Dataset data(oracle::random_matrix(5, 3, rng), {0, 2, 1, 1, 0}, 3);
  const auto rows = all_rows(data);
  const auto analytic = oracle::flatten(drbm::gradients(p, data, rows));
  const auto numeric =
      oracle::finite_difference(p, [&](const DrbmParams& q) { return drbm::log_likelihood(q, data); });
  CHECK(oracle::max_relative_error(analytic, numeric) < 1e-6);
}

TEST_CASE("gradient special cases") {
  SUBCASE("zero model: output-bias gradient is one-hot minus uniform") {
    const Dataset one(Matrix::Ones(1, 3), {2}, 4);
    const DrbmParams g = drbm::gradients(DrbmParams::zeros(3, 5, 4), one, all_rows(one));
    for (Eigen::Index k = 0; k < 4; ++k) CHECK(g.b2(k) == doctest::Approx((k == 2 ? 1.0 : 0.0) - 0.25));
  }
  SUBCASE("saturated optimum is stationary") {
    DrbmParams p = DrbmParams::zeros(2, 3, 2);
    p.b2(1) = 40.0;
    const Dataset one(Matrix::Ones(1, 2), {1}, 2);
    const DrbmParams g = drbm::gradients(p, one, all_rows(one));
    double norm = 0.0;
    for (double v : oracle::flatten(g)) norm += v * v;
    CHECK(std::sqrt(norm) < 1e-6);
  }
  SUBCASE("weighted form reports log-probabilities") {
    RngStream rng(4);
    const DrbmParams p = oracle::random_drbm(2, 3, 3, rng);
    const Matrix x = oracle::random_matrix(4, 2, rng);
    const std::vector<int> labels{0, 1, 2, 0};
    Vector log_prob;
    drbm::weighted_log_prob_gradient(p, x, labels, Vector::Constant(4, 0.25), &log_prob);
    for (Eigen::Index r = 0; r < 4; ++r) {
      CHECK(log_prob(r) == doctest::Approx(oracle::drbm_log_probs(p, x.row(r).transpose())(labels[r])));
    }
    CHECK_THROWS_AS(drbm::weighted_log_prob_gradient(p, x, std::vector<int>{0, 1}, Vector::Ones(2)), UsageError);
  }
  SUBCASE("empty batch") {
    const Dataset data(Matrix::Ones(2, 2), {0, 1}, 2);
    CHECK_THROWS_AS(drbm::gradients(DrbmParams::zeros(2, 2, 2), data, {}), UsageError);
  }
}

TEST_CASE("training") {
  const Dataset data = separable_toy(200, RngStream(1));
  RngStream init(3);
  const DrbmParams start = DrbmParams::xavier(2, 8, 2, init);

  TrainConfig config;
  config.epochs = 200;
  config.batch_size = 20;
  config.adam.rate = 0.01;
  const auto result = drbm::train(start, data, config, RngStream(9), &data);
  CHECK(drbm::accuracy(result.final_params, data) >= 0.99);
  CHECK(result.history.size() == 200);
  CHECK(result.best_accuracy >= drbm::accuracy(result.final_params, data));
  CHECK(drbm::accuracy(result.best_params, data) == doctest::Approx(result.best_accuracy));

  const auto again = drbm::train(start, data, config, RngStream(9), &data);
  CHECK(oracle::flatten(again.final_params) == oracle::flatten(result.final_params));
  for (std::size_t e = 0; e < result.history.size(); ++e) {
    CHECK(again.history[e].train_objective == result.history[e].train_objective);
  }

  TrainConfig none = config;
  none.epochs = 0;
  CHECK(oracle::flatten(drbm::train(start, data, none, RngStream(9)).final_params) == oracle::flatten(start));

  TrainConfig oversized = config;
  oversized.epochs = 1;
  oversized.batch_size = 1000;
  CHECK(drbm::train(start, data, oversized, RngStream(9)).history.size() == 1);
}
