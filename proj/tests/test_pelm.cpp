#include "doctest.h"
#include "oracles.hpp"

#include "mdrbm/pelm.hpp"

#include <cmath>

using namespace mdrbm;

TEST_CASE("potentials") {
  Vector b0(1);
  b0 << 1.0;
  Matrix w0(1, 2);
  w0 << 2.0, -1.0;
  const PelmParams layer(b0, w0, "random", "test");
  CHECK(pelm::potentials(layer, Vector::Ones(2))(0) == doctest::Approx(2.0));
  CHECK(pelm::potentials(layer, Vector::Zero(2)) == b0);

  const PelmParams zero(Vector::Zero(3), Matrix::Zero(3, 2), "random", "test");
  CHECK(pelm::potentials(zero, Vector::Ones(2)).isZero());
  CHECK_THROWS_AS(pelm::potentials(zero, Vector::Ones(3)), UsageError);

  RngStream rng(1);
  const PelmParams random(oracle::random_vector(4, rng), oracle::random_matrix(4, 3, rng), "random", "test");
  const Matrix x = oracle::random_matrix(5, 3, rng);
  const Matrix batch = pelm::batch_potentials(random, x);
  for (Eigen::Index r = 0; r < 5; ++r) {
    CHECK((batch.row(r).transpose() - pelm::potentials(random, x.row(r).transpose())).norm() < 1e-14);
  }
}

TEST_CASE("construction validates and seals the layer") {
  CHECK_THROWS_AS(PelmParams(Vector::Zero(2), Matrix::Zero(3, 2), "random", "x"), UsageError);
  Matrix bad = Matrix::Zero(2, 2);
  bad(0, 1) = NAN;
  CHECK_THROWS_AS(PelmParams(Vector::Zero(2), bad, "random", "x"), NumericError);
  const PelmParams layer(Vector::Zero(2), Matrix::Ones(2, 2), "gbrbm", "run-7");
  CHECK(layer.frozen());
  CHECK(layer.provenance() == "gbrbm");
  CHECK(layer.origin() == "run-7");
  const PelmParams other(Vector::Zero(2), Matrix::Constant(2, 2, 2.0), "gbrbm", "run-7");
  CHECK(layer.checksum() != other.checksum());
  CHECK(layer.checksum() == PelmParams(layer).checksum());
}

TEST_CASE("sampling law") {
  SUBCASE("entries are exactly +/-1 and the plus frequency is logistic in 2u") {
    const Eigen::Index draws = 100000;
    Vector u(3);
    u << 0.0, 0.5, -2.0;
    const Matrix z = pelm::sample_from_potentials(u, draws, RngStream(17));
    CHECK((z.array().abs() == 1.0).all());
    for (Eigen::Index j = 0; j < 3; ++j) {
      const double p = 1.0 / (1.0 + std::exp(-2.0 * u(j)));
      const double freq = (z.col(j).array() > 0).cast<double>().mean();
      CHECK(std::abs(freq - p) < 3.0 * std::sqrt(p * (1 - p) / draws));
    }
    CHECK(std::abs(z.col(0).mean()) < 3.0 / std::sqrt(static_cast<double>(draws)));
  }
  SUBCASE("saturation") {
    Vector u(2);
    u << 20.0, -20.0;
    const Matrix z = pelm::sample_from_potentials(u, 10000, RngStream(2));
    CHECK((z.col(0).array() == 1.0).all());
    CHECK((z.col(1).array() == -1.0).all());
  }
  SUBCASE("sample uses the layer's potentials and is reproducible") {
    RngStream rng(4);
    const PelmParams layer(oracle::random_vector(5, rng), oracle::random_matrix(5, 3, rng), "random", "x");
    const Vector x = oracle::random_vector(3, rng);
    const PelmSampleBatch a = pelm::sample(layer, x, 20, RngStream(8), 3);
    const PelmSampleBatch b = pelm::sample(layer, x, 20, RngStream(8), 3);
    CHECK(a.samples == b.samples);
    CHECK(a.count() == 20);
    CHECK(a.source == 3);
    CHECK(a.samples == pelm::sample_from_potentials(pelm::potentials(layer, x), 20, RngStream(8)));
    CHECK(a.samples != pelm::sample(layer, x, 20, RngStream(9)).samples);
    CHECK_THROWS_AS(pelm::sample(layer, x, 0, rng), UsageError);
  }
}

TEST_CASE("deterministic mode is tanh of the potentials") {
  const PelmParams layer(Vector::Ones(1), Matrix::Zero(1, 2), "random", "x");
  CHECK(pelm::deterministic(layer, Vector::Zero(2))(0) == doctest::Approx(0.7615942).epsilon(1e-7));
  const PelmParams zero(Vector::Zero(1), Matrix::Zero(1, 2), "random", "x");
  CHECK(pelm::deterministic(zero, Vector::Ones(2))(0) == 0.0);
  const PelmParams huge(Vector::Constant(2, 0.0), Matrix::Identity(2, 2) * 1e4, "random", "x");
  Vector x(2);
  x << 1.0, -1.0;
  CHECK(pelm::deterministic(huge, x)(0) == 1.0);
  CHECK(pelm::deterministic(huge, x)(1) == -1.0);

  // The deterministic output is the mean of the stochastic one.
  Vector u(1);
  u << 0.3;
  const Matrix z = pelm::sample_from_potentials(u, 100000, RngStream(6));
  const double sd = std::sqrt((1.0 - std::tanh(0.3) * std::tanh(0.3)) / 100000.0);
  CHECK(std::abs(z.mean() - std::tanh(0.3)) < 3.0 * sd);
}
