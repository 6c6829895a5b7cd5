#ifndef MDRBM_TESTS_ORACLES_HPP
#define MDRBM_TESTS_ORACLES_HPP

// Independent reference computations shared by the unit and acceptance tests.

#include "mdrbm/baselines.hpp"
#include "mdrbm/drbm.hpp"
#include "mdrbm/mdrbm.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

namespace oracle {

using mdrbm::DrbmParams;
using mdrbm::Matrix;
using mdrbm::RngStream;
using mdrbm::Vector;

/// Fills every parameter block with N(0, scale^2) entries.
template <typename Params>
void randomize(Params& p, RngStream& rng, double scale) {
  for (auto& block : p.blocks()) {
    for (Eigen::Index i = 0; i < block.size(); ++i) block(i) = scale * rng.normal();
  }
}

inline DrbmParams random_drbm(Eigen::Index n, Eigen::Index hidden, Eigen::Index classes, RngStream& rng,
                              double scale = 1.0) {
  DrbmParams p = DrbmParams::zeros(n, hidden, classes);
  randomize(p, rng, scale);
  return p;
}

inline Vector random_vector(Eigen::Index n, RngStream& rng, double scale = 1.0) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * rng.normal();
  return v;
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, RngStream& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

/// Negative DRBM energy -E(t = 1_k, h; x) written term by term.
inline double drbm_neg_energy(const DrbmParams& p, const Vector& x, Eigen::Index k, const Vector& h) {
  double e = p.b2(k);
  for (Eigen::Index j = 0; j < h.size(); ++j) {
    e += p.b1(j) * h(j) + p.w2(k, j) * h(j);
    for (Eigen::Index i = 0; i < x.size(); ++i) e += p.w1(j, i) * h(j) * x(i);
  }
  return e;
}

/// ln P(k | x) from the sum over all 2^H hidden configurations.
inline Vector drbm_log_probs(const DrbmParams& p, const Vector& x) {
  const Eigen::Index hidden = p.hidden();
  const Eigen::Index configs = Eigen::Index{1} << hidden;
  Vector log_joint(p.classes());
  Vector terms(configs);
  Vector h(hidden);
  for (Eigen::Index k = 0; k < p.classes(); ++k) {
    for (Eigen::Index c = 0; c < configs; ++c) {
      for (Eigen::Index j = 0; j < hidden; ++j) h(j) = ((c >> j) & 1) ? 1.0 : -1.0;
      terms(c) = drbm_neg_energy(p, x, k, h);
    }
    log_joint(k) = mdrbm::log_sum_exp(terms);
  }
  return (log_joint.array() - mdrbm::log_sum_exp(log_joint)).matrix();
}

/// All parameters of `p`, block after block.
template <typename Params>
std::vector<double> flatten(Params p) {
  std::vector<double> out;
  for (auto& block : p.blocks()) out.insert(out.end(), block.data(), block.data() + block.size());
  return out;
}

/// Central differences of `f` in every parameter coordinate.
template <typename Params, typename Fn>
std::vector<double> finite_difference(const Params& params, Fn&& f, double step = 1e-5) {
  std::vector<double> out;
  Params probe = params;
  auto blocks = probe.blocks();
  for (auto& block : blocks) {
    for (Eigen::Index i = 0; i < block.size(); ++i) {
      const double keep = block(i);
      block(i) = keep + step;
      const double up = f(probe);
      block(i) = keep - step;
      const double down = f(probe);
      block(i) = keep;
      out.push_back((up - down) / (2.0 * step));
    }
  }
  return out;
}

/// Relative error with a floor on the scale, so coordinates that are zero up to
/// truncation error do not dominate.
inline double relative_error(double a, double b, double floor = 1e-4) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline double max_relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, relative_error(a[i], b[i]));
  return a.size() == b.size() ? worst : INFINITY;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("mdrbm-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle

#endif  // MDRBM_TESTS_ORACLES_HPP
