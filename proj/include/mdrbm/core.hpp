#ifndef MDRBM_CORE_HPP
#define MDRBM_CORE_HPP

#include <algorithm>
#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace mdrbm {

// Row-major so that one datum or one sample is one contiguous row.
template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = DenseMatrix<double>;
using Vector = DenseVector<double>;

// Error categories. The CLI maps each onto its own exit code.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CapabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw UsageError(what);
}

/// ln sum_i exp(v_i), shifted by the maximum so that large entries do not overflow.
template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::DenseBase<Derived>& v) {
  require(v.size() > 0, "log_sum_exp: empty vector");
  const auto top = v.maxCoeff();
  return top + std::log((v.derived().array() - top).exp().sum());
}

/// ln(2 cosh x) = |x| + ln(1 + e^{-2|x|}).
template <typename Scalar>
Scalar log_2cosh(Scalar x) {
  const Scalar a = std::abs(x);
  return a + std::log1p(std::exp(Scalar(-2) * a));
}

/// Elementwise ln(2 cosh x) over an Eigen array expression.
template <typename Derived>
auto log_2cosh_array(const Eigen::ArrayBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const auto a = x.abs();
  // log(1 + e) rather than log1p(e): Eigen vectorizes log but not log1p. For e below
  // machine epsilon the dropped term is negligible next to |x|.
  return a + (Scalar(1) + (Scalar(-2) * a).exp()).log();
}

/// Row sums of ln(2 cosh x). Uses sum|x| + ln prod(1 + e^{-2|x|}) over blocks of columns:
/// every factor lies in (1, 2], so a block of 512 cannot overflow, and one log replaces 512.
inline Eigen::ArrayXd row_sums_log_2cosh(const Eigen::Ref<const Eigen::ArrayXXd>& x) {
  constexpr Eigen::Index kBlock = 512;
  Eigen::ArrayXd out = x.abs().rowwise().sum();
  for (Eigen::Index c = 0; c < x.cols(); c += kBlock) {
    const Eigen::Index n = std::min(kBlock, x.cols() - c);
    const Eigen::ArrayXXd factors = 1.0 + (-2.0 * x.middleCols(c, n).abs()).exp();
    out += factors.rowwise().prod().log();
  }
  return out;
}

/// Logistic law of a +/-1 unit with potential u: P(z = +1) = 1 / (1 + e^{-2u}).
template <typename Scalar>
Scalar plus_one_probability(Scalar u) {
  return Scalar(1) / (Scalar(1) + std::exp(Scalar(-2) * u));
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.derived().allFinite();
}

/// Index of the largest entry, lowest index on ties.
template <typename Derived>
Eigen::Index argmax(const Eigen::DenseBase<Derived>& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = i;
  }
  return best;
}

}  // namespace mdrbm

#endif  // MDRBM_CORE_HPP
