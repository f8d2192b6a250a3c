#ifndef POLYTRAJ_SRC_INTERNAL_HPP
#define POLYTRAJ_SRC_INTERNAL_HPP

#include <Eigen/Dense>

#include <cmath>

namespace polytraj::detail {

inline double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

// d^k/dt^k of t^p, zero when k > p.
inline double monomial_deriv(int p, int k, double t) {
  if (k > p) return 0.0;
  return factorial(p) / factorial(p - k) * std::pow(t, p - k);
}

inline Eigen::MatrixXd kron_identity(const Eigen::MatrixXd& m, int d) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m.rows() * d, m.cols() * d);
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      out.block(i * d, j * d, d, d) =
          m(i, j) * Eigen::MatrixXd::Identity(d, d);
  return out;
}

}  // namespace polytraj::detail

#endif
