#ifndef POLYTRAJ_TESTS_ORACLES_HPP
#define POLYTRAJ_TESTS_ORACLES_HPP

#include <Eigen/Dense>

#include <functional>
#include <random>
#include <vector>

#include "polytraj/problem.hpp"

// Independent reference computations used to freeze expected values.  These
// deliberately avoid the library's closed forms: polynomial evaluation by
// repeated coefficient differentiation, integrals by quadrature, transition
// matrices by series summation.
namespace polytraj::test {

double uniform(std::mt19937_64& rng, double lo, double hi);
Eigen::VectorXd uniform_vector(std::mt19937_64& rng, int n, double lo,
                               double hi);

// Derivative of the polynomial with coefficient rows `coeffs` (row r is the
// coefficient of t^r) evaluated by differentiating the coefficient array and
// running Horner's scheme.
Eigen::VectorXd poly_eval_deriv(const Eigen::MatrixXd& coeffs, double t,
                                int order);

// exp(S t) of the m-integrator chain by Taylor series (nilpotent, exact).
Eigen::MatrixXd integrator_chain_exp(int m, double t);

// Gauss-Legendre quadrature of sigma(s) sigma(s)^T over [0, t], where sigma
// holds the nonzero entries of the m-th monomial-basis derivative.
Eigen::MatrixXd rv_quadrature(double t, int m);

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double step);
Eigen::MatrixXd fd_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double step);

// Random smoothing-spline problem without constraints: goals drawn around a
// forward path, uniform weights.
struct RandomProblem {
  Problem problem;
  std::vector<double> times;
};
RandomProblem random_unconstrained(std::mt19937_64& rng, int degree, int dim,
                                   int segments);

// Same, plus axis-aligned box corridors around the goal path and velocity /
// acceleration bounds.
RandomProblem random_boxed(std::mt19937_64& rng, int degree, int dim,
                           int segments);

}  // namespace polytraj::test

#endif
