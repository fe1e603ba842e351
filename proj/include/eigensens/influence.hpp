#pragma once

#include <cstddef>
#include <optional>

#include <Eigen/Dense>

#include "eigensens/eigen_system.hpp"
#include "eigensens/fit.hpp"

namespace eigensens {

/// Post-removal eigenvalue approximations for one observation.
///
/// approx_values[j] is the Rayleigh quotient of the leave-one-out estimate at
/// the full-data eigenvector of rank j. The values keep the full-data rank
/// order and are never re-sorted: an inversion between neighbours is exactly
/// what switching detection looks for.
struct LooEigenApprox {
  std::size_t obs = 0;  // 1-based
  Eigen::VectorXd approx_values;
  std::optional<Eigen::VectorXd> exact_values;  // descending, when requested
};

/// Per-rank eigenvalue influence of one observation.
struct EigenInfluence {
  std::size_t obs = 0;  // 1-based
  Eigen::VectorXd hif;
  std::optional<Eigen::VectorXd> sif;  // needs a leave-one-out decomposition
  std::optional<Eigen::VectorXd> eif;  // covariance estimator only
};

/// eta_l^T (x - mean) for the eigenvector at 0-based rank l.
double omega(const EigenSystem& eigen, const Eigen::VectorXd& mean, const Eigen::VectorXd& x,
             std::size_t l);

LooEigenApprox approx_eigenvalues_loo(const Fit& fit, std::size_t row, bool with_exact = false);

/// -(n-1) (lambda_{j,(i)} - lambda_j), ranks matched by position in the two
/// descending spectra. Refuses (DegenerateError) when lambda_j is tied in the
/// full-data decomposition.
double sif_eigenvalue(const Fit& fit, std::size_t j, std::size_t row);
double sif_eigenvalue(const Fit& fit, const EigenSystem& loo, std::size_t j);

/// (x_i - xbar)(x_i - xbar)^T - Sigma. Covariance estimator only.
Eigen::MatrixXd eif_covariance(const Fit& fit, std::size_t row);

/// omega_{ji}^2 - lambda_j. Covariance estimator only; for anything else use
/// hif_eigenvalue().
double eif_eigenvalue(const Fit& fit, std::size_t j, std::size_t row);

/// -(n-1) eta_j^T (W_(i) - W) eta_j, valid for any estimator. eta_j^T W eta_j is
/// taken as lambda_j so that hif == -(n-1) (approx_j - lambda_j) holds exactly.
double hif_eigenvalue(const Fit& fit, std::size_t j, std::size_t row);

/// All ranks at once. `exact` adds the sample influence (one decomposition).
EigenInfluence eigen_influence(const Fit& fit, std::size_t row, bool exact);
EigenInfluence eigen_influence(const Fit& fit, std::size_t row, const EigenSystem& loo);

struct FiniteDifferenceCheck {
  double finite_difference = 0.0;
  double analytic = 0.0;

  double error() const;
};

/// Forward difference of lambda_j along the contaminated covariance
/// (1-eps) W + eps (1-eps) (x0-mu)(x0-mu)^T against the closed-form influence
/// eta_j^T [(x0-mu)(x0-mu)^T - W] eta_j. j is a 0-based rank.
FiniteDifferenceCheck lemma1_numeric_check(const Eigen::MatrixXd& w, const Eigen::VectorXd& x0,
                                           const Eigen::VectorXd& mu, std::size_t j,
                                           double eps = 1e-6);

/// Errors at eps and eps/2; a first-order difference has ratio close to 2.
struct DifferenceConvergence {
  FiniteDifferenceCheck at_eps;
  FiniteDifferenceCheck at_half_eps;

  double ratio() const { return at_eps.error() / at_half_eps.error(); }
};

DifferenceConvergence lemma1_convergence(const Eigen::MatrixXd& w, const Eigen::VectorXd& x0,
                                         const Eigen::VectorXd& mu, std::size_t j,
                                         double eps = 1e-6);

}  // namespace eigensens
