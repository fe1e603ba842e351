#include "eigensens/influence.hpp"

#include <cmath>
#include <string>

#include "eigensens/error.hpp"

namespace eigensens {

namespace {

void require_covariance(const Fit& fit, const char* what) {
  if (fit.spec().kind != EstimatorKind::covariance) {
    throw UnsupportedEstimator(std::string(what) +
                               " has a closed form only for the covariance estimator; use the "
                               "hybrid influence (hif) for " +
                               to_string(fit.spec().kind));
  }
}

void require_unique(const EigenSystem& eigen, std::size_t j, const char* what) {
  if (eigen.degenerate_at(j)) {
    throw DegenerateError(std::string(what) + ": eigenvalue " + std::to_string(j + 1) +
                          " is tied with a neighbour; its influence is undefined");
  }
}

double scale(const Fit& fit) { return static_cast<double>(fit.n() - 1); }

}  // namespace

double omega(const EigenSystem& eigen, const Eigen::VectorXd& mean, const Eigen::VectorXd& x,
             std::size_t l) {
  if (l >= eigen.size()) throw ConfigError("omega: rank out of range");
  return eigen.vectors.col(static_cast<Eigen::Index>(l)).dot(x - mean);
}

LooEigenApprox approx_eigenvalues_loo(const Fit& fit, std::size_t row, bool with_exact) {
  const SymmetricEstimate loo = fit.loo_estimate(row);
  const Eigen::MatrixXd& v = fit.eigen().vectors;
  LooEigenApprox out;
  out.obs = row + 1;
  out.approx_values = (v.transpose() * loo.matrix * v).diagonal();
  if (with_exact) out.exact_values = eigh(loo).values;
  return out;
}

double sif_eigenvalue(const Fit& fit, std::size_t j, std::size_t row) {
  fit.require_rank(j);
  require_unique(fit.eigen(), j, "sif_eigenvalue");
  return sif_eigenvalue(fit, fit.loo_eigen(row), j);
}

double sif_eigenvalue(const Fit& fit, const EigenSystem& loo, std::size_t j) {
  fit.require_rank(j);
  require_unique(fit.eigen(), j, "sif_eigenvalue");
  const auto k = static_cast<Eigen::Index>(j);
  return -scale(fit) * (loo.values(k) - fit.eigen().values(k));
}

Eigen::MatrixXd eif_covariance(const Fit& fit, std::size_t row) {
  require_covariance(fit, "eif_covariance");
  fit.require_row(row);
  const Eigen::VectorXd d = fit.working_data().row(static_cast<Eigen::Index>(row)).transpose();
  return d * d.transpose() - fit.estimate().matrix;
}

double eif_eigenvalue(const Fit& fit, std::size_t j, std::size_t row) {
  require_covariance(fit, "eif_eigenvalue");
  fit.require_rank(j);
  fit.require_row(row);
  require_unique(fit.eigen(), j, "eif_eigenvalue");
  const double w = omega(fit.eigen(), fit.mean(), fit.data().row(row), j);
  return w * w - fit.eigen().values(static_cast<Eigen::Index>(j));
}

double hif_eigenvalue(const Fit& fit, std::size_t j, std::size_t row) {
  fit.require_rank(j);
  const LooEigenApprox approx = approx_eigenvalues_loo(fit, row);
  const auto k = static_cast<Eigen::Index>(j);
  return -scale(fit) * (approx.approx_values(k) - fit.eigen().values(k));
}

namespace {

EigenInfluence empirical_part(const Fit& fit, std::size_t row) {
  const LooEigenApprox approx = approx_eigenvalues_loo(fit, row);
  const Eigen::VectorXd& lambda = fit.eigen().values;
  EigenInfluence out;
  out.obs = row + 1;
  out.hif = -scale(fit) * (approx.approx_values - lambda);
  if (fit.spec().kind == EstimatorKind::covariance) {
    const Eigen::VectorXd w =
        fit.eigen().vectors.transpose() *
        fit.working_data().row(static_cast<Eigen::Index>(row)).transpose();
    out.eif = w.cwiseProduct(w) - lambda;
  }
  return out;
}

}  // namespace

EigenInfluence eigen_influence(const Fit& fit, std::size_t row, bool exact) {
  fit.require_row(row);
  if (exact) return eigen_influence(fit, row, fit.loo_eigen(row));
  return empirical_part(fit, row);
}

EigenInfluence eigen_influence(const Fit& fit, std::size_t row, const EigenSystem& loo) {
  fit.require_row(row);
  EigenInfluence out = empirical_part(fit, row);
  out.sif = -scale(fit) * (loo.values - fit.eigen().values);
  return out;
}

double FiniteDifferenceCheck::error() const { return std::abs(finite_difference - analytic); }

FiniteDifferenceCheck lemma1_numeric_check(const Eigen::MatrixXd& w, const Eigen::VectorXd& x0,
                                           const Eigen::VectorXd& mu, std::size_t j, double eps) {
  if (!(eps > 0.0 && eps <= 1e-4)) {
    throw ConfigError("lemma1_numeric_check: eps must lie in (0, 1e-4]");
  }
  if (x0.size() != w.rows() || mu.size() != w.rows()) {
    throw ConfigError("lemma1_numeric_check: vector length does not match the matrix");
  }
  const EigenSystem base = eigh(w);
  if (j >= base.size()) throw ConfigError("lemma1_numeric_check: rank out of range");
  require_unique(base, j, "lemma1_numeric_check");

  const Eigen::VectorXd d = x0 - mu;
  const Eigen::MatrixXd contaminant = d * d.transpose();
  const Eigen::MatrixXd perturbed = (1.0 - eps) * w + eps * (1.0 - eps) * contaminant;
  const EigenSystem moved = eigh(perturbed);

  const auto k = static_cast<Eigen::Index>(j);
  const Eigen::VectorXd eta = base.vectors.col(k);
  FiniteDifferenceCheck out;
  out.finite_difference = (moved.values(k) - base.values(k)) / eps;
  out.analytic = eta.dot((contaminant - w) * eta);
  return out;
}

DifferenceConvergence lemma1_convergence(const Eigen::MatrixXd& w, const Eigen::VectorXd& x0,
                                         const Eigen::VectorXd& mu, std::size_t j, double eps) {
  return {lemma1_numeric_check(w, x0, mu, j, eps), lemma1_numeric_check(w, x0, mu, j, eps / 2)};
}

}  // namespace eigensens
