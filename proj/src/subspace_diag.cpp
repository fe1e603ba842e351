#include "eigensens/subspace_diag.hpp"

#include <cmath>
#include <string>

#include "eigensens/error.hpp"

namespace eigensens {

namespace {

void require_retained(const Fit& fit, std::size_t retained) {
  if (retained < 1 || retained > fit.p()) {
    throw ConfigError("retained count L=" + std::to_string(retained) + " outside 1.." +
                      std::to_string(fit.p()));
  }
}

// Projections of x_i - xbar on every full-data eigenvector, after checking the
// spectrum separates the retained block from the rest.
Eigen::VectorXd empirical_inputs(const Fit& fit, std::size_t retained, std::size_t row,
                                 const char* what) {
  if (fit.spec().kind != EstimatorKind::covariance) {
    throw UnsupportedEstimator(std::string(what) +
                               " has a closed form only for the covariance estimator");
  }
  require_retained(fit, retained);
  fit.require_row(row);
  const Eigen::VectorXd& lambda = fit.eigen().values;
  const double denom = 1.0 + lambda.cwiseAbs().maxCoeff();
  for (Eigen::Index l = 0; l < static_cast<Eigen::Index>(retained); ++l) {
    for (Eigen::Index k = static_cast<Eigen::Index>(retained); k < lambda.size(); ++k) {
      if ((lambda(l) - lambda(k)) / denom < kRelativeGapTolerance) {
        throw DegenerateError(std::string(what) + ": eigenvalues " + std::to_string(l + 1) +
                              " and " + std::to_string(k + 1) +
                              " are equal within tolerance; denominator degenerate");
      }
    }
  }
  return fit.eigen().vectors.transpose() *
         fit.working_data().row(static_cast<Eigen::Index>(row)).transpose();
}

}  // namespace

double rho(const Subspace& full, const Subspace& loo) {
  if (full.dim != loo.dim || full.ambient() != loo.ambient()) {
    throw ConfigError("rho: subspaces differ in dimension");
  }
  double total = 0.0;
  for (Eigen::Index l = 0; l < full.basis.cols(); ++l) {
    const Eigen::VectorXd eta = full.basis.col(l);
    const Eigen::VectorXd residual = eta - loo.basis * (loo.basis.transpose() * eta);
    total += residual.norm();
  }
  return 1.0 - total / static_cast<double>(full.dim);
}

double sif_b(const Fit& fit, std::size_t retained, std::size_t row) {
  require_retained(fit, retained);
  fit.require_row(row);
  if (retained == fit.p()) return 0.0;
  return sif_b(fit, fit.loo_eigen(row), retained);
}

double sif_b(const Fit& fit, const EigenSystem& loo, std::size_t retained) {
  require_retained(fit, retained);
  if (retained == fit.p()) return 0.0;
  const double r = rho(subspace(fit.eigen(), retained), subspace(loo, retained));
  return static_cast<double>(fit.n() - 1) * (r - 1.0);
}

double eif_b(const Fit& fit, std::size_t retained, std::size_t row) {
  const Eigen::VectorXd w = empirical_inputs(fit, retained, row, "eif_b");
  const Eigen::VectorXd& lambda = fit.eigen().values;
  double total = 0.0;
  for (Eigen::Index l = 0; l < static_cast<Eigen::Index>(retained); ++l) {
    double inner = 0.0;
    for (Eigen::Index k = static_cast<Eigen::Index>(retained); k < lambda.size(); ++k) {
      const double gap = lambda(l) - lambda(k);
      inner += w(l) * w(l) * w(k) * w(k) / (gap * gap);
    }
    total += std::sqrt(inner);
  }
  return -total / static_cast<double>(retained);
}

double sci(const Fit& fit, std::size_t retained, std::size_t row) {
  require_retained(fit, retained);
  fit.require_row(row);
  return sci(fit, fit.loo_eigen(row), retained);
}

double sci(const Fit& fit, const EigenSystem& loo, std::size_t retained) {
  require_retained(fit, retained);
  const auto l = static_cast<Eigen::Index>(retained);
  const Eigen::MatrixXd& x = fit.working_data();
  const Eigen::VectorXd r =
      canonical_correlations(x * fit.eigen().vectors.leftCols(l), x * loo.vectors.leftCols(l));
  const double mean_r2 = r.squaredNorm() / static_cast<double>(retained);
  const double m = static_cast<double>(fit.n() - 1);
  return m * m * std::max(0.0, 1.0 - mean_r2);
}

double scia(const Fit& fit, std::size_t retained, std::size_t row) {
  const Eigen::VectorXd w = empirical_inputs(fit, retained, row, "scia");
  const Eigen::VectorXd& lambda = fit.eigen().values;
  double total = 0.0;
  for (Eigen::Index l = 0; l < static_cast<Eigen::Index>(retained); ++l) {
    if (lambda(l) == 0.0) {
      throw DegenerateError("scia: retained eigenvalue " + std::to_string(l + 1) + " is zero");
    }
    for (Eigen::Index k = static_cast<Eigen::Index>(retained); k < lambda.size(); ++k) {
      const double gap = lambda(l) - lambda(k);
      total += (lambda(k) / lambda(l)) * w(l) * w(l) * w(k) * w(k) / (gap * gap);
    }
  }
  return total / static_cast<double>(retained);
}

InfluenceRecord empirical_record(const Fit& fit, std::size_t retained, std::size_t row) {
  require_retained(fit, retained);
  fit.require_row(row);
  InfluenceRecord rec;
  rec.obs = row + 1;
  rec.retained = retained;
  if (retained < fit.p() && fit.eigen().boundary_degenerate(retained)) {
    rec.notes.push_back("full-data eigenvalues " + std::to_string(retained) + " and " +
                        std::to_string(retained + 1) + " are tied");
  }
  try {
    rec.eif_b = eif_b(fit, retained, row);
    rec.scia = scia(fit, retained, row);
  } catch (const UnsupportedEstimator& e) {
    rec.notes.emplace_back(e.what());
  } catch (const DegenerateError& e) {
    rec.notes.emplace_back(e.what());
  }
  return rec;
}

void add_sample_measures(InfluenceRecord& record, const Fit& fit, const EigenSystem& loo) {
  if (record.retained < fit.p() && loo.boundary_degenerate(record.retained)) {
    record.notes.push_back("leave-one-out eigenvalues " + std::to_string(record.retained) +
                           " and " + std::to_string(record.retained + 1) + " are tied");
  }
  record.sif_b = sif_b(fit, loo, record.retained);
  try {
    record.sci = sci(fit, loo, record.retained);
  } catch (const DataError& e) {
    record.notes.emplace_back(e.what());
  }
}

}  // namespace eigensens
