#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "eigensens/eigen_system.hpp"
#include "eigensens/fit.hpp"

namespace eigensens {

/// 1 - (1/L) sum_l ||(I - P_loo) eta_l||, the mean sine of the angle between
/// each retained full-data eigenvector and the leave-one-out subspace.
double rho(const Subspace& full, const Subspace& loo);

// Sample measures need the leave-one-out decomposition; pass it in to share one
// decomposition between several measures. Empirical measures use the full-data
// decomposition only.

/// (n-1) (rho - 1). Zero when L == p.
double sif_b(const Fit& fit, std::size_t retained, std::size_t row);
double sif_b(const Fit& fit, const EigenSystem& loo, std::size_t retained);

/// -(1/L) sum_{l<=L} { sum_{k>L} w_l^2 w_k^2 / (lambda_l - lambda_k)^2 }^{1/2}.
/// Covariance estimator only; DegenerateError names a tied (l, k) pair.
double eif_b(const Fit& fit, std::size_t retained, std::size_t row);

/// (n-1)^2 (1 - mean r^2) with r the canonical correlations between the
/// full-data scores X Gamma_L and X Gamma_{L,(i)}; all n rows are scored both ways.
double sci(const Fit& fit, std::size_t retained, std::size_t row);
double sci(const Fit& fit, const EigenSystem& loo, std::size_t retained);

/// (1/L) sum_{l<=L} sum_{k>L} (lambda_k / lambda_l) w_l^2 w_k^2 / (lambda_l - lambda_k)^2.
double scia(const Fit& fit, std::size_t retained, std::size_t row);

/// Per-observation subspace influence. Values are empty when not computed in
/// the current mode or when the computation was refused; `notes` says why.
struct InfluenceRecord {
  std::size_t obs = 0;  // 1-based
  std::size_t retained = 0;
  std::optional<double> sif_b;
  std::optional<double> eif_b;
  std::optional<double> sci;
  std::optional<double> scia;
  bool switching = false;
  bool near_switch = false;
  bool replaced = false;
  std::vector<std::string> notes;
};

/// Empirical measures for one observation, refusals recorded as notes.
InfluenceRecord empirical_record(const Fit& fit, std::size_t retained, std::size_t row);
/// Adds the sample measures computed from `loo` to `record`.
void add_sample_measures(InfluenceRecord& record, const Fit& fit, const EigenSystem& loo);

}  // namespace eigensens
