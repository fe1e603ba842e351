#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "eigensens/dataset.hpp"
#include "eigensens/eigen_system.hpp"

namespace eigensens {

/// Full-data estimate and its decomposition, computed once and shared
/// read-only by every per-observation diagnostic. Leave-one-out estimates come
/// from a rank-one downdate; leave-one-out decompositions are done on demand.
class Fit {
 public:
  /// Throws DataError when n < 3.
  Fit(DataMatrix data, EstimatorSpec spec);

  const DataMatrix& data() const { return data_; }
  EstimatorSpec spec() const { return spec_; }
  std::size_t n() const { return data_.rows(); }
  std::size_t p() const { return data_.cols(); }

  const Eigen::VectorXd& mean() const { return mean_; }
  const SymmetricEstimate& estimate() const { return full_; }
  const EigenSystem& eigen() const { return eigen_; }

  /// Rows the eigenvectors act on: x_i - xbar for covariance, additionally
  /// divided by the column standard deviations for correlation.
  const Eigen::MatrixXd& working_data() const { return working_; }

  SymmetricEstimate loo_estimate(std::size_t row) const;
  /// One fresh decomposition of the leave-one-out estimate (counted by decomposition_count()).
  EigenSystem loo_eigen(std::size_t row) const;

  /// Throws ConfigError unless row < n.
  void require_row(std::size_t row) const;
  /// Throws ConfigError unless rank < p.
  void require_rank(std::size_t rank) const;

 private:
  DataMatrix data_;
  EstimatorSpec spec_;
  LeaveOneOut loo_;
  Eigen::VectorXd mean_;
  SymmetricEstimate full_;
  EigenSystem eigen_;
  Eigen::MatrixXd working_;
};

}  // namespace eigensens
