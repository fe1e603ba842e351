#include "eigensens/fit.hpp"

#include <cmath>
#include <string>

#include "eigensens/error.hpp"

namespace eigensens {

namespace {

const DataMatrix& at_least_three(const DataMatrix& x) {
  if (x.rows() < 3) {
    throw DataError(std::to_string(x.rows()) +
                    " observations; influence diagnostics need at least 3");
  }
  return x;
}

}  // namespace

Fit::Fit(DataMatrix data, EstimatorSpec spec)
    : data_(std::move(data)),
      spec_(spec),
      loo_(at_least_three(data_), spec),
      mean_(mean_vector(data_)),
      full_(loo_.full()),
      eigen_(eigh(full_)) {
  working_ = data_.values().rowwise() - mean_.transpose();
  if (spec_.kind == EstimatorKind::correlation) {
    const double divisor = spec_.divisor == Divisor::n ? static_cast<double>(n())
                                                       : static_cast<double>(n() - 1);
    for (Eigen::Index j = 0; j < working_.cols(); ++j) {
      const double sd = std::sqrt(working_.col(j).squaredNorm() / divisor);
      working_.col(j) /= sd;
    }
  }
}

SymmetricEstimate Fit::loo_estimate(std::size_t row) const {
  require_row(row);
  return loo_.without(row);
}

EigenSystem Fit::loo_eigen(std::size_t row) const { return eigh(loo_estimate(row)); }

void Fit::require_row(std::size_t row) const {
  if (row >= n()) {
    throw ConfigError("observation " + std::to_string(row + 1) + " out of range 1.." +
                      std::to_string(n()));
  }
}

void Fit::require_rank(std::size_t rank) const {
  if (rank >= p()) {
    throw ConfigError("eigenvalue rank " + std::to_string(rank + 1) + " out of range 1.." +
                      std::to_string(p()));
  }
}

}  // namespace eigensens
