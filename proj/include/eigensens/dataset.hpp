#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace eigensens {

/// n x p sample with row and column labels. All entries are finite.
class DataMatrix {
 public:
  /// Empty label vectors are filled with positional defaults ("1".."n" for rows,
  /// "V1".."Vp" for columns). Throws DataError on non-finite entries or label
  /// count mismatch.
  explicit DataMatrix(Eigen::MatrixXd values, std::vector<std::string> row_labels = {},
                      std::vector<std::string> col_labels = {});

  std::size_t rows() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(values_.cols()); }

  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::VectorXd row(std::size_t i) const { return values_.row(static_cast<Eigen::Index>(i)).transpose(); }

  const std::vector<std::string>& row_labels() const { return row_labels_; }
  const std::vector<std::string>& col_labels() const { return col_labels_; }

 private:
  Eigen::MatrixXd values_;
  std::vector<std::string> row_labels_;
  std::vector<std::string> col_labels_;
};

struct CsvOptions {
  bool header = true;
  // Name of the non-numeric label column (header mode) or its 1-based position
  // as a string (headerless mode). Absent: every column must be numeric.
  std::optional<std::string> label_column;
};

DataMatrix load_csv(const std::filesystem::path& path, const CsvOptions& options = {});
DataMatrix parse_csv(std::istream& in, const CsvOptions& options = {},
                     std::string_view source_name = "<stream>");

Eigen::VectorXd mean_vector(const DataMatrix& x);

/// Physically removes one row (0-based), keeping the remaining labels.
DataMatrix drop_row(const DataMatrix& x, std::size_t row);
/// Removes every listed row (0-based, any order, duplicates ignored).
DataMatrix drop_rows(const DataMatrix& x, const std::vector<std::size_t>& rows);

enum class EstimatorKind { covariance, correlation };
enum class Divisor { n, n_minus_1 };

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::covariance;
  Divisor divisor = Divisor::n_minus_1;
};

std::string to_string(EstimatorKind kind);
std::string to_string(Divisor divisor);

struct SymmetricEstimate {
  Eigen::MatrixXd matrix;
  EstimatorSpec spec;
  std::size_t n_used = 0;
};

/// Covariance (1/d) sum (x_i - xbar)(x_i - xbar)^T or its diagonal rescaling to
/// a correlation matrix. Requires n >= 2.
SymmetricEstimate estimate(const DataMatrix& x, EstimatorSpec spec);

/// Estimate over all rows except `row` (0-based). Requires n >= 3.
SymmetricEstimate estimate_loo(const DataMatrix& x, EstimatorSpec spec, std::size_t row);

/// Leave-one-out estimates by rank-one downdate of the centered sum-of-squares
/// accumulator: removing x_i gives S - n/(n-1) (x_i - xbar)(x_i - xbar)^T.
/// O(p^2) per removal after an O(n p^2) setup.
class LeaveOneOut {
 public:
  LeaveOneOut(const DataMatrix& x, EstimatorSpec spec);

  SymmetricEstimate full() const;
  SymmetricEstimate without(std::size_t row) const;

 private:
  SymmetricEstimate finish(Eigen::MatrixXd scatter, std::size_t count) const;

  Eigen::MatrixXd values_;
  EstimatorSpec spec_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd scatter_;
  Eigen::VectorXd column_scale_;
};

}  // namespace eigensens
