#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "eigensens/dataset.hpp"

namespace eigensens {

/// Adjacent eigenvalue ranks (first, first + 1), 1-based as in printed output.
struct RankPair {
  std::size_t first = 1;
  std::size_t second = 2;

  static RankPair at(std::size_t upper_rank) { return {upper_rank, upper_rank + 1}; }
  friend auto operator<=>(const RankPair&, const RankPair&) = default;
};

/// Descending eigenvalues with orthonormal eigenvector columns.
///
/// Each eigenvector is signed so that its largest-magnitude entry is positive
/// (lowest index wins ties). `gap_warnings` lists adjacent pairs whose relative
/// gap (lambda_j - lambda_{j+1}) / (1 + max|lambda|) is below 1e-10.
struct EigenSystem {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  std::vector<RankPair> gap_warnings;

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
  Eigen::VectorXd vector(std::size_t j) const { return vectors.col(static_cast<Eigen::Index>(j)); }
  /// True when the eigenvalue at 0-based rank j is tied with a neighbour.
  bool degenerate_at(std::size_t j) const;
  /// True when ranks L and L + 1 (1-based) are tied, i.e. the retained subspace is ill-defined.
  bool boundary_degenerate(std::size_t retained) const;
};

inline constexpr double kRelativeGapTolerance = 1e-10;

/// Full decomposition of a symmetric matrix. Throws ConfigError when the input
/// is not symmetric to 1e-12 (relative to its largest entry) and ConvergenceError
/// if the solver does not converge.
EigenSystem eigh(const Eigen::MatrixXd& symmetric);

/// As above; eigenvalues in [-1e-10, 0) of a semi-definite estimate are clamped to 0.
EigenSystem eigh(const SymmetricEstimate& estimate);

/// Number of eigh() calls since the last reset, across all threads.
std::uint64_t decomposition_count();
void reset_decomposition_count();

struct Subspace {
  Eigen::MatrixXd basis;  // p x L, orthonormal columns
  std::size_t dim = 0;
  bool boundary_degenerate = false;  // ranks (L, L+1) tied in the source decomposition

  std::size_t ambient() const { return static_cast<std::size_t>(basis.rows()); }
};

/// Leading `retained` eigenvectors. Throws ConfigError unless 1 <= retained <= p.
Subspace subspace(const EigenSystem& eigen, std::size_t retained);

/// Orthogonal projector basis * basis^T.
Eigen::MatrixXd projector(const Subspace& s);

/// Rows are basis^T (x_i - xbar), or basis^T x_i when `centered` is false.
Eigen::MatrixXd pc_scores(const DataMatrix& x, const Subspace& s, bool centered = true);

/// Canonical correlations between the column spaces of two n x L score
/// matrices, descending and clipped to [0, 1]. Both are centered by their
/// column means first. Throws DataError naming the rank-deficient argument.
Eigen::VectorXd canonical_correlations(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace eigensens
