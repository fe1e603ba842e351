#include "eigensens/eigen_system.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "eigensens/error.hpp"

namespace eigensens {

namespace {

std::atomic<std::uint64_t> g_decompositions{0};

void fix_signs(Eigen::MatrixXd& vectors) {
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
      const double a = std::abs(vectors(r, c));
      if (a > best) {
        best = a;
        arg = r;
      }
    }
    if (vectors(arg, c) < 0.0) vectors.col(c) = -vectors.col(c);
  }
}

// Orthonormal basis for the centered columns of m; rank checked by pivoted QR.
Eigen::MatrixXd centered_basis(const Eigen::MatrixXd& m, const char* which) {
  const Eigen::MatrixXd centered = m.rowwise() - m.colwise().mean();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(centered);
  qr.setThreshold(1e-10);
  if (qr.rank() < centered.cols()) {
    throw DataError(std::string("canonical correlations: ") + which +
                    " is rank deficient after centering (rank " + std::to_string(qr.rank()) +
                    " < " + std::to_string(centered.cols()) + ")");
  }
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(centered.rows(), centered.cols());
  return q;
}

}  // namespace

bool EigenSystem::degenerate_at(std::size_t j) const {
  const std::size_t rank = j + 1;
  return std::any_of(gap_warnings.begin(), gap_warnings.end(), [rank](const RankPair& g) {
    return g.first == rank || g.second == rank;
  });
}

bool EigenSystem::boundary_degenerate(std::size_t retained) const {
  return std::find(gap_warnings.begin(), gap_warnings.end(), RankPair::at(retained)) !=
         gap_warnings.end();
}

EigenSystem eigh(const Eigen::MatrixXd& symmetric) {
  if (symmetric.rows() != symmetric.cols() || symmetric.rows() == 0) {
    throw ConfigError("eigh needs a non-empty square matrix");
  }
  if (!symmetric.allFinite()) throw DataError("eigh: matrix has non-finite entries");
  const double scale = 1.0 + symmetric.cwiseAbs().maxCoeff();
  if ((symmetric - symmetric.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ConfigError("eigh: matrix is not symmetric");
  }

  g_decompositions.fetch_add(1, std::memory_order_relaxed);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("eigh: tridiagonal QR did not converge within " +
                           std::to_string(30 * symmetric.rows()) + " iterations");
  }

  const Eigen::Index p = symmetric.rows();
  EigenSystem out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  fix_signs(out.vectors);

  const double denom = 1.0 + out.values.cwiseAbs().maxCoeff();
  for (Eigen::Index j = 0; j + 1 < p; ++j) {
    if ((out.values(j) - out.values(j + 1)) / denom < kRelativeGapTolerance) {
      out.gap_warnings.push_back(RankPair::at(static_cast<std::size_t>(j) + 1));
    }
  }
  return out;
}

EigenSystem eigh(const SymmetricEstimate& estimate) {
  EigenSystem out = eigh(estimate.matrix);
  for (Eigen::Index j = 0; j < out.values.size(); ++j) {
    if (out.values(j) < 0.0 && out.values(j) >= -1e-10) out.values(j) = 0.0;
  }
  return out;
}

std::uint64_t decomposition_count() { return g_decompositions.load(std::memory_order_relaxed); }

void reset_decomposition_count() { g_decompositions.store(0, std::memory_order_relaxed); }

Subspace subspace(const EigenSystem& eigen, std::size_t retained) {
  const std::size_t p = eigen.size();
  if (retained < 1 || retained > p) {
    throw ConfigError("retained count L=" + std::to_string(retained) + " outside 1.." +
                      std::to_string(p));
  }
  Subspace s;
  s.basis = eigen.vectors.leftCols(static_cast<Eigen::Index>(retained));
  s.dim = retained;
  s.boundary_degenerate = retained < p && eigen.boundary_degenerate(retained);
  return s;
}

Eigen::MatrixXd projector(const Subspace& s) { return s.basis * s.basis.transpose(); }

Eigen::MatrixXd pc_scores(const DataMatrix& x, const Subspace& s, bool centered) {
  if (x.cols() != s.ambient()) {
    throw ConfigError("pc_scores: data has " + std::to_string(x.cols()) +
                      " columns but the subspace lives in dimension " + std::to_string(s.ambient()));
  }
  if (!centered) return x.values() * s.basis;
  const Eigen::RowVectorXd mean = x.values().colwise().mean();
  return (x.values().rowwise() - mean) * s.basis;
}

Eigen::VectorXd canonical_correlations(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ConfigError("canonical correlations need score matrices of equal shape");
  }
  const Eigen::MatrixXd qa = centered_basis(a, "first score matrix");
  const Eigen::MatrixXd qb = centered_basis(b, "second score matrix");
  // Singular values of Qa^T Qb are the cosines of the principal angles; their
  // squares are the nonzero eigenvalues of the projector product P_A P_B.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(qa.transpose() * qb);
  Eigen::VectorXd r = svd.singularValues();
  for (Eigen::Index k = 0; k < r.size(); ++k) r(k) = std::clamp(r(k), 0.0, 1.0);
  std::sort(r.data(), r.data() + r.size(), std::greater<>());
  return r;
}

}  // namespace eigensens
