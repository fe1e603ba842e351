#pragma once

#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "eigensens/dataset.hpp"

namespace testing {

inline std::string fatty_acids_path() { return std::string(EIGENSENS_DATA_DIR) + "/fatty_acids.csv"; }

inline eigensens::DataMatrix fatty_acids() {
  return eigensens::load_csv(fatty_acids_path(), {.header = true, .label_column = "oil_type"});
}

inline eigensens::EstimatorSpec covariance_n() {
  return {eigensens::EstimatorKind::covariance, eigensens::Divisor::n};
}

/// Gaussian rows with column scales `scales` after a random rotation, so the
/// population spectrum is scales^2.
inline eigensens::DataMatrix random_data(std::mt19937_64& rng, std::size_t n, std::size_t p,
                                         const std::vector<double>& scales = {}) {
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd raw(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (Eigen::Index i = 0; i < raw.rows(); ++i)
    for (Eigen::Index j = 0; j < raw.cols(); ++j) raw(i, j) = z(rng);
  if (!scales.empty()) {
    for (Eigen::Index j = 0; j < raw.cols(); ++j) raw.col(j) *= scales[static_cast<std::size_t>(j)];
    Eigen::MatrixXd g(raw.cols(), raw.cols());
    for (Eigen::Index i = 0; i < g.rows(); ++i)
      for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = z(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    const Eigen::MatrixXd q = qr.householderQ();
    raw = raw * q.transpose();
  }
  return eigensens::DataMatrix(std::move(raw));
}

inline Eigen::MatrixXd random_symmetric(std::mt19937_64& rng, Eigen::Index p) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd a(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j) a(i, j) = u(rng);
  return 0.5 * (a + a.transpose());
}

/// Cyclic Jacobi rotations; independent of the library's solver. Returns
/// eigenvalues in descending order.
inline Eigen::VectorXd jacobi_eigenvalues(Eigen::MatrixXd a) {
  const Eigen::Index p = a.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = i + 1; j < p; ++j) off += a(i, j) * a(i, j);
    if (off < 1e-30 * (1.0 + a.squaredNorm())) break;
    for (Eigen::Index i = 0; i < p; ++i) {
      for (Eigen::Index j = i + 1; j < p; ++j) {
        if (a(i, j) == 0.0) continue;
        const double theta = (a(j, j) - a(i, i)) / (2.0 * a(i, j));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < p; ++k) {
          const double aki = a(k, i), akj = a(k, j);
          a(k, i) = c * aki - s * akj;
          a(k, j) = s * aki + c * akj;
        }
        for (Eigen::Index k = 0; k < p; ++k) {
          const double aik = a(i, k), ajk = a(j, k);
          a(i, k) = c * aik - s * ajk;
          a(j, k) = s * aik + c * ajk;
        }
      }
    }
  }
  Eigen::VectorXd d = a.diagonal();
  std::sort(d.data(), d.data() + d.size(), std::greater<>());
  return d;
}

/// Direct two-pass covariance with an explicit loop; the estimate() oracle.
inline Eigen::MatrixXd brute_covariance(const Eigen::MatrixXd& x, double divisor) {
  const Eigen::Index n = x.rows(), p = x.cols();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(p);
  for (Eigen::Index i = 0; i < n; ++i) mean += x.row(i).transpose();
  mean /= static_cast<double>(n);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd d = x.row(i).transpose() - mean;
    for (Eigen::Index a = 0; a < p; ++a)
      for (Eigen::Index b = 0; b < p; ++b) c(a, b) += d(a) * d(b);
  }
  return c / divisor;
}

}  // namespace testing
