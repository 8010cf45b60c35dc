#pragma once

// Dense Hermitian eigendecomposition with the checks the solvers rely on:
// input symmetry, bounded size, and eigenvalues sorted descending.

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace aoisim {

struct HermitianEig {
  Eigen::VectorXd values;    // descending
  Eigen::MatrixXcd vectors;  // columns match values
};

inline double hermitian_defect(const Eigen::MatrixXcd& a) {
  return (a - a.adjoint()).norm();
}

// Full eigendecomposition A = U diag(w) U^H for Hermitian A. Rejects
// matrices that are not Hermitian to within 1e-12 of their own norm and
// anything larger than 512x512, which is far beyond any surface size this
// code base works with.
inline HermitianEig hermitian_eig(const Eigen::MatrixXcd& a) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("hermitian_eig: matrix must be square, got " +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  }
  if (a.rows() > 512) {
    throw std::invalid_argument("hermitian_eig: dimension " + std::to_string(a.rows()) +
                                " exceeds the supported limit of 512");
  }
  const double scale = a.norm();
  if (hermitian_defect(a) > 1e-12 * std::max(scale, 1e-300)) {
    throw std::invalid_argument("hermitian_eig: matrix is not Hermitian");
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(a);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("hermitian_eig: eigensolver failed to converge");
  }

  const auto n = a.rows();
  HermitianEig out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {  // Eigen sorts ascending; flip
    out.values[i] = solver.eigenvalues()[n - 1 - i];
    out.vectors.col(i) = solver.eigenvectors().col(n - 1 - i);
  }
  return out;
}

}  // namespace aoisim
