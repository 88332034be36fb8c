#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "qtopo/error.hpp"
#include "qtopo/quantization.hpp"

namespace qtopo {

/// Relative floor below which a negative eigenvalue is treated as a genuine
/// loss of positivity rather than rounding.
inline constexpr double kNegativeEigenvalueTolerance = 1e-10;

/// g(A) for Hermitian A through its eigendecomposition.
inline HermitianOperator hermitian_apply(const HermitianOperator& a, const std::function<double(double)>& g) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(a.matrix());
  if (es.info() != Eigen::Success) throw NumericalError("hermitian_apply: eigendecomposition failed");
  Eigen::VectorXd values = es.eigenvalues();
  for (Eigen::Index i = 0; i < values.size(); ++i) values[i] = g(values[i]);
  const ComplexMatrix& v = es.eigenvectors();
  return HermitianOperator(ComplexMatrix(v * values.cast<Complex>().asDiagonal() * v.adjoint()));
}

/// Positive square root. Eigenvalues in [-1e-10 ||A||, 0) are clamped to 0;
/// anything more negative is an error. Eigenvalues within rounding of zero
/// (|x| <= n eps ||A||) map to 0 so that projectors stay projectors.
inline HermitianOperator hermitian_sqrt(const HermitianOperator& a) {
  if (a.dim() == 0) return a;
  const Eigen::VectorXd ev = a.eigenvalues();
  const double scale = ev.cwiseAbs().maxCoeff();
  if (ev.minCoeff() < -kNegativeEigenvalueTolerance * scale) {
    std::ostringstream msg;
    msg << "hermitian_sqrt: eigenvalue " << ev.minCoeff() << " below -" << kNegativeEigenvalueTolerance
        << " * ||A|| (||A|| = " << scale << ")";
    throw NumericalError(msg.str());
  }
  const double zero = static_cast<double>(a.dim()) * std::numeric_limits<double>::epsilon() * scale;
  return hermitian_apply(a, [zero](double x) { return x > zero ? std::sqrt(x) : 0.0; });
}

/// tr(A B) for Hermitian A, B: sum_ij A_ij conj(B_ij).
inline double trace_product(const HermitianOperator& a, const HermitianOperator& b) {
  const auto& x = a.matrix();
  const auto& y = b.matrix();
  double total = 0.0;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      total += x(i, j).real() * y(i, j).real() + x(i, j).imag() * y(i, j).imag();
    }
  }
  return total;
}

}  // namespace qtopo
