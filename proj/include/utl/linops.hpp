#pragma once

// Dense linear algebra used throughout: the matrix carrier, SVD, and the
// norms the convergence analysis is phrased in.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "utl/constants.hpp"
#include "utl/errors.hpp"

namespace utl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Thin singular value decomposition A = U diag(sigma) Vᵀ with r = min(m, n).
struct SvdFactors {
  Matrix u;      // m x r
  Vector sigma;  // r, nonincreasing, >= 0
  Matrix v;      // n x r
};

inline bool all_finite(const Matrix& a) { return a.allFinite(); }

inline void require_finite(const Matrix& a, const std::string& what) {
  if (!a.allFinite()) throw NumericalError(what + ": matrix contains NaN or Inf");
}

inline void require_shape(const Matrix& a, Index rows, Index cols, const std::string& what) {
  if (a.rows() != rows || a.cols() != cols) {
    throw DimensionError(what + ": expected " + std::to_string(rows) + "x" + std::to_string(cols) +
                         ", got " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  }
}

inline double frobenius_norm(const Matrix& a) { return a.norm(); }

inline SvdFactors svd(const Matrix& a) {
  require_finite(a, "svd");
  const Index r = std::min(a.rows(), a.cols());
  if (r == 0) return {Matrix(a.rows(), 0), Vector(0), Matrix(a.cols(), 0)};

  Eigen::BDCSVD<Matrix> dec(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (dec.info() != Eigen::Success) throw NumericalError("svd: decomposition did not converge");

  SvdFactors f{dec.matrixU(), dec.singularValues(), dec.matrixV()};
  if (!f.u.allFinite() || !f.v.allFinite() || !f.sigma.allFinite()) {
    throw NumericalError("svd: non-finite factors");
  }
  return f;
}

/// Singular values only, in nonincreasing order. Strongly rectangular inputs are
/// first reduced to their square triangular factor, which has the same spectrum.
inline Vector singular_values(const Matrix& a) {
  require_finite(a, "singular_values");
  const Index m = a.rows();
  const Index n = a.cols();
  if (std::min(m, n) == 0) return Vector(0);

  auto square_values = [](const Matrix& sq) {
    Eigen::BDCSVD<Matrix> dec(sq);
    if (dec.info() != Eigen::Success) {
      throw NumericalError("singular_values: decomposition did not converge");
    }
    return Vector(dec.singularValues());
  };

  if (n > 2 * m) {
    Eigen::HouseholderQR<Matrix> qr(a.transpose());
    Matrix r = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
    return square_values(r);
  }
  if (m > 2 * n) {
    Eigen::HouseholderQR<Matrix> qr(a);
    Matrix r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    return square_values(r);
  }
  return square_values(a);
}

inline double spectral_norm(const Matrix& a) {
  const Vector sv = singular_values(a);
  return sv.size() == 0 ? 0.0 : sv(0);
}

/// sigma_max / sigma_min for a matrix with rows <= cols. Returns +inf when the
/// matrix is rank deficient (sigma_min indistinguishable from zero).
inline double condition_number(const Matrix& a) {
  if (a.rows() > a.cols()) {
    throw DimensionError("condition_number: expected rows <= cols");
  }
  const Vector sv = singular_values(a);
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  const double zero_level =
      static_cast<double>(sv.size()) * std::numeric_limits<double>::epsilon() * smax;
  if (smax == 0.0 || smin <= zero_level) return std::numeric_limits<double>::infinity();
  return smax / smin;
}

/// ||QᵀQ - Id||_F for a square matrix.
inline double unitarity_residual(const Matrix& q) {
  return (q.transpose() * q - Matrix::Identity(q.cols(), q.cols())).norm();
}

inline bool is_unitary(const Matrix& q) {
  return q.rows() == q.cols() && q.rows() > 0 &&
         unitarity_residual(q) <= tol::kUnitary * static_cast<double>(q.rows());
}

}  // namespace utl
