#pragma once

// Alternating minimization for  min ||W P - Z||_F^2  s.t.  WᵀW = Id, ||z_j||_0 <= s:
//   sparse coding:    Z^t = H_s(W^{t-1} P)          (columnwise top-s thresholding)
//   operator update:  P Z^tᵀ = U Σ Vᵀ,  W^t = V Uᵀ  (orthogonal Procrustes)

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "utl/alignment.hpp"
#include "utl/constants.hpp"
#include "utl/errors.hpp"
#include "utl/genmodel.hpp"
#include "utl/linops.hpp"

namespace utl {

namespace detail {

/// Indices of the s largest magnitudes of v; ties go to the lower index.
template <typename Vec>
void top_s_indices(const Vec& v, Index s, std::vector<Index>& idx) {
  idx.resize(static_cast<std::size_t>(v.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::partial_sort(idx.begin(), idx.begin() + s, idx.end(), [&](Index a, Index b) {
    const double ma = std::abs(v(a));
    const double mb = std::abs(v(b));
    return ma > mb || (ma == mb && a < b);
  });
  idx.resize(static_cast<std::size_t>(s));
}

}  // namespace detail

/// H_s: keeps the s largest-magnitude entries (lowest index wins ties), zeroes the rest.
inline Vector hard_threshold(const Vector& v, Index s) {
  if (s < 0 || s > v.size()) throw ParameterError("hard_threshold: need 0 <= s <= length");
  std::vector<Index> idx;
  detail::top_s_indices(v, s, idx);
  Vector out = Vector::Zero(v.size());
  for (Index i : idx) out(i) = v(i);
  return out;
}

/// Applies H_s to every column of `x` in place.
inline void threshold_columns(Matrix& x, Index s) {
  if (s < 0 || s > x.rows()) throw ParameterError("threshold_columns: need 0 <= s <= rows");
  std::vector<Index> idx;
  Vector keep(x.rows());
  for (Index j = 0; j < x.cols(); ++j) {
    auto col = x.col(j);
    detail::top_s_indices(col, s, idx);
    keep.setZero();
    for (Index i : idx) keep(i) = col(i);
    col = keep;
  }
}

inline Matrix sparse_code_step(const Matrix& w, const Matrix& p, Index s) {
  if (w.rows() != w.cols() || w.cols() != p.rows()) {
    throw DimensionError("sparse_code_step: W must be n x n with n = rows(P)");
  }
  Matrix z = w * p;
  threshold_columns(z, s);
  return z;
}

struct OperatorUpdate {
  Matrix w;
  /// P Zᵀ was exactly zero, so every unitary W is a minimizer.
  bool degenerate = false;
};

/// Orthogonal Procrustes: argmin over unitary W of ||W P - Z||_F.
/// When P Zᵀ = 0 the previous iterate is kept if unitary, otherwise Id.
inline OperatorUpdate operator_update(const Matrix& p, const Matrix& z, const Matrix& w_prev) {
  if (p.rows() != z.rows() || p.cols() != z.cols()) {
    throw DimensionError("operator_update: P and Z must have the same shape");
  }
  const Index n = p.rows();
  const Matrix cross = p * z.transpose();
  if (cross.cwiseAbs().maxCoeff() == 0.0) {
    if (w_prev.rows() == n && w_prev.cols() == n && is_unitary(w_prev)) return {w_prev, true};
    return {Matrix::Identity(n, n), true};
  }
  const SvdFactors f = svd(cross);
  return {f.v * f.u.transpose(), false};
}

inline double objective(const Matrix& w, const Matrix& z, const Matrix& p) {
  if (w.cols() != p.rows() || w.rows() != z.rows() || z.cols() != p.cols()) {
    throw DimensionError("objective: shapes do not conform");
  }
  return (w * p - z).squaredNorm();
}

// ---------------------------------------------------------------------------

struct LearnRecord {
  int t = 0;
  double objective = 0.0;         // ||W^t P - Z^t||_F^2
  double coding_objective = 0.0;  // ||W^{t-1} P - Z^t||_F^2
  bool degenerate_update = false;
  // Ground-truth diagnostics; absent without a reference model.
  std::optional<double> werr;  // aligned ||W^t - W*||_F
  std::optional<double> zerr;  // aligned ||Z^t - Z*||_F
  std::optional<double> support_recovery;
  std::optional<double> werr_raw;  // unaligned
  std::optional<double> zerr_raw;
};

enum class StopReason { MaxIterations, ObjectiveTolerance, Stalled };

inline std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::MaxIterations: return "max_iterations";
    case StopReason::ObjectiveTolerance: return "objective_tolerance";
    case StopReason::Stalled: return "stalled";
  }
  return "unknown";
}

struct LearnResult {
  Matrix w_final;
  Matrix z_final;
  std::vector<LearnRecord> trace;
  int iterations_run = 0;
  StopReason stop_reason = StopReason::MaxIterations;
};

struct LearnOptions {
  int max_iter = 200;
  double obj_tol = tol::kDefaultObjTol;
  /// Called after each iteration with (t, W^t, Z^t).
  std::function<void(int, const Matrix&, const Matrix&)> on_iteration;
};

inline LearnResult learn(const Matrix& p, Index s, const Matrix& w0, const LearnOptions& opts,
                         const GenerativeModel* truth = nullptr) {
  const Index n = p.rows();
  if (opts.max_iter < 1) throw ParameterError("learn: max_iter must be >= 1");
  if (!(opts.obj_tol >= 0.0)) throw ParameterError("learn: obj_tol must be >= 0");
  if (s < 0 || s > n) throw ParameterError("learn: need 0 <= s <= n");
  require_shape(w0, n, n, "learn W0");
  require_finite(p, "learn P");
  require_finite(w0, "learn W0");
  if (truth) {
    require_shape(truth->wstar, n, n, "learn W*");
    require_shape(truth->zstar, n, p.cols(), "learn Z*");
  }

  LearnResult res;
  Matrix w = w0;
  Matrix wp = w * p;
  Matrix z;
  int consecutive_degenerate = 0;

  for (int t = 1; t <= opts.max_iter; ++t) {
    z = wp;
    threshold_columns(z, s);
    const double coding_obj = (wp - z).squaredNorm();

    OperatorUpdate upd = operator_update(p, z, w);
    w = std::move(upd.w);
    wp.noalias() = w * p;
    const double obj = (wp - z).squaredNorm();
    if (!std::isfinite(obj) || !w.allFinite()) {
      throw NumericalError("learn: non-finite values at iteration " + std::to_string(t));
    }

    LearnRecord rec;
    rec.t = t;
    rec.objective = obj;
    rec.coding_objective = coding_obj;
    rec.degenerate_update = upd.degenerate;
    if (truth) {
      const Alignment a = align(w, truth->wstar);
      rec.werr = a.aligned_error;
      rec.zerr = (apply_alignment(z, a) - truth->zstar).norm();
      rec.support_recovery = support_recovery(z, truth->zstar, a);
      rec.werr_raw = (w - truth->wstar).norm();
      rec.zerr_raw = (z - truth->zstar).norm();
    }
    res.trace.push_back(rec);
    res.iterations_run = t;
    if (opts.on_iteration) opts.on_iteration(t, w, z);

    consecutive_degenerate = upd.degenerate ? consecutive_degenerate + 1 : 0;
    if (obj <= opts.obj_tol) {
      res.stop_reason = StopReason::ObjectiveTolerance;
      break;
    }
    if (consecutive_degenerate >= 2) {
      res.stop_reason = StopReason::Stalled;
      break;
    }
  }
  res.w_final = std::move(w);
  res.z_final = std::move(z);
  return res;
}

}  // namespace utl
