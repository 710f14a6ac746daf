#pragma once

// Convergence quantities of the alternating iteration: contraction factors,
// their asymptotic limit, the convergence radius and its constant C(eps0),
// the s = 2 closed form, and rate estimation from learner traces.
//
// Throughout, M_k = D_k Z* D~_k is Z* with row k zeroed and restricted to the
// columns where row k of Z* is nonzero. Contraction factors are the dominant
// (first-order) terms only; higher-order terms are not evaluated.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "utl/alignment.hpp"
#include "utl/constants.hpp"
#include "utl/errors.hpp"
#include "utl/genmodel.hpp"
#include "utl/learner.hpp"
#include "utl/linops.hpp"

namespace utl {

namespace detail {

inline std::vector<Index> row_support(const Matrix& z, Index k) {
  std::vector<Index> cols;
  for (Index j = 0; j < z.cols(); ++j)
    if (z(k, j) != 0.0) cols.push_back(j);
  return cols;
}

/// Z restricted to `cols`, with row `k` zeroed; n x |cols|.
inline Matrix masked_columns(const Matrix& z, const std::vector<Index>& cols, Index k) {
  Matrix m(z.rows(), static_cast<Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) m.col(static_cast<Index>(c)) = z.col(cols[c]);
  m.row(k).setZero();
  return m;
}

inline void check_row(const Matrix& z, Index k, const char* what) {
  if (k < 0 || k >= z.rows()) {
    throw ParameterError(std::string(what) + ": row index " + std::to_string(k) + " out of range");
  }
}

}  // namespace detail

/// M_k = D_k Z* D~_k as a full n x N matrix (k is 0-based).
inline Matrix dk_submatrix(const Matrix& zstar, Index k) {
  detail::check_row(zstar, k, "dk_submatrix");
  Matrix m = Matrix::Zero(zstar.rows(), zstar.cols());
  for (Index j = 0; j < zstar.cols(); ++j)
    if (zstar(k, j) != 0.0) m.col(j) = zstar.col(j);
  m.row(k).setZero();
  return m;
}

/// The nonzero columns of M_k only: n x |S(row k)|.
inline Matrix dk_compact(const Matrix& zstar, Index k) {
  detail::check_row(zstar, k, "dk_compact");
  return detail::masked_columns(zstar, detail::row_support(zstar, k), k);
}

/// max_k ||M_k||_2.
inline double max_dk_norm(const Matrix& zstar) {
  double best = 0.0;
  for (Index k = 0; k < zstar.rows(); ++k) {
    const Matrix m = dk_compact(zstar, k);
    if (m.cols() == 0) continue;
    best = std::max(best, spectral_norm(m));
  }
  return best;
}

inline double q_limit(Index n, Index s) {
  if (n <= 1) return 0.0;
  return std::sqrt(static_cast<double>(s - 1) / static_cast<double>(n - 1));
}

struct SpectralReport {
  double kappa = 1.0;        // condition number of Z* (+inf when rank deficient)
  double max_dk_norm = 0.0;  // max_k ||M_k||_2
  double q_thm1 = 0.0;       // orthonormal-rows factor: max_dk_norm
  double q_n = 0.0;          // scale-invariant factor: kappa^4 / ||P||_2 * max_dk_norm
  double q_limit = 0.0;      // sqrt((s-1)/(n-1))
  bool a3_holds = false;     // kappa^4 * max_dk_norm < 1
  double a4_residual = 0.0;  // ||Z* Z*ᵀ - Id||_F
  double p_norm = 0.0;       // ||P||_2
};

inline SpectralReport spectral_report(const GenerativeModel& m) {
  const double inf = std::numeric_limits<double>::infinity();
  SpectralReport r;
  r.kappa = m.zstar.rows() <= m.zstar.cols() ? condition_number(m.zstar) : inf;
  r.max_dk_norm = max_dk_norm(m.zstar);
  r.q_thm1 = r.max_dk_norm;
  r.p_norm = spectral_norm(m.p);
  const double k4 = std::pow(r.kappa, 4);
  if (std::isinf(r.kappa)) {
    r.q_n = inf;
    r.a3_holds = false;
  } else {
    r.q_n = r.p_norm > 0.0 ? k4 / r.p_norm * r.max_dk_norm : inf;
    r.a3_holds = k4 * r.max_dk_norm < 1.0;
  }
  r.q_limit = q_limit(m.n, m.s);
  r.a4_residual =
      (m.zstar * m.zstar.transpose() - Matrix::Identity(m.zstar.rows(), m.zstar.rows())).norm();
  return r;
}

/// Per-iterate factor kappa4 * max_k ||D_k Z* D~_k^t||_2, where D~_k^t masks
/// the support of row k of (Z^t - Z*).
inline double q_relaxed(const Matrix& zstar, const Matrix& z_t, double kappa4) {
  if (zstar.rows() != z_t.rows() || zstar.cols() != z_t.cols()) {
    throw DimensionError("q_relaxed: Z* and Z^t shapes differ");
  }
  double best = 0.0;
  for (Index k = 0; k < zstar.rows(); ++k) {
    std::vector<Index> cols;
    for (Index j = 0; j < zstar.cols(); ++j)
      if (z_t(k, j) - zstar(k, j) != 0.0) cols.push_back(j);
    if (cols.empty()) continue;
    best = std::max(best, spectral_norm(detail::masked_columns(zstar, cols, k)));
  }
  return kappa4 * best;
}

struct CorollaryCheck {
  bool holds = false;  // every row nonempty and no two rows share a support
  double q = 0.0;      // max_{k, i != k} ||row i of Z* on S(i) ∩ S(k)||_2
};

/// Closed form for column sparsity <= 2: M_k M_kᵀ is diagonal, so ||M_k||_2 is
/// the largest restricted row norm.
inline CorollaryCheck corollary_s2_check(const Matrix& zstar) {
  const Index n = zstar.rows();
  Matrix overlap = Matrix::Zero(n, n);  // overlap(i, k) = sum over S(i) ∩ S(k) of z_ij^2
  std::vector<std::vector<Index>> supports(static_cast<std::size_t>(n));
  for (Index j = 0; j < zstar.cols(); ++j) {
    Index nz[2];
    int count = 0;
    for (Index i = 0; i < n; ++i) {
      if (zstar(i, j) == 0.0) continue;
      if (count == 2) {
        throw ParameterError("corollary_s2_check: column " + std::to_string(j) +
                             " has more than 2 nonzeros");
      }
      nz[count++] = i;
      supports[static_cast<std::size_t>(i)].push_back(j);
    }
    if (count == 2) {
      overlap(nz[0], nz[1]) += zstar(nz[0], j) * zstar(nz[0], j);
      overlap(nz[1], nz[0]) += zstar(nz[1], j) * zstar(nz[1], j);
    }
  }

  CorollaryCheck out;
  out.q = std::sqrt(overlap.maxCoeff());
  bool ok = std::none_of(supports.begin(), supports.end(), [](const auto& s) { return s.empty(); });
  for (Index i = 0; ok && i < n; ++i)
    for (Index k = i + 1; ok && k < n; ++k)
      if (supports[static_cast<std::size_t>(i)] == supports[static_cast<std::size_t>(k)]) ok = false;
  out.holds = ok;
  return out;
}

// ---------------------------------------------------------------------------
// Convergence radius.

/// C(eps0) = 2 + 9 sqrt(2) / (8 (1 - 2 eps0 - eps0^2)^1.5) + sqrt(2) / (1 - eps0),
/// defined on 0 <= eps0 < sqrt(2) - 1.
inline double c_constant(double eps0) {
  if (!(eps0 >= 0.0 && eps0 < tol::kSqrt2Minus1)) {
    throw ParameterError("c_constant: eps0 must lie in [0, sqrt(2) - 1)");
  }
  const double r2 = std::sqrt(2.0);
  const double base = 1.0 - 2.0 * eps0 - eps0 * eps0;
  return 2.0 + 9.0 * r2 / (8.0 * std::pow(base, 1.5)) + r2 / (1.0 - eps0);
}

/// f(eps0) = min((1 - q) / C(eps0), eps0).
inline double radius_objective(double eps0, double q) {
  return std::min((1.0 - q) / c_constant(eps0), eps0);
}

struct OperatorStepRadius {
  double eps2 = 0.0;
  double eps0_star = 0.0;
  double c_at_eps0 = 0.0;
};

/// Maximizes f over [0, sqrt(2) - 1): grid scan at 1e-4 locates the crossing
/// C(eps0) eps0 = 1 - q, bisection refines it to 1e-8.
inline OperatorStepRadius operator_step_radius(double q) {
  if (!(q >= 0.0)) throw ParameterError("operator_step_radius: q must be >= 0");
  if (!(q < 1.0)) throw ParameterError("operator_step_radius: q >= 1 admits no positive radius");
  const double target = 1.0 - q;
  auto g = [&](double e) { return c_constant(e) * e - target; };

  constexpr double kStep = 1e-4;
  double lo = 0.0;
  double hi = kStep;
  // g(0) < 0 and g -> +inf at the right end, so a sign change exists.
  while (hi < tol::kSqrt2Minus1 && g(hi) < 0.0) {
    lo = hi;
    hi += kStep;
  }
  if (hi >= tol::kSqrt2Minus1) hi = std::nextafter(tol::kSqrt2Minus1, 0.0);
  while (hi - lo > 1e-8) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < 0.0 ? lo : hi) = mid;
  }
  OperatorStepRadius r;
  r.eps0_star = lo;
  r.c_at_eps0 = c_constant(lo);
  r.eps2 = radius_objective(lo, q);
  return r;
}

struct RadiusReport {
  double eps1 = 0.0;       // support-recovery radius
  double eps2 = 0.0;       // operator-step radius (after the kappa^-2 cap)
  double eps0_star = 0.0;  // maximizer of f
  double c_at_eps0 = 0.0;  // C(eps0_star)
  double eps = 0.0;        // min(eps1, eps2)
  double kappa = 1.0;
  bool kappa_capped = false;  // eps2 was limited by kappa^-2
};

/// Radius for a model given the contraction factor q in [0, 1).
inline RadiusReport convergence_radius(const GenerativeModel& m, double q) {
  const OperatorStepRadius op = operator_step_radius(q);
  RadiusReport r;
  r.eps1 = epsilon_for_support_recovery(m, 0.5);
  r.eps2 = op.eps2;
  r.eps0_star = op.eps0_star;
  r.c_at_eps0 = op.c_at_eps0;
  r.kappa = m.zstar.rows() <= m.zstar.cols() ? condition_number(m.zstar)
                                              : std::numeric_limits<double>::infinity();
  if (r.kappa > 1.0) {
    const double cap = 1.0 / (r.kappa * r.kappa);
    if (cap < r.eps2) {
      r.eps2 = cap;
      r.kappa_capped = true;
    }
  }
  r.eps = std::min(r.eps1, r.eps2);
  return r;
}

// ---------------------------------------------------------------------------
// Rate estimation.

enum class TraceField { Werr, Zerr };

/// Geometric-mean contraction ratio of an error sequence over the window that
/// starts at the first fully support-recovered record (when recorded) and
/// ends before the error falls to `floor`.
inline double empirical_rate(const std::vector<LearnRecord>& trace, TraceField field,
                             double floor = tol::kRateFloor) {
  auto value = [&](const LearnRecord& r) {
    return field == TraceField::Werr ? r.werr : r.zerr;
  };
  std::size_t start = 0;
  const bool has_support = std::any_of(trace.begin(), trace.end(),
                                       [](const LearnRecord& r) { return r.support_recovery.has_value(); });
  if (has_support) {
    while (start < trace.size() &&
           !(trace[start].support_recovery && *trace[start].support_recovery == 1.0)) {
      ++start;
    }
  }
  std::vector<double> window;
  for (std::size_t i = start; i < trace.size(); ++i) {
    const auto v = value(trace[i]);
    if (!v || !(*v > floor)) break;
    window.push_back(*v);
  }
  if (window.size() < 3) {
    throw ParameterError("empirical_rate: fewer than 3 usable records (" +
                         std::to_string(window.size()) + ")");
  }
  const double steps = static_cast<double>(window.size() - 1);
  return std::exp((std::log(window.back()) - std::log(window.front())) / steps);
}

}  // namespace utl
