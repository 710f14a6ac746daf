#pragma once

// Signed-permutation alignment of a learned transform to the ground truth.
// The generative model is identifiable only up to row permutation and row
// sign flips, so recovery diagnostics are computed after alignment.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "utl/errors.hpp"
#include "utl/linops.hpp"

namespace utl {

/// Minimum-cost perfect matching on a square cost matrix (Kuhn-Munkres with
/// potentials, O(n^3)). Returns assignment[row] = column.
inline std::vector<Index> hungarian_min_cost(const Matrix& cost) {
  const Index n = cost.rows();
  if (cost.cols() != n) throw DimensionError("hungarian_min_cost: cost matrix must be square");
  const double inf = std::numeric_limits<double>::infinity();

  // 1-based potentials; column 0 is a virtual source.
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<double> v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<Index> match(static_cast<std::size_t>(n + 1), 0);  // match[col] = row
  std::vector<Index> way(static_cast<std::size_t>(n + 1), 0);

  for (Index i = 1; i <= n; ++i) {
    match[0] = i;
    Index j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), inf);
    std::vector<char> used(static_cast<std::size_t>(n + 1), 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const Index i0 = match[static_cast<std::size_t>(j0)];
      double delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= n; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        if (used[uj]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[uj];
        if (cur < minv[uj]) {
          minv[uj] = cur;
          way[uj] = j0;
        }
        if (minv[uj] < delta) {
          delta = minv[uj];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        if (used[uj]) {
          u[static_cast<std::size_t>(match[uj])] += delta;
          v[uj] -= delta;
        } else {
          minv[uj] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != 0);
    do {
      const Index j1 = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<Index> assignment(static_cast<std::size_t>(n), -1);
  for (Index j = 1; j <= n; ++j) {
    assignment[static_cast<std::size_t>(match[static_cast<std::size_t>(j)] - 1)] = j - 1;
  }
  return assignment;
}

/// Row j of W corresponds to row perm[j] of W*, with sign signs[j].
struct Alignment {
  std::vector<Index> perm;
  std::vector<double> signs;
  double aligned_error = 0.0;
};

inline Alignment identity_alignment(Index n) {
  Alignment a;
  a.perm.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) a.perm[static_cast<std::size_t>(i)] = i;
  a.signs.assign(static_cast<std::size_t>(n), 1.0);
  return a;
}

/// Rows of `x` moved to their aligned positions: out.row(perm[j]) = signs[j] * x.row(j).
inline Matrix apply_alignment(const Matrix& x, const Alignment& a) {
  if (static_cast<std::size_t>(x.rows()) != a.perm.size()) {
    throw DimensionError("apply_alignment: row count does not match alignment");
  }
  Matrix out(x.rows(), x.cols());
  for (Index j = 0; j < x.rows(); ++j) {
    const auto uj = static_cast<std::size_t>(j);
    out.row(a.perm[uj]) = a.signs[uj] * x.row(j);
  }
  return out;
}

/// Matches rows by maximizing the total absolute inner product with W*, then
/// fixes each sign to make the matched inner product nonnegative.
inline Alignment align(const Matrix& w, const Matrix& wstar) {
  if (w.rows() != w.cols() || wstar.rows() != wstar.cols() || w.rows() != wstar.rows()) {
    throw DimensionError("align: both matrices must be n x n of the same n");
  }
  const Index n = w.rows();
  const Matrix score = (w * wstar.transpose()).cwiseAbs();
  const auto assignment = hungarian_min_cost(-score);

  Alignment a;
  a.perm = assignment;
  a.signs.resize(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    const auto uj = static_cast<std::size_t>(j);
    const double ip = w.row(j).dot(wstar.row(a.perm[uj]));
    a.signs[uj] = ip < 0.0 ? -1.0 : 1.0;
  }
  a.aligned_error = (apply_alignment(w, a) - wstar).norm();
  return a;
}

/// Fraction of the entrywise support of Z* present in the row-aligned Z.
inline double support_recovery(const Matrix& z, const Matrix& zstar, const Alignment& a) {
  if (z.rows() != zstar.rows() || z.cols() != zstar.cols()) {
    throw DimensionError("support_recovery: shape mismatch");
  }
  if (static_cast<std::size_t>(z.rows()) != a.perm.size()) {
    throw DimensionError("support_recovery: alignment size mismatch");
  }
  long long total = 0;
  long long hit = 0;
  for (Index c = 0; c < z.cols(); ++c) {
    for (Index j = 0; j < z.rows(); ++j) {
      if (zstar(a.perm[static_cast<std::size_t>(j)], c) != 0.0) {
        ++total;
        if (z(j, c) != 0.0) ++hit;
      }
    }
  }
  if (total == 0) throw ParameterError("support_recovery: Z* has empty support");
  return static_cast<double>(hit) / static_cast<double>(total);
}

}  // namespace utl
