#pragma once

#include <cmath>
#include <limits>

namespace utl::tol {

/// Orthonormality residual scale for SVD factors: ||QᵀQ - Id||_F <= kOrtho * sqrt(r).
inline constexpr double kOrtho = 1e-10;

/// Reconstruction residual: ||A - UΣVᵀ||_F <= kReconstruct * max(1, ||A||_F).
inline constexpr double kReconstruct = 1e-9;

/// Unitarity of generated and learned transforms: ||WᵀW - Id||_F <= kUnitary * n.
inline constexpr double kUnitary = 1e-10;

/// Noiseless generative round trip: ||W* P - Z*||_F <= kRoundTrip * ||Z*||_F.
inline constexpr double kRoundTrip = 1e-12;

/// Slack allowed on the objective sequence of the alternating iteration.
inline constexpr double kMonotoneSlack = 1e-12;

/// Relative tolerance used when checking distribution parameter constraints.
inline constexpr double kParam = 1e-9;

/// Smallest error magnitude admitted by the rate estimator.
inline constexpr double kRateFloor = 1e3 * std::numeric_limits<double>::epsilon();

/// Default objective tolerance of the learner.
inline constexpr double kDefaultObjTol = 1e-24;

inline const double kSqrt2Minus1 = std::sqrt(2.0) - 1.0;

}  // namespace utl::tol
