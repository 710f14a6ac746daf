#pragma once

// Seeded ground-truth models P = W*ᵀ (Z* + H): unitary W*, column s-sparse Z*
// with uniformly random supports, optional Gaussian noise H, and the
// initializations used by the experiments.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "utl/constants.hpp"
#include "utl/errors.hpp"
#include "utl/linops.hpp"
#include "utl/matrix_io.hpp"
#include "utl/random.hpp"

namespace utl {

// ---------------------------------------------------------------------------
// Nonzero distributions. Every variant has mean 0 and variance n / (s N).

struct Gaussian {};

struct ScaledSigns {};

/// Uniform on [-b, -c] ∪ [c, b]. Unset bounds take the defaults
/// c = sqrt(3v/7), b = sqrt(12v/7) with v = n/(sN).
struct UniformAnnulus {
  std::optional<double> b;
  std::optional<double> c;
};

/// Density proportional to exp(-a|z|) on c <= |z| <= b, parameterized by K > 1.
struct TruncatedExponential {
  double k = 2.0;
};

using NonzeroDistribution = std::variant<Gaussian, ScaledSigns, UniformAnnulus, TruncatedExponential>;

inline std::string dist_name(const NonzeroDistribution& d) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Gaussian>) return "gaussian";
        if constexpr (std::is_same_v<T, ScaledSigns>) return "signs";
        if constexpr (std::is_same_v<T, UniformAnnulus>) return "annulus";
        if constexpr (std::is_same_v<T, TruncatedExponential>) return "texp";
      },
      d);
}

inline NonzeroDistribution parse_dist(const std::string& name) {
  if (name == "gaussian") return Gaussian{};
  if (name == "signs") return ScaledSigns{};
  if (name == "annulus") return UniformAnnulus{};
  if (name == "texp") return TruncatedExponential{};
  throw ParameterError("unknown distribution '" + name + "' (gaussian|signs|annulus|texp)");
}

inline double target_variance(Index n, Index s, Index big_n) {
  return static_cast<double>(n) / (static_cast<double>(s) * static_cast<double>(big_n));
}

struct AnnulusParams {
  double c;
  double b;
};

inline AnnulusParams annulus_params(const UniformAnnulus& d, double variance) {
  if (!d.b && !d.c) return {std::sqrt(3.0 * variance / 7.0), std::sqrt(12.0 * variance / 7.0)};
  if (!d.b || !d.c) throw ParameterError("annulus: give both b and c, or neither");
  const double b = *d.b;
  const double c = *d.c;
  if (!(c > 0.0) || !(b > c)) throw ParameterError("annulus: need 0 < c < b");
  const double var = (b * b + b * c + c * c) / 3.0;
  if (std::abs(var - variance) > tol::kParam * variance) {
    throw ParameterError("annulus: (b^2 + bc + c^2)/3 must equal n/(sN)");
  }
  return {c, b};
}

struct TruncatedExponentialParams {
  double a;
  double c;
  double b;
  double beta;  // a*c = log K / (K - 1)
};

inline TruncatedExponentialParams truncated_exponential_params(const TruncatedExponential& d,
                                                               double variance) {
  const double k = d.k;
  if (!(k > 1.0) || !std::isfinite(k)) throw ParameterError("texp: K must exceed 1");
  const double beta = std::log(k) / (k - 1.0);
  const double slack = 2.0 - k * beta * beta;
  if (!(slack > 0.0)) throw ParameterError("texp: requires 2 - K beta^2 > 0");
  const double a = std::sqrt(slack / variance);
  const double c = beta / a;
  return {a, c, k * c, beta};
}

namespace detail {

/// Draws one nonzero value; `variance` is n/(sN).
class NonzeroSampler {
 public:
  NonzeroSampler(const NonzeroDistribution& d, double variance) : dist_(d), scale_(std::sqrt(variance)) {
    if (const auto* ua = std::get_if<UniformAnnulus>(&d)) {
      const auto p = annulus_params(*ua, variance);
      lo_ = p.c;
      hi_ = p.b;
    } else if (const auto* te = std::get_if<TruncatedExponential>(&d)) {
      const auto p = truncated_exponential_params(*te, variance);
      rate_ = p.a;
      lo_ = p.c;
      hi_ = p.b;
    }
  }

  double operator()(Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    return std::visit(
        [&](const auto& v) -> double {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, Gaussian>) {
            return scale_ * normal_(rng);
          } else if constexpr (std::is_same_v<T, ScaledSigns>) {
            return sign(rng) * scale_;
          } else if constexpr (std::is_same_v<T, UniformAnnulus>) {
            const double s = sign(rng);
            return s * (lo_ + (hi_ - lo_) * unit(rng));
          } else {
            // inverse CDF of the exponential truncated to [c, b]
            const double s = sign(rng);
            const double u = unit(rng);
            const double mass = -std::expm1(-rate_ * (hi_ - lo_));
            const double m = lo_ - std::log1p(-u * mass) / rate_;
            return s * std::clamp(m, lo_, hi_);
          }
        },
        dist_);
  }

 private:
  static double sign(Rng& rng) { return (rng() >> 63) ? 1.0 : -1.0; }

  NonzeroDistribution dist_;
  double scale_;
  double lo_ = 0.0;
  double hi_ = 0.0;
  double rate_ = 0.0;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace detail

// ---------------------------------------------------------------------------

struct GenerativeModel {
  Index n = 0;
  Index big_n = 0;
  Index s = 0;
  Matrix wstar;
  Matrix zstar;
  Matrix p;
  std::optional<Matrix> noise_h;
  NonzeroDistribution dist = Gaussian{};
  std::uint64_t seed = 0;
  bool normalized = false;
};

/// Orthonormalizes an i.i.d. standard normal n x n matrix. Deterministic per seed.
inline Matrix gen_unitary(Index n, std::uint64_t seed) {
  if (n < 1) throw ParameterError("gen_unitary: n must be >= 1");
  for (std::uint64_t attempt = 0; attempt < 3; ++attempt) {
    Rng rng = make_rng(seed + attempt, stream::kTransform);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix g(n, n);
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < n; ++i) g(i, j) = normal(rng);

    Eigen::HouseholderQR<Matrix> qr(g);
    const Vector diag = qr.matrixQR().diagonal().cwiseAbs();
    if (diag.minCoeff() <= 1e-10 * diag.maxCoeff()) continue;
    Matrix q = qr.householderQ() * Matrix::Identity(n, n);
    return q;
  }
  throw NumericalError("gen_unitary: Gaussian draw rank deficient after 3 attempts");
}

/// n x N codes, each column with exactly s nonzeros on a uniformly random support.
inline Matrix gen_sparse_codes(Index n, Index big_n, Index s, const NonzeroDistribution& dist,
                               std::uint64_t seed) {
  if (n < 1 || big_n < 1) throw ParameterError("gen_sparse_codes: n and N must be >= 1");
  if (s < 1 || s > n) throw ParameterError("gen_sparse_codes: need 1 <= s <= n");

  detail::NonzeroSampler sample(dist, target_variance(n, s, big_n));
  Rng rng = make_rng(seed, stream::kCodes);
  Matrix z = Matrix::Zero(n, big_n);
  std::vector<Index> idx(static_cast<std::size_t>(n));
  for (Index j = 0; j < big_n; ++j) {
    std::iota(idx.begin(), idx.end(), Index{0});
    // partial Fisher-Yates: the first s slots become a uniform s-subset
    for (Index i = 0; i < s; ++i) {
      std::uniform_int_distribution<Index> pick(i, n - 1);
      std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
    }
    for (Index i = 0; i < s; ++i) {
      double v = 0.0;
      while (v == 0.0) v = sample(rng);
      z(idx[static_cast<std::size_t>(i)], j) = v;
    }
  }
  return z;
}

/// Builds P = W*ᵀ (Z* + H) with H i.i.d. N(0, noise_sigma²) (H = 0 when noise_sigma = 0).
inline GenerativeModel synthesize(const Matrix& wstar, const Matrix& zstar, Index s,
                                  const NonzeroDistribution& dist, double noise_sigma,
                                  std::uint64_t seed) {
  if (wstar.rows() != wstar.cols()) throw DimensionError("synthesize: W* must be square");
  if (zstar.rows() != wstar.rows()) throw DimensionError("synthesize: Z* rows must match W*");
  if (!(noise_sigma >= 0.0)) throw ParameterError("synthesize: noise_sigma must be >= 0");
  require_finite(wstar, "synthesize W*");
  require_finite(zstar, "synthesize Z*");
  if (!is_unitary(wstar)) throw ParameterError("synthesize: W* is not unitary");

  GenerativeModel m;
  m.n = wstar.rows();
  m.big_n = zstar.cols();
  m.s = s;
  m.wstar = wstar;
  m.zstar = zstar;
  m.dist = dist;
  m.seed = seed;
  if (noise_sigma > 0.0) {
    Rng rng = make_rng(seed, stream::kNoise);
    std::normal_distribution<double> normal(0.0, noise_sigma);
    Matrix h(m.n, m.big_n);
    for (Index j = 0; j < m.big_n; ++j)
      for (Index i = 0; i < m.n; ++i) h(i, j) = normal(rng);
    m.p = wstar.transpose() * (zstar + h);
    m.noise_h = std::move(h);
  } else {
    m.p = wstar.transpose() * zstar;
  }
  return m;
}

struct ModelSpec {
  Index n = 50;
  Index big_n = 10000;
  Index s = 5;
  NonzeroDistribution dist = Gaussian{};
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  bool normalize = false;
};

inline GenerativeModel normalize_model(GenerativeModel m);

/// One seed drives every draw of the model through independent streams.
inline GenerativeModel generate_model(const ModelSpec& spec) {
  Matrix w = gen_unitary(spec.n, spec.seed);
  Matrix z = gen_sparse_codes(spec.n, spec.big_n, spec.s, spec.dist, spec.seed);
  GenerativeModel m = synthesize(w, z, spec.s, spec.dist, spec.noise_sigma, spec.seed);
  return spec.normalize ? normalize_model(std::move(m)) : m;
}

/// Rescales Z*, P (and H) so that ||P||_2 = 1.
inline GenerativeModel normalize_model(GenerativeModel m) {
  const double norm = spectral_norm(m.p);
  if (!(norm > 0.0)) throw ParameterError("normalize_model: zero data");
  m.p /= norm;
  m.zstar /= norm;
  if (m.noise_h) *m.noise_h /= norm;
  m.normalized = true;
  return m;
}

// ---------------------------------------------------------------------------
// Initializations.

struct EpsilonBall {
  double eps = 0.0;
};
struct RandGaussian {};
struct Identity {};
struct Dct {};
struct Uniform01 {};
struct Zero {};
struct FromFile {
  std::string path;
};

using InitSpec = std::variant<EpsilonBall, RandGaussian, Identity, Dct, Uniform01, Zero, FromFile>;

inline std::string init_label(const InitSpec& spec) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, EpsilonBall>) return "eps";
        if constexpr (std::is_same_v<T, RandGaussian>) return "rand";
        if constexpr (std::is_same_v<T, Identity>) return "id";
        if constexpr (std::is_same_v<T, Dct>) return "dct";
        if constexpr (std::is_same_v<T, Uniform01>) return "unif";
        if constexpr (std::is_same_v<T, Zero>) return "zero";
        if constexpr (std::is_same_v<T, FromFile>) return "file";
      },
      spec);
}

/// Orthonormal DCT-II matrix: row k is c_k cos(pi (2j+1) k / (2n)).
inline Matrix dct_matrix(Index n) {
  Matrix d(n, n);
  const double nn = static_cast<double>(n);
  for (Index k = 0; k < n; ++k) {
    const double ck = k == 0 ? std::sqrt(1.0 / nn) : std::sqrt(2.0 / nn);
    for (Index j = 0; j < n; ++j) {
      d(k, j) = ck * std::cos(std::numbers::pi * (2.0 * static_cast<double>(j) + 1.0) *
                              static_cast<double>(k) / (2.0 * nn));
    }
  }
  return d;
}

inline Matrix make_init(const InitSpec& spec, const Matrix& wstar, std::uint64_t seed) {
  const Index n = wstar.rows();
  Rng rng = make_rng(seed, stream::kInit);
  auto gaussian = [&] {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix g(n, n);
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < n; ++i) g(i, j) = normal(rng);
    return g;
  };

  return std::visit(
      [&](const auto& v) -> Matrix {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, EpsilonBall>) {
          if (!(v.eps > 0.0) || !std::isfinite(v.eps)) {
            throw ParameterError("make_init: epsilon must be positive");
          }
          const Matrix g = gaussian();
          return wstar + (v.eps / g.norm()) * g;
        } else if constexpr (std::is_same_v<T, RandGaussian>) {
          return gaussian();
        } else if constexpr (std::is_same_v<T, Identity>) {
          return Matrix::Identity(n, n);
        } else if constexpr (std::is_same_v<T, Dct>) {
          return dct_matrix(n);
        } else if constexpr (std::is_same_v<T, Uniform01>) {
          std::uniform_real_distribution<double> unit(0.0, 1.0);
          Matrix u(n, n);
          for (Index j = 0; j < n; ++j)
            for (Index i = 0; i < n; ++i) u(i, j) = unit(rng);
          return u;
        } else if constexpr (std::is_same_v<T, Zero>) {
          return Matrix::Zero(n, n);
        } else {
          Matrix w = read_matrix(v.path);
          require_shape(w, n, n, "make_init(" + v.path + ")");
          return w;
        }
      },
      spec);
}

inline Matrix make_init(const InitSpec& spec, const GenerativeModel& model, std::uint64_t seed) {
  return make_init(spec, model.wstar, seed);
}

/// fraction * min_j beta(z_j / ||z_j||_2), beta = smallest nonzero magnitude.
/// With fraction 0.5 this is the support-recovery radius eps_1.
inline double epsilon_for_support_recovery(const Matrix& zstar, double fraction) {
  if (!(fraction > 0.0 && fraction <= 0.5)) {
    throw ParameterError("epsilon_for_support_recovery: fraction must lie in (0, 0.5]");
  }
  double best = std::numeric_limits<double>::infinity();
  for (Index j = 0; j < zstar.cols(); ++j) {
    const auto col = zstar.col(j);
    const double norm = col.norm();
    if (norm == 0.0) {
      throw ParameterError("epsilon_for_support_recovery: column " + std::to_string(j) + " is zero");
    }
    double smallest = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < col.size(); ++i) {
      const double a = std::abs(col(i));
      if (a > 0.0) smallest = std::min(smallest, a);
    }
    best = std::min(best, smallest / norm);
  }
  return fraction * best;
}

inline double epsilon_for_support_recovery(const GenerativeModel& m, double fraction) {
  return epsilon_for_support_recovery(m.zstar, fraction);
}

/// Parses "eps" / "eps:<value>" / "rand" / "id" / "dct" / "unif" / "zero" / "file:<path>".
/// A bare "eps" yields EpsilonBall{0}, to be resolved by the caller from the model.
inline InitSpec parse_init(const std::string& text) {
  if (text == "rand") return RandGaussian{};
  if (text == "id") return Identity{};
  if (text == "dct") return Dct{};
  if (text == "unif") return Uniform01{};
  if (text == "zero") return Zero{};
  if (text == "eps") return EpsilonBall{0.0};
  if (text.rfind("eps:", 0) == 0) {
    const double e = std::stod(text.substr(4));
    if (!(e > 0.0)) throw ParameterError("init eps:<value> needs a positive radius");
    return EpsilonBall{e};
  }
  if (text.rfind("file:", 0) == 0) return FromFile{text.substr(5)};
  throw ParameterError("unknown init '" + text + "' (eps[:r]|rand|id|dct|unif|zero|file:<path>)");
}

}  // namespace utl
