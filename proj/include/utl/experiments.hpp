#pragma once

// Experiment drivers behind the command-line tool. Each driver returns the CSV
// table it produced together with the raw runs, and records any in-run
// assertion that failed so the caller can report it and set the exit code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "utl/analysis.hpp"
#include "utl/constants.hpp"
#include "utl/csv.hpp"
#include "utl/errors.hpp"
#include "utl/genmodel.hpp"
#include "utl/learner.hpp"
#include "utl/linops.hpp"
#include "utl/random.hpp"

namespace utl {

inline constexpr const char* kVersion = "0.1.0";

enum class Experiment { Convergence, Initializations, QSweep, LemmaBound, Analyze };

inline std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::Convergence: return "convergence";
    case Experiment::Initializations: return "inits";
    case Experiment::QSweep: return "qsweep";
    case Experiment::LemmaBound: return "lemma";
    case Experiment::Analyze: return "analyze";
  }
  return "unknown";
}

struct ExperimentConfig {
  Experiment experiment = Experiment::Convergence;
  Index n = 50;
  Index big_n = 10000;
  std::vector<Index> s_list{5};
  NonzeroDistribution dist = Gaussian{};
  std::vector<InitSpec> inits{EpsilonBall{}, RandGaussian{}, Identity{}, Dct{}, Uniform01{}, Zero{}};
  int max_iter = 200;
  double obj_tol = tol::kDefaultObjTol;
  std::vector<std::uint64_t> seeds{0};
  double noise_sigma = 0.0;
  bool normalize = false;
  double eps_fraction = 0.49;
  // qsweep
  std::vector<std::string> sweep_dists{"gaussian", "signs"};
  std::vector<double> s_over_n{0.06, 0.1, 0.2};
  std::vector<Index> n_sweep{2000, 5000, 10000, 20000, 50000, 100000};
  // lemma
  std::vector<double> eps_list{1e-3, 0.1, 0.5, 1.0, 5.0};
  std::string output_dir = ".";
};

inline void validate(const ExperimentConfig& cfg) {
  auto fail = [](const std::string& m) { throw ParameterError("config: " + m); };
  if (cfg.n < 1 || cfg.big_n < 1) fail("n and N must be positive");
  if (cfg.seeds.empty()) fail("seeds must be nonempty");
  if (cfg.max_iter < 1) fail("max_iter must be >= 1");
  if (!(cfg.obj_tol >= 0.0)) fail("obj_tol must be >= 0");
  if (!(cfg.noise_sigma >= 0.0)) fail("noise_sigma must be >= 0");
  if (!(cfg.eps_fraction > 0.0 && cfg.eps_fraction <= 0.5)) fail("eps_fraction must lie in (0, 0.5]");
  if (cfg.experiment == Experiment::QSweep) {
    if (cfg.s_over_n.empty() || cfg.n_sweep.empty() || cfg.sweep_dists.empty()) {
      fail("qsweep needs s_over_n, N sweep and distributions");
    }
    for (double r : cfg.s_over_n)
      if (!(r > 0.0 && r <= 1.0)) fail("s_over_n entries must lie in (0, 1]");
    for (Index nn : cfg.n_sweep)
      if (nn < 1) fail("N sweep entries must be positive");
  } else {
    if (cfg.s_list.empty()) fail("s must be given");
    for (Index s : cfg.s_list)
      if (s < 1 || s > cfg.n) fail("need 1 <= s <= n");
  }
  if (cfg.experiment == Experiment::Initializations && cfg.inits.empty()) fail("inits must be nonempty");
  if (cfg.experiment == Experiment::LemmaBound && cfg.eps_list.empty()) fail("eps list must be nonempty");
  for (double e : cfg.eps_list)
    if (!(e >= 0.0)) fail("eps list entries must be >= 0");
}

template <typename T>
std::string join(const std::vector<T>& v, const char* sep = ";") {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << sep;
    if constexpr (std::is_floating_point_v<T>) {
      os << format_real(v[i]);
    } else {
      os << v[i];
    }
  }
  return os.str();
}

/// Full config echo for CSV headers.
inline std::vector<std::string> provenance(const ExperimentConfig& cfg) {
  std::vector<std::string> labels;
  for (const auto& i : cfg.inits) labels.push_back(init_label(i));
  return {
      std::string("utl version ") + kVersion,
      "experiment=" + to_string(cfg.experiment),
      "n=" + std::to_string(cfg.n) + " N=" + std::to_string(cfg.big_n) + " s=" + join(cfg.s_list),
      "dist=" + dist_name(cfg.dist) + " noise_sigma=" + format_real(cfg.noise_sigma) +
          " normalized=" + (cfg.normalize ? "1" : "0"),
      "seeds=" + join(cfg.seeds) + " max_iter=" + std::to_string(cfg.max_iter) +
          " obj_tol=" + format_real(cfg.obj_tol) + " eps_fraction=" + format_real(cfg.eps_fraction),
      "inits=" + join(labels),
      "qsweep dists=" + join(cfg.sweep_dists) + " s_over_n=" + join(cfg.s_over_n) +
          " N_sweep=" + join(cfg.n_sweep),
      "lemma eps=" + join(cfg.eps_list),
  };
}

struct RunTrace {
  std::string label;
  Index s = 0;
  std::uint64_t seed = 0;
  double eps = 0.0;  // radius of an eps-ball initialization, 0 otherwise
  SpectralReport spectral;
  LearnResult result;
};

struct ExperimentOutput {
  CsvTable table;
  std::vector<RunTrace> runs;
  std::vector<std::string> failed_assertions;

  bool ok() const { return failed_assertions.empty(); }
};

namespace detail {

inline std::string opt_real(const std::optional<double>& v) { return v ? format_real(*v) : ""; }

inline GenerativeModel model_for(const ExperimentConfig& cfg, Index s, std::uint64_t seed) {
  ModelSpec spec;
  spec.n = cfg.n;
  spec.big_n = cfg.big_n;
  spec.s = s;
  spec.dist = cfg.dist;
  spec.noise_sigma = cfg.noise_sigma;
  spec.seed = seed;
  spec.normalize = cfg.normalize;
  return generate_model(spec);
}

/// Bare "eps" takes its radius from the model: fraction * min_j beta(z_j / ||z_j||).
inline InitSpec resolve_init(const InitSpec& init, const GenerativeModel& m, double fraction) {
  if (const auto* e = std::get_if<EpsilonBall>(&init); e && e->eps == 0.0) {
    return EpsilonBall{epsilon_for_support_recovery(m, fraction)};
  }
  return init;
}

/// Objective of the feasible iterates W^1, W^2, ... must not increase. The
/// first coding objective is measured at W^0, which need not be unitary (zero,
/// unif and rand starts), so the check starts at the second iteration.
inline void check_monotone(const RunTrace& run, std::vector<std::string>& failed) {
  const auto& tr = run.result.trace;
  for (std::size_t i = 1; i < tr.size(); ++i) {
    const bool coding_ok = tr[i].coding_objective <= tr[i - 1].objective + tol::kMonotoneSlack;
    const bool update_ok = tr[i].objective <= tr[i].coding_objective + tol::kMonotoneSlack;
    if (!coding_ok || !update_ok) {
      failed.push_back("objective increased: " + run.label + " s=" + std::to_string(run.s) +
                       " seed=" + std::to_string(run.seed) + " t=" + std::to_string(tr[i].t));
      return;
    }
  }
}

}  // namespace detail

/// Iterate error decay from an eps-ball start inside the support-recovery radius.
inline ExperimentOutput run_convergence(const ExperimentConfig& cfg) {
  validate(cfg);
  ExperimentOutput out;
  out.table = CsvTable({"s", "seed", "iteration", "werr", "zerr", "objective", "support_recovery",
                        "werr_raw", "zerr_raw"});
  for (const auto& line : provenance(cfg)) out.table.add_comment(line);

  for (Index s : cfg.s_list) {
    for (std::uint64_t seed : cfg.seeds) {
      const GenerativeModel m = detail::model_for(cfg, s, seed);
      RunTrace run;
      run.label = "eps";
      run.s = s;
      run.seed = seed;
      run.eps = epsilon_for_support_recovery(m, cfg.eps_fraction);
      run.spectral = spectral_report(m);
      const Matrix w0 = make_init(EpsilonBall{run.eps}, m, seed);
      run.result = learn(m.p, s, w0, {cfg.max_iter, cfg.obj_tol, {}}, &m);

      out.table.add_comment("s=" + std::to_string(s) + " seed=" + std::to_string(seed) +
                            " eps=" + format_real(run.eps) + " q_thm1=" + format_real(run.spectral.q_thm1) +
                            " q_n=" + format_real(run.spectral.q_n) +
                            " q_limit=" + format_real(run.spectral.q_limit) +
                            " kappa=" + format_real(run.spectral.kappa) +
                            " stop=" + to_string(run.result.stop_reason));
      for (const auto& r : run.result.trace) {
        out.table.add_row({std::to_string(s), std::to_string(seed), std::to_string(r.t),
                           detail::opt_real(r.werr), detail::opt_real(r.zerr), format_real(r.objective),
                           detail::opt_real(r.support_recovery), detail::opt_real(r.werr_raw),
                           detail::opt_real(r.zerr_raw)});
      }

      detail::check_monotone(run, out.failed_assertions);
      const auto& tr = run.result.trace;
      for (std::size_t i = 1; i < tr.size(); ++i) {
        if (*tr[i].werr > *tr[i - 1].werr + tol::kRateFloor) {
          out.failed_assertions.push_back("werr increased: s=" + std::to_string(s) +
                                          " seed=" + std::to_string(seed) + " t=" + std::to_string(tr[i].t));
          break;
        }
      }
      out.runs.push_back(std::move(run));
    }
  }
  return out;
}

/// Objective and support recovery from each configured initialization.
inline ExperimentOutput run_initializations(const ExperimentConfig& cfg) {
  validate(cfg);
  ExperimentOutput out;
  out.table = CsvTable({"s", "seed", "init_label", "iteration", "objective", "support_recovery",
                        "aligned_werr"});
  for (const auto& line : provenance(cfg)) out.table.add_comment(line);

  for (Index s : cfg.s_list) {
    for (std::uint64_t seed : cfg.seeds) {
      const GenerativeModel m = detail::model_for(cfg, s, seed);
      const SpectralReport spec = spectral_report(m);
      for (const InitSpec& raw_init : cfg.inits) {
        const InitSpec init = detail::resolve_init(raw_init, m, cfg.eps_fraction);
        RunTrace run;
        run.label = init_label(init);
        run.s = s;
        run.seed = seed;
        if (const auto* e = std::get_if<EpsilonBall>(&init)) run.eps = e->eps;
        run.spectral = spec;
        const Matrix w0 = make_init(init, m, seed);
        run.result = learn(m.p, s, w0, {cfg.max_iter, cfg.obj_tol, {}}, &m);
        out.table.add_comment("s=" + std::to_string(s) + " seed=" + std::to_string(seed) + " init=" +
                              run.label + " iterations=" + std::to_string(run.result.iterations_run) +
                              " stop=" + to_string(run.result.stop_reason));
        for (const auto& r : run.result.trace) {
          out.table.add_row({std::to_string(s), std::to_string(seed), run.label, std::to_string(r.t),
                             format_real(r.objective), detail::opt_real(r.support_recovery),
                             detail::opt_real(r.werr)});
        }
        detail::check_monotone(run, out.failed_assertions);
        out.runs.push_back(std::move(run));
      }
    }
  }
  return out;
}

struct QSweepCell {
  std::string dist;
  double s_over_n = 0.0;
  Index s = 0;
  Index big_n = 0;
  std::vector<SpectralReport> per_seed;

  double mean(double SpectralReport::*field) const {
    double acc = 0.0;
    for (const auto& r : per_seed) acc += r.*field;
    return acc / static_cast<double>(per_seed.size());
  }
};

inline Index sparsity_for_ratio(Index n, double s_over_n) {
  return std::clamp<Index>(static_cast<Index>(std::llround(s_over_n * static_cast<double>(n))), 1, n);
}

inline std::vector<QSweepCell> qsweep_cells(const ExperimentConfig& cfg) {
  std::vector<QSweepCell> cells;
  for (const auto& dname : cfg.sweep_dists) {
    const NonzeroDistribution dist = parse_dist(dname);
    for (double ratio : cfg.s_over_n) {
      const Index s = sparsity_for_ratio(cfg.n, ratio);
      for (Index big_n : cfg.n_sweep) {
        QSweepCell cell{dname, ratio, s, big_n, {}};
        for (std::uint64_t seed : cfg.seeds) {
          ModelSpec spec;
          spec.n = cfg.n;
          spec.big_n = big_n;
          spec.s = s;
          spec.dist = dist;
          spec.seed = seed;
          spec.normalize = cfg.normalize;
          cell.per_seed.push_back(spectral_report(generate_model(spec)));
        }
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

/// kappa(Z*), max_k ||M_k||_2 and q_n across distributions, sparsity ratios and N.
inline ExperimentOutput run_qsweep(const ExperimentConfig& cfg) {
  validate(cfg);
  ExperimentOutput out;
  out.table = CsvTable({"dist", "s_over_n", "s", "N", "seed", "kappa", "max_dk_norm", "q_n", "q_limit",
                        "a4_residual"});
  for (const auto& line : provenance(cfg)) out.table.add_comment(line);

  for (const auto& cell : qsweep_cells(cfg)) {
    auto row = [&](const std::string& seed, double kappa, double dk, double qn, double a4) {
      out.table.add_row({cell.dist, format_real(cell.s_over_n), std::to_string(cell.s),
                         std::to_string(cell.big_n), seed, format_real(kappa), format_real(dk),
                         format_real(qn), format_real(q_limit(cfg.n, cell.s)), format_real(a4)});
    };
    for (std::size_t i = 0; i < cell.per_seed.size(); ++i) {
      const auto& r = cell.per_seed[i];
      row(std::to_string(cfg.seeds[i]), r.kappa, r.max_dk_norm, r.q_n, r.a4_residual);
    }
    row("mean", cell.mean(&SpectralReport::kappa), cell.mean(&SpectralReport::max_dk_norm),
        cell.mean(&SpectralReport::q_n), cell.mean(&SpectralReport::a4_residual));
  }
  return out;
}

/// One sparse coding step from W0 = W* + E0 with ||E0||_F = eps on a normalized model.
inline ExperimentOutput run_lemma_bound(const ExperimentConfig& cfg) {
  validate(cfg);
  ExperimentOutput out;
  out.table = CsvTable({"s", "seed", "eps", "eps1", "zerr", "ratio", "below_eps1"});
  for (const auto& line : provenance(cfg)) out.table.add_comment(line);

  for (Index s : cfg.s_list) {
    for (std::uint64_t seed : cfg.seeds) {
      ExperimentConfig normalized = cfg;
      normalized.normalize = true;
      const GenerativeModel m = detail::model_for(normalized, s, seed);
      const double eps1 = epsilon_for_support_recovery(m, 0.5);
      for (std::size_t e = 0; e < cfg.eps_list.size(); ++e) {
        const double eps = cfg.eps_list[e];
        const Matrix w0 =
            eps > 0.0 ? make_init(EpsilonBall{eps}, m, mix_seed(seed, 100 + e)) : m.wstar;
        const Matrix z1 = sparse_code_step(w0, m.p, s);
        const double zerr = (z1 - m.zstar).norm();
        const double e0 = (w0 - m.wstar).norm();
        const double ratio = e0 > 0.0 ? zerr / e0 : 0.0;
        const bool below = eps < eps1;
        out.table.add_row({std::to_string(s), std::to_string(seed), format_real(eps), format_real(eps1),
                           format_real(zerr), format_real(ratio), below ? "1" : "0"});
        const std::string where =
            " s=" + std::to_string(s) + " seed=" + std::to_string(seed) + " eps=" + format_real(eps);
        if (ratio > 2.0 + 1e-9) out.failed_assertions.push_back("ratio above 2:" + where);
        if (below && ratio > 1.0 + 1e-9) out.failed_assertions.push_back("ratio above 1 below eps1:" + where);
      }
    }
  }
  return out;
}

/// Spectral and radius report for one model. Radius columns are nan when q_n >= 1.
inline std::vector<std::string> analyze_header() {
  return {"n", "N", "s", "dist", "seed", "normalized", "kappa", "max_dk_norm", "q_thm1", "q_n", "q_limit",
          "a3_holds", "a4_residual", "p_norm", "radius_q", "eps1", "eps2", "eps0_star", "c_at_eps0",
          "eps", "kappa_capped", "kappa_above_1_05", "s2_holds", "s2_q"};
}

inline std::vector<std::string> analyze_row(const GenerativeModel& m) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const SpectralReport sr = spectral_report(m);

  RadiusReport rr{nan, nan, nan, nan, nan, sr.kappa, false};
  if (sr.q_n < 1.0) {
    try {
      rr = convergence_radius(m, sr.q_n);
    } catch (const ParameterError&) {
      // zero column in Z*: eps1 undefined, keep the nan row
    }
  }
  std::string s2_holds;
  std::string s2_q;
  if (m.s == 2) {
    const CorollaryCheck cc = corollary_s2_check(m.zstar);
    s2_holds = cc.holds ? "1" : "0";
    s2_q = format_real(cc.q);
  }
  return {std::to_string(m.n), std::to_string(m.big_n), std::to_string(m.s), dist_name(m.dist),
          std::to_string(m.seed), m.normalized ? "1" : "0", format_real(sr.kappa),
          format_real(sr.max_dk_norm), format_real(sr.q_thm1), format_real(sr.q_n),
          format_real(sr.q_limit), sr.a3_holds ? "1" : "0", format_real(sr.a4_residual),
          format_real(sr.p_norm), format_real(sr.q_n < 1.0 ? sr.q_n : nan), format_real(rr.eps1),
          format_real(rr.eps2), format_real(rr.eps0_star), format_real(rr.c_at_eps0),
          format_real(rr.eps), rr.kappa_capped ? "1" : "0", sr.kappa > 1.05 ? "1" : "0", s2_holds, s2_q};
}

/// Reports for the configured models, or for `models` when given.
inline ExperimentOutput run_analyze(const ExperimentConfig& cfg,
                                    const std::vector<GenerativeModel>& models = {}) {
  ExperimentOutput out;
  out.table = CsvTable(analyze_header());
  for (const auto& line : provenance(cfg)) out.table.add_comment(line);
  if (!models.empty()) {
    for (const auto& m : models) out.table.add_row(analyze_row(m));
    return out;
  }
  validate(cfg);
  for (Index s : cfg.s_list)
    for (std::uint64_t seed : cfg.seeds) out.table.add_row(analyze_row(detail::model_for(cfg, s, seed)));
  return out;
}

/// Wraps externally supplied Z* (and P) as a model for analysis. W* is taken
/// as Id when absent; s is the largest column support size.
inline GenerativeModel model_from_matrices(const Matrix& zstar, const Matrix& p,
                                           std::optional<Matrix> wstar = std::nullopt) {
  if (zstar.rows() != p.rows() || zstar.cols() != p.cols()) {
    throw DimensionError("model_from_matrices: Z* and P shapes differ");
  }
  GenerativeModel m;
  m.n = zstar.rows();
  m.big_n = zstar.cols();
  Index s = 0;
  for (Index j = 0; j < zstar.cols(); ++j)
    s = std::max<Index>(s, static_cast<Index>((zstar.col(j).array() != 0.0).count()));
  m.s = s;
  m.zstar = zstar;
  m.p = p;
  m.wstar = wstar ? *wstar : Matrix::Identity(m.n, m.n);
  return m;
}

}  // namespace utl
