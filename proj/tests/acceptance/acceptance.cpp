// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "../test_util.hpp"
#include "utl/analysis.hpp"
#include "utl/experiments.hpp"

namespace {

using namespace utl;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

// Runs from criteria 1, 7 and 9, checked together by criterion 10.
std::vector<RunTrace> g_learn_runs;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void linear_convergence(Outcome& o) {
  ExperimentConfig cfg;
  cfg.experiment = Experiment::Convergence;
  cfg.n = 50;
  cfg.big_n = 10000;
  cfg.s_list = {5};
  cfg.seeds = {0};
  cfg.max_iter = 60;
  cfg.obj_tol = 0.0;
  cfg.eps_fraction = 0.49;
  auto out = run_convergence(cfg);
  const RunTrace& run = out.runs.at(0);
  const auto& tr = run.result.trace;
  int first_below = -1;
  for (const auto& r : tr) {
    if (*r.werr_raw < 1e-12) {
      first_below = r.t;
      break;
    }
  }
  const double rate = empirical_rate(tr, TraceField::Werr);
  o.detail << "werr<1e-12 at t=" << first_below << ", rate=" << fmt(rate) << ", q_n=" << fmt(run.spectral.q_n);
  o.require(first_below > 0 && first_below <= 60, "werr below 1e-12 within 60 iterations");
  o.require(rate <= run.spectral.q_n + 0.05, "empirical rate <= q_n + 0.05");
  g_learn_runs.push_back(run);
}

void asymptotic_q(Outcome& o) {
  ExperimentConfig cfg;
  cfg.experiment = Experiment::QSweep;
  cfg.n = 50;
  cfg.s_over_n = {0.1};
  cfg.n_sweep = {1000, 10000, 100000};
  cfg.sweep_dists = {"gaussian", "signs"};
  cfg.seeds = {0, 1, 2, 3, 4};
  const auto cells = qsweep_cells(cfg);
  const double limit = q_limit(50, 5);
  std::map<std::string, std::vector<double>> kappas;
  for (const auto& c : cells) {
    kappas[c.dist].push_back(c.mean(&SpectralReport::kappa));
    if (c.big_n != 100000) continue;
    const double dk = c.mean(&SpectralReport::max_dk_norm);
    const double qn = c.mean(&SpectralReport::q_n);
    o.detail << c.dist << ": max_dk/(2/7)=" << fmt(dk / limit) << " q_n=" << fmt(qn) << "; ";
    o.require(dk >= 0.95 * limit && dk <= 1.05 * limit, c.dist + " max_dk_norm within 5% of 2/7");
    o.require(qn < 1.0, c.dist + " q_n < 1");
  }
  for (const auto& [dist, k] : kappas) {
    o.detail << dist << " kappa=" << fmt(k[0]) << "," << fmt(k[1]) << "," << fmt(k[2]) << "; ";
    o.require(k[0] > k[1] && k[1] > k[2], dist + " kappa decreasing in N");
  }
}

void c_constant_check(Outcome& o) {
  const double c0 = c_constant(0.0);
  o.detail << "C(0)=" << fmt(c0);
  o.require(std::abs(c0 - 5.0052) <= 1e-3, "|C(0) - 5.0052| <= 1e-3");
  double prev = c0;
  bool increasing = true;
  for (int i = 1; i * 1e-3 < tol::kSqrt2Minus1; ++i) {
    const double c = c_constant(i * 1e-3);
    increasing = increasing && c > prev;
    prev = c;
  }
  o.require(increasing, "C strictly increasing on the 1e-3 grid");
}

void radius_pipeline(Outcome& o) {
  GenerativeModel m = model_from_matrices(Matrix::Identity(4, 4), Matrix::Identity(4, 4));
  const RadiusReport r = convergence_radius(m, 0.0);
  double best = 0.0;
  for (double e = 0.0; e < tol::kSqrt2Minus1; e += 1e-5) best = std::max(best, std::min(1.0 / c_constant(e), e));
  o.detail << "eps2=" << fmt(r.eps2) << " grid=" << fmt(best);
  o.require(std::abs(r.eps2 - best) <= 1e-4, "eps2 matches 1e-5 grid within 1e-4");
}

void lemma_suite(Outcome& o) {
  // Half the trials use scaled signs, whose eps1 = 0.5 / sqrt(s) puts the
  // smaller radii inside the support-recovery regime; Gaussian eps1 is tiny.
  std::size_t trials = 0;
  double max_ratio = 0.0, max_below = 0.0;
  int below = 0;
  bool in_run_ok = true;
  for (const char* dist : {"gaussian", "signs"}) {
    ExperimentConfig cfg;
    cfg.experiment = Experiment::LemmaBound;
    cfg.n = 20;
    cfg.big_n = 1000;
    cfg.s_list = {3};
    cfg.dist = parse_dist(dist);
    cfg.seeds.clear();
    for (std::uint64_t s = 0; s < 100; ++s) cfg.seeds.push_back(s);
    cfg.eps_list = {1e-3, 0.1, 0.5, 1.0, 5.0};
    const auto out = run_lemma_bound(cfg);
    in_run_ok = in_run_ok && out.ok();
    const auto& t = out.table;
    trials += t.rows().size();
    for (const auto& row : t.rows()) {
      const double ratio = std::stod(row[t.column("ratio")]);
      max_ratio = std::max(max_ratio, ratio);
      if (row[t.column("below_eps1")] == "1") {
        ++below;
        max_below = std::max(max_below, ratio);
      }
    }
  }
  o.detail << trials << " trials, max ratio=" << fmt(max_ratio) << ", " << below
           << " below eps1 with max ratio=" << fmt(max_below);
  o.require(trials == 1000, "1000 trials");
  o.require(max_ratio <= 2.0, "ratio <= 2 in every trial");
  o.require(below > 0, "some trials inside eps1");
  o.require(max_below <= 1.0, "ratio <= 1 when eps < eps1");
  o.require(in_run_ok, "in-run assertions");
}

void oracle_equivalence(Outcome& o) {
  double worst_gap = std::numeric_limits<double>::infinity();
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Matrix p = testing::random_matrix(2, 20, 10 * seed + 1);
    const Matrix z = testing::random_matrix(2, 20, 10 * seed + 2);
    const Matrix w = operator_update(p, z, Matrix::Identity(2, 2)).w;
    worst_gap = std::min(worst_gap, testing::o2_grid_min(p, z, 100000) - objective(w, z, p));
  }
  o.require(worst_gap >= -1e-8, "(a) operator_update vs O(2) grid");

  int sparse_mismatch = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Index n = 2 + static_cast<Index>(seed % 7);
    const Index s = std::min<Index>(n, 1 + static_cast<Index>((seed / 7) % 3));
    const Matrix w = testing::random_orthogonal(n, seed + 5000);
    const Matrix p = testing::random_matrix(n, 10, seed + 6000);
    if (!(sparse_code_step(w, p, s).array() == testing::brute_force_sparse(w * p, s).array()).all()) {
      ++sparse_mismatch;
    }
  }
  o.require(sparse_mismatch == 0, "(b) sparse_code_step vs exhaustive support search");

  double worst_align = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Index n = 1 + static_cast<Index>(seed % 5);
    const Matrix wstar = testing::random_orthogonal(n, seed + 7000);
    const Matrix w = wstar + 0.5 * testing::random_matrix(n, n, seed + 8000);
    worst_align = std::max(worst_align, std::abs(align(w, wstar).aligned_error -
                                                 testing::brute_force_alignment_error(w, wstar)));
  }
  o.require(worst_align <= 1e-12, "(c) align vs exhaustive signed permutations");
  o.detail << "grid gap min=" << fmt(worst_gap) << ", sparse mismatches=" << sparse_mismatch
           << ", align max diff=" << fmt(worst_align);
}

void two_phase(Outcome& o) {
  ExperimentConfig cfg;
  cfg.experiment = Experiment::Initializations;
  cfg.n = 50;
  cfg.big_n = 10000;
  cfg.s_list = {5, 10};
  cfg.seeds = {0, 1, 2};
  cfg.max_iter = 200;
  const auto out = run_initializations(cfg);

  // mean support-recovery iteration over seeds, per (s, init label)
  std::map<std::pair<Index, std::string>, double> mean_recovery;
  std::map<Index, double> overall;
  std::map<std::pair<Index, std::uint64_t>, double> eps_rate;
  double worst_factor = 1.0;
  int max_recovery_t = 0;
  for (const auto& run : out.runs) {
    const auto& tr = run.result.trace;
    int t_sr = -1, t_obj = -1;
    for (const auto& r : tr) {
      if (t_sr < 0 && *r.support_recovery == 1.0) t_sr = r.t;
      if (t_sr > 0 && r.objective < 1e-12) {
        t_obj = r.t;
        break;
      }
    }
    const std::string id = run.label + " s=" + std::to_string(run.s) + " seed=" + std::to_string(run.seed);
    o.require(t_sr > 0 && t_obj > 0, id + " support recovered then objective < 1e-12");
    if (t_sr < 0) continue;
    max_recovery_t = std::max(max_recovery_t, t_sr);
    mean_recovery[{run.s, run.label}] += t_sr / 3.0;
    overall[run.s] += t_sr / 18.0;
    if (run.label == "eps") {
      o.require(t_sr == 1, id + " recovers support at t=1");
      eps_rate[{run.s, run.seed}] = empirical_rate(tr, TraceField::Werr);
    }
  }
  for (const auto& run : out.runs) {
    if (run.label == "eps") continue;
    const double base = eps_rate.at({run.s, run.seed});
    double rate = std::numeric_limits<double>::quiet_NaN();
    try {
      rate = empirical_rate(run.result.trace, TraceField::Werr);
    } catch (const ParameterError&) {
    }
    const double factor = std::max(rate / base, base / rate);
    worst_factor = std::isnan(factor) ? factor : std::max(worst_factor, factor);
    o.require(factor <= 1.5, run.label + " s=" + std::to_string(run.s) + " seed=" + std::to_string(run.seed) +
                                 " rate within 1.5x of eps");
  }
  o.detail << "mean recovery t over inits and seeds: s=5 " << fmt(overall[5]) << ", s=10 " << fmt(overall[10])
           << "; slowest recovery t=" << max_recovery_t << "; worst rate factor=" << fmt(worst_factor);
  for (const auto& label : {"eps", "rand", "id", "dct", "unif", "zero"}) {
    const double t5 = mean_recovery[{5, label}];
    const double t10 = mean_recovery[{10, label}];
    o.detail << "; " << label << " " << fmt(t5) << "/" << fmt(t10);
    o.require(t10 >= t5, std::string(label) + ": s=10 needs at least as many iterations as s=5");
  }
  for (const auto& r : out.runs) g_learn_runs.push_back(r);
}

void corollary_s2(Outcome& o) {
  const double hh = std::sqrt(0.5);
  Matrix z(2, 2);
  z << hh, hh, hh, -hh;
  const auto bad = corollary_s2_check(z);
  o.require(!bad.holds && std::abs(bad.q - 1.0) <= 1e-10, "counterexample gives q = 1, holds = false");
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto built = testing::random_s2_orthonormal(2 + static_cast<Index>(seed % 5),
                                                      2 + static_cast<Index>(seed % 4), seed);
    const auto cc = corollary_s2_check(built.z);
    const double direct = spectral_report(model_from_matrices(built.z, built.z)).q_thm1;
    worst = std::max(worst, std::abs(cc.q - direct));
    o.require(cc.holds && cc.q < 1.0, "random model seed " + std::to_string(seed) + " holds with q < 1");
  }
  o.require(worst <= 1e-10, "closed form equals q_thm1 within 1e-10");
  o.detail << "counterexample q=" << fmt(bad.q) << ", max |closed form - q_thm1|=" << fmt(worst);
}

void noise_floor(Outcome& o) {
  const GenerativeModel m = generate_model({50, 10000, 5, Gaussian{}, 1e-4, 0, false});
  const double h = m.noise_h->norm();
  const double eps = epsilon_for_support_recovery(m, 0.49);
  RunTrace run;
  run.label = "eps-noise";
  run.s = 5;
  run.result = learn(m.p, 5, make_init(EpsilonBall{eps}, m, 0), {100, 0.0, {}}, &m);
  const auto& tr = run.result.trace;
  double tail_max = 0.0, tail_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 50; i < tr.size(); ++i) {
    tail_max = std::max(tail_max, *tr[i].werr);
    tail_min = std::min(tail_min, *tr[i].werr);
  }
  o.detail << "||H||_F=" << fmt(h) << ", werr t=1 " << fmt(*tr.front().werr) << ", plateau [" << fmt(tail_min)
           << ", " << fmt(tail_max) << "]";
  o.require(tr.size() == 100, "100 iterations run");
  o.require(tail_max <= 10.0 * h, "plateau <= 10 ||H||_F");
  // bounded and flat over the second half of the run
  o.require(std::isfinite(tail_max) && tail_max <= 1.1 * tail_min, "no divergence");
  g_learn_runs.push_back(std::move(run));
}

void monotonicity(Outcome& o) {
  std::vector<std::string> failed;
  for (const auto& run : g_learn_runs) detail::check_monotone(run, failed);
  o.detail << g_learn_runs.size() << " runs checked";
  for (const auto& f : failed) o.require(false, f);
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"1 linear convergence", linear_convergence},
      {"2 asymptotic contraction factor", asymptotic_q},
      {"3 C constant", c_constant_check},
      {"4 radius pipeline", radius_pipeline},
      {"5 sparse coding error bound", lemma_suite},
      {"6 oracle equivalence", oracle_equivalence},
      {"7 two-phase behavior", two_phase},
      {"8 s=2 closed form", corollary_s2},
      {"9 noise floor", noise_floor},
      {"10 monotone objective", monotonicity},
  };
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      fn(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.str().c_str(), secs);
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
