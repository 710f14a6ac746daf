// utl: generate models, learn transforms, analyze contraction, run experiments.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "utl/analysis.hpp"
#include "utl/experiments.hpp"
#include "utl/matrix_io.hpp"

namespace fs = std::filesystem;
using namespace utl;

namespace {

constexpr int kExitAssertion = 1;
constexpr int kExitError = 2;

struct Options {
  Index n = 50;
  Index big_n = 10000;
  std::vector<Index> s{5};
  std::string dist = "gaussian";
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds;
  int max_iter = 200;
  double obj_tol = tol::kDefaultObjTol;
  double noise_sigma = 0.0;
  bool normalize = false;
  std::vector<std::string> inits{"eps", "rand", "id", "dct", "unif", "zero"};
  double eps_fraction = 0.49;
  std::string out = ".";
  // experiment-specific
  std::vector<std::string> sweep_dists{"gaussian", "signs"};
  std::vector<double> s_over_n{0.06, 0.1, 0.2};
  std::vector<Index> n_sweep{2000, 5000, 10000, 20000, 50000, 100000};
  std::vector<double> eps_list{1e-3, 0.1, 0.5, 1.0, 5.0};
  // file inputs
  std::string data, zstar, wstar;
  std::string experiment;
};

ExperimentConfig to_config(const Options& o, Experiment e) {
  ExperimentConfig cfg;
  cfg.experiment = e;
  cfg.n = o.n;
  cfg.big_n = o.big_n;
  cfg.s_list = o.s;
  cfg.dist = parse_dist(o.dist);
  cfg.inits.clear();
  for (const auto& i : o.inits) cfg.inits.push_back(parse_init(i));
  cfg.max_iter = o.max_iter;
  cfg.obj_tol = o.obj_tol;
  cfg.seeds = o.seeds.empty() ? std::vector<std::uint64_t>{o.seed} : o.seeds;
  cfg.noise_sigma = o.noise_sigma;
  cfg.normalize = o.normalize;
  cfg.eps_fraction = o.eps_fraction;
  cfg.sweep_dists = o.sweep_dists;
  cfg.s_over_n = o.s_over_n;
  cfg.n_sweep = o.n_sweep;
  cfg.eps_list = o.eps_list;
  cfg.output_dir = o.out;
  return cfg;
}

fs::path out_dir(const Options& o) {
  fs::path dir(o.out);
  fs::create_directories(dir);
  return dir;
}

int report(const ExperimentOutput& out, const fs::path& path) {
  out.table.save(path.string());
  std::cout << "wrote " << path.string() << " (" << out.table.rows().size() << " rows)\n";
  for (const auto& f : out.failed_assertions) std::cerr << "assertion failed: " << f << '\n';
  return out.ok() ? 0 : kExitAssertion;
}

int cmd_gen(const Options& o) {
  if (o.s.size() != 1) throw ParameterError("gen takes a single --s");
  const GenerativeModel m =
      generate_model({o.n, o.big_n, o.s.front(), parse_dist(o.dist), o.noise_sigma, o.seed, o.normalize});
  const fs::path dir = out_dir(o);
  write_matrix((dir / "wstar.utlm").string(), m.wstar);
  write_matrix((dir / "zstar.utlm").string(), m.zstar);
  write_matrix((dir / "p.utlm").string(), m.p);
  if (m.noise_h) write_matrix((dir / "h.utlm").string(), *m.noise_h);
  std::cout << "wrote model n=" << m.n << " N=" << m.big_n << " s=" << m.s << " to " << dir.string() << '\n';
  return 0;
}

/// Model from --data/--zstar/--wstar files, or generated from the flags.
std::optional<GenerativeModel> load_truth(const Options& o, Matrix& p) {
  if (o.data.empty()) {
    GenerativeModel m =
        generate_model({o.n, o.big_n, o.s.front(), parse_dist(o.dist), o.noise_sigma, o.seed, o.normalize});
    p = m.p;
    return m;
  }
  p = read_matrix(o.data);
  if (o.zstar.empty() || o.wstar.empty()) return std::nullopt;
  GenerativeModel m = model_from_matrices(read_matrix(o.zstar), p, read_matrix(o.wstar));
  m.s = o.s.front();
  return m;
}

int cmd_learn(const Options& o) {
  if (o.s.size() != 1) throw ParameterError("learn takes a single --s");
  if (o.inits.size() != 1) throw ParameterError("learn takes a single --init");
  Matrix p;
  const std::optional<GenerativeModel> truth = load_truth(o, p);
  const Index s = o.s.front();

  InitSpec init = parse_init(o.inits.front());
  if (const auto* e = std::get_if<EpsilonBall>(&init); e && e->eps == 0.0) {
    if (!truth) throw ParameterError("--init eps needs a ground-truth model (--zstar and --wstar)");
    init = EpsilonBall{epsilon_for_support_recovery(*truth, o.eps_fraction)};
  }
  const Matrix w0 = truth ? make_init(init, *truth, o.seed)
                          : make_init(init, Matrix::Identity(p.rows(), p.rows()), o.seed);
  RunTrace run;
  run.label = init_label(init);
  run.s = s;
  run.seed = o.seed;
  run.result = learn(p, s, w0, {o.max_iter, o.obj_tol, {}}, truth ? &*truth : nullptr);

  const fs::path dir = out_dir(o);
  write_matrix((dir / "w.utlm").string(), run.result.w_final);
  write_matrix((dir / "z.utlm").string(), run.result.z_final);

  ExperimentOutput out;
  out.table = CsvTable({"iteration", "objective", "coding_objective", "degenerate", "werr", "zerr",
                        "support_recovery", "werr_raw", "zerr_raw"});
  out.table.add_comment(std::string("utl version ") + kVersion);
  out.table.add_comment("learn data=" + (o.data.empty() ? std::string("generated") : o.data) +
                        " n=" + std::to_string(p.rows()) + " N=" + std::to_string(p.cols()) +
                        " s=" + std::to_string(s) + " dist=" + o.dist + " seed=" + std::to_string(o.seed) +
                        " noise_sigma=" + format_real(o.noise_sigma) +
                        " normalized=" + (o.normalize ? "1" : "0"));
  out.table.add_comment("init=" + o.inits.front() + " eps_fraction=" + format_real(o.eps_fraction) +
                        " max_iter=" + std::to_string(o.max_iter) + " obj_tol=" + format_real(o.obj_tol) +
                        " stop=" + to_string(run.result.stop_reason));
  auto opt = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string(); };
  for (const auto& r : run.result.trace) {
    out.table.add_row({std::to_string(r.t), format_real(r.objective), format_real(r.coding_objective),
                       r.degenerate_update ? "1" : "0", opt(r.werr), opt(r.zerr), opt(r.support_recovery),
                       opt(r.werr_raw), opt(r.zerr_raw)});
  }
  detail::check_monotone(run, out.failed_assertions);
  return report(out, dir / "trace.csv");
}

int cmd_analyze(const Options& o) {
  const ExperimentConfig cfg = to_config(o, Experiment::Analyze);
  std::vector<GenerativeModel> models;
  if (!o.zstar.empty()) {
    const Matrix z = read_matrix(o.zstar);
    const Matrix p = o.data.empty() ? z : read_matrix(o.data);
    std::optional<Matrix> w;
    if (!o.wstar.empty()) w = read_matrix(o.wstar);
    models.push_back(model_from_matrices(z, p, w));
  }
  return report(run_analyze(cfg, models), out_dir(o) / "analyze.csv");
}

int cmd_experiment(const Options& o) {
  const std::string& name = o.experiment;
  if (name == "convergence") {
    return report(run_convergence(to_config(o, Experiment::Convergence)), out_dir(o) / "convergence.csv");
  }
  if (name == "inits") {
    return report(run_initializations(to_config(o, Experiment::Initializations)), out_dir(o) / "inits.csv");
  }
  if (name == "qsweep") return report(run_qsweep(to_config(o, Experiment::QSweep)), out_dir(o) / "qsweep.csv");
  if (name == "lemma") return report(run_lemma_bound(to_config(o, Experiment::LemmaBound)), out_dir(o) / "lemma.csv");
  throw ParameterError("unknown experiment '" + name + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unitary sparsifying transform learning: model generation, learning and convergence analysis"};
  app.set_version_flag("--version", std::string(kVersion));
  app.set_config("--config", "", "Flat key = value file (TOML/INI); command-line flags win");
  app.require_subcommand(1);
  app.fallthrough();

  Options o;
  app.add_option("--n", o.n, "Signal dimension")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--N", o.big_n, "Number of training signals")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--s", o.s, "Column sparsity (comma list for experiments)")->delimiter(',')->capture_default_str();
  app.add_option("--dist", o.dist, "Nonzero distribution")
      ->check(CLI::IsMember({"gaussian", "signs", "annulus", "texp"}))
      ->capture_default_str();
  app.add_option("--seed", o.seed, "Seed for gen/learn and single-seed runs")->capture_default_str();
  app.add_option("--seeds", o.seeds, "Comma-separated seeds for experiments")->delimiter(',');
  app.add_option("--max-iter", o.max_iter, "Iteration cap")->capture_default_str();
  app.add_option("--obj-tol", o.obj_tol, "Stop once the objective falls to this value")->capture_default_str();
  app.add_option("--noise-sigma", o.noise_sigma, "Std. dev. of additive noise on the codes")->capture_default_str();
  app.add_flag("--normalize", o.normalize, "Scale the model to ||P||_2 = 1");
  app.add_option("--init", o.inits, "Initialization(s): eps[:r], rand, id, dct, unif, zero, file:<path>")
      ->delimiter(',')
      ->capture_default_str();
  app.add_option("--eps-fraction", o.eps_fraction, "Radius of the eps init as a fraction of min beta")
      ->capture_default_str();
  app.add_option("--out", o.out, "Output directory")->capture_default_str();
  app.add_option("--sweep-dists", o.sweep_dists, "qsweep distributions")->delimiter(',')->capture_default_str();
  app.add_option("--s-over-n", o.s_over_n, "qsweep sparsity ratios")->delimiter(',')->capture_default_str();
  app.add_option("--N-sweep", o.n_sweep, "qsweep values of N")->delimiter(',')->capture_default_str();
  app.add_option("--eps-list", o.eps_list, "lemma initialization radii")->delimiter(',')->capture_default_str();
  app.add_option("--data", o.data, "Training data P (UTLM file)");
  app.add_option("--zstar", o.zstar, "Ground-truth codes Z* (UTLM file)");
  app.add_option("--wstar", o.wstar, "Ground-truth transform W* (UTLM file)");

  auto* gen = app.add_subcommand("gen", "Generate W*, Z*, P (and H) into --out");
  auto* lrn = app.add_subcommand("learn", "Run alternating minimization; writes w.utlm, z.utlm, trace.csv");
  auto* ana = app.add_subcommand("analyze", "Spectral and radius report for generated or supplied models");
  auto* exp = app.add_subcommand("experiment", "Run an experiment and write <name>.csv into --out");
  exp->add_option("name", o.experiment, "convergence | inits | qsweep | lemma")
      ->required()
      ->check(CLI::IsMember({"convergence", "inits", "qsweep", "lemma"}));
  for (auto* sub : {gen, lrn, ana, exp}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen(o);
    if (lrn->parsed()) {
      if (!app.count("--init")) o.inits = {"eps"};
      return cmd_learn(o);
    }
    if (ana->parsed()) return cmd_analyze(o);
    return cmd_experiment(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
}
