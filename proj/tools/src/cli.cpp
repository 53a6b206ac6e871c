#include "dmps_cli/cli.hpp"

#include "dmps/datasets.hpp"
#include "dmps/experiment.hpp"
#include "dmps/kernel.hpp"
#include "dmps/ot.hpp"
#include "dmps/sample_io.hpp"
#include "dmps/samplers.hpp"
#include "dmps/spectral.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <ostream>
#include <string>

namespace dmps::cli {
namespace {

struct GenerateArgs {
  std::string dataset = "hypersemisphere";
  Index n = 1000;
  Index dim = 3;
  std::uint64_t seed = 1;
  std::string out;
  std::string gluon_path;
  Index particle_index = 0;
};

struct FitArgs {
  std::string train;
  std::string out;
  double bandwidth = 0.0;
  double sigma_min = 0.0;
  double lambda_min = TruncationOptions{}.lambda_min;
};

struct SampleArgs {
  std::string model;
  std::string sampler = "dmps";
  Index m = 300;
  std::string init = "subsample-jitter";
  std::string init_file;
  double lo = -1.0;
  double hi = 1.0;
  double step = 0.0;
  Index max_iters = 0;
  double tol = -1.0;
  std::uint64_t seed = 1;
  Index snapshot_every = 0;
  std::string out;
  std::string trajectory;
};

struct EvaluateArgs {
  std::string samples;
  std::string reference;
  double reg = OTConfig{}.reg;
  Index max_iters = OTConfig{}.max_iters;
  double marginal_tol = OTConfig{}.marginal_tol;
  std::string cost = "euclidean";
  std::string out;
};

struct ExperimentArgs {
  std::string config;
  std::string output_dir;
  Index trials = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool quiet = false;
};

struct SummarizeArgs {
  std::string results;
  std::string out;
};

int do_generate(const GenerateArgs& a, std::ostream& out) {
  DatasetSpec spec;
  spec.kind = parse_dataset_kind(a.dataset);
  spec.dim = a.dim;
  Matrix data;
  if (spec.kind == DatasetKind::Gluon) {
    if (a.gluon_path.empty()) throw InvalidInputError("gluon needs --gluon-path");
    GluonSource src;
    src.path = a.gluon_path;
    data = load_gluon(src, a.particle_index, a.n, a.seed).train.data();
  } else {
    data = generate_dataset(spec, a.n, a.seed).data();
  }
  write_samples_csv(a.out, data);
  out << "wrote " << data.rows() << " x " << data.cols() << " samples to " << a.out << '\n';
  return kExitOk;
}

int do_fit(const FitArgs& a, std::ostream& out) {
  const SampleMatrix train = read_samples_csv(a.train);
  const Bandwidth eps = a.bandwidth > 0.0 ? Bandwidth(a.bandwidth) : median_bandwidth(train);
  TruncationOptions opts;
  opts.sigma_min = a.sigma_min;
  opts.lambda_min = a.lambda_min;
  const DiffusionModel model = DiffusionModel::fit(train, eps, opts);
  save_model(model, a.out);
  out << "fitted N=" << train.count() << " d=" << train.dim() << " eps=" << eps.value()
      << " kept_modes=" << model.inverse().kept.size() << " -> " << a.out << '\n';
  return kExitOk;
}

int do_sample(const SampleArgs& a, std::ostream& out) {
  const DiffusionModel model = load_model(a.model);
  InitSpec init;
  init.policy = parse_init_policy(a.init);
  init.lo = a.lo;
  init.hi = a.hi;
  if (init.policy == InitPolicy::Explicit) {
    if (a.init_file.empty()) throw InvalidInputError("--init explicit needs --init-file");
    init.points = read_samples_csv(a.init_file);
  }
  const SampleMatrix x0 =
      init_particles(init, a.m, model.dim(), a.seed, &model.train(), model.bandwidth());
  SamplerConfig cfg;
  if (a.step > 0.0) cfg.step_size = a.step;
  if (a.tol >= 0.0) cfg.tol = a.tol;
  cfg.seed = a.seed;
  cfg.snapshot_every = a.snapshot_every;
  const SamplerKind kind = parse_sampler_kind(a.sampler);
  cfg.max_iters = a.max_iters > 0 ? a.max_iters : (kind == SamplerKind::Svgd ? 3000 : kind == SamplerKind::Ula ? 2000 : 1000);
  Trajectory traj;
  switch (kind) {
    case SamplerKind::Dmps: traj = dmps_run(model, x0, cfg); break;
    case SamplerKind::Svgd: traj = svgd_run(learned_score(model), x0, cfg); break;
    case SamplerKind::Ula: traj = ula_run(learned_score(model), x0, cfg); break;
  }
  write_samples_csv(a.out, traj.final_state().data());
  if (!a.trajectory.empty()) write_trajectory_csv(a.trajectory, traj);
  out << a.sampler << ": " << traj.iters_run << " iterations"
      << (traj.converged ? " (converged)" : "") << " -> " << a.out << '\n';
  return kExitOk;
}

int do_evaluate(const EvaluateArgs& a, std::ostream& out) {
  OTConfig cfg;
  cfg.reg = a.reg;
  cfg.max_iters = a.max_iters;
  cfg.marginal_tol = a.marginal_tol;
  cfg.cost = parse_cost_kind(a.cost);
  const OTReport report =
      sinkhorn_distance(read_samples_csv(a.samples), read_samples_csv(a.reference), cfg);
  const std::string record = to_json(report);
  if (!a.out.empty()) {
    std::ofstream f(a.out);
    if (!f) throw IoError("cannot write " + a.out);
    f << record << '\n';
  }
  out << record << '\n';
  return kExitOk;
}

int do_experiment(const ExperimentArgs& a, std::ostream& out) {
  ExperimentConfig cfg = load_experiment_config(a.config);
  if (!a.output_dir.empty()) cfg.output_dir = a.output_dir;
  if (a.trials > 0) cfg.trials = a.trials;
  if (a.seed_set) cfg.seed = a.seed;
  RunOptions opts;
  opts.log = a.quiet ? nullptr : &out;
  const auto rows = run_experiment(cfg, opts);
  out << format_summary_table(summarize(rows));
  out << "results in " << cfg.output_dir.string() << '\n';
  return kExitOk;
}

int do_summarize(const SummarizeArgs& a, std::ostream& out) {
  const auto rows = read_results_csv(a.results);
  const auto cells = a.out.empty() ? summarize(rows) : emit_summary(rows, a.out);
  out << format_summary_table(cells);
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Diffusion-map particle sampling: data, fitting, sampling and evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "dmps 0.1.0");

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate-data", "Write a synthetic or gluon dataset as CSV");
  g->add_option("--dataset", gen.dataset, "mickey, two_moons, arc, hypersemisphere or gluon")
      ->capture_default_str();
  g->add_option("-n,--n", gen.n, "Number of samples")->capture_default_str();
  g->add_option("--dim", gen.dim, "Ambient dimension (hypersemisphere)")->capture_default_str();
  g->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  g->add_option("-o,--out", gen.out, "Output CSV")->required();
  g->add_option("--gluon-path", gen.gluon_path, "HDF5 file with the gluon jets");
  g->add_option("--particle-index", gen.particle_index, "Gluon particle slice (0-29)")
      ->capture_default_str();

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "Fit a diffusion-map model to a CSV of training samples");
  f->add_option("--train", fit.train, "Training samples CSV")->required();
  f->add_option("-o,--out", fit.out, "Model file")->required();
  f->add_option("--bandwidth", fit.bandwidth, "Kernel bandwidth eps; default median heuristic");
  f->add_option("--sigma-min", fit.sigma_min, "Truncation threshold on (1-lambda)/eps");
  f->add_option("--lambda-min", fit.lambda_min, "Truncation threshold on lambda")
      ->capture_default_str();

  SampleArgs smp;
  auto* s = app.add_subcommand("sample", "Run a particle sampler against a fitted model");
  s->add_option("--model", smp.model, "Model file from 'fit'")->required();
  s->add_option("--sampler", smp.sampler, "dmps, svgd or ula")->capture_default_str();
  s->add_option("-m,--particles", smp.m, "Number of particles")->capture_default_str();
  s->add_option("--init", smp.init, "subsample-jitter, uniform-box or explicit")
      ->capture_default_str();
  s->add_option("--init-file", smp.init_file, "Initial particles CSV for --init explicit");
  s->add_option("--lo", smp.lo, "Uniform box lower bound")->capture_default_str();
  s->add_option("--hi", smp.hi, "Uniform box upper bound")->capture_default_str();
  s->add_option("--step", smp.step, "Step size; default depends on the sampler");
  s->add_option("--max-iters", smp.max_iters, "Iteration cap");
  s->add_option("--tol", smp.tol, "Mean displacement stopping threshold");
  s->add_option("--seed", smp.seed, "Random seed")->capture_default_str();
  s->add_option("--snapshot-every", smp.snapshot_every, "Trajectory snapshot cadence");
  s->add_option("-o,--out", smp.out, "Final particles CSV")->required();
  s->add_option("--trajectory", smp.trajectory, "Trajectory CSV");

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Entropic OT cost between two sample CSVs");
  e->add_option("--samples", ev.samples, "Generated samples CSV")->required();
  e->add_option("--reference", ev.reference, "Reference samples CSV")->required();
  e->add_option("--reg", ev.reg, "Entropic regularization")->capture_default_str();
  e->add_option("--max-iters", ev.max_iters, "Sinkhorn iteration cap")->capture_default_str();
  e->add_option("--marginal-tol", ev.marginal_tol, "Marginal violation tolerance")
      ->capture_default_str();
  e->add_option("--cost", ev.cost, "euclidean or sqeuclidean")->capture_default_str();
  e->add_option("-o,--out", ev.out, "Write the JSON report here too");

  ExperimentArgs ex;
  auto* x = app.add_subcommand("experiment", "Run a JSON-configured batch experiment");
  x->add_option("--config", ex.config, "Experiment config JSON")->required();
  x->add_option("--output-dir", ex.output_dir, "Override output_dir");
  x->add_option("--trials", ex.trials, "Override trials");
  auto* seed_opt = x->add_option("--seed", ex.seed, "Override the master seed");
  x->add_flag("-q,--quiet", ex.quiet, "Only print the summary");

  SummarizeArgs sm;
  auto* y = app.add_subcommand("summarize", "Mean +- standard error table from results.csv");
  y->add_option("--results", sm.results, "results.csv from 'experiment'")->required();
  y->add_option("-o,--out", sm.out, "Directory for summary.txt and summary.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << app.version() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& pe) {
    err << "error: " << pe.what() << '\n';
    if (const auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front()) {
      err << sub->help();
    } else {
      err << app.help();
    }
    return kExitInput;
  }
  ex.seed_set = seed_opt->count() > 0;

  try {
    if (g->parsed()) return do_generate(gen, out);
    if (f->parsed()) return do_fit(fit, out);
    if (s->parsed()) return do_sample(smp, out);
    if (e->parsed()) return do_evaluate(ev, out);
    if (x->parsed()) return do_experiment(ex, out);
    if (y->parsed()) return do_summarize(sm, out);
  } catch (const Error& er) {
    err << "error: " << er.what() << '\n';
    return er.is_numerical() ? kExitNumerical : kExitInput;
  } catch (const std::exception& ex2) {
    err << "error: " << ex2.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace dmps::cli
