#pragma once

// Batch experiment harness: config parsing, seeded trials, result rows and
// mean +- standard-error summaries.

#include "dmps/datasets.hpp"
#include "dmps/ot.hpp"
#include "dmps/samplers.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dmps {

enum class DatasetKind { Mickey, TwoMoons, Arc, Hypersemisphere, Gluon };
enum class SamplerKind { Dmps, Svgd, Ula };

std::string to_string(DatasetKind kind);
DatasetKind parse_dataset_kind(const std::string& name);
std::string to_string(SamplerKind kind);
SamplerKind parse_sampler_kind(const std::string& name);

struct DatasetSpec {
  DatasetKind kind = DatasetKind::Hypersemisphere;
  Index dim = 3;  // hypersemisphere only
  MickeyParams mickey;
  TwoMoonsParams two_moons;
  ArcParams arc;
  GluonSource gluon;
  Index particle_index = 0;

  Index ambient_dim() const;
  std::string label() const;
};

/// Draws n points from a synthetic dataset. Gluon is not synthetic and throws.
SampleMatrix generate_dataset(const DatasetSpec& spec, Index n, std::uint64_t seed);

struct SamplerEntry {
  SamplerKind kind = SamplerKind::Dmps;
  SamplerConfig config;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 1;
  DatasetSpec dataset;
  Index n_train = 1000;
  std::vector<Index> m_particles{300};
  Index n_reference = 20000;
  Index trials = 1;
  std::optional<double> bandwidth;  // unset: median heuristic per trial
  TruncationOptions truncation;
  InitSpec init;
  std::vector<SamplerEntry> samplers;
  OTConfig ot;
  std::filesystem::path output_dir = "results";
  bool save_trajectories = false;
};

/// Parses and validates a JSON config; unknown keys are rejected.
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// The config with every default filled in, as JSON text.
std::string manifest_json(const ExperimentConfig& cfg);

void validate(const ExperimentConfig& cfg);

struct ResultRow {
  std::string dataset;
  std::string sampler;
  Index n_train = 0;
  Index m_particles = 0;
  Index trial = 0;
  double ot_cost = 0.0;
  Index iters = 0;
  double wall_time_seconds = 0.0;  // sampler run only
  double fit_seconds = 0.0;        // model fit shared by the trial
  double epsilon = 0.0;
  bool converged = false;
  std::string status = "ok";       // anything else marks a failed cell

  bool ok() const { return status == "ok"; }
};

// Seed tree: master -> trial(t) -> {train, reference, init(m), sampler(m)}.
std::uint64_t trial_seed(std::uint64_t master, Index trial);
std::uint64_t train_seed(std::uint64_t trial);
std::uint64_t reference_seed(std::uint64_t trial);
std::uint64_t init_seed(std::uint64_t trial, Index m);
std::uint64_t sampler_seed(std::uint64_t trial, SamplerKind kind, Index m);

struct RunOptions {
  bool write_outputs = true;
  std::ostream* log = nullptr;
};

/// Runs every trial; a failing cell becomes a row with a non-ok status and
/// the remaining cells still run. Writes manifest.json, results.csv,
/// summary.txt and summary.csv under cfg.output_dir when requested.
std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

void write_results_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_results_csv(const std::filesystem::path& path);

struct SummaryCell {
  std::string dataset;
  std::string sampler;
  Index m_particles = 0;
  Index n = 0;          // successful rows
  Index failures = 0;
  double mean = 0.0;
  double stderr_mean = 0.0;  // sample std / sqrt(n); 0 when n == 1
  double mean_wall_time = 0.0;
};

/// Groups by (dataset, sampler, m_particles) in first-seen order.
std::vector<SummaryCell> summarize(const std::vector<ResultRow>& rows);

std::string format_summary_table(const std::vector<SummaryCell>& cells);

/// Writes summary.txt (aligned) and summary.csv into dir.
std::vector<SummaryCell> emit_summary(const std::vector<ResultRow>& rows,
                                      const std::filesystem::path& dir);

}  // namespace dmps
