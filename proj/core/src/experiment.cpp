#include "dmps/experiment.hpp"

#include "dmps/kernel.hpp"
#include "dmps/random.hpp"
#include "dmps/sample_io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace dmps {
namespace {

using nlohmann::json;

constexpr int kManifestVersion = 1;

[[noreturn]] void bad(const std::string& where, const std::string& msg) {
  throw InvalidInputError("config: " + where + ": " + msg);
}

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) bad(where, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) bad(where, "unknown key '" + key + "'");
  }
}

double get_number(const json& obj, const char* key, double fallback, const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  if (!obj.at(key).is_number()) bad(where, std::string("'") + key + "' must be a number");
  return obj.at(key).get<double>();
}

std::optional<double> get_optional(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  if (!obj.at(key).is_number()) bad(where, std::string("'") + key + "' must be a number or null");
  return obj.at(key).get<double>();
}

Index get_index(const json& obj, const char* key, Index fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) bad(where, std::string("'") + key + "' must be an integer");
  return v.get<Index>();
}

std::string get_string(const json& obj, const char* key, const std::string& fallback,
                       const std::string& where) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_string()) bad(where, std::string("'") + key + "' must be a string");
  return obj.at(key).get<std::string>();
}

Eigen::Matrix3d parse_rotation(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) bad(where, "rotation must be a 3x3 array");
  Eigen::Matrix3d r;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_array() || j[i].size() != 3) bad(where, "rotation must be a 3x3 array");
    for (int k = 0; k < 3; ++k) {
      if (!j[i][k].is_number()) bad(where, "rotation entries must be numbers");
      r(i, k) = j[i][k].get<double>();
    }
  }
  if (!(r.transpose() * r).isIdentity(1e-9)) bad(where, "rotation must be orthogonal");
  return r;
}

DatasetSpec parse_dataset(const json& j) {
  const std::string where = "dataset";
  check_keys(j, {"name", "dim", "params", "path", "h5_dataset", "expected_jets", "particle_index"},
             where);
  DatasetSpec spec;
  if (!j.contains("name")) bad(where, "missing 'name'");
  spec.kind = parse_dataset_kind(get_string(j, "name", "", where));
  spec.dim = get_index(j, "dim", 3, where);
  spec.particle_index = get_index(j, "particle_index", 0, where);
  const json params = j.contains("params") ? j.at("params") : json::object();
  const std::string pw = where + ".params";
  switch (spec.kind) {
    case DatasetKind::Mickey:
      check_keys(params, {"head_radius", "ear_radius", "ear_x", "ear_y"}, pw);
      spec.mickey.head_radius = get_number(params, "head_radius", spec.mickey.head_radius, pw);
      spec.mickey.ear_radius = get_number(params, "ear_radius", spec.mickey.ear_radius, pw);
      spec.mickey.ear_x = get_number(params, "ear_x", spec.mickey.ear_x, pw);
      spec.mickey.ear_y = get_number(params, "ear_y", spec.mickey.ear_y, pw);
      break;
    case DatasetKind::TwoMoons:
      check_keys(params, {"inner", "outer", "center_x", "center_y"}, pw);
      spec.two_moons.inner = get_number(params, "inner", spec.two_moons.inner, pw);
      spec.two_moons.outer = get_number(params, "outer", spec.two_moons.outer, pw);
      spec.two_moons.center_x = get_number(params, "center_x", spec.two_moons.center_x, pw);
      spec.two_moons.center_y = get_number(params, "center_y", spec.two_moons.center_y, pw);
      break;
    case DatasetKind::Arc:
      check_keys(params, {"theta_min", "theta_max", "radial_noise", "rotation"}, pw);
      spec.arc.theta_min = get_number(params, "theta_min", spec.arc.theta_min, pw);
      spec.arc.theta_max = get_number(params, "theta_max", spec.arc.theta_max, pw);
      spec.arc.radial_noise = get_number(params, "radial_noise", spec.arc.radial_noise, pw);
      if (params.contains("rotation")) spec.arc.rotation = parse_rotation(params.at("rotation"), pw);
      break;
    case DatasetKind::Hypersemisphere:
    case DatasetKind::Gluon:
      check_keys(params, {}, pw);
      break;
  }
  if (spec.kind == DatasetKind::Gluon) {
    if (!j.contains("path")) bad(where, "gluon needs 'path'");
    spec.gluon.path = get_string(j, "path", "", where);
    spec.gluon.dataset = get_string(j, "h5_dataset", spec.gluon.dataset, where);
    spec.gluon.expected_jets = get_index(j, "expected_jets", spec.gluon.expected_jets, where);
  }
  return spec;
}

json dataset_json(const DatasetSpec& spec) {
  json j;
  j["name"] = to_string(spec.kind);
  switch (spec.kind) {
    case DatasetKind::Mickey:
      j["params"] = {{"head_radius", spec.mickey.head_radius},
                     {"ear_radius", spec.mickey.ear_radius},
                     {"ear_x", spec.mickey.ear_x},
                     {"ear_y", spec.mickey.ear_y}};
      break;
    case DatasetKind::TwoMoons:
      j["params"] = {{"inner", spec.two_moons.inner},
                     {"outer", spec.two_moons.outer},
                     {"center_x", spec.two_moons.center_x},
                     {"center_y", spec.two_moons.center_y}};
      break;
    case DatasetKind::Arc: {
      json rot = json::array();
      for (int i = 0; i < 3; ++i) {
        rot.push_back({spec.arc.rotation(i, 0), spec.arc.rotation(i, 1), spec.arc.rotation(i, 2)});
      }
      j["params"] = {{"theta_min", spec.arc.theta_min},
                     {"theta_max", spec.arc.theta_max},
                     {"radial_noise", spec.arc.radial_noise},
                     {"rotation", rot}};
      break;
    }
    case DatasetKind::Hypersemisphere:
      j["dim"] = spec.dim;
      break;
    case DatasetKind::Gluon:
      j["path"] = spec.gluon.path.string();
      j["h5_dataset"] = spec.gluon.dataset;
      j["expected_jets"] = spec.gluon.expected_jets;
      j["particle_index"] = spec.particle_index;
      break;
  }
  return j;
}

double default_step(SamplerKind kind, Index n_train) {
  switch (kind) {
    case SamplerKind::Dmps: return 0.1 * static_cast<double>(n_train);
    case SamplerKind::Svgd: return kSvgdDefaultStep;
    case SamplerKind::Ula: return kUlaDefaultStep;
  }
  return 0.0;
}

Index default_max_iters(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::Dmps: return 1000;
    case SamplerKind::Svgd: return 3000;
    case SamplerKind::Ula: return 2000;
  }
  return 1;
}

SamplerEntry parse_sampler(const json& j, Index idx) {
  const std::string where = "samplers[" + std::to_string(idx) + "]";
  check_keys(j, {"kind", "step_size", "max_iters", "tol", "snapshot_every"}, where);
  if (!j.contains("kind")) bad(where, "missing 'kind'");
  SamplerEntry e;
  e.kind = parse_sampler_kind(get_string(j, "kind", "", where));
  e.config.step_size = get_optional(j, "step_size", where);
  e.config.max_iters = get_index(j, "max_iters", default_max_iters(e.kind), where);
  e.config.tol = get_optional(j, "tol", where);
  e.config.snapshot_every = get_index(j, "snapshot_every", 0, where);
  return e;
}

json sampler_json(const SamplerEntry& e, Index n_train) {
  json j;
  j["kind"] = to_string(e.kind);
  j["step_size"] = e.config.step_size.value_or(default_step(e.kind, n_train));
  j["max_iters"] = e.config.max_iters;
  if (e.config.tol) {
    j["tol"] = *e.config.tol;
  } else if (e.kind == SamplerKind::Svgd) {
    j["tol"] = kSvgdDefaultTol;
  } else {
    j["tol"] = nullptr;  // DMPS: 1e-4 sqrt(eps); ULA: fixed step count
  }
  j["snapshot_every"] = e.config.snapshot_every;
  return j;
}

std::string describe(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    return (err->is_numerical() ? "numerical: " : "error: ") + std::string(e.what());
  }
  return std::string("error: ") + e.what();
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

std::vector<std::string> csv_fields(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else if (c != '\r') {
      out.back() += c;
    }
  }
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct TrialData {
  SampleMatrix train;
  SampleMatrix reference;
};

TrialData draw_trial_data(const ExperimentConfig& cfg, std::uint64_t ts, const Matrix* gluon_slice) {
  if (cfg.dataset.kind != DatasetKind::Gluon) {
    return {generate_dataset(cfg.dataset, cfg.n_train, train_seed(ts)),
            generate_dataset(cfg.dataset, cfg.n_reference, reference_seed(ts))};
  }
  GluonTrainingSet set = subsample_standardized(*gluon_slice, cfg.n_train, train_seed(ts));
  // Reference rows are drawn from the whole slice and mapped with the
  // training normalizer.
  const Index total = gluon_slice->rows();
  std::vector<Index> order(static_cast<std::size_t>(total));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng = make_rng(reference_seed(ts));
  const Index take = std::min(cfg.n_reference, total);
  for (Index i = 0; i < take; ++i) {
    std::uniform_int_distribution<Index> pick(i, total - 1);
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
  }
  Matrix raw(take, gluon_slice->cols());
  for (Index i = 0; i < take; ++i) raw.row(i) = gluon_slice->row(order[static_cast<std::size_t>(i)]);
  return {std::move(set.train), SampleMatrix(set.normalizer.apply(raw))};
}

}  // namespace

std::string to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::Mickey: return "mickey";
    case DatasetKind::TwoMoons: return "two_moons";
    case DatasetKind::Arc: return "arc";
    case DatasetKind::Hypersemisphere: return "hypersemisphere";
    case DatasetKind::Gluon: return "gluon";
  }
  return "?";
}

DatasetKind parse_dataset_kind(const std::string& name) {
  for (auto k : {DatasetKind::Mickey, DatasetKind::TwoMoons, DatasetKind::Arc,
                 DatasetKind::Hypersemisphere, DatasetKind::Gluon}) {
    if (to_string(k) == name) return k;
  }
  throw InvalidInputError("unknown dataset '" + name +
                          "' (expected mickey, two_moons, arc, hypersemisphere or gluon)");
}

std::string to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::Dmps: return "dmps";
    case SamplerKind::Svgd: return "svgd";
    case SamplerKind::Ula: return "ula";
  }
  return "?";
}

SamplerKind parse_sampler_kind(const std::string& name) {
  for (auto k : {SamplerKind::Dmps, SamplerKind::Svgd, SamplerKind::Ula}) {
    if (to_string(k) == name) return k;
  }
  throw InvalidInputError("unknown sampler '" + name + "' (expected dmps, svgd or ula)");
}

Index DatasetSpec::ambient_dim() const {
  switch (kind) {
    case DatasetKind::Mickey:
    case DatasetKind::TwoMoons: return 2;
    case DatasetKind::Arc:
    case DatasetKind::Gluon: return 3;
    case DatasetKind::Hypersemisphere: return dim;
  }
  return 0;
}

std::string DatasetSpec::label() const {
  switch (kind) {
    case DatasetKind::Hypersemisphere: return "hypersemisphere_d" + std::to_string(dim);
    case DatasetKind::Gluon: return "gluon_p" + std::to_string(particle_index);
    default: return to_string(kind);
  }
}

SampleMatrix generate_dataset(const DatasetSpec& spec, Index n, std::uint64_t seed) {
  switch (spec.kind) {
    case DatasetKind::Mickey: return sample_mickey(n, seed, spec.mickey);
    case DatasetKind::TwoMoons: return sample_two_moons(n, seed, spec.two_moons);
    case DatasetKind::Arc: return sample_arc(n, seed, spec.arc);
    case DatasetKind::Hypersemisphere: return sample_hypersemisphere(n, spec.dim, seed);
    case DatasetKind::Gluon: break;
  }
  throw InvalidInputError("gluon data is loaded from a file, not generated");
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InvalidInputError(std::string("config: malformed JSON: ") + e.what());
  }
  const std::string where = "top level";
  check_keys(j, {"name", "seed", "dataset", "n_train", "m_particles", "n_reference", "trials",
                 "bandwidth", "truncation", "init", "samplers", "ot", "output_dir",
                 "save_trajectories", "manifest"},
             where);
  ExperimentConfig cfg;
  cfg.name = get_string(j, "name", cfg.name, where);
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) bad(where, "'seed' must be a nonnegative integer");
    cfg.seed = j.at("seed").get<std::uint64_t>();
  }
  if (!j.contains("dataset")) bad(where, "missing 'dataset'");
  cfg.dataset = parse_dataset(j.at("dataset"));
  cfg.n_train = get_index(j, "n_train", cfg.n_train, where);
  if (j.contains("m_particles")) {
    const json& m = j.at("m_particles");
    cfg.m_particles.clear();
    if (m.is_number_integer()) {
      cfg.m_particles.push_back(m.get<Index>());
    } else if (m.is_array()) {
      for (const auto& v : m) {
        if (!v.is_number_integer()) bad(where, "'m_particles' entries must be integers");
        cfg.m_particles.push_back(v.get<Index>());
      }
    } else {
      bad(where, "'m_particles' must be an integer or a list");
    }
  }
  cfg.n_reference = get_index(j, "n_reference", cfg.n_reference, where);
  cfg.trials = get_index(j, "trials", cfg.trials, where);
  cfg.bandwidth = get_optional(j, "bandwidth", where);
  if (j.contains("truncation")) {
    const json& t = j.at("truncation");
    check_keys(t, {"sigma_min", "lambda_min"}, "truncation");
    cfg.truncation.sigma_min = get_number(t, "sigma_min", cfg.truncation.sigma_min, "truncation");
    cfg.truncation.lambda_min = get_number(t, "lambda_min", cfg.truncation.lambda_min, "truncation");
  }
  if (j.contains("init")) {
    const json& in = j.at("init");
    check_keys(in, {"policy", "lo", "hi"}, "init");
    cfg.init.policy = parse_init_policy(get_string(in, "policy", to_string(cfg.init.policy), "init"));
    if (cfg.init.policy == InitPolicy::Explicit) {
      bad("init", "explicit initialization is only available through the library and 'sample'");
    }
    cfg.init.lo = get_number(in, "lo", cfg.init.lo, "init");
    cfg.init.hi = get_number(in, "hi", cfg.init.hi, "init");
  }
  if (!j.contains("samplers") || !j.at("samplers").is_array() || j.at("samplers").empty()) {
    bad(where, "'samplers' must be a nonempty list");
  }
  Index idx = 0;
  for (const auto& s : j.at("samplers")) cfg.samplers.push_back(parse_sampler(s, idx++));
  if (j.contains("ot")) {
    const json& o = j.at("ot");
    check_keys(o, {"reg", "max_iters", "marginal_tol", "cost"}, "ot");
    cfg.ot.reg = get_number(o, "reg", cfg.ot.reg, "ot");
    cfg.ot.max_iters = get_index(o, "max_iters", cfg.ot.max_iters, "ot");
    cfg.ot.marginal_tol = get_number(o, "marginal_tol", cfg.ot.marginal_tol, "ot");
    cfg.ot.cost = parse_cost_kind(get_string(o, "cost", to_string(cfg.ot.cost), "ot"));
  }
  cfg.output_dir = get_string(j, "output_dir", cfg.output_dir.string(), where);
  if (j.contains("save_trajectories")) {
    if (!j.at("save_trajectories").is_boolean()) bad(where, "'save_trajectories' must be a boolean");
    cfg.save_trajectories = j.at("save_trajectories").get<bool>();
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str());
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.trials < 1) bad("top level", "'trials' must be >= 1");
  if (cfg.n_train < 2) bad("top level", "'n_train' must be >= 2");
  if (cfg.n_reference < 1) bad("top level", "'n_reference' must be >= 1");
  if (cfg.m_particles.empty()) bad("top level", "'m_particles' must not be empty");
  for (Index m : cfg.m_particles) {
    if (m < 1) bad("top level", "'m_particles' entries must be positive");
  }
  if (cfg.dataset.kind == DatasetKind::Hypersemisphere && cfg.dataset.dim < 2) {
    bad("dataset", "hypersemisphere needs dim >= 2");
  }
  if (cfg.dataset.kind == DatasetKind::Gluon &&
      (cfg.dataset.particle_index < 0 || cfg.dataset.particle_index >= kGluonParticles)) {
    bad("dataset", "particle_index must lie in [0, 29]");
  }
  if (cfg.dataset.kind == DatasetKind::TwoMoons) validate_two_moons(cfg.dataset.two_moons);
  if (cfg.bandwidth && !(*cfg.bandwidth > 0.0)) bad("top level", "'bandwidth' must be positive");
  if (!(cfg.truncation.lambda_min >= 0.0)) bad("truncation", "'lambda_min' must be nonnegative");
  if (cfg.init.policy == InitPolicy::UniformBox && !(cfg.init.hi > cfg.init.lo)) {
    bad("init", "uniform box needs lo < hi");
  }
  if (cfg.samplers.empty()) bad("top level", "'samplers' must not be empty");
  for (const auto& s : cfg.samplers) {
    if (s.config.step_size && !(*s.config.step_size > 0.0)) bad("samplers", "step_size must be > 0");
    if (s.config.max_iters < 1) bad("samplers", "max_iters must be >= 1");
    if (s.config.tol && !(*s.config.tol >= 0.0)) bad("samplers", "tol must be >= 0");
  }
  if (!(cfg.ot.reg > 0.0)) bad("ot", "'reg' must be positive");
  if (!(cfg.ot.marginal_tol > 0.0)) bad("ot", "'marginal_tol' must be positive");
  if (cfg.ot.max_iters < 1) bad("ot", "'max_iters' must be >= 1");
}

std::string manifest_json(const ExperimentConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  j["seed"] = cfg.seed;
  j["dataset"] = dataset_json(cfg.dataset);
  j["n_train"] = cfg.n_train;
  j["m_particles"] = cfg.m_particles;
  j["n_reference"] = cfg.n_reference;
  j["trials"] = cfg.trials;
  j["bandwidth"] = cfg.bandwidth ? json(*cfg.bandwidth) : json(nullptr);
  j["truncation"] = {{"sigma_min", cfg.truncation.sigma_min},
                     {"lambda_min", cfg.truncation.lambda_min}};
  j["init"] = {{"policy", to_string(cfg.init.policy)}, {"lo", cfg.init.lo}, {"hi", cfg.init.hi}};
  j["samplers"] = json::array();
  for (const auto& s : cfg.samplers) j["samplers"].push_back(sampler_json(s, cfg.n_train));
  j["ot"] = {{"reg", cfg.ot.reg},
             {"max_iters", cfg.ot.max_iters},
             {"marginal_tol", cfg.ot.marginal_tol},
             {"cost", to_string(cfg.ot.cost)}};
  j["output_dir"] = cfg.output_dir.string();
  j["save_trajectories"] = cfg.save_trajectories;
  j["manifest"] = {
      {"version", kManifestVersion},
      {"seed_tree", "trial=derive(seed,'trial',t); train=derive(trial,'train'); "
                    "reference=derive(trial,'reference'); init=derive(trial,'init',m); "
                    "sampler=derive(trial,<kind>,m)"},
      {"null_defaults", {{"bandwidth", "median heuristic on each training draw"},
                         {"sigma_min", "non-positive means 1e-8 / eps"},
                         {"dmps.tol", "1e-4 * sqrt(eps)"},
                         {"ula.tol", "unused; ULA runs max_iters steps"}}}};
  return j.dump(2);
}

std::uint64_t trial_seed(std::uint64_t master, Index trial) {
  return derive_seed(master, "trial", static_cast<std::uint64_t>(trial));
}
std::uint64_t train_seed(std::uint64_t trial) { return derive_seed(trial, "train"); }
std::uint64_t reference_seed(std::uint64_t trial) { return derive_seed(trial, "reference"); }
std::uint64_t init_seed(std::uint64_t trial, Index m) {
  return derive_seed(trial, "init", static_cast<std::uint64_t>(m));
}
std::uint64_t sampler_seed(std::uint64_t trial, SamplerKind kind, Index m) {
  return derive_seed(trial, to_string(kind), static_cast<std::uint64_t>(m));
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  validate(cfg);
  std::optional<Matrix> gluon_slice;
  if (cfg.dataset.kind == DatasetKind::Gluon) {
    gluon_slice = load_gluon_slice(cfg.dataset.gluon, cfg.dataset.particle_index);
  }
  const std::string label = cfg.dataset.label();
  if (opts.write_outputs) {
    std::filesystem::create_directories(cfg.output_dir);
    std::ofstream manifest(cfg.output_dir / "manifest.json");
    if (!manifest) throw IoError("cannot write manifest in " + cfg.output_dir.string());
    manifest << manifest_json(cfg) << '\n';
    if (cfg.save_trajectories) std::filesystem::create_directories(cfg.output_dir / "trajectories");
  }

  std::vector<ResultRow> rows;
  const auto fail_row = [&](const SamplerEntry& s, Index m, Index t, const std::string& status) {
    ResultRow r;
    r.dataset = label;
    r.sampler = to_string(s.kind);
    r.n_train = cfg.n_train;
    r.m_particles = m;
    r.trial = t;
    r.ot_cost = std::nan("");
    r.status = status;
    return r;
  };

  for (Index t = 0; t < cfg.trials; ++t) {
    const std::uint64_t ts = trial_seed(cfg.seed, t);
    std::optional<TrialData> data;
    std::optional<DiffusionModel> model;
    double fit_seconds = 0.0;
    try {
      data = draw_trial_data(cfg, ts, gluon_slice ? &*gluon_slice : nullptr);
      const Bandwidth eps = cfg.bandwidth ? Bandwidth(*cfg.bandwidth) : median_bandwidth(data->train);
      const auto t0 = std::chrono::steady_clock::now();
      model = DiffusionModel::fit(data->train, eps, cfg.truncation);
      fit_seconds = seconds_since(t0);
    } catch (const std::exception& e) {
      for (Index m : cfg.m_particles) {
        for (const auto& s : cfg.samplers) rows.push_back(fail_row(s, m, t, describe(e)));
      }
      if (opts.log) *opts.log << "trial " << t << ": " << describe(e) << '\n';
      continue;
    }
    const double eps = model->bandwidth().value();
    const ScoreFn score = learned_score(*model);

    for (Index m : cfg.m_particles) {
      std::optional<SampleMatrix> init;
      try {
        init = init_particles(cfg.init, m, data->train.dim(), init_seed(ts, m), &data->train,
                              model->bandwidth());
      } catch (const std::exception& e) {
        for (const auto& s : cfg.samplers) rows.push_back(fail_row(s, m, t, describe(e)));
        continue;
      }
      for (const auto& s : cfg.samplers) {
        SamplerConfig sc = s.config;
        sc.seed = sampler_seed(ts, s.kind, m);
        try {
          const auto t0 = std::chrono::steady_clock::now();
          Trajectory traj;
          switch (s.kind) {
            case SamplerKind::Dmps: traj = dmps_run(*model, *init, sc); break;
            case SamplerKind::Svgd: traj = svgd_run(score, *init, sc); break;
            case SamplerKind::Ula: traj = ula_run(score, *init, sc); break;
          }
          const double wall = seconds_since(t0);
          const OTReport ot = sinkhorn_distance(traj.final_state(), data->reference, cfg.ot);
          ResultRow r;
          r.dataset = label;
          r.sampler = to_string(s.kind);
          r.n_train = cfg.n_train;
          r.m_particles = m;
          r.trial = t;
          r.ot_cost = ot.cost;
          r.iters = traj.iters_run;
          r.wall_time_seconds = wall;
          r.fit_seconds = fit_seconds;
          r.epsilon = eps;
          r.converged = traj.converged;
          rows.push_back(r);
          if (opts.log) {
            *opts.log << label << " trial " << t << " m=" << m << " " << r.sampler
                      << " cost=" << r.ot_cost << " iters=" << r.iters << " time=" << wall << "s"
                      << (ot.converged ? "" : " (ot not converged)") << '\n';
          }
          if (opts.write_outputs && cfg.save_trajectories) {
            write_trajectory_csv(cfg.output_dir / "trajectories" /
                                     (r.sampler + "_m" + std::to_string(m) + "_t" +
                                      std::to_string(t) + ".csv"),
                                 traj);
          }
        } catch (const std::exception& e) {
          rows.push_back(fail_row(s, m, t, describe(e)));
          if (opts.log) *opts.log << label << " trial " << t << " " << to_string(s.kind) << ": "
                                  << describe(e) << '\n';
        }
      }
    }
  }

  if (opts.write_outputs) {
    write_results_csv(cfg.output_dir / "results.csv", rows);
    emit_summary(rows, cfg.output_dir);
  }
  return rows;
}

void write_results_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open results file for writing: " + path.string());
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "dataset,sampler,n_train,m_particles,trial,ot_cost,iters,wall_time_seconds,fit_seconds,"
         "epsilon,converged,status\n";
  for (const auto& r : rows) {
    out << csv_quote(r.dataset) << ',' << csv_quote(r.sampler) << ',' << r.n_train << ','
        << r.m_particles << ',' << r.trial << ',' << r.ot_cost << ',' << r.iters << ','
        << r.wall_time_seconds << ',' << r.fit_seconds << ',' << r.epsilon << ','
        << (r.converged ? 1 : 0) << ',' << csv_quote(r.status) << '\n';
  }
  if (!out) throw IoError("failed writing results file: " + path.string());
}

std::vector<ResultRow> read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open results file: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError("results file is empty: " + path.string());
  const auto header = csv_fields(line);
  if (header.size() != 12 || header[0] != "dataset" || header[5] != "ot_cost") {
    throw IoError("not a results file: " + path.string());
  }
  std::vector<ResultRow> rows;
  Index line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = csv_fields(line);
    if (f.size() != 12) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected 12 fields");
    }
    try {
      ResultRow r;
      r.dataset = f[0];
      r.sampler = f[1];
      r.n_train = std::stoll(f[2]);
      r.m_particles = std::stoll(f[3]);
      r.trial = std::stoll(f[4]);
      r.ot_cost = std::stod(f[5]);
      r.iters = std::stoll(f[6]);
      r.wall_time_seconds = std::stod(f[7]);
      r.fit_seconds = std::stod(f[8]);
      r.epsilon = std::stod(f[9]);
      r.converged = f[10] == "1";
      r.status = f[11];
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": malformed field");
    }
  }
  return rows;
}

}  // namespace dmps
