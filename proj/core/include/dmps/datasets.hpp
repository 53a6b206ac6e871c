#pragma once

// Synthetic target distributions, gluon-jet ingestion and particle
// initialization policies.

#include "dmps/types.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace dmps {

/// Head disk at the origin plus two ear disks at (+-ear_x, ear_y).
struct MickeyParams {
  double head_radius = 1.0;
  double ear_radius = 0.45;
  double ear_x = 0.9;
  double ear_y = 0.9;
};

/// Moon 0: upper half-annulus around the origin. Moon 1: lower half-annulus
/// around (center_x, center_y). Both use radii [inner, outer].
struct TwoMoonsParams {
  double inner = 0.8;
  double outer = 1.2;
  double center_x = 1.0;
  double center_y = 0.4;
};

struct ArcParams {
  double theta_min = 0.0;
  double theta_max = 3.14159265358979323846;
  double radial_noise = 1e-2;
  Eigen::Matrix3d rotation = default_rotation();

  static Eigen::Matrix3d default_rotation();
};

bool in_mickey(double x, double y, const MickeyParams& p);

/// 0 or 1 for the moon containing (x, y), -1 outside both.
int two_moons_component(double x, double y, const TwoMoonsParams& p);

/// Minimum distance between the two moons; throws InvalidInputError when the
/// parameters are malformed or the moons touch.
double validate_two_moons(const TwoMoonsParams& p);

SampleMatrix sample_mickey(Index n, std::uint64_t seed, const MickeyParams& p = {});
SampleMatrix sample_two_moons(Index n, std::uint64_t seed, const TwoMoonsParams& p = {});
SampleMatrix sample_arc(Index n, std::uint64_t seed, const ArcParams& p = {});
SampleMatrix sample_hypersemisphere(Index n, Index d, std::uint64_t seed);

// Gluon jets: an array of shape jets x 30 x 4 (eta_rel, phi_rel, pt_rel, mask).
inline constexpr Index kGluonJets = 177252;
inline constexpr Index kGluonParticles = 30;
inline constexpr Index kGluonFeatures = 4;

struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  static Standardizer fit(const Matrix& x);
  Matrix apply(const Matrix& raw) const;
  Matrix invert(const Matrix& standardized) const;
};

struct GluonSource {
  std::filesystem::path path;
  std::string dataset = "particle_features";
  Index expected_jets = kGluonJets;
};

/// All jets for one physical particle, first three features, raw units.
Matrix load_gluon_slice(const GluonSource& src, Index particle_index);

struct GluonTrainingSet {
  SampleMatrix train;       // standardized
  Standardizer normalizer;  // fitted on the raw training rows
  std::vector<Index> rows;  // jet indices drawn, in draw order
};

/// Draws n_train jets without replacement and standardizes them.
GluonTrainingSet load_gluon(const GluonSource& src, Index particle_index, Index n_train,
                            std::uint64_t seed);
GluonTrainingSet subsample_standardized(const Matrix& slice, Index n_train, std::uint64_t seed);

enum class InitPolicy { SubsampleJitter, UniformBox, Explicit };

struct InitSpec {
  InitPolicy policy = InitPolicy::SubsampleJitter;
  double lo = -1.0;
  double hi = 1.0;
  std::optional<SampleMatrix> points;
};

std::string to_string(InitPolicy policy);
InitPolicy parse_init_policy(const std::string& name);

/// Subsample-jitter picks training rows (without replacement when m <= N)
/// and adds N(0, (sqrt(eps)/10)^2) noise; eps defaults to the median rule.
SampleMatrix init_particles(const InitSpec& spec, Index m, Index d, std::uint64_t seed,
                            const SampleMatrix* train = nullptr,
                            std::optional<Bandwidth> eps = std::nullopt);

}  // namespace dmps
