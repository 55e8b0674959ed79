#pragma once

// Flat dotted-key run configuration and initial-condition generators.
//
// One `key = value` per line, `#` starts a comment. Lists are comma
// separated. Unknown and duplicate keys are errors.

#include "chb/flow.hpp"
#include "chb/grid.hpp"
#include "chb/potential.hpp"
#include "chb/simulation.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace chb {

enum class IcKind { Constant, Spinodal, Stripe, File };

struct InitialSpec {
  IcKind kind = IcKind::Spinodal;
  double value = 0.0;       ///< constant
  double mean = 0.0;        ///< spinodal
  double amplitude = 0.01;  ///< spinodal
  std::uint64_t seed = 42;  ///< spinodal (mt19937_64)
  double smooth = 0.0;      ///< spinodal: sigma of the (I - sigma*Lap_h)^-2 smoothing, 0 = raw noise
  double width = 0.5;       ///< stripe
  std::filesystem::path path;  ///< file
  bool operator==(const InitialSpec&) const = default;
};

struct SweepSpec {
  std::vector<double> nu{1e-1, 1e-2, 1e-3, 1e-4};
  bool operator==(const SweepSpec&) const = default;
};

struct DependSpec {
  double delta = 1e-6;
  std::uint64_t seed = 7;
  bool operator==(const DependSpec&) const = default;
};

struct EquilibriumSpec {
  double window_lo = 1.0;
  double window_hi = 0.0;  ///< 0: half the run length
  double sample_every = 0.1;
  bool operator==(const EquilibriumSpec&) const = default;
};

struct ProbeSpec {
  std::vector<double> radii{1.0, 2.0, 4.0};
  double mean = 0.0;
  std::uint64_t seed = 11;
  bool operator==(const ProbeSpec&) const = default;
};

struct RunConfig {
  GridSpec grid;
  PhysParams phys;
  Potential potential;
  SolverConfig solver;
  InitialSpec ic;
  std::filesystem::path output_dir = "out";
  /// Default subcommand when none is given: run | sweep | depend | equilibrium | probe.
  std::string experiment = "run";
  SweepSpec sweep;
  DependSpec depend;
  EquilibriumSpec equilibrium;
  ProbeSpec probe;

  /// Throws ConfigError naming the offending key.
  void validate() const;
};

bool operator==(const RunConfig& a, const RunConfig& b);

/// Parses and validates. Relative ic.path values resolve against base_dir.
/// Throws ConfigError with the line number of the first problem.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);
/// Applies one `key=value` override (line number 0 in errors).
void apply_override(RunConfig& cfg, const std::string& assignment);
/// Writes every key; parse_config(serialize(c)) == c.
std::string serialize(const RunConfig& cfg);

std::string to_string(IcKind kind);

/// Builds phi0 on the configured grid. File data must match the grid.
ScalarField make_initial(const InitialSpec& spec, const GridSpec& grid, ScalarBC bc, double eps);

} // namespace chb
