#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ersim/config.hpp"
#include "ersim/coherent.hpp"
#include "ersim/geometry.hpp"
#include "ersim/implant.hpp"
#include "ersim/levels.hpp"
#include "ersim/photon_stream.hpp"

// Experiment recipes: config -> module pipeline -> CSV/JSON artifacts.
namespace ersim::run {

inline constexpr std::string_view kExperiments[] = {"blueprint", "implant", "saturation", "trpl",
                                                    "rabi",      "ramsey",  "echo",       "g2",
                                                    "upconversion", "ple",  "image",      "fit"};

struct RunReport {
  std::string config_digest;
  std::string toolkit_version;
  std::string experiment;
  std::uint64_t seed = 0;
  std::vector<std::string> outputs;  // file names inside the output directory
  std::vector<std::pair<std::string, double>> summary;
  bool fit_converged = true;
  std::string fit_message;
  double wall_clock_s = 0.0;

  double value(std::string_view key) const;  // DomainError if absent
};

// Module parameter blocks built from a config (defaults where keys are absent).
geometry::ArrayGeometry geometry_from(const config::Config& cfg);
geometry::ExcitationSpot spot_from(const config::Config& cfg, const geometry::ArrayGeometry& geom);
implant::DepthProfile profile_from(const config::Config& cfg);
implant::StackSpec stack_from(const config::Config& cfg);
geometry::OccupancyModel occupancy_from(const config::Config& cfg, const geometry::ArrayGeometry& geom);
levels::LevelSystem levels_from(const config::Config& cfg);
levels::ExcitationSpec excitation_from(const config::Config& cfg);
coherent::CoherenceParams coherence_from(const config::Config& cfg);
photon::StreamSpec stream_from(const config::Config& cfg);

/// Schema-level validation plus every module invariant the experiment relies
/// on; throws ValidationError listing all problems.
void preflight(const config::Config& cfg);

/// Runs the configured experiment, writing artifacts and report.json into
/// `out_dir` (created if missing). Identical config and seed give
/// byte-identical CSV files.
RunReport run(const config::Config& cfg, const std::filesystem::path& out_dir);

std::string report_json(const RunReport& report);

}  // namespace ersim::run
