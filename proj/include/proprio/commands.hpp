#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "proprio/config.hpp"
#include "proprio/gridmap.hpp"
#include "proprio/pipeline.hpp"
#include "proprio/polyfit.hpp"
#include "proprio/simharness.hpp"

namespace proprio::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitIo = 3;

// ─── simulate ───────────────────────────────────────────────────────────────

struct SimulateResult {
  fs::path telemetry;
  fs::path truth;
  std::size_t samples = 0;
  std::size_t slips = 0;
};

/// Writes `telemetry.txt` and `truth.txt` into out_dir.
SimulateResult cmd_simulate(const RunConfig& cfg, const fs::path& out_dir);

// ─── map ────────────────────────────────────────────────────────────────────

PipelineOptions pipeline_options(const RunConfig& cfg);
/// Grid spec for a stream: the configured one, with the origin resolved.
GridSpec resolve_grid(const RunConfig& cfg, std::span<const ProprioSample> samples);
ExportOptions export_options(const RunConfig& cfg);

TerrainGrid map_stream(const StreamHeader& header, std::span<const ProprioSample> samples,
                       const RunConfig& cfg, PipelineStats* stats = nullptr);

struct MapResult {
  TerrainGrid grid;
  PipelineStats stats;
};

MapResult cmd_map(const fs::path& telemetry, const RunConfig& cfg, const fs::path& out_dir);

// ─── eval-elevation ─────────────────────────────────────────────────────────

struct ElevationError {
  double rmse = 0.0;  // m
  std::size_t cells = 0;
};

/// RMSE over valid map cells, each scored against the truth cell under its
/// center. Throws ValidationError when the resolutions differ or no valid map
/// cell lands on a valid truth cell.
ElevationError evaluate_elevation(const Layer& elevation, const GridSpec& truth_grid,
                                  std::span<const double> truth_heights);

ElevationError cmd_eval_elevation(const fs::path& map_dir, const fs::path& truth_file);

// ─── compare ────────────────────────────────────────────────────────────────

struct CompareColumn {
  std::string name;
  std::optional<GridSummary> summary;  // nullopt: the map had no valid cell
};

std::vector<CompareColumn> compare_maps(std::span<const fs::path> maps);
/// Metrics as rows, maps as columns, values in %.6g.
std::string format_compare_table(std::span<const CompareColumn> columns);
/// Same layout in CSV with round-trip precision; empty fields for missing values.
std::string format_compare_csv(std::span<const CompareColumn> columns);

/// Requires at least two maps. Writes compare.txt and compare.csv when out_dir
/// is non-empty.
std::vector<CompareColumn> cmd_compare(std::span<const fs::path> maps, const fs::path& out_dir);

// ─── sweep ──────────────────────────────────────────────────────────────────

struct StaticMargins {
  double giim = 0.0;
  double giam = 0.0;
};

/// Four feet under the hips on a plane inclined by `angle_deg` along x, CoM
/// body_height above the plane at the hip center, gravity-only GIA.
StaticMargins static_stance_margins(double angle_deg, const sim::GaitParams& gait, double gravity);

struct SweepRow {
  double angle_deg = 0.0;
  std::size_t scenarios = 0;
  StaticMargins static_margins;
  double model_cot = 0.0;
  // Layer means over cells whose travel slope equals angle_deg.
  std::optional<double> cot;
  std::optional<double> giim;
  std::optional<double> giam;
  std::size_t cot_cells = 0;
  std::size_t margin_cells = 0;
};

struct SweepFits {
  PolyFit static_giim;
  PolyFit static_giam;
  std::optional<PolyFit> cot;
  std::optional<PolyFit> giim;
  std::optional<PolyFit> giam;
  /// max |fitted CoT − model CoT| over the swept angles.
  double cot_model_deviation = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  SweepFits fits;
};

inline constexpr std::size_t kSweepDegree = 4;

/// Rows in the order of the distinct angles given. Writes sweep.csv, fits.csv
/// and fit_curves.csv when out_dir is non-empty.
SweepResult cmd_sweep(std::span<const double> angles_deg, std::size_t repeats, const RunConfig& cfg,
                      const fs::path& out_dir);

// ─── entry point ────────────────────────────────────────────────────────────

/// Parses argv and dispatches; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace proprio::cli
