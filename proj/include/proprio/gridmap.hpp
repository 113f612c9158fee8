#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "proprio/slip.hpp"
#include "proprio/types.hpp"

namespace proprio {

/// Fixed-size grid centered on `origin`. Row i runs along y, column j along x.
struct GridSpec {
  std::size_t n_x = 100;
  std::size_t n_y = 100;
  double resolution = 0.4;  // m per cell
  Vec2 origin = Vec2::Zero();

  void validate() const;
  std::size_t cell_count() const { return n_x * n_y; }
  bool operator==(const GridSpec& other) const;
};

struct CellIndex {
  std::size_t i = 0;  // row (y)
  std::size_t j = 0;  // column (x)
  bool operator==(const CellIndex&) const = default;
};

/// i = ⌊(y − y0)/r + n_y/2⌋, j = ⌊(x − x0)/r + n_x/2⌋; nullopt when outside
/// the grid. Never clamps.
std::optional<CellIndex> index(const GridSpec& spec, double x, double y);

Vec2 cell_center(const GridSpec& spec, CellIndex cell);

struct MeanUpdate {
  double value;
  std::uint64_t count;
};

/// Equal-weight running mean: (n·φ + φ̂)/(n + 1).
inline MeanUpdate update_mean(double value, std::uint64_t n, double observation) {
  const double nd = static_cast<double>(n);
  return {(nd * value + observation) / (nd + 1.0), n + 1};
}

enum class LayerId : std::size_t { elevation = 0, slip_count, cot, giim, giam };
inline constexpr std::size_t kLayerCount = 5;
inline constexpr std::array<LayerId, kLayerCount> kAllLayers = {
    LayerId::elevation, LayerId::slip_count, LayerId::cot, LayerId::giim, LayerId::giam};

std::string_view layer_name(LayerId id);
std::optional<LayerId> layer_from_name(std::string_view name);

/// One scalar field with a per-cell visit count. A cell with no visits is
/// invalid and carries no value.
class Layer {
 public:
  Layer() = default;
  explicit Layer(const GridSpec& spec);

  const GridSpec& spec() const { return spec_; }

  double value(CellIndex c) const { return values_[flat(c)]; }
  std::uint64_t visits(CellIndex c) const { return counts_[flat(c)]; }
  bool valid(CellIndex c) const { return counts_[flat(c)] > 0; }

  void add_mean(CellIndex c, double observation);
  /// Counts a visit and adds `increment` to the cell total (event counters).
  void add_count(CellIndex c, double increment);

  /// Direct access for import and filters.
  void set(CellIndex c, double value, std::uint64_t visits);

  std::span<const double> values() const { return values_; }
  std::span<const std::uint64_t> counts() const { return counts_; }

  std::size_t valid_cells() const;
  bool operator==(const Layer& other) const;

 private:
  std::size_t flat(CellIndex c) const { return c.i * spec_.n_x + c.j; }

  GridSpec spec_;
  std::vector<double> values_;
  std::vector<std::uint64_t> counts_;
};

/// Gaussian smoothing with a kernel truncated at ⌈3σ⌉ cells. Each valid cell's
/// value is spread over the valid in-bounds cells of its neighbourhood with
/// weights renormalized to one, so the layer total is preserved. σ = 0 returns
/// the layer unchanged; validity and visit counts never change.
Layer smooth(const Layer& layer, double sigma);

struct ElevationSample {
  Vec2 xy;
  double h;
};
struct ContactSample {
  Vec2 xy;
  bool slip_event;  // foot in stance at the first sample of a slip run
};
struct CotSample {
  Vec2 xy;
  double cot;
};
struct MarginSample {
  Vec2 xy;
  double giim;
  double giam;
};

/// Observations routed into the grid, already guarded upstream.
using GridObservation = std::variant<ElevationSample, ContactSample, CotSample, MarginSample>;

struct DroppedCounts {
  std::uint64_t elevation = 0;
  std::uint64_t contacts = 0;
  std::uint64_t slip_events = 0;
  std::uint64_t cot = 0;
  std::uint64_t margins = 0;
};

struct GridSummary {
  double total_slip = 0.0;
  std::optional<double> mean_cot;
  std::optional<double> mean_giim;
  std::optional<double> mean_giam;
};

class TerrainGrid {
 public:
  explicit TerrainGrid(const GridSpec& spec);

  const GridSpec& spec() const { return spec_; }
  const Layer& layer(LayerId id) const { return layers_[static_cast<std::size_t>(id)]; }
  Layer& layer(LayerId id) { return layers_[static_cast<std::size_t>(id)]; }
  const DroppedCounts& dropped() const { return dropped_; }

  void ingest(const GridObservation& obs);
  void ingest(std::span<const GridObservation> observations);

  /// Counts one slip event per foot in stance at the start of a flagged run,
  /// at that foot's cell, and records a stance visit for every stance foot.
  void count_slip(const SlipVerdict& verdict, const PerFoot<bool>& contact,
                  const PerFoot<Vec2>& foot_xy);

  /// nullopt when no layer has a valid cell.
  std::optional<GridSummary> summarize() const;

  bool operator==(const TerrainGrid& other) const;

 private:
  GridSpec spec_;
  std::array<Layer, kLayerCount> layers_;
  DroppedCounts dropped_;
};

struct ExportOptions {
  double smoothing_sigma = 0.0;
  /// Serialized run configuration, stored verbatim in the metadata.
  std::map<std::string, std::string> config;
  std::string config_fingerprint;
};

/// Writes `<layer>.txt` (row i per line, `nan` for invalid cells),
/// `<layer>.count.txt`, `<layer>.pgm`, optional `<layer>.smoothed.txt` /
/// `.smoothed.pgm`, and `metadata.json`.
void export_grid(const TerrainGrid& grid, const std::filesystem::path& dir,
                 const ExportOptions& options = {});

/// Reads back the raw layers and counts written by export_grid.
TerrainGrid import_grid(const std::filesystem::path& dir);

/// Numeric text matrix helpers, shared with the ground-truth format.
void write_matrix(std::ostream& out, const GridSpec& spec, std::span<const double> values,
                  std::span<const std::uint64_t> counts);
std::vector<double> read_matrix(std::istream& in, const GridSpec& spec, const std::string& what);

/// 8-bit grayscale (binary PGM). Valid cells are min-max scaled to 1..255,
/// a constant layer maps to 128, invalid cells are 0.
std::vector<std::uint8_t> grayscale(const Layer& layer);

}  // namespace proprio
