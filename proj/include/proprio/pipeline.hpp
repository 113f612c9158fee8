#pragma once

#include <cstdint>
#include <span>

#include "proprio/energetics.hpp"
#include "proprio/gridmap.hpp"
#include "proprio/slip.hpp"
#include "proprio/telemetry.hpp"

namespace proprio {

struct PipelineOptions {
  SlipConfig slip;
  double cot_d_min = kDefaultCotMinDistance;
};

struct PipelineStats {
  std::uint64_t samples = 0;
  std::uint64_t slip_events = 0;        // run starts on stance feet
  std::uint64_t elevation_obs = 0;
  std::uint64_t cot_obs = 0;
  std::uint64_t margin_obs = 0;
  std::uint64_t margins_guarded = 0;    // skipped because a stance foot slipped
  std::uint64_t margins_undefined = 0;  // fewer than two contacts or degenerate support
};

/// Streams samples through slip detection, energetics, stability and elevation
/// into one grid, in arrival order. Contact metrics go to the foot's cell,
/// body metrics to the CoM cell.
class MappingPipeline {
 public:
  MappingPipeline(const StreamHeader& header, const GridSpec& grid, const PipelineOptions& options = {});

  /// Validates the sample against the stream invariants, then maps it.
  void push(const ProprioSample& sample);
  /// Emits the final open CoT segment. Further pushes are rejected.
  void finish();

  const TerrainGrid& grid() const { return grid_; }
  const PipelineStats& stats() const { return stats_; }

 private:
  StreamHeader header_;
  StreamValidator validator_;
  SlipDetector detector_;
  CotSegmenter segmenter_;
  TerrainGrid grid_;
  PipelineStats stats_;
  bool finished_ = false;
};

/// Grid origin for `grid_origin_auto`: the first sample's CoM.
Vec2 auto_origin(std::span<const ProprioSample> samples);

TerrainGrid build_map(const StreamHeader& header, std::span<const ProprioSample> samples,
                      const GridSpec& grid, const PipelineOptions& options = {},
                      PipelineStats* stats = nullptr);

}  // namespace proprio
