#pragma once

#include <optional>
#include <span>

#include "proprio/telemetry.hpp"
#include "proprio/types.hpp"

namespace proprio {

/// Default minimum path length (m) for a defined cost of transport.
inline constexpr double kDefaultCotMinDistance = 1e-3;

/// Σ |τ_i · θ̇_i| in watts. Throws ValidationError on length mismatch.
double instantaneous_power(std::span<const double> torques, std::span<const double> velocities);

/// Running mechanical energy (trapezoid on instantaneous power) and horizontal
/// base path length.
struct EnergyAccumulator {
  double e_joules = 0.0;
  double d_meters = 0.0;
  double t_start = 0.0;
  double t_last = 0.0;
  double last_power = 0.0;
  Vec2 last_base_xy = Vec2::Zero();
  bool started = false;

  /// Advances by one sample. The first sample only seeds the state.
  /// Throws ValidationError when time does not increase.
  void accumulate(const ProprioSample& sample);
  /// Same as accumulate(), for callers that already know power and position.
  void accumulate(double t, double power, const Vec2& base_xy);
};

/// E / (m g d), or nullopt when d <= d_min.
std::optional<double> cot(double energy, double mass, double gravity_mag, double distance,
                          double d_min = kDefaultCotMinDistance);

struct CotObservation {
  Vec2 xy;       // last CoM position inside the departed cell
  double cot;
  double energy;
  double distance;
};

/// Splits a stream into segments bounded by CoM cell crossings and emits one
/// cost-of-transport observation per departed cell. The interval that crosses
/// a boundary is charged to the cell being left.
class CotSegmenter {
 public:
  /// Caller-chosen cell identifier; any value distinct per cell works.
  using CellKey = long long;

  CotSegmenter(double mass, double gravity_mag, double d_min = kDefaultCotMinDistance);

  std::optional<CotObservation> push(double t, double power, const Vec2& base_xy,
                                     const Vec2& com_xy, CellKey com_cell);
  /// Emits the still-open segment, if long enough. Call once at end of stream.
  std::optional<CotObservation> flush();

  /// Segments dropped for d <= d_min.
  std::size_t discarded() const { return discarded_; }

 private:
  std::optional<CotObservation> close_segment();

  double mass_;
  double g_;
  double d_min_;
  EnergyAccumulator segment_;
  std::optional<CellKey> cell_;
  Vec2 last_com_xy_ = Vec2::Zero();
  std::size_t discarded_ = 0;
};

}  // namespace proprio
