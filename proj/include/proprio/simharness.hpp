#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "proprio/gridmap.hpp"
#include "proprio/telemetry.hpp"
#include "proprio/types.hpp"

namespace proprio::sim {

// ─── Terrain ────────────────────────────────────────────────────────────────

enum class TerrainKind { flat, ramp_testbed, crater_field };

/// Parametric terrain description. Only the fields of the selected kind apply.
struct TerrainSpec {
  TerrainKind kind = TerrainKind::flat;

  // flat
  double flat_half_extent = 50.0;  // m

  // ramp_testbed: lead flat, ascending ramp, platform, descending ramp, lead flat,
  // laid out along +x starting at x = 0.
  double ramp_angle_deg = 10.0;
  double ramp_length = 3.0;      // m, horizontal
  double platform_length = 2.0;  // m
  double lead_length = 3.0;      // m of flat ground before and after
  double half_width = 3.0;       // m

  // crater_field: square field centered on the origin
  std::uint64_t crater_seed = 7;
  double field_size = 20.0;      // m
  std::size_t crater_count = 10;
  std::size_t bump_count = 6;
  double max_crater_width = 2.5;   // m
  double max_crater_depth = 1.0;   // m
  double max_relief = 1.5;         // m, bound on |height|
};

struct Crater {
  Vec2 center;
  double radius;
  double depth;
};

struct Bump {
  Vec2 center;
  double sigma;
  double amplitude;
};

/// Analytic height field with its gradient. `base_height` is the surface the
/// body rides on: identical to `height` except that ramp kinks are rounded so
/// the body trajectory stays differentiable.
class TerrainModel {
 public:
  explicit TerrainModel(const TerrainSpec& spec);

  const TerrainSpec& spec() const { return spec_; }

  double height(double x, double y) const;
  Vec2 gradient(double x, double y) const;
  double base_height(double x, double y) const;
  Vec2 base_gradient(double x, double y) const;

  bool contains(double x, double y) const;
  Vec2 lower_bound() const { return lo_; }
  Vec2 upper_bound() const { return hi_; }

  const std::vector<Crater>& craters() const { return craters_; }
  const std::vector<Bump>& bumps() const { return bumps_; }

  /// Signed slope angle of the raw surface along horizontal direction `dir`.
  double slope_along(const Vec2& xy, const Vec2& dir) const;

 private:
  double ramp_profile(double x) const;
  double ramp_slope(double x) const;

  TerrainSpec spec_;
  Vec2 lo_;
  Vec2 hi_;
  std::vector<Crater> craters_;
  std::vector<Bump> bumps_;
  std::vector<std::pair<double, double>> kinks_;  // (x, slope change)
};

// ─── Scenario ───────────────────────────────────────────────────────────────

struct GaitParams {
  double stride_period = 0.8;  // s
  double duty_factor = 0.6;
  double step_height = 0.08;   // m
  double body_height = 0.38;   // m, base above the terrain
  double hip_x = 0.24;         // m, |x| of the hips in the base frame
  double hip_y = 0.134;        // m, |y|
};

struct InjectedSlip {
  double t_start = 0.0;   // s, inside a stance phase of `foot`
  std::size_t foot = 0;
  Vec3 displacement = Vec3::Zero();  // m, world frame, total drift
  double duration = 0.2;  // s, drift time; must end before liftoff

  double magnitude() const { return displacement.norm(); }
};

struct NoiseSpec {
  double pose_std = 0.0;      // m, on the reported base translation
  double velocity_std = 0.0;  // m/s, on the measured base-frame foot velocity
};

/// Mechanical power model P = m·g·|v_xy|·(c0 + c1·θ + c2·θ²), θ the signed
/// slope angle (rad) under the CoM along the direction of travel. The cost of
/// transport on a uniform slope is exactly c0 + c1·θ + c2·θ².
struct PowerModel {
  double c0 = 1.1;
  double c1 = 0.8;
  double c2 = 3.0;

  double cot(double slope_rad) const { return c0 + c1 * slope_rad + c2 * slope_rad * slope_rad; }
};

struct ScenarioSpec {
  TerrainSpec terrain;
  std::vector<Vec2> path;   // waypoints, m
  double speed = 0.2;       // m/s
  double corner_blend = 0.3;  // m, half-width of the path corner filter
  GaitParams gait;
  std::vector<InjectedSlip> slips;
  NoiseSpec noise;
  std::uint64_t seed = 1;
  double gravity = kLunarGravity;
  double rate_hz = 500.0;
  PowerModel power;
  /// Trunk first, then one segment per leg.
  std::vector<double> segment_masses = {17.0, 1.0, 1.0, 1.0, 1.0};
  /// Ground-truth height grid; resolution and size, centered on path[0].
  std::size_t truth_cells = 100;
  double truth_resolution = 0.4;

  double robot_mass() const;
  /// Throws ValidationError; path errors name the offending waypoint.
  void validate() const;
};

/// Straight traversal of a ramp testbed, forward (+x) or reverse.
ScenarioSpec ramp_traversal(double angle_deg, bool reverse = false);

// ─── Ground truth ───────────────────────────────────────────────────────────

struct SampleTruth {
  double t;
  Vec3 com;
  PerFoot<bool> stance;
};

struct GroundTruth {
  GridSpec grid;
  std::vector<double> heights;  // row-major, nan outside the terrain
  std::vector<InjectedSlip> slips;
  double energy = 0.0;    // J, reference integral of the power model
  double distance = 0.0;  // m, horizontal base path length
  std::vector<SampleTruth> samples;
};

struct Simulation {
  StreamHeader header;
  std::vector<ProprioSample> samples;
  GroundTruth truth;
};

Simulation generate(const ScenarioSpec& spec);

/// Evenly spaced slips, cycling through the feet, each starting shortly after
/// a touchdown and drifting `magnitude` along the base-to-foot direction.
std::vector<InjectedSlip> schedule_slips(const ScenarioSpec& spec, std::size_t count,
                                         double magnitude, double duration = 0.2);

void write_ground_truth(const GroundTruth& truth, const std::filesystem::path& path);
GroundTruth read_ground_truth(const std::filesystem::path& path);

// ─── Sweeps ─────────────────────────────────────────────────────────────────

struct SweepScenario {
  double angle_deg;  // signed: positive is uphill along travel
  std::size_t repeat;
  bool reverse;
  ScenarioSpec spec;
};

/// One scenario per (angle, repeat, direction). Angles must lie in [-20, 20].
std::vector<SweepScenario> sweep(std::span<const double> angles_deg, std::size_t repeats,
                                 const ScenarioSpec& base = {});

}  // namespace proprio::sim
