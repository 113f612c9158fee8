#include "proprio/simharness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace proprio::sim {

namespace {

constexpr double kBaseBlend = 0.3;       // m, half-width of the ramp kink rounding
constexpr double kWaypointMargin = 0.6;  // m, footprint clearance to the terrain edge
constexpr double kAccelStep = 1e-4;      // s, central difference on base velocity
constexpr double kSlipOnsetDelay = 0.05; // s after touchdown for scheduled slips
constexpr double kJointRate = 2.0;       // rad/s, mean joint speed
constexpr std::size_t kJointCount = 12;
constexpr std::size_t kSimpsonRefine = 8;

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

/// Uniform doubles in [0, 1) and standard normals from a fixed engine, so a
/// seed reproduces the same draws on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
};

double box_kink(double u, double half) {
  const double a = std::abs(u);
  return a < half ? (half - a) * (half - a) / (4.0 * half) : 0.0;
}

double box_kink_slope(double u, double half) {
  const double a = std::abs(u);
  if (a >= half) return 0.0;
  return (u < 0.0 ? 1.0 : -1.0) * (half - a) / (2.0 * half);
}

/// Polyline parameterized by arc length, extended linearly past both ends, with
/// a box-filtered (moving-average) version that rounds the corners.
class Path {
 public:
  Path(std::vector<Vec2> pts, double blend) : pts_(std::move(pts)), blend_(blend) {
    cum_.push_back(0.0);
    area_.push_back(Vec2::Zero());
    for (std::size_t k = 0; k + 1 < pts_.size(); ++k) {
      const Vec2 d = pts_[k + 1] - pts_[k];
      const double len = d.norm();
      dirs_.push_back(d / len);
      cum_.push_back(cum_.back() + len);
      area_.push_back(area_.back() + pts_[k] * len + dirs_.back() * (len * len / 2.0));
    }
  }

  double length() const { return cum_.back(); }

  Vec2 raw(double s) const {
    const std::size_t k = segment(s);
    return pts_[k] + dirs_[k] * (s - cum_[k]);
  }

  Vec2 smoothed(double s) const {
    if (blend_ <= 0.0) return raw(s);
    return (integral(s + blend_) - integral(s - blend_)) / (2.0 * blend_);
  }

  Vec2 smoothed_tangent(double s) const {
    if (blend_ <= 0.0) return dirs_[segment(s)];
    return (raw(s + blend_) - raw(s - blend_)) / (2.0 * blend_);
  }

  Vec2 initial_direction() const { return dirs_.front(); }

 private:
  std::size_t segment(double s) const {
    if (s <= 0.0) return 0;
    auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
    const auto k = static_cast<std::size_t>(std::distance(cum_.begin(), it)) - 1;
    return std::min(k, dirs_.size() - 1);
  }

  /// ∫_0^s raw(u) du.
  Vec2 integral(double s) const {
    const std::size_t k = segment(s);
    const double u = s - cum_[k];
    return area_[k] + pts_[k] * u + dirs_[k] * (u * u / 2.0);
  }

  std::vector<Vec2> pts_;
  double blend_;
  std::vector<Vec2> dirs_;
  std::vector<double> cum_;
  std::vector<Vec2> area_;
};

PerFoot<Vec2> hip_offsets(const GaitParams& g) {
  return {Vec2(g.hip_x, g.hip_y), Vec2(g.hip_x, -g.hip_y), Vec2(-g.hip_x, g.hip_y),
          Vec2(-g.hip_x, -g.hip_y)};
}

// FL and RR share a phase; FR and RL are half a stride behind.
constexpr PerFoot<double> kPhaseOffset = {0.0, 0.5, 0.5, 0.0};

struct BaseState {
  Vec3 pos;
  Vec3 vel;
};

struct FootState {
  Vec3 pos;
  Vec3 vel;
  bool stance;
};

/// The prescribed walker. Every quantity is an analytic function of time.
class Walker {
 public:
  explicit Walker(const ScenarioSpec& spec)
      : spec_(spec),
        terrain_(spec.terrain),
        path_(spec.path, spec.corner_blend),
        hips_(hip_offsets(spec.gait)) {
    const Vec2 d = path_.initial_direction();
    yaw_ = std::atan2(d.y(), d.x());
    rotation_ = Eigen::Quaterniond(Eigen::AngleAxisd(yaw_, Vec3::UnitZ()));
    rot2_ << std::cos(yaw_), -std::sin(yaw_), std::sin(yaw_), std::cos(yaw_);
    duration_ = path_.length() / spec.speed;
  }

  const TerrainModel& terrain() const { return terrain_; }
  const Eigen::Quaterniond& rotation() const { return rotation_; }
  double duration() const { return duration_; }

  BaseState base(double t) const {
    const double s = spec_.speed * t;
    const Vec2 xy = path_.smoothed(s);
    const Vec2 vxy = spec_.speed * path_.smoothed_tangent(s);
    const double z = spec_.gait.body_height + terrain_.base_height(xy.x(), xy.y());
    const double vz = terrain_.base_gradient(xy.x(), xy.y()).dot(vxy);
    return {Vec3(xy.x(), xy.y(), z), Vec3(vxy.x(), vxy.y(), vz)};
  }

  Vec3 base_accel(double t) const {
    return (base(t + kAccelStep).vel - base(t - kAccelStep).vel) / (2.0 * kAccelStep);
  }

  /// Stance window index containing or preceding t.
  long cycle(std::size_t foot, double t) const {
    return static_cast<long>(std::floor(t / spec_.gait.stride_period + kPhaseOffset[foot]));
  }

  double touchdown(std::size_t foot, long k) const {
    return (static_cast<double>(k) - kPhaseOffset[foot]) * spec_.gait.stride_period;
  }

  double liftoff(std::size_t foot, long k) const {
    return touchdown(foot, k) + spec_.gait.duty_factor * spec_.gait.stride_period;
  }

  bool in_stance(std::size_t foot, double t) const { return t < liftoff(foot, cycle(foot, t)); }

  Vec3 foothold(std::size_t foot, long k) const {
    const double t_mid = touchdown(foot, k) + 0.5 * spec_.gait.duty_factor * spec_.gait.stride_period;
    const Vec2 xy = path_.smoothed(spec_.speed * t_mid) + rot2_ * hips_[foot];
    return {xy.x(), xy.y(), terrain_.height(xy.x(), xy.y())};
  }

  FootState nominal_foot(std::size_t foot, double t) const {
    const long k = cycle(foot, t);
    const Vec3 from = foothold(foot, k);
    if (t < liftoff(foot, k)) return {from, Vec3::Zero(), true};

    const Vec3 to = foothold(foot, k + 1);
    const double swing = (1.0 - spec_.gait.duty_factor) * spec_.gait.stride_period;
    const double tau = (t - liftoff(foot, k)) / swing;
    const double pi = std::numbers::pi;
    const double blend = 0.5 * (1.0 - std::cos(pi * tau));
    const double blend_rate = 0.5 * pi * std::sin(pi * tau) / swing;
    Vec3 pos = from + blend * (to - from);
    Vec3 vel = blend_rate * (to - from);
    pos.z() += spec_.gait.step_height * std::sin(pi * tau);
    vel.z() += spec_.gait.step_height * pi * std::cos(pi * tau) / swing;
    return {pos, vel, false};
  }

  /// Slope angle under the CoM along travel, and the power model at time t.
  double power(double t) const {
    const BaseState b = base(t);
    const Vec2 vxy = b.vel.head<2>();
    const double speed = vxy.norm();
    if (speed == 0.0) return 0.0;
    const double slope = terrain_.slope_along(b.pos.head<2>(), vxy / speed);
    const double m = spec_.robot_mass();
    return std::max(0.0, m * spec_.gravity * speed * spec_.power.cot(slope));
  }

  double horizontal_speed(double t) const { return base(t).vel.head<2>().norm(); }

 private:
  const ScenarioSpec& spec_;
  TerrainModel terrain_;
  Path path_;
  PerFoot<Vec2> hips_;
  double yaw_ = 0.0;
  Eigen::Quaterniond rotation_;
  Eigen::Matrix2d rot2_;
  double duration_ = 0.0;
};

template <typename F>
double simpson(F&& f, double a, double b, std::size_t intervals) {
  if (intervals % 2 == 1) ++intervals;
  if (intervals == 0 || !(b > a)) return 0.0;
  const double h = (b - a) / static_cast<double>(intervals);
  double sum = f(a) + f(b);
  for (std::size_t i = 1; i < intervals; ++i) {
    sum += (i % 2 == 1 ? 4.0 : 2.0) * f(a + h * static_cast<double>(i));
  }
  return sum * h / 3.0;
}

struct ActiveSlip {
  const InjectedSlip* slip;
  double liftoff;
};

}  // namespace

// ─── TerrainModel ───────────────────────────────────────────────────────────

TerrainModel::TerrainModel(const TerrainSpec& spec) : spec_(spec) {
  switch (spec_.kind) {
    case TerrainKind::flat:
      lo_ = Vec2::Constant(-spec_.flat_half_extent);
      hi_ = Vec2::Constant(spec_.flat_half_extent);
      break;

    case TerrainKind::ramp_testbed: {
      if (std::abs(spec_.ramp_angle_deg) >= 60.0) {
        throw ValidationError("ramp_testbed: |angle| must be below 60 degrees");
      }
      if (!(spec_.ramp_length > 0.0) || spec_.platform_length < 0.0 || spec_.lead_length < 0.0 ||
          !(spec_.half_width > 0.0)) {
        throw ValidationError("ramp_testbed: lengths must be non-negative (ramp and width > 0)");
      }
      const double m = std::tan(deg2rad(std::abs(spec_.ramp_angle_deg)));
      const double lr = spec_.ramp_length;
      const double lp = spec_.platform_length;
      kinks_ = {{0.0, m}, {lr, -m}, {lr + lp, -m}, {2.0 * lr + lp, m}};
      lo_ = Vec2(-spec_.lead_length, -spec_.half_width);
      hi_ = Vec2(2.0 * lr + lp + spec_.lead_length, spec_.half_width);
      break;
    }

    case TerrainKind::crater_field: {
      const double half = spec_.field_size / 2.0;
      lo_ = Vec2::Constant(-half);
      hi_ = Vec2::Constant(half);
      if (!(spec_.field_size > 0.0) || !(spec_.max_crater_width > 0.0) ||
          !(spec_.max_crater_depth > 0.0)) {
        throw ValidationError("crater_field: size, crater width and depth must be > 0");
      }
      Rng rng(spec_.crater_seed);
      // Relief budget: bumps share at most a third of max_relief; each crater
      // is shallower than max(depth) and craters never overlap, so
      // |height| <= max_relief by construction.
      const double crater_depth_cap = std::min(spec_.max_crater_depth, spec_.max_relief / 2.0);
      const double bump_cap =
          spec_.bump_count > 0 ? (spec_.max_relief / 3.0) / static_cast<double>(spec_.bump_count)
                               : 0.0;
      for (std::size_t b = 0; b < spec_.bump_count; ++b) {
        Bump bump;
        bump.center = Vec2(rng.uniform(-half, half), rng.uniform(-half, half));
        bump.sigma = rng.uniform(2.0, 4.0);
        bump.amplitude = rng.uniform(-bump_cap, bump_cap);
        bumps_.push_back(bump);
      }
      for (std::size_t attempt = 0; craters_.size() < spec_.crater_count && attempt < 10000;
           ++attempt) {
        Crater c;
        c.radius = 0.5 * rng.uniform(0.5 * spec_.max_crater_width, spec_.max_crater_width);
        c.center = Vec2(rng.uniform(-half + c.radius, half - c.radius),
                        rng.uniform(-half + c.radius, half - c.radius));
        // Keeps wall slopes walkable (peak slope ≈ 1.54 · depth / radius).
        c.depth = std::min(crater_depth_cap, rng.uniform(0.15, 0.3) * c.radius);
        bool clear = true;
        for (const auto& o : craters_) {
          if ((o.center - c.center).norm() < o.radius + c.radius + 0.2) {
            clear = false;
            break;
          }
        }
        if (clear) craters_.push_back(c);
      }
      break;
    }
  }
}

double TerrainModel::ramp_profile(double x) const {
  const double m = std::tan(deg2rad(std::abs(spec_.ramp_angle_deg)));
  const double lr = spec_.ramp_length;
  const double lp = spec_.platform_length;
  if (x <= 0.0) return 0.0;
  if (x < lr) return m * x;
  if (x < lr + lp) return m * lr;
  if (x < 2.0 * lr + lp) return m * (2.0 * lr + lp - x);
  return 0.0;
}

double TerrainModel::ramp_slope(double x) const {
  const double m = std::tan(deg2rad(std::abs(spec_.ramp_angle_deg)));
  const double lr = spec_.ramp_length;
  const double lp = spec_.platform_length;
  if (x < 0.0) return 0.0;
  if (x < lr) return m;
  if (x < lr + lp) return 0.0;
  if (x < 2.0 * lr + lp) return -m;
  return 0.0;
}

double TerrainModel::height(double x, double y) const {
  switch (spec_.kind) {
    case TerrainKind::flat: return 0.0;
    case TerrainKind::ramp_testbed: return ramp_profile(x);
    case TerrainKind::crater_field: {
      const Vec2 p(x, y);
      double h = 0.0;
      for (const auto& b : bumps_) {
        h += b.amplitude * std::exp(-(p - b.center).squaredNorm() / (2.0 * b.sigma * b.sigma));
      }
      for (const auto& c : craters_) {
        const double u = (p - c.center).norm() / c.radius;
        if (u < 1.0) h -= c.depth * (1.0 - u * u) * (1.0 - u * u);
      }
      return h;
    }
  }
  return 0.0;
}

Vec2 TerrainModel::gradient(double x, double y) const {
  switch (spec_.kind) {
    case TerrainKind::flat: return Vec2::Zero();
    case TerrainKind::ramp_testbed: return Vec2(ramp_slope(x), 0.0);
    case TerrainKind::crater_field: {
      const Vec2 p(x, y);
      Vec2 g = Vec2::Zero();
      for (const auto& b : bumps_) {
        const Vec2 d = p - b.center;
        const double s2 = b.sigma * b.sigma;
        g -= b.amplitude * std::exp(-d.squaredNorm() / (2.0 * s2)) * d / s2;
      }
      for (const auto& c : craters_) {
        const Vec2 d = p - c.center;
        const double u = d.norm() / c.radius;
        if (u < 1.0) {
          // h = -D (1 - u²)², ∇h = 4 D (1 - u²) d / R²
          g += 4.0 * c.depth * (1.0 - u * u) * d / (c.radius * c.radius);
        }
      }
      return g;
    }
  }
  return Vec2::Zero();
}

double TerrainModel::base_height(double x, double y) const {
  if (spec_.kind != TerrainKind::ramp_testbed) return height(x, y);
  double h = ramp_profile(x);
  for (const auto& [xk, dm] : kinks_) h += dm * box_kink(x - xk, kBaseBlend);
  return h;
}

Vec2 TerrainModel::base_gradient(double x, double y) const {
  if (spec_.kind != TerrainKind::ramp_testbed) return gradient(x, y);
  double g = ramp_slope(x);
  for (const auto& [xk, dm] : kinks_) g += dm * box_kink_slope(x - xk, kBaseBlend);
  return Vec2(g, 0.0);
}

bool TerrainModel::contains(double x, double y) const {
  return x >= lo_.x() && x <= hi_.x() && y >= lo_.y() && y <= hi_.y();
}

double TerrainModel::slope_along(const Vec2& xy, const Vec2& dir) const {
  return std::atan(gradient(xy.x(), xy.y()).dot(dir));
}

// ─── Scenario ───────────────────────────────────────────────────────────────

double ScenarioSpec::robot_mass() const {
  double m = 0.0;
  for (double s : segment_masses) m += s;
  return m;
}

void ScenarioSpec::validate() const {
  if (!(speed > 0.0)) throw ValidationError("scenario: speed must be > 0");
  if (!(rate_hz > 0.0)) throw ValidationError("scenario: rate_hz must be > 0");
  if (!(gravity > 0.0)) throw ValidationError("scenario: gravity must be > 0");
  if (corner_blend < 0.0) throw ValidationError("scenario: corner_blend must be >= 0");
  if (!(gait.stride_period > 0.0)) throw ValidationError("scenario: stride_period must be > 0");
  if (!(gait.duty_factor > 0.5 && gait.duty_factor < 1.0)) {
    throw ValidationError("scenario: duty_factor must lie in (0.5, 1) for a trot");
  }
  if (!(gait.body_height > 0.0)) throw ValidationError("scenario: body_height must be > 0");
  if (segment_masses.empty()) throw ValidationError("scenario: no segment masses");
  for (double m : segment_masses) {
    if (!(m > 0.0)) throw ValidationError("scenario: segment masses must be > 0");
  }
  if (noise.pose_std < 0.0 || noise.velocity_std < 0.0) {
    throw ValidationError("scenario: noise levels must be >= 0");
  }
  if (truth_cells < 1 || !(truth_resolution > 0.0)) {
    throw ValidationError("scenario: truth grid must have cells and a positive resolution");
  }
  if (path.size() < 2) throw ValidationError("scenario: path needs at least two waypoints");

  const TerrainModel terrain(this->terrain);
  const Vec2 lo = terrain.lower_bound() + Vec2::Constant(kWaypointMargin);
  const Vec2 hi = terrain.upper_bound() - Vec2::Constant(kWaypointMargin);
  for (std::size_t k = 0; k < path.size(); ++k) {
    const Vec2& p = path[k];
    if (!p.allFinite() || p.x() < lo.x() || p.x() > hi.x() || p.y() < lo.y() || p.y() > hi.y()) {
      std::ostringstream msg;
      msg << "scenario: waypoint " << k << " (" << p.x() << ", " << p.y()
          << ") is outside the terrain bounds [" << lo.x() << ", " << hi.x() << "] x [" << lo.y()
          << ", " << hi.y() << "]";
      throw ValidationError(msg.str());
    }
    if (k > 0 && (p - path[k - 1]).norm() < 1e-6) {
      throw ValidationError("scenario: waypoint " + std::to_string(k) + " repeats its predecessor");
    }
  }
  for (const auto& s : slips) {
    if (s.foot >= kFeet) throw ValidationError("scenario: slip foot index must be 0..3");
    if (!(s.duration > 0.0)) throw ValidationError("scenario: slip duration must be > 0");
    if (!s.displacement.allFinite() || !std::isfinite(s.t_start)) {
      throw ValidationError("scenario: slip values must be finite");
    }
  }
}

ScenarioSpec ramp_traversal(double angle_deg, bool reverse) {
  ScenarioSpec spec;
  spec.terrain.kind = TerrainKind::ramp_testbed;
  spec.terrain.ramp_angle_deg = std::abs(angle_deg);
  const double start = -1.5;
  const double end = 2.0 * spec.terrain.ramp_length + spec.terrain.platform_length + 1.5;
  spec.path = {Vec2(start, 0.0), Vec2(end, 0.0)};
  if (reverse) std::swap(spec.path.front(), spec.path.back());
  return spec;
}

// ─── Generation ─────────────────────────────────────────────────────────────

Simulation generate(const ScenarioSpec& spec) {
  spec.validate();
  const Walker walker(spec);
  const TerrainModel& terrain = walker.terrain();
  const double mass = spec.robot_mass();
  const double dt = 1.0 / spec.rate_hz;
  // Samples cover [0, duration): a 10 s run at 500 Hz has 5000 of them.
  const auto count = static_cast<std::size_t>(std::ceil(walker.duration() * spec.rate_hz - 1e-9));
  if (count < 2) throw ValidationError("scenario: path too short for two samples");
  const std::size_t last = count - 1;

  // Bind each slip to the stance phase that contains its start.
  PerFoot<std::vector<ActiveSlip>> slips_by_foot;
  for (const auto& s : spec.slips) {
    if (!walker.in_stance(s.foot, s.t_start)) {
      throw ValidationError("scenario: slip at t=" + std::to_string(s.t_start) + " on foot " +
                            std::to_string(s.foot) + " does not start in stance");
    }
    const double lift = walker.liftoff(s.foot, walker.cycle(s.foot, s.t_start));
    if (s.t_start + s.duration > lift) {
      throw ValidationError("scenario: slip at t=" + std::to_string(s.t_start) +
                            " outlasts its stance phase");
    }
    if (s.t_start < 0.0 || s.t_start > walker.duration()) {
      throw ValidationError("scenario: slip at t=" + std::to_string(s.t_start) +
                            " is outside the run");
    }
    slips_by_foot[s.foot].push_back({&s, lift});
  }

  Simulation sim;
  sim.header.robot_mass = mass;
  sim.header.gravity = Vec3(0.0, 0.0, -spec.gravity);
  sim.header.joint_count = kJointCount;
  sim.header.segment_count = spec.segment_masses.size();
  sim.header.sample_rate_hz = spec.rate_hz;
  sim.samples.reserve(last + 1);
  sim.truth.samples.reserve(last + 1);

  Rng noise(spec.seed);
  const Eigen::Quaterniond& q = walker.rotation();
  const Eigen::Matrix3d rt = q.toRotationMatrix().transpose();
  const double omega = 2.0 * std::numbers::pi / spec.gait.stride_period;

  for (std::size_t k = 0; k <= last; ++k) {
    const double t = static_cast<double>(k) * dt;
    const BaseState base = walker.base(t);
    const Vec3 accel = walker.base_accel(t);

    ProprioSample s;
    s.t = t;
    SampleTruth truth{t, base.pos, {}};

    for (std::size_t f = 0; f < kFeet; ++f) {
      const FootState nominal = walker.nominal_foot(f, t);
      Vec3 pos = nominal.pos;
      Vec3 vel = nominal.vel;
      if (nominal.stance) {
        for (const auto& active : slips_by_foot[f]) {
          const InjectedSlip& slip = *active.slip;
          if (t < slip.t_start || t >= active.liftoff) continue;
          const double tau = (t - slip.t_start) / slip.duration;
          const double progress = tau < 1.0 ? tau * tau : 1.0;
          const double rate = tau < 1.0 ? 2.0 * tau / slip.duration : 0.0;
          const Vec2 drift_xy = slip.displacement.head<2>();
          const Vec2 xy = pos.head<2>() + progress * drift_xy;
          pos = Vec3(xy.x(), xy.y(), terrain.height(xy.x(), xy.y()) + progress * slip.displacement.z());
          vel = Vec3(rate * drift_xy.x(), rate * drift_xy.y(),
                     terrain.gradient(xy.x(), xy.y()).dot(rate * drift_xy) +
                         rate * slip.displacement.z());
        }
      }
      s.contact[f] = nominal.stance;
      truth.stance[f] = nominal.stance;
      s.foot_pos_des_base[f] = rt * (nominal.pos - base.pos);
      s.foot_vel_des_base[f] = rt * (nominal.vel - base.vel);
      s.foot_pos_base[f] = rt * (pos - base.pos);
      s.foot_vel_base[f] = rt * (vel - base.vel);
      if (spec.noise.velocity_std > 0.0) {
        for (int a = 0; a < 3; ++a) s.foot_vel_base[f][a] += spec.noise.velocity_std * noise.normal();
      }
    }

    s.base_pose.rotation = q;
    s.base_pose.translation = base.pos;
    if (spec.noise.pose_std > 0.0) {
      for (int a = 0; a < 3; ++a) s.base_pose.translation[a] += spec.noise.pose_std * noise.normal();
    }
    s.com_world = s.base_pose.translation;

    s.segment_mass = spec.segment_masses;
    s.segment_accel.assign(spec.segment_masses.size(), accel);

    // Joint signals whose absolute power sums to the model power. Each joint
    // takes a periodically varying share; speeds stay away from zero.
    const double power = walker.power(t);
    s.joint_torque.resize(kJointCount);
    s.joint_velocity.resize(kJointCount);
    std::array<double, kJointCount> share{};
    double share_sum = 0.0;
    for (std::size_t j = 0; j < kJointCount; ++j) {
      const double phase = omega * t + 2.0 * std::numbers::pi * static_cast<double>(j) / kJointCount;
      share[j] = 1.0 + 0.3 * std::cos(phase);
      share_sum += share[j];
      const double sign = j % 2 == 0 ? 1.0 : -1.0;
      s.joint_velocity[j] = sign * kJointRate * (1.0 + 0.5 * std::sin(phase));
    }
    for (std::size_t j = 0; j < kJointCount; ++j) {
      const double joint_power = power * share[j] / share_sum;
      s.joint_torque[j] = joint_power / s.joint_velocity[j];
    }

    sim.samples.push_back(std::move(s));
    sim.truth.samples.push_back(truth);
  }

  // Ground truth.
  GroundTruth& gt = sim.truth;
  gt.grid.n_x = spec.truth_cells;
  gt.grid.n_y = spec.truth_cells;
  gt.grid.resolution = spec.truth_resolution;
  gt.grid.origin = spec.path.front();
  gt.heights.resize(gt.grid.cell_count());
  for (std::size_t i = 0; i < gt.grid.n_y; ++i) {
    for (std::size_t j = 0; j < gt.grid.n_x; ++j) {
      const Vec2 c = cell_center(gt.grid, {i, j});
      gt.heights[i * gt.grid.n_x + j] = terrain.contains(c.x(), c.y())
                                            ? terrain.height(c.x(), c.y())
                                            : std::numeric_limits<double>::quiet_NaN();
    }
  }
  gt.slips = spec.slips;
  std::sort(gt.slips.begin(), gt.slips.end(),
            [](const InjectedSlip& a, const InjectedSlip& b) { return a.t_start < b.t_start; });
  const double t_end = static_cast<double>(last) * dt;
  const std::size_t intervals = std::max<std::size_t>(2, last * kSimpsonRefine);
  gt.energy = simpson([&](double t) { return walker.power(t); }, 0.0, t_end, intervals);
  gt.distance = simpson([&](double t) { return walker.horizontal_speed(t); }, 0.0, t_end, intervals);
  return sim;
}

std::vector<InjectedSlip> schedule_slips(const ScenarioSpec& spec, std::size_t count,
                                         double magnitude, double duration) {
  spec.validate();
  const Walker walker(spec);
  const double t_a = 2.0;
  const double t_b = walker.duration() - 2.0;
  if (count > 0 && !(t_b > t_a)) throw ValidationError("schedule_slips: run too short for slips");
  const double stance = spec.gait.duty_factor * spec.gait.stride_period;
  if (duration + kSlipOnsetDelay >= stance) {
    throw ValidationError("schedule_slips: duration does not fit in a stance phase");
  }

  std::vector<InjectedSlip> slips;
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t foot = k % kFeet;
    const double target = t_a + (static_cast<double>(k) + 0.5) * (t_b - t_a) / static_cast<double>(count);
    long cycle = walker.cycle(foot, target);
    if (walker.touchdown(foot, cycle) < target) ++cycle;
    InjectedSlip slip;
    slip.foot = foot;
    slip.t_start = walker.touchdown(foot, cycle) + kSlipOnsetDelay;
    slip.duration = duration;
    // Along the base-to-foot ray: the position check compares norms only, so
    // this direction makes the full magnitude visible to it.
    const Vec3 ray = walker.foothold(foot, cycle) - walker.base(slip.t_start).pos;
    slip.displacement = ray.normalized() * magnitude;
    slips.push_back(slip);
  }
  return slips;
}

// ─── Ground-truth file ──────────────────────────────────────────────────────

void write_ground_truth(const GroundTruth& gt, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "#TRUTH proprio-truth/1\n";
  out << "#GRID " << gt.grid.n_x << ' ' << gt.grid.n_y << ' ' << format_number(gt.grid.resolution)
      << ' ' << format_number(gt.grid.origin.x()) << ' ' << format_number(gt.grid.origin.y())
      << '\n';
  write_matrix(out, gt.grid, gt.heights, {});
  out << "#SLIPS " << gt.slips.size() << '\n';
  for (const auto& s : gt.slips) {
    out << format_number(s.t_start) << ' ' << s.foot << ' ' << format_number(s.displacement.x())
        << ' ' << format_number(s.displacement.y()) << ' ' << format_number(s.displacement.z())
        << ' ' << format_number(s.duration) << ' ' << format_number(s.magnitude()) << '\n';
  }
  out << "#TOTALS " << format_number(gt.energy) << ' ' << format_number(gt.distance) << '\n';
  out << "#SAMPLES " << gt.samples.size() << '\n';
  for (const auto& s : gt.samples) {
    out << format_number(s.t) << ' ' << format_number(s.com.x()) << ' ' << format_number(s.com.y())
        << ' ' << format_number(s.com.z());
    for (bool st : s.stance) out << ' ' << (st ? 1 : 0);
    out << '\n';
  }

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open " + path.string() + " for writing");
  file << out.str();
  if (!file) throw IoError("write failed for " + path.string());
}

GroundTruth read_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open ground-truth file " + path.string());
  auto expect = [&](const std::string& tag) {
    std::string tok;
    if (!(in >> tok) || tok != tag) {
      throw ValidationError("ground truth " + path.string() + ": expected " + tag);
    }
  };
  auto fail = [&](const std::string& what) {
    throw ValidationError("ground truth " + path.string() + ": " + what);
  };

  GroundTruth gt;
  std::string version;
  expect("#TRUTH");
  in >> version;
  if (version != "proprio-truth/1") fail("unsupported version '" + version + "'");

  expect("#GRID");
  if (!(in >> gt.grid.n_x >> gt.grid.n_y >> gt.grid.resolution >> gt.grid.origin.x() >>
        gt.grid.origin.y())) {
    fail("bad #GRID record");
  }
  gt.grid.validate();
  gt.heights = read_matrix(in, gt.grid, "ground truth heights");

  std::size_t n = 0;
  expect("#SLIPS");
  if (!(in >> n)) fail("bad #SLIPS count");
  for (std::size_t k = 0; k < n; ++k) {
    InjectedSlip s;
    double magnitude = 0.0;
    if (!(in >> s.t_start >> s.foot >> s.displacement.x() >> s.displacement.y() >>
          s.displacement.z() >> s.duration >> magnitude)) {
      fail("bad slip record " + std::to_string(k + 1));
    }
    gt.slips.push_back(s);
  }
  expect("#TOTALS");
  if (!(in >> gt.energy >> gt.distance)) fail("bad #TOTALS record");
  expect("#SAMPLES");
  if (!(in >> n)) fail("bad #SAMPLES count");
  gt.samples.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    SampleTruth s;
    int st[4];
    if (!(in >> s.t >> s.com.x() >> s.com.y() >> s.com.z() >> st[0] >> st[1] >> st[2] >> st[3])) {
      fail("bad sample record " + std::to_string(k + 1));
    }
    for (std::size_t f = 0; f < kFeet; ++f) s.stance[f] = st[f] != 0;
    gt.samples.push_back(s);
  }
  return gt;
}

// ─── Sweeps ─────────────────────────────────────────────────────────────────

std::vector<SweepScenario> sweep(std::span<const double> angles_deg, std::size_t repeats,
                                 const ScenarioSpec& base) {
  std::vector<SweepScenario> out;
  for (double angle : angles_deg) {
    if (!(std::abs(angle) <= 20.0)) {
      throw ValidationError("sweep: angle " + std::to_string(angle) + " is outside [-20, 20]");
    }
    for (std::size_t r = 0; r < repeats; ++r) {
      for (bool reverse : {false, true}) {
        ScenarioSpec spec = base;
        spec.terrain.kind = TerrainKind::ramp_testbed;
        spec.terrain.ramp_angle_deg = std::abs(angle);
        const double end = 2.0 * spec.terrain.ramp_length + spec.terrain.platform_length + 1.5;
        spec.path = {Vec2(-1.5, 0.0), Vec2(end, 0.0)};
        if (reverse) std::swap(spec.path.front(), spec.path.back());
        spec.seed = base.seed + r;
        out.push_back({angle, r, reverse, std::move(spec)});
      }
    }
  }
  return out;
}

}  // namespace proprio::sim
