#include "proprio/energetics.hpp"

#include <cmath>
#include <string>

namespace proprio {

double instantaneous_power(std::span<const double> torques, std::span<const double> velocities) {
  if (torques.size() != velocities.size()) {
    throw ValidationError("instantaneous_power: " + std::to_string(torques.size()) +
                          " torques vs " + std::to_string(velocities.size()) + " velocities");
  }
  double p = 0.0;
  for (std::size_t i = 0; i < torques.size(); ++i) p += std::abs(torques[i] * velocities[i]);
  return p;
}

void EnergyAccumulator::accumulate(const ProprioSample& s) {
  accumulate(s.t, instantaneous_power(s.joint_torque, s.joint_velocity),
             s.base_pose.translation.head<2>());
}

void EnergyAccumulator::accumulate(double t, double power, const Vec2& base_xy) {
  if (!started) {
    started = true;
    t_start = t;
  } else {
    if (!(t > t_last)) throw ValidationError("energy accumulator: non-monotonic time");
    e_joules += 0.5 * (power + last_power) * (t - t_last);
    d_meters += (base_xy - last_base_xy).norm();
  }
  t_last = t;
  last_power = power;
  last_base_xy = base_xy;
}

std::optional<double> cot(double energy, double mass, double gravity_mag, double distance,
                          double d_min) {
  if (!(mass > 0.0) || !(gravity_mag > 0.0)) {
    throw ValidationError("cot: mass and gravity must be > 0");
  }
  if (!(distance > d_min)) return std::nullopt;
  return energy / (mass * gravity_mag * distance);
}

CotSegmenter::CotSegmenter(double mass, double gravity_mag, double d_min)
    : mass_(mass), g_(gravity_mag), d_min_(d_min) {
  if (!(mass > 0.0) || !(gravity_mag > 0.0)) {
    throw ValidationError("cot segmenter: mass and gravity must be > 0");
  }
}

std::optional<CotObservation> CotSegmenter::close_segment() {
  auto value = cot(segment_.e_joules, mass_, g_, segment_.d_meters, d_min_);
  if (!value) {
    ++discarded_;
    return std::nullopt;
  }
  return CotObservation{last_com_xy_, *value, segment_.e_joules, segment_.d_meters};
}

std::optional<CotObservation> CotSegmenter::push(double t, double power, const Vec2& base_xy,
                                                 const Vec2& com_xy, CellKey com_cell) {
  if (!cell_) {
    cell_ = com_cell;
    segment_ = EnergyAccumulator{};
    segment_.accumulate(t, power, base_xy);
    last_com_xy_ = com_xy;
    return std::nullopt;
  }

  segment_.accumulate(t, power, base_xy);
  if (com_cell == *cell_) {
    last_com_xy_ = com_xy;
    return std::nullopt;
  }

  auto obs = close_segment();
  cell_ = com_cell;
  segment_ = EnergyAccumulator{};
  segment_.accumulate(t, power, base_xy);
  last_com_xy_ = com_xy;
  return obs;
}

std::optional<CotObservation> CotSegmenter::flush() {
  if (!cell_) return std::nullopt;
  auto obs = close_segment();
  cell_.reset();
  return obs;
}

}  // namespace proprio
