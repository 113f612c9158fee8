#pragma once

#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "proprio/telemetry.hpp"

namespace proprio::test {

/// Fresh directory under the build tree's temp area, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(std::filesystem::temp_directory_path() / ("proprio_test_" + name)) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

/// Valid single-segment sample: four stance feet under a 0.4 m square,
/// identity pose, zero velocities.
inline ProprioSample standing_sample(double t, const StreamHeader& h = {}) {
  ProprioSample s;
  s.t = t;
  s.joint_torque.assign(h.joint_count, 0.0);
  s.joint_velocity.assign(h.joint_count, 0.0);
  s.contact = {true, true, true, true};
  const PerFoot<Vec3> feet = {Vec3(0.2, 0.2, -0.4), Vec3(0.2, -0.2, -0.4), Vec3(-0.2, 0.2, -0.4),
                              Vec3(-0.2, -0.2, -0.4)};
  s.foot_pos_base = feet;
  s.foot_pos_des_base = feet;
  for (auto& v : s.foot_vel_base) v = Vec3::Zero();
  for (auto& v : s.foot_vel_des_base) v = Vec3::Zero();
  s.segment_mass.assign(h.segment_count, h.robot_mass / static_cast<double>(h.segment_count));
  s.segment_accel.assign(h.segment_count, Vec3::Zero());
  s.com_world = Vec3::Zero();
  return s;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace proprio::test
