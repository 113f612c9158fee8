#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "proprio/types.hpp"

namespace proprio {

inline constexpr double kLunarGravity = 1.62;  // m/s^2

/// Stream-wide constants, written once as the `#HEADER` record.
struct StreamHeader {
  double robot_mass = 21.0;                        // kg
  Vec3 gravity = Vec3(0.0, 0.0, -kLunarGravity);   // m/s^2, world frame
  std::size_t joint_count = 12;
  std::size_t segment_count = 1;
  double sample_rate_hz = 500.0;
};

/// One timestamped frame of every proprioceptive signal the engine consumes.
struct ProprioSample {
  double t = 0.0;  // s

  std::vector<double> joint_torque;    // N*m, one per joint
  std::vector<double> joint_velocity;  // rad/s, one per joint

  PerFoot<bool> contact{};
  PerFoot<Vec3> foot_pos_base{};      // m, base frame
  PerFoot<Vec3> foot_pos_des_base{};  // m, base frame
  PerFoot<Vec3> foot_vel_base{};      // m/s, base frame
  PerFoot<Vec3> foot_vel_des_base{};  // m/s, base frame

  Pose base_pose;  // world <- base

  std::vector<Vec3> segment_accel;   // m/s^2, world frame
  std::vector<double> segment_mass;  // kg

  Vec3 com_world = Vec3::Zero();  // m

  // When absent, consumers compute it from base_pose and foot_pos_base.
  std::optional<PerFoot<Vec3>> foot_pos_world;
};

struct Stream {
  StreamHeader header;
  std::vector<ProprioSample> samples;
};

/// Throws ValidationError when a header invariant is violated.
void validate_header(const StreamHeader& header);

/// Sequential validator. Checks per-sample invariants plus the ones that span
/// records (monotonic time, constant segment masses). `record` numbers are
/// 1-based sample indices and appear verbatim in diagnostics.
class StreamValidator {
 public:
  explicit StreamValidator(const StreamHeader& header);

  void check(const ProprioSample& sample);

  std::size_t records_checked() const { return record_; }

 private:
  StreamHeader header_;
  std::size_t record_ = 0;
  std::optional<double> last_t_;
  std::vector<double> first_masses_;
};

Stream parse_stream(std::istream& in);
Stream read_stream(const std::filesystem::path& path);

void serialize_stream(const StreamHeader& header, std::span<const ProprioSample> samples,
                      std::ostream& out);
/// Validates everything before touching the filesystem.
void write_stream(const StreamHeader& header, std::span<const ProprioSample> samples,
                  const std::filesystem::path& path);

/// Fixed-precision decimal text with enough digits for bit-exact round trips.
std::string format_number(double value);

}  // namespace proprio
