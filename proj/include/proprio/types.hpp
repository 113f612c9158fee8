#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Geometry>

namespace proprio {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

inline constexpr std::size_t kFeet = 4;

/// Foot order used everywhere: front-left, front-right, rear-left, rear-right.
enum class Foot : std::size_t { FL = 0, FR = 1, RL = 2, RR = 3 };

template <typename T>
using PerFoot = std::array<T, kFeet>;

/// Rigid transform world <- base.
struct Pose {
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
};

/// Input that violates a documented invariant (bad telemetry, bad config,
/// bad scenario). The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Filesystem failure. The CLI maps this to exit code 3.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace proprio
