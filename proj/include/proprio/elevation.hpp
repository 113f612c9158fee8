#pragma once

#include <cstddef>
#include <vector>

#include "proprio/slip.hpp"
#include "proprio/telemetry.hpp"
#include "proprio/types.hpp"

namespace proprio {

struct ElevationObservation {
  Vec2 xy;       // m, world
  double h;      // m, world vertical coordinate of the contact
  std::size_t foot;
  double t;
};

/// p_world = R · p_base + t.
inline Vec3 foot_world(const Pose& base_pose, const Vec3& p_base) { return base_pose.apply(p_base); }

/// World foot position: the sample's own value when present, otherwise the
/// base-frame position carried through the base pose.
Vec3 sample_foot_world(const ProprioSample& sample, std::size_t foot);

/// One observation per foot in stance whose slip flag is clear.
std::vector<ElevationObservation> observe(const ProprioSample& sample, const SlipVerdict& verdict);

}  // namespace proprio
