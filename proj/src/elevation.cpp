#include "proprio/elevation.hpp"

namespace proprio {

Vec3 sample_foot_world(const ProprioSample& s, std::size_t foot) {
  if (s.foot_pos_world) return (*s.foot_pos_world)[foot];
  return foot_world(s.base_pose, s.foot_pos_base[foot]);
}

std::vector<ElevationObservation> observe(const ProprioSample& s, const SlipVerdict& verdict) {
  std::vector<ElevationObservation> out;
  for (std::size_t f = 0; f < kFeet; ++f) {
    if (!s.contact[f] || verdict.feet[f].beta) continue;
    const Vec3 p = sample_foot_world(s, f);
    out.push_back({p.head<2>(), p.z(), f, s.t});
  }
  return out;
}

}  // namespace proprio
