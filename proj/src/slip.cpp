#include "proprio/slip.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace proprio {

void SlipConfig::validate() const {
  if (!(h > 0.0)) throw ValidationError("slip.h must be > 0");
  if (!(eps_p > 0.0)) throw ValidationError("slip.eps_p must be > 0");
  if (!(percentile > 0.0 && percentile < 100.0)) {
    throw ValidationError("slip.percentile must lie in (0, 100)");
  }
  if (window < kSlipMinHistory) throw ValidationError("slip.window must be >= 10");
}

double compute_delta_v(const Vec3& v_des, const Vec3& v_act, double h) {
  if (!v_des.allFinite() || !v_act.allFinite() || !std::isfinite(h)) {
    throw ValidationError("compute_delta_v: non-finite input");
  }
  if (!(h > 0.0)) throw ValidationError("compute_delta_v: h must be > 0");
  double sum = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double r = (v_des[i] - v_act[i]) / (std::abs(v_des[i]) + h);
    sum += r * r;
  }
  return std::sqrt(sum);
}

double compute_delta_p(const Vec3& p_des, const Vec3& p_act) {
  return std::abs(p_des.norm() - p_act.norm());
}

double update_threshold(std::span<const double> history, double percentile) {
  if (history.empty()) return std::numeric_limits<double>::infinity();
  std::vector<double> sorted(history.begin(), history.end());
  const auto n = sorted.size();
  auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1),
                   sorted.end());
  return sorted[rank - 1];
}

SlipDetector::SlipDetector(SlipConfig cfg) : cfg_(cfg) { cfg_.validate(); }

double SlipDetector::threshold(std::size_t foot) const {
  const auto& sorted = sorted_[foot];
  if (sorted.size() < kSlipMinHistory) return std::numeric_limits<double>::infinity();
  const auto n = sorted.size();
  auto rank = static_cast<std::size_t>(std::ceil(cfg_.percentile / 100.0 * static_cast<double>(n)));
  return sorted[std::clamp<std::size_t>(rank, 1, n) - 1];
}

SlipVerdict SlipDetector::detect(const ProprioSample& s) {
  SlipVerdict verdict;
  for (std::size_t f = 0; f < kFeet; ++f) {
    FootSlip& out = verdict.feet[f];
    if (!s.contact[f]) {
      prev_beta_[f] = false;
      continue;
    }
    out.delta_v = compute_delta_v(s.foot_vel_des_base[f], s.foot_vel_base[f], cfg_.h);
    out.delta_p = compute_delta_p(s.foot_pos_des_base[f], s.foot_pos_base[f]);
    out.eps_v = threshold(f);
    out.beta = out.delta_v > out.eps_v && out.delta_p > cfg_.eps_p;
    out.run_start = out.beta && !prev_beta_[f];
    prev_beta_[f] = out.beta;

    // The window sees this sample only after the decision.
    auto& w = windows_[f];
    auto& sorted = sorted_[f];
    w.push_back(out.delta_v);
    sorted.insert(std::upper_bound(sorted.begin(), sorted.end(), out.delta_v), out.delta_v);
    while (w.size() > cfg_.window) {
      sorted.erase(std::lower_bound(sorted.begin(), sorted.end(), w.front()));
      w.pop_front();
    }
  }
  return verdict;
}

}  // namespace proprio
