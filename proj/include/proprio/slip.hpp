#pragma once

#include <cstddef>
#include <deque>
#include <limits>
#include <span>
#include <vector>

#include "proprio/telemetry.hpp"
#include "proprio/types.hpp"

namespace proprio {

struct SlipConfig {
  double h = 0.01;            // stabilizer in the velocity-deviation denominator
  double eps_p = 0.02;        // m, positional threshold
  double percentile = 90.0;   // for the velocity threshold, in (0, 100)
  std::size_t window = 200;   // stance samples kept per foot

  /// Throws ValidationError on an out-of-range field.
  void validate() const;
};

/// Samples a foot's window must hold before its velocity threshold is finite.
inline constexpr std::size_t kSlipMinHistory = 10;

struct FootSlip {
  double delta_v = 0.0;
  double delta_p = 0.0;  // m
  double eps_v = std::numeric_limits<double>::infinity();
  bool beta = false;
  /// First flagged sample of a maximal run of flagged samples on this foot.
  bool run_start = false;
};

struct SlipVerdict {
  PerFoot<FootSlip> feet{};

  bool any() const {
    for (const auto& f : feet) {
      if (f.beta) return true;
    }
    return false;
  }
};

/// Normalized desired-vs-actual foot velocity deviation.
double compute_delta_v(const Vec3& v_des, const Vec3& v_act, double h);

/// |‖p_des‖ − ‖p_act‖|. Compares norms only, so equal-length vectors in
/// different directions give zero.
double compute_delta_p(const Vec3& p_des, const Vec3& p_act);

/// Nearest-rank percentile (rank = ceil(p/100 · n)). Empty history yields +inf,
/// which suppresses flags until data arrives.
double update_threshold(std::span<const double> history, double percentile);

/// Per-stream slip detector with one rolling ΔV window per foot.
class SlipDetector {
 public:
  explicit SlipDetector(SlipConfig cfg = {});

  SlipVerdict detect(const ProprioSample& sample);

  const SlipConfig& config() const { return cfg_; }
  const std::deque<double>& history(std::size_t foot) const { return windows_[foot]; }

 private:
  double threshold(std::size_t foot) const;

  SlipConfig cfg_;
  PerFoot<std::deque<double>> windows_;   // arrival order
  PerFoot<std::vector<double>> sorted_;   // same values, ascending
  PerFoot<bool> prev_beta_{};
};

}  // namespace proprio
