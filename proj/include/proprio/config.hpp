#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "proprio/energetics.hpp"
#include "proprio/gridmap.hpp"
#include "proprio/simharness.hpp"
#include "proprio/slip.hpp"

namespace proprio {

/// Everything a command needs besides its positional inputs. Text form is
/// `key = value`, one per line, `#` starts a comment. Unknown keys are errors.
struct RunConfig {
  GridSpec grid;
  bool grid_origin_auto = true;  // origin = first sample's CoM
  SlipConfig slip;
  double cot_d_min = kDefaultCotMinDistance;
  double smooth_sigma = 1.0;  // cells, applied at export only
  sim::ScenarioSpec scenario = [] {
    sim::ScenarioSpec s;
    s.path = {Vec2(0.0, 0.0), Vec2(10.0, 0.0)};
    return s;
  }();
  std::size_t auto_slips = 0;          // scheduled in addition to scenario.slip entries
  double auto_slip_magnitude = 0.05;   // m
  double auto_slip_duration = 0.2;     // s
  std::uint64_t seed = 1;
  std::string out = "out";

  void validate() const;
  /// Scenario with the seed applied and scheduled slips appended.
  sim::ScenarioSpec resolved_scenario() const;
};

RunConfig parse_config(std::istream& in, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Canonical text: every key in a fixed order, defaults included.
std::string serialize_config(const RunConfig& cfg);
/// Same content keyed by name. Repeated keys are numbered `scenario.slip[k]`.
std::map<std::string, std::string> config_entries(const RunConfig& cfg);
/// FNV-1a 64 of serialize_config(), as 16 hex digits.
std::string config_fingerprint(const RunConfig& cfg);

}  // namespace proprio
