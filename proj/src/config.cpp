#include "proprio/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string_view>
#include <vector>

namespace proprio {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Shortest text that reads back to the same double.
std::string shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::logic_error("number formatting failed");
  return std::string(buf, ptr);
}

double to_double(std::string_view s) {
  s = trim(s);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ValidationError("expected a number, got '" + std::string(s) + "'");
  }
  return v;
}

std::uint64_t to_uint(std::string_view s) {
  s = trim(s);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ValidationError("expected a non-negative integer, got '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<double> to_list(std::string_view s, std::size_t expected = 0) {
  std::vector<double> out;
  for (auto part : split(s, ',')) out.push_back(to_double(part));
  if (expected != 0 && out.size() != expected) {
    throw ValidationError("expected " + std::to_string(expected) + " comma-separated numbers");
  }
  return out;
}

std::string join(const std::vector<double>& v, const char* sep = ",") {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k > 0) out += sep;
    out += shortest(v[k]);
  }
  return out;
}

sim::TerrainKind to_terrain(std::string_view s) {
  s = trim(s);
  if (s == "flat") return sim::TerrainKind::flat;
  if (s == "ramp_testbed") return sim::TerrainKind::ramp_testbed;
  if (s == "crater_field") return sim::TerrainKind::crater_field;
  throw ValidationError("unknown terrain '" + std::string(s) +
                        "' (expected flat, ramp_testbed or crater_field)");
}

std::string terrain_name(sim::TerrainKind k) {
  switch (k) {
    case sim::TerrainKind::flat: return "flat";
    case sim::TerrainKind::ramp_testbed: return "ramp_testbed";
    case sim::TerrainKind::crater_field: return "crater_field";
  }
  return "flat";
}

/// `t_start foot dx dy dz duration`
sim::InjectedSlip to_slip(std::string_view s) {
  std::istringstream in{std::string(s)};
  std::string tok;
  std::vector<std::string> toks;
  while (in >> tok) toks.push_back(tok);
  if (toks.size() != 6) throw ValidationError("slip needs 't_start foot dx dy dz duration'");
  sim::InjectedSlip slip;
  slip.t_start = to_double(toks[0]);
  slip.foot = static_cast<std::size_t>(to_uint(toks[1]));
  slip.displacement = Vec3(to_double(toks[2]), to_double(toks[3]), to_double(toks[4]));
  slip.duration = to_double(toks[5]);
  return slip;
}

std::string slip_text(const sim::InjectedSlip& s) {
  return shortest(s.t_start) + ' ' + std::to_string(s.foot) + ' ' + shortest(s.displacement.x()) +
         ' ' + shortest(s.displacement.y()) + ' ' + shortest(s.displacement.z()) + ' ' +
         shortest(s.duration);
}

struct Key {
  std::string name;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

Key real(std::string name, double RunConfig::*field) {
  return {std::move(name), [field](RunConfig& c, std::string_view v) { c.*field = to_double(v); },
          [field](const RunConfig& c) { return shortest(c.*field); }};
}

template <typename Access>
Key real_at(std::string name, Access access) {
  return {std::move(name), [access](RunConfig& c, std::string_view v) { access(c) = to_double(v); },
          [access](const RunConfig& c) { return shortest(access(const_cast<RunConfig&>(c))); }};
}

template <typename Access>
Key count_at(std::string name, Access access) {
  return {std::move(name),
          [access](RunConfig& c, std::string_view v) {
            access(c) = static_cast<std::remove_reference_t<decltype(access(c))>>(to_uint(v));
          },
          [access](const RunConfig& c) {
            return std::to_string(access(const_cast<RunConfig&>(c)));
          }};
}

const std::vector<Key>& registry() {
  static const std::vector<Key> keys = [] {
    std::vector<Key> k;
    k.push_back(count_at("grid.n_x", [](RunConfig& c) -> std::size_t& { return c.grid.n_x; }));
    k.push_back(count_at("grid.n_y", [](RunConfig& c) -> std::size_t& { return c.grid.n_y; }));
    k.push_back(real_at("grid.resolution", [](RunConfig& c) -> double& { return c.grid.resolution; }));
    k.push_back({"grid.origin",
                 [](RunConfig& c, std::string_view v) {
                   if (trim(v) == "auto") {
                     c.grid_origin_auto = true;
                     return;
                   }
                   const auto xy = to_list(v, 2);
                   c.grid_origin_auto = false;
                   c.grid.origin = Vec2(xy[0], xy[1]);
                 },
                 [](const RunConfig& c) {
                   return c.grid_origin_auto ? std::string("auto")
                                             : join({c.grid.origin.x(), c.grid.origin.y()});
                 }});

    k.push_back(real_at("slip.h", [](RunConfig& c) -> double& { return c.slip.h; }));
    k.push_back(real_at("slip.eps_p", [](RunConfig& c) -> double& { return c.slip.eps_p; }));
    k.push_back(real_at("slip.percentile", [](RunConfig& c) -> double& { return c.slip.percentile; }));
    k.push_back(count_at("slip.window", [](RunConfig& c) -> std::size_t& { return c.slip.window; }));
    k.push_back(real("cot.d_min", &RunConfig::cot_d_min));
    k.push_back(real("smooth.sigma", &RunConfig::smooth_sigma));
    k.push_back(count_at("seed", [](RunConfig& c) -> std::uint64_t& { return c.seed; }));

    using S = sim::ScenarioSpec;
    auto sc = [](auto member) {
      return [member](RunConfig& c) -> auto& { return c.scenario.*member; };
    };
    auto tr = [](auto member) {
      return [member](RunConfig& c) -> auto& { return c.scenario.terrain.*member; };
    };
    auto gait = [](auto member) {
      return [member](RunConfig& c) -> auto& { return c.scenario.gait.*member; };
    };
    k.push_back({"scenario.terrain",
                 [](RunConfig& c, std::string_view v) { c.scenario.terrain.kind = to_terrain(v); },
                 [](const RunConfig& c) { return terrain_name(c.scenario.terrain.kind); }});
    k.push_back(real_at("scenario.flat_half_extent", tr(&sim::TerrainSpec::flat_half_extent)));
    k.push_back(real_at("scenario.ramp_angle", tr(&sim::TerrainSpec::ramp_angle_deg)));
    k.push_back(real_at("scenario.ramp_length", tr(&sim::TerrainSpec::ramp_length)));
    k.push_back(real_at("scenario.platform_length", tr(&sim::TerrainSpec::platform_length)));
    k.push_back(real_at("scenario.lead_length", tr(&sim::TerrainSpec::lead_length)));
    k.push_back(real_at("scenario.half_width", tr(&sim::TerrainSpec::half_width)));
    k.push_back(count_at("scenario.crater_seed", tr(&sim::TerrainSpec::crater_seed)));
    k.push_back(real_at("scenario.field_size", tr(&sim::TerrainSpec::field_size)));
    k.push_back(count_at("scenario.crater_count", tr(&sim::TerrainSpec::crater_count)));
    k.push_back(count_at("scenario.bump_count", tr(&sim::TerrainSpec::bump_count)));
    k.push_back(real_at("scenario.max_crater_width", tr(&sim::TerrainSpec::max_crater_width)));
    k.push_back(real_at("scenario.max_crater_depth", tr(&sim::TerrainSpec::max_crater_depth)));
    k.push_back(real_at("scenario.max_relief", tr(&sim::TerrainSpec::max_relief)));
    k.push_back({"scenario.path",
                 [](RunConfig& c, std::string_view v) {
                   c.scenario.path.clear();
                   for (auto wp : split(v, ';')) {
                     const auto xy = to_list(wp, 2);
                     c.scenario.path.emplace_back(xy[0], xy[1]);
                   }
                 },
                 [](const RunConfig& c) {
                   std::string out;
                   for (std::size_t i = 0; i < c.scenario.path.size(); ++i) {
                     if (i > 0) out += "; ";
                     out += join({c.scenario.path[i].x(), c.scenario.path[i].y()});
                   }
                   return out;
                 }});
    k.push_back(real_at("scenario.speed", sc(&S::speed)));
    k.push_back(real_at("scenario.corner_blend", sc(&S::corner_blend)));
    k.push_back(real_at("scenario.stride_period", gait(&sim::GaitParams::stride_period)));
    k.push_back(real_at("scenario.duty_factor", gait(&sim::GaitParams::duty_factor)));
    k.push_back(real_at("scenario.step_height", gait(&sim::GaitParams::step_height)));
    k.push_back(real_at("scenario.body_height", gait(&sim::GaitParams::body_height)));
    k.push_back(real_at("scenario.hip_x", gait(&sim::GaitParams::hip_x)));
    k.push_back(real_at("scenario.hip_y", gait(&sim::GaitParams::hip_y)));
    k.push_back(real_at("scenario.gravity", sc(&S::gravity)));
    k.push_back(real_at("scenario.rate_hz", sc(&S::rate_hz)));
    k.push_back({"scenario.power",
                 [](RunConfig& c, std::string_view v) {
                   const auto p = to_list(v, 3);
                   c.scenario.power = {p[0], p[1], p[2]};
                 },
                 [](const RunConfig& c) {
                   const auto& p = c.scenario.power;
                   return join({p.c0, p.c1, p.c2});
                 }});
    k.push_back({"scenario.segment_masses",
                 [](RunConfig& c, std::string_view v) { c.scenario.segment_masses = to_list(v); },
                 [](const RunConfig& c) { return join(c.scenario.segment_masses); }});
    k.push_back(real_at("scenario.pose_noise",
                        [](RunConfig& c) -> double& { return c.scenario.noise.pose_std; }));
    k.push_back(real_at("scenario.velocity_noise",
                        [](RunConfig& c) -> double& { return c.scenario.noise.velocity_std; }));
    k.push_back(count_at("scenario.truth_cells", sc(&S::truth_cells)));
    k.push_back(real_at("scenario.truth_resolution", sc(&S::truth_resolution)));
    k.push_back(count_at("scenario.auto_slips", [](RunConfig& c) -> std::size_t& { return c.auto_slips; }));
    k.push_back(real("scenario.auto_slip_magnitude", &RunConfig::auto_slip_magnitude));
    k.push_back(real("scenario.auto_slip_duration", &RunConfig::auto_slip_duration));
    k.push_back({"out", [](RunConfig& c, std::string_view v) { c.out = std::string(trim(v)); },
                 [](const RunConfig& c) { return c.out; }});
    return k;
  }();
  return keys;
}

constexpr std::string_view kSlipKey = "scenario.slip";

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

void RunConfig::validate() const {
  GridSpec g = grid;
  g.validate();
  slip.validate();
  if (!(cot_d_min > 0.0)) throw ValidationError("cot.d_min must be > 0");
  if (!(smooth_sigma >= 0.0)) throw ValidationError("smooth.sigma must be >= 0");
  if (!(auto_slip_magnitude > 0.0)) throw ValidationError("scenario.auto_slip_magnitude must be > 0");
  if (!(auto_slip_duration > 0.0)) throw ValidationError("scenario.auto_slip_duration must be > 0");
}

sim::ScenarioSpec RunConfig::resolved_scenario() const {
  sim::ScenarioSpec spec = scenario;
  spec.seed = seed;
  if (auto_slips > 0) {
    auto extra = sim::schedule_slips(spec, auto_slips, auto_slip_magnitude, auto_slip_duration);
    spec.slips.insert(spec.slips.end(), extra.begin(), extra.end());
  }
  return spec;
}

RunConfig parse_config(std::istream& in, const std::string& source) {
  RunConfig cfg;
  std::map<std::string, std::size_t, std::less<>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const std::string where = source + " line " + std::to_string(line_no) + ": ";

    const auto eq = view.find('=');
    if (eq == std::string_view::npos) throw ValidationError(where + "expected 'key = value'");
    const std::string key(trim(view.substr(0, eq)));
    const std::string_view value = trim(view.substr(eq + 1));

    try {
      if (key == kSlipKey) {
        cfg.scenario.slips.push_back(to_slip(value));
        continue;
      }
      const auto& keys = registry();
      auto it = std::find_if(keys.begin(), keys.end(), [&](const Key& k) { return k.name == key; });
      if (it == keys.end()) throw ValidationError("unknown key '" + key + "'");
      if (auto prev = seen.find(key); prev != seen.end()) {
        throw ValidationError("key '" + key + "' already set on line " +
                              std::to_string(prev->second));
      }
      seen.emplace(key, line_no);
      it->set(cfg, value);
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
  }
  try {
    cfg.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(source + ": " + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  return parse_config(in, path.string());
}

std::string serialize_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& k : registry()) out += k.name + " = " + k.get(cfg) + '\n';
  for (const auto& s : cfg.scenario.slips) out += std::string(kSlipKey) + " = " + slip_text(s) + '\n';
  return out;
}

std::map<std::string, std::string> config_entries(const RunConfig& cfg) {
  std::map<std::string, std::string> out;
  for (const auto& k : registry()) out[k.name] = k.get(cfg);
  for (std::size_t i = 0; i < cfg.scenario.slips.size(); ++i) {
    out[std::string(kSlipKey) + "[" + std::to_string(i) + "]"] = slip_text(cfg.scenario.slips[i]);
  }
  return out;
}

std::string config_fingerprint(const RunConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(serialize_config(cfg))));
  return buf;
}

}  // namespace proprio
