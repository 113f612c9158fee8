// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "proprio/commands.hpp"
#include "proprio/elevation.hpp"
#include "proprio/energetics.hpp"
#include "proprio/gridmap.hpp"
#include "proprio/pipeline.hpp"
#include "proprio/simharness.hpp"
#include "proprio/slip.hpp"
#include "proprio/stability.hpp"

namespace fs = std::filesystem;
using namespace proprio;

namespace {

// Pinned tolerances.
constexpr double kRampRmseMax = 0.1;            // m
constexpr double kRampRuntimeMax = 10.0;        // s
constexpr double kSlipMagnitudeMin = 0.02;      // m, injected slips exceed this
constexpr double kCotIdentityTol = 1e-6;
constexpr double kSquareGiimTol = 1e-9;
constexpr double kScaleTol = 1e-12;
constexpr double kBoundaryExclusion = 1e-9;     // m, point-in-polygon ties skipped
constexpr double kMeanRelTol = 1e-12;
constexpr double kSmoothMassTol = 1e-9;
constexpr double kSweepCotTol = 1e-6;
constexpr double kTableMeanTol = 1e-12;
constexpr int kStanceTrials = 10000;
constexpr int kMeanHistories = 10000;
constexpr int kIndexPoints = 100000;

struct Outcome {
  bool pass;
  std::string detail;
};

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

class Scratch {
 public:
  explicit Scratch(const std::string& name)
      : path_(fs::temp_directory_path() / ("proprio_acceptance_" + name)) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  fs::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  fs::path path_;
};

std::string file_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

int invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "proprio");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) std::cerr << "  proprio exited " << code << ": " << err.str();
  return code;
}

// 1 ──────────────────────────────────────────────────────────────────────────

Outcome elevation_fidelity() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto spec = sim::ramp_traversal(10.0);
  const auto run = sim::generate(spec);
  GridSpec grid = run.truth.grid;  // r = 0.4, same origin as the truth raster
  const TerrainGrid map = build_map(run.header, run.samples, grid);
  const auto err = cli::evaluate_elevation(map.layer(LayerId::elevation), run.truth.grid,
                                           run.truth.heights);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool pass = grid.resolution == 0.4 && err.rmse <= kRampRmseMax && secs < kRampRuntimeMax;
  return {pass, "rmse=" + fmt("%.4f", err.rmse) + " m over " + std::to_string(err.cells) +
                    " cells (max 0.1), runtime=" + fmt("%.2f", secs) + " s (max 10)"};
}

// 2 ──────────────────────────────────────────────────────────────────────────

struct SlipTally {
  std::size_t injected = 0;
  std::size_t recalled = 0;
  std::size_t events = 0;
};

SlipTally tally_slips(const sim::Simulation& run) {
  SlipDetector det;
  std::vector<std::pair<double, std::size_t>> starts;
  for (const auto& s : run.samples) {
    const auto v = det.detect(s);
    for (std::size_t f = 0; f < kFeet; ++f) {
      if (v.feet[f].run_start && s.contact[f]) starts.emplace_back(s.t, f);
    }
  }
  SlipTally t;
  t.injected = run.truth.slips.size();
  t.events = starts.size();
  for (const auto& slip : run.truth.slips) {
    const bool hit = std::any_of(starts.begin(), starts.end(), [&](const auto& e) {
      return e.second == slip.foot && e.first >= slip.t_start &&
             e.first <= slip.t_start + slip.duration;
    });
    if (hit) ++t.recalled;
  }
  return t;
}

Outcome slip_recall() {
  std::size_t injected = 0, recalled = 0, events = 0, clean_events = 0;
  bool all_above = true;

  sim::ScenarioSpec flat;
  flat.path = {Vec2(0, 0), Vec2(18, 0)};
  flat.slips = sim::schedule_slips(flat, 20, 0.03);

  sim::ScenarioSpec craters;
  craters.terrain.kind = sim::TerrainKind::crater_field;
  craters.path = {Vec2(-8, -8), Vec2(-7, 5), Vec2(8, 8)};
  craters.slips = sim::schedule_slips(craters, 20, 0.025);
  craters.noise.velocity_std = 0.01;

  for (const auto* spec : {&flat, &craters}) {
    for (const auto& s : spec->slips) all_above = all_above && s.magnitude() > kSlipMagnitudeMin;
    const auto t = tally_slips(sim::generate(*spec));
    injected += t.injected;
    recalled += t.recalled;
    events += t.events;
  }

  for (std::uint64_t seed : {1, 2, 3}) {
    sim::ScenarioSpec clean;
    clean.path = {Vec2(0, 0), Vec2(6, 0), Vec2(6, 4)};
    clean.seed = seed;
    clean.noise.velocity_std = seed == 1 ? 0.0 : 0.02;
    clean.noise.pose_std = seed == 1 ? 0.0 : 0.002;
    clean_events += tally_slips(sim::generate(clean)).events;
  }

  const double recall = injected ? static_cast<double>(recalled) / injected : 0.0;
  const bool pass = all_above && injected == 40 && recall == 1.0 && events == injected &&
                    clean_events == 0;
  return {pass, "recall=" + fmt("%.3f", recall) + " (" + std::to_string(recalled) + "/" +
                    std::to_string(injected) + "), events on slip runs=" + std::to_string(events) +
                    ", events on clean flat runs=" + std::to_string(clean_events)};
}

// 3 ──────────────────────────────────────────────────────────────────────────

Outcome cot_identity() {
  sim::ScenarioSpec spec;
  spec.terrain.kind = sim::TerrainKind::crater_field;
  spec.path = {Vec2(-8, -8), Vec2(-7, 5), Vec2(8, 8)};
  spec.power = {1.0, 0.0, 0.0};  // P = m g |v_xy|, so E = m g d
  const auto run = sim::generate(spec);
  EnergyAccumulator acc;
  for (const auto& s : run.samples) acc.accumulate(s);
  const double c = *cot(acc.e_joules, run.header.robot_mass, run.header.gravity.norm(), acc.d_meters);
  const double dev = std::abs(c - 1.0);
  return {dev <= kCotIdentityTol, "CoT=" + fmt("%.12f", c) + " |CoT-1|=" + fmt("%.2e", dev) +
                                      " (max 1e-6)"};
}

// 4 ──────────────────────────────────────────────────────────────────────────

enum class Side { inside, outside, boundary };

Side locate(const std::vector<Vec2>& poly, const Vec2& p) {
  double sign = 0.0;
  for (std::size_t k = 0; k < poly.size(); ++k) {
    const Vec2 a = poly[k];
    const Vec2 e = poly[(k + 1) % poly.size()] - a;
    const double dist = (e.x() * (p.y() - a.y()) - e.y() * (p.x() - a.x())) / e.norm();
    if (std::abs(dist) <= kBoundaryExclusion) return Side::boundary;
    if (sign == 0.0) sign = dist;
    if (dist * sign < 0.0) return Side::outside;
  }
  return Side::inside;
}

Outcome stability_geometry() {
  const Vec3 g(0, 0, -kLunarGravity);
  std::mt19937_64 rng(4242);
  int tested = 0, agree = 0;
  double worst_scale = 0.0;
  for (int k = 0; k < kStanceTrials; ++k) {
    const std::size_t n = 3 + static_cast<std::size_t>(k % 2);
    std::vector<Vec3> feet;
    for (std::size_t f = 0; f < n; ++f) {
      feet.emplace_back(uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5), 0.0);
    }
    const Vec3 com(uniform(rng, -0.6, 0.6), uniform(rng, -0.6, 0.6), uniform(rng, 0.2, 0.6));
    const auto res = build_polyhedron(com, feet, g);
    if (!res || res.polyhedron.contacts.size() < 3) continue;
    std::vector<Vec2> hull;
    for (const auto& c : res.polyhedron.contacts) hull.push_back(c.head<2>());
    const Side side = locate(hull, com.head<2>());
    if (side == Side::boundary) continue;
    const auto m = evaluate_margins(res.polyhedron, g);
    if (!m) continue;
    ++tested;
    const bool inside = side == Side::inside;
    if ((m->giim > 0) == inside && (m->giam > 0) == inside) ++agree;

    // Scaling the GIA: angle unchanged, projection scales linearly.
    const Vec3 a(uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5), -kLunarGravity);
    const double s = uniform(rng, 0.1, 10.0);
    const auto m1 = *evaluate_margins(res.polyhedron, a);
    const auto m2 = *evaluate_margins(res.polyhedron, s * a);
    worst_scale = std::max(worst_scale, std::abs(m2.giim - m1.giim));
    worst_scale = std::max(worst_scale,
                           std::abs(m2.giam - s * m1.giam) / std::max(1.0, std::abs(s * m1.giam)));
  }

  const std::vector<Vec3> square = {Vec3(0.2, 0.2, 0), Vec3(-0.2, 0.2, 0), Vec3(-0.2, -0.2, 0),
                                    Vec3(0.2, -0.2, 0)};
  const auto sq = build_polyhedron(Vec3(0, 0, 0.4), square, g);
  const double sq_err = std::abs(*giim(sq.polyhedron, g) - std::atan(0.2 / 0.4));

  const bool pass = tested > kStanceTrials / 2 && agree == tested && sq_err <= kSquareGiimTol &&
                    worst_scale <= kScaleTol;
  return {pass, "sign agreement " + std::to_string(agree) + "/" + std::to_string(tested) +
                    " non-degenerate stances, square GIIM error=" + fmt("%.1e", sq_err) +
                    ", scaling error=" + fmt("%.1e", worst_scale) + " (max 1e-12)"};
}

// 5 ──────────────────────────────────────────────────────────────────────────

std::optional<CellIndex> scan_index(const GridSpec& g, double x, double y) {
  std::optional<std::size_t> row, col;
  for (std::size_t i = 0; i < g.n_y && !row; ++i) {
    const double lo = g.origin.y() + (static_cast<double>(i) - g.n_y / 2.0) * g.resolution;
    if (y >= lo && y < lo + g.resolution) row = i;
  }
  for (std::size_t j = 0; j < g.n_x && !col; ++j) {
    const double lo = g.origin.x() + (static_cast<double>(j) - g.n_x / 2.0) * g.resolution;
    if (x >= lo && x < lo + g.resolution) col = j;
  }
  if (!row || !col) return std::nullopt;
  return CellIndex{*row, *col};
}

Outcome aggregation_algebra() {
  std::mt19937_64 rng(77);

  double worst_mean = 0.0;
  for (int h = 0; h < kMeanHistories; ++h) {
    const int n = 1 + static_cast<int>(rng() % 200);
    double value = 0.0, sum = 0.0;
    std::uint64_t count = 0;
    const double offset = uniform(rng, -100, 100);
    for (int k = 0; k < n; ++k) {
      const double obs = offset + uniform(rng, -1, 1);
      const auto u = update_mean(value, count, obs);
      value = u.value;
      count = u.count;
      sum += obs;
    }
    const double batch = sum / n;
    worst_mean = std::max(worst_mean, std::abs(value - batch) / std::max(1.0, std::abs(batch)));
  }

  double worst_mass = 0.0;
  bool identity = true;
  for (int trial = 0; trial < 50; ++trial) {
    GridSpec g{10 + rng() % 30, 10 + rng() % 30, 0.4, Vec2::Zero()};
    Layer l(g);
    for (std::size_t k = 0; k < g.cell_count() / 2; ++k) {
      l.add_mean({rng() % g.n_y, rng() % g.n_x}, uniform(rng, -2, 2));
    }
    double before = 0.0, after = 0.0;
    const Layer s = smooth(l, uniform(rng, 0.3, 3.0));
    for (std::size_t k = 0; k < g.cell_count(); ++k) {
      if (l.counts()[k]) before += l.values()[k];
      if (s.counts()[k]) after += s.values()[k];
    }
    worst_mass = std::max(worst_mass, std::abs(after - before));
    identity = identity && smooth(l, 0.0) == l;
  }

  // Dyadic grid so cell edges are exact, and exact edges are sampled too.
  const GridSpec g{64, 48, 0.25, Vec2(1.5, -2.0)};
  std::size_t mismatches = 0, edge_points = 0;
  for (int k = 0; k < kIndexPoints; ++k) {
    double x = uniform(rng, -8, 11);
    double y = uniform(rng, -9, 5);
    if (k % 4 == 0) {
      x = g.origin.x() + (static_cast<double>(rng() % 80) - 40.0) * g.resolution;
      y = g.origin.y() + (static_cast<double>(rng() % 64) - 32.0) * g.resolution;
      ++edge_points;
    }
    if (!(index(g, x, y) == scan_index(g, x, y))) ++mismatches;
  }

  const bool pass = worst_mean <= kMeanRelTol && worst_mass <= kSmoothMassTol && identity &&
                    mismatches == 0;
  return {pass, "mean vs batch " + fmt("%.1e", worst_mean) + " (max 1e-12), smoothing mass drift " +
                    fmt("%.1e", worst_mass) + " (max 1e-9), sigma=0 identity " +
                    (identity ? "holds" : "broken") + ", index mismatches " +
                    std::to_string(mismatches) + "/" + std::to_string(kIndexPoints) + " (" +
                    std::to_string(edge_points) + " on cell edges)"};
}

// 6 ──────────────────────────────────────────────────────────────────────────

Outcome trend_reproduction() {
  std::vector<double> angles;
  for (int a = -20; a <= 20; a += 5) angles.push_back(a);
  const auto r = cli::cmd_sweep(angles, 2, RunConfig{}, {});

  bool decreasing = true;
  double prev = r.fits.static_giim(0.0);
  bool symmetric = true;
  for (int k = 1; k <= 80; ++k) {
    const double a = 0.25 * k;
    const double up = r.fits.static_giim(a);
    const double down = r.fits.static_giim(-a);
    decreasing = decreasing && up < prev && down < r.fits.static_giim(-(a - 0.25));
    symmetric = symmetric && std::abs(up - down) < 1e-9;
    prev = up;
  }
  bool raw_decreasing = true;
  for (const auto& row : r.rows) {
    for (const auto& other : r.rows) {
      if (std::abs(other.angle_deg) > std::abs(row.angle_deg)) {
        raw_decreasing = raw_decreasing && other.static_margins.giim < row.static_margins.giim;
      }
    }
  }
  const bool pass = decreasing && raw_decreasing && r.fits.cot.has_value() &&
                    r.fits.cot_model_deviation <= kSweepCotTol;
  return {pass, std::string("fitted static GIIM ") +
                    (decreasing ? "strictly decreasing" : "NOT decreasing") + " in |alpha| on [0, 20] deg" +
                    (symmetric ? " (symmetric)" : "") + ", CoT fit vs model max deviation " +
                    fmt("%.1e", r.fits.cot_model_deviation) + " (max 1e-6)"};
}

// 7 ──────────────────────────────────────────────────────────────────────────

std::optional<double> oracle_mean(const Layer& l) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < l.spec().n_y; ++i) {
    for (std::size_t j = 0; j < l.spec().n_x; ++j) {
      if (!l.valid({i, j})) continue;
      sum += l.value({i, j});
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

bool close(const std::optional<double>& a, const std::optional<double>& b) {
  if (!a || !b) return a.has_value() == b.has_value();
  return std::abs(*a - *b) <= kTableMeanTol * std::max(1.0, std::abs(*b));
}

Outcome table_pipeline() {
  Scratch dir("table");
  const std::vector<std::pair<std::string, std::string>> runs = {
      {"t1", "scenario.path = -8,-8; -7,5; 8,8\nscenario.auto_slips = 21\n"},
      {"t2", "scenario.path = -8,-8; 8,8\nscenario.auto_slips = 13\n"},
      {"t3", "scenario.path = -8,-8; 5,-7; 8,8\nscenario.auto_slips = 15\n"},
  };
  std::vector<fs::path> maps;
  std::vector<std::size_t> truth_slips;
  for (const auto& [name, body] : runs) {
    const auto cfg_path = dir / (name + ".cfg");
    write_text(cfg_path, "scenario.terrain = crater_field\n" + body);
    const auto out = dir / name;
    if (invoke({"--config", cfg_path.string(), "--out", out.string(), "simulate"}) != 0 ||
        invoke({"--config", cfg_path.string(), "--out", (out / "map").string(), "map",
                (out / "telemetry.txt").string()}) != 0) {
      return {false, "simulate/map failed for " + name};
    }
    truth_slips.push_back(sim::read_ground_truth(out / "truth.txt").slips.size());
    maps.push_back(out / "map");
  }
  const auto cols = cli::cmd_compare(maps, dir / "cmp");
  const std::string table = file_text(dir / "cmp" / "compare.txt");

  bool totals = true, means = true, labels = true;
  std::string counts;
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const TerrainGrid g = import_grid(maps[k]);
    if (!cols[k].summary) return {false, "empty summary for " + cols[k].name};
    const auto& s = *cols[k].summary;
    totals = totals && s.total_slip == static_cast<double>(truth_slips[k]);
    means = means && close(s.mean_cot, oracle_mean(g.layer(LayerId::cot))) &&
            close(s.mean_giim, oracle_mean(g.layer(LayerId::giim))) &&
            close(s.mean_giam, oracle_mean(g.layer(LayerId::giam)));
    counts += (k ? "/" : "") + fmt("%g", s.total_slip) + " vs " + std::to_string(truth_slips[k]);
  }
  for (const char* label : {"Total Slippage", "Overall CoT", "Avg. GIIM", "Avg. GIAM"}) {
    labels = labels && table.find(label) != std::string::npos;
  }
  const bool pass = cols.size() == 3 && totals && means && labels;
  return {pass, "slip totals " + counts + (totals ? " (exact)" : " (MISMATCH)") + ", means vs oracle " +
                    (means ? "within 1e-12" : "OUT OF TOLERANCE") + ", metric labels " +
                    (labels ? "present" : "missing")};
}

// 8 ──────────────────────────────────────────────────────────────────────────

std::vector<std::pair<std::string, std::string>> tree(const fs::path& root) {
  std::vector<std::pair<std::string, std::string>> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files.emplace_back(fs::relative(e.path(), root).string(), file_text(e.path()));
  }
  std::sort(files.begin(), files.end());
  return files;
}

Outcome determinism() {
  Scratch dir("determinism");
  write_text(dir / "a.cfg",
             "scenario.terrain = crater_field\nscenario.path = -6,-6; 6,-2; 4,6\n"
             "scenario.auto_slips = 5\nscenario.velocity_noise = 0.01\nscenario.pose_noise = 0.001\n");
  write_text(dir / "b.cfg", "scenario.terrain = crater_field\nscenario.path = 6,6; -6,6\n");
  auto run_all = [&](const fs::path& out) {
    const std::string a = (dir / "a.cfg").string();
    const std::string b = (dir / "b.cfg").string();
    const std::string o = out.string();
    return invoke({"--config", a, "--seed", "11", "--out", o + "/sa", "simulate"}) == 0 &&
           invoke({"--config", b, "--out", o + "/sb", "simulate"}) == 0 &&
           invoke({"--config", a, "--out", o + "/ma", "map", o + "/sa/telemetry.txt"}) == 0 &&
           invoke({"--config", b, "--out", o + "/mb", "map", o + "/sb/telemetry.txt"}) == 0 &&
           invoke({"--out", o + "/ev", "eval-elevation", o + "/ma", o + "/sa/truth.txt"}) == 0 &&
           invoke({"--out", o + "/cmp", "compare", o + "/ma", o + "/mb"}) == 0 &&
           invoke({"--out", o + "/sw", "sweep", "--angles", "-20,-10,0,10,20", "--repeats", "1"}) == 0;
  };
  // Same output location both times: compare tables name their input paths.
  const fs::path out = dir / "run";
  if (!run_all(out)) return {false, "a command failed"};
  const auto x = tree(out);
  fs::remove_all(out);
  if (!run_all(out)) return {false, "a command failed"};
  const auto y = tree(out);
  std::size_t differing = 0;
  for (std::size_t k = 0; k < std::min(x.size(), y.size()); ++k) {
    if (x[k] != y[k]) ++differing;
  }
  const bool pass = x.size() == y.size() && differing == 0 && x.size() > 20;
  return {pass, std::to_string(x.size()) + " output files from simulate/map/eval-elevation/compare/sweep, " +
                    std::to_string(differing) + " differ between runs"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 elevation fidelity", elevation_fidelity},
      {"2 slip recall/precision", slip_recall},
      {"3 CoT identity", cot_identity},
      {"4 stability geometry", stability_geometry},
      {"5 aggregation algebra", aggregation_algebra},
      {"6 trend reproduction", trend_reproduction},
      {"7 comparison table pipeline", table_pipeline},
      {"8 determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size()
            << " acceptance criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
