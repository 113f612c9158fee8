#include "proprio/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "proprio/stability.hpp"
#include "proprio/telemetry.hpp"

namespace proprio::cli {

namespace {

constexpr double kSlopeTolerance = 1e-9;   // rad

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

std::string column_name(const fs::path& p) {
  std::string name = p.lexically_normal().string();
  while (name.size() > 1 && name.back() == '/') name.pop_back();
  return name;
}

/// Layer mean over valid cells accepted by `keep`.
template <typename Keep>
std::pair<std::optional<double>, std::size_t> masked_mean(const Layer& layer, Keep&& keep) {
  double sum = 0.0;
  std::size_t n = 0;
  const GridSpec& spec = layer.spec();
  for (std::size_t i = 0; i < spec.n_y; ++i) {
    for (std::size_t j = 0; j < spec.n_x; ++j) {
      if (!layer.valid({i, j}) || !keep(CellIndex{i, j})) continue;
      sum += layer.value({i, j});
      ++n;
    }
  }
  if (n == 0) return {std::nullopt, 0};
  return {sum / static_cast<double>(n), n};
}

std::string optional_cell(const std::optional<double>& v, const char* pattern) {
  return v ? fmt(pattern, *v) : std::string();
}

}  // namespace

// ─── simulate ───────────────────────────────────────────────────────────────

SimulateResult cmd_simulate(const RunConfig& cfg, const fs::path& out_dir) {
  const sim::Simulation sim = sim::generate(cfg.resolved_scenario());
  ensure_dir(out_dir);
  SimulateResult r;
  r.telemetry = out_dir / "telemetry.txt";
  r.truth = out_dir / "truth.txt";
  write_stream(sim.header, sim.samples, r.telemetry);
  sim::write_ground_truth(sim.truth, r.truth);
  r.samples = sim.samples.size();
  r.slips = sim.truth.slips.size();
  return r;
}

// ─── map ────────────────────────────────────────────────────────────────────

PipelineOptions pipeline_options(const RunConfig& cfg) {
  return {cfg.slip, cfg.cot_d_min};
}

GridSpec resolve_grid(const RunConfig& cfg, std::span<const ProprioSample> samples) {
  GridSpec g = cfg.grid;
  if (cfg.grid_origin_auto) g.origin = auto_origin(samples);
  g.validate();
  return g;
}

ExportOptions export_options(const RunConfig& cfg) {
  return {cfg.smooth_sigma, config_entries(cfg), config_fingerprint(cfg)};
}

TerrainGrid map_stream(const StreamHeader& header, std::span<const ProprioSample> samples,
                       const RunConfig& cfg, PipelineStats* stats) {
  return build_map(header, samples, resolve_grid(cfg, samples), pipeline_options(cfg), stats);
}

MapResult cmd_map(const fs::path& telemetry, const RunConfig& cfg, const fs::path& out_dir) {
  const Stream stream = read_stream(telemetry);
  MapResult r{TerrainGrid(resolve_grid(cfg, stream.samples)), {}};
  r.grid = map_stream(stream.header, stream.samples, cfg, &r.stats);
  export_grid(r.grid, out_dir, export_options(cfg));
  return r;
}

// ─── eval-elevation ─────────────────────────────────────────────────────────

ElevationError evaluate_elevation(const Layer& elevation, const GridSpec& truth_grid,
                                  std::span<const double> truth_heights) {
  const GridSpec& g = elevation.spec();
  if (std::abs(g.resolution - truth_grid.resolution) > 1e-12 * truth_grid.resolution) {
    throw ValidationError("map and ground truth use different resolutions");
  }
  if (truth_heights.size() != truth_grid.cell_count()) {
    throw ValidationError("ground-truth height count does not match its grid");
  }
  // Each map cell is scored against the truth cell under its center; with
  // identical grids this is the cell-for-cell comparison.
  double ss = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < g.n_y; ++i) {
    for (std::size_t j = 0; j < g.n_x; ++j) {
      if (!elevation.valid({i, j})) continue;
      const Vec2 c = cell_center(g, {i, j});
      const auto t = index(truth_grid, c.x(), c.y());
      if (!t) continue;
      const double truth = truth_heights[t->i * truth_grid.n_x + t->j];
      if (std::isnan(truth)) continue;
      const double e = elevation.value({i, j}) - truth;
      ss += e * e;
      ++n;
    }
  }
  if (n == 0) throw ValidationError("map and ground truth share no valid cell");
  return {std::sqrt(ss / static_cast<double>(n)), n};
}

ElevationError cmd_eval_elevation(const fs::path& map_dir, const fs::path& truth_file) {
  const TerrainGrid map = import_grid(map_dir);
  const sim::GroundTruth truth = sim::read_ground_truth(truth_file);
  return evaluate_elevation(map.layer(LayerId::elevation), truth.grid, truth.heights);
}

// ─── compare ────────────────────────────────────────────────────────────────

std::vector<CompareColumn> compare_maps(std::span<const fs::path> maps) {
  std::vector<CompareColumn> cols;
  for (const auto& m : maps) cols.push_back({column_name(m), import_grid(m).summarize()});
  return cols;
}

namespace {

struct MetricRow {
  const char* label;
  std::optional<double> (*get)(const GridSummary&);
};

const std::array<MetricRow, 4> kMetricRows = {{
    {"Total Slippage", [](const GridSummary& s) -> std::optional<double> { return s.total_slip; }},
    {"Overall CoT", [](const GridSummary& s) { return s.mean_cot; }},
    {"Avg. GIIM", [](const GridSummary& s) { return s.mean_giim; }},
    {"Avg. GIAM", [](const GridSummary& s) { return s.mean_giam; }},
}};

}  // namespace

std::string format_compare_table(std::span<const CompareColumn> columns) {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header = {"Metric"};
  for (const auto& c : columns) header.push_back(c.name);
  cells.push_back(header);
  for (const auto& row : kMetricRows) {
    std::vector<std::string> line = {row.label};
    for (const auto& c : columns) {
      const auto v = c.summary ? row.get(*c.summary) : std::nullopt;
      line.push_back(v ? fmt("%.6g", *v) : "n/a");
    }
    cells.push_back(line);
  }

  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& line : cells) {
    for (std::size_t k = 0; k < line.size(); ++k) width[k] = std::max(width[k], line[k].size());
  }
  std::string out;
  for (const auto& line : cells) {
    std::string text;
    for (std::size_t k = 0; k < line.size(); ++k) {
      if (k > 0) text += "  ";
      text += line[k];
      if (k + 1 < line.size()) text.append(width[k] - line[k].size(), ' ');
    }
    out += text + '\n';
  }
  for (const auto& c : columns) {
    if (!c.summary) out += "note: " + c.name + " has no valid cells (empty summary)\n";
  }
  return out;
}

std::string format_compare_csv(std::span<const CompareColumn> columns) {
  std::string out = "metric";
  for (const auto& c : columns) out += "," + c.name;
  out += '\n';
  for (const auto& row : kMetricRows) {
    out += row.label;
    for (const auto& c : columns) {
      out += ',';
      out += optional_cell(c.summary ? row.get(*c.summary) : std::nullopt, "%.17g");
    }
    out += '\n';
  }
  return out;
}

std::vector<CompareColumn> cmd_compare(std::span<const fs::path> maps, const fs::path& out_dir) {
  if (maps.size() < 2) throw ValidationError("compare needs at least two maps");
  auto cols = compare_maps(maps);
  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    write_text(out_dir / "compare.txt", format_compare_table(cols));
    write_text(out_dir / "compare.csv", format_compare_csv(cols));
  }
  return cols;
}

// ─── sweep ──────────────────────────────────────────────────────────────────

StaticMargins static_stance_margins(double angle_deg, const sim::GaitParams& gait, double gravity) {
  const double slope = std::tan(angle_deg * std::numbers::pi / 180.0);
  std::vector<Vec3> feet;
  for (double sx : {1.0, -1.0}) {
    for (double sy : {1.0, -1.0}) {
      const double x = sx * gait.hip_x;
      feet.emplace_back(x, sy * gait.hip_y, slope * x);
    }
  }
  const Vec3 g(0.0, 0.0, -gravity);
  const auto poly = build_polyhedron(Vec3(0.0, 0.0, gait.body_height), feet, g);
  if (!poly) throw ValidationError("static stance: degenerate support");
  const auto m = evaluate_margins(poly.polyhedron, g);
  if (!m) throw ValidationError("static stance: margins undefined");
  return {m->giim, m->giam};
}

SweepResult cmd_sweep(std::span<const double> angles_deg, std::size_t repeats, const RunConfig& cfg,
                      const fs::path& out_dir) {
  std::vector<double> angles;
  for (double a : angles_deg) {
    if (std::find(angles.begin(), angles.end(), a) == angles.end()) angles.push_back(a);
  }
  if (angles.size() < kSweepDegree + 1) {
    throw ValidationError("rank-deficient fit: sweep needs at least " +
                          std::to_string(kSweepDegree + 1) + " distinct angles, got " +
                          std::to_string(angles.size()));
  }
  if (repeats == 0) throw ValidationError("sweep: repeats must be >= 1");

  sim::ScenarioSpec base = cfg.scenario;
  base.seed = cfg.seed;
  const auto scenarios = sim::sweep(angles, repeats, base);

  struct Acc {
    double cot = 0.0, giim = 0.0, giam = 0.0;
    std::size_t cot_n = 0, margin_n = 0, runs = 0;
  };
  std::map<double, Acc> acc;

  for (const auto& sc : scenarios) {
    const sim::Simulation run = sim::generate(sc.spec);
    const TerrainGrid grid = map_stream(run.header, run.samples, cfg);
    const sim::TerrainModel terrain(sc.spec.terrain);
    const Vec2 dir = (sc.spec.path[1] - sc.spec.path[0]).normalized();
    const double target = sc.angle_deg * std::numbers::pi / 180.0;
    const double r = grid.spec().resolution;

    // Cells whose center and both along-travel neighbours sit on slope `target`.
    auto on_slope = [&](CellIndex c) {
      const Vec2 p = cell_center(grid.spec(), c);
      for (double k : {-1.0, 0.0, 1.0}) {
        const Vec2 q = p + k * r * dir;
        if (!terrain.contains(q.x(), q.y())) return false;
        if (std::abs(terrain.slope_along(q, dir) - target) > kSlopeTolerance) return false;
      }
      return true;
    };

    Acc& a = acc[sc.angle_deg];
    ++a.runs;
    const auto [cot, cot_n] = masked_mean(grid.layer(LayerId::cot), on_slope);
    const auto [giim, giim_n] = masked_mean(grid.layer(LayerId::giim), on_slope);
    const auto [giam, giam_n] = masked_mean(grid.layer(LayerId::giam), on_slope);
    if (cot) {
      a.cot += *cot * static_cast<double>(cot_n);
      a.cot_n += cot_n;
    }
    if (giim && giam) {
      a.giim += *giim * static_cast<double>(giim_n);
      a.giam += *giam * static_cast<double>(giam_n);
      a.margin_n += giim_n;
    }
  }

  SweepResult result;
  for (double angle : angles) {
    const Acc& a = acc[angle];
    SweepRow row;
    row.angle_deg = angle;
    row.scenarios = a.runs;
    row.static_margins = static_stance_margins(angle, cfg.scenario.gait, cfg.scenario.gravity);
    row.model_cot = cfg.scenario.power.cot(angle * std::numbers::pi / 180.0);
    if (a.cot_n > 0) row.cot = a.cot / static_cast<double>(a.cot_n);
    if (a.margin_n > 0) {
      row.giim = a.giim / static_cast<double>(a.margin_n);
      row.giam = a.giam / static_cast<double>(a.margin_n);
    }
    row.cot_cells = a.cot_n;
    row.margin_cells = a.margin_n;
    result.rows.push_back(row);
  }

  auto fit_of = [&](auto get) -> std::optional<PolyFit> {
    std::vector<double> x, y;
    for (const auto& row : result.rows) {
      if (auto v = get(row)) {
        x.push_back(row.angle_deg);
        y.push_back(*v);
      }
    }
    try {
      return fit_polynomial(x, y, kSweepDegree);
    } catch (const ValidationError&) {
      return std::nullopt;
    }
  };
  std::vector<double> x, sg, sa;
  for (const auto& row : result.rows) {
    x.push_back(row.angle_deg);
    sg.push_back(row.static_margins.giim);
    sa.push_back(row.static_margins.giam);
  }
  SweepFits& f = result.fits;
  f.static_giim = fit_polynomial(x, sg, kSweepDegree);
  f.static_giam = fit_polynomial(x, sa, kSweepDegree);
  f.cot = fit_of([](const SweepRow& r) { return r.cot; });
  f.giim = fit_of([](const SweepRow& r) { return r.giim; });
  f.giam = fit_of([](const SweepRow& r) { return r.giam; });
  if (f.cot) {
    for (const auto& row : result.rows) {
      f.cot_model_deviation = std::max(f.cot_model_deviation, std::abs((*f.cot)(row.angle_deg) - row.model_cot));
    }
  } else {
    f.cot_model_deviation = std::numeric_limits<double>::infinity();
  }

  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    std::string rows =
        "angle_deg,scenarios,static_giim,static_giam,model_cot,cot,giim,giam,cot_cells,margin_cells\n";
    for (const auto& r : result.rows) {
      rows += fmt("%.17g", r.angle_deg) + ',' + std::to_string(r.scenarios) + ',' +
              fmt("%.17g", r.static_margins.giim) + ',' + fmt("%.17g", r.static_margins.giam) + ',' +
              fmt("%.17g", r.model_cot) + ',' + optional_cell(r.cot, "%.17g") + ',' +
              optional_cell(r.giim, "%.17g") + ',' + optional_cell(r.giam, "%.17g") + ',' +
              std::to_string(r.cot_cells) + ',' + std::to_string(r.margin_cells) + '\n';
    }
    write_text(out_dir / "sweep.csv", rows);

    const std::vector<std::pair<std::string, std::optional<PolyFit>>> named = {
        {"static_giim", f.static_giim}, {"static_giam", f.static_giam},
        {"cot", f.cot},                 {"giim", f.giim},
        {"giam", f.giam}};
    std::string fits = "metric,c0,c1,c2,c3,c4,rms_residual,max_residual\n";
    for (const auto& [name, fit] : named) {
      if (!fit) continue;
      fits += name;
      for (double c : fit->coeffs) fits += ',' + fmt("%.17g", c);
      fits += ',' + fmt("%.17g", fit->rms_residual) + ',' + fmt("%.17g", fit->max_residual) + '\n';
    }
    write_text(out_dir / "fits.csv", fits);

    const double lo = *std::min_element(angles.begin(), angles.end());
    const double hi = *std::max_element(angles.begin(), angles.end());
    std::string curves = "angle_deg";
    for (const auto& [name, fit] : named) {
      if (fit) curves += ',' + name;
    }
    curves += '\n';
    constexpr int kCurvePoints = 81;
    for (int k = 0; k < kCurvePoints; ++k) {
      const double a = lo + (hi - lo) * k / (kCurvePoints - 1);
      curves += fmt("%.17g", a);
      for (const auto& [name, fit] : named) {
        if (fit) curves += ',' + fmt("%.17g", (*fit)(a));
      }
      curves += '\n';
    }
    write_text(out_dir / "fit_curves.csv", curves);
  }
  return result;
}

// ─── entry point ────────────────────────────────────────────────────────────

namespace {

std::vector<double> parse_angles(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (tok.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(tok);
    } catch (const std::logic_error&) {
      throw ValidationError("--angles: cannot parse '" + tok + "'");
    }
  }
  return out;
}

void print_summary(std::ostream& out, const std::optional<GridSummary>& s) {
  if (!s) {
    out << "summary: empty (no valid cells)\n";
    return;
  }
  auto opt = [](const std::optional<double>& v) { return v ? fmt("%.6g", *v) : std::string("n/a"); };
  out << "total_slip " << fmt("%.6g", s->total_slip) << "\nmean_cot " << opt(s->mean_cot)
      << "\nmean_giim " << opt(s->mean_giim) << "\nmean_giam " << opt(s->mean_giam) << '\n';
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Proprioceptive terrain mapping: simulate, map, evaluate, compare, sweep", "proprio"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  app.add_option("--config", config_path, "key = value run configuration");
  app.add_option("--seed", seed, "overrides the config seed");
  app.add_option("--out", out_dir, "output directory (default: config 'out')");

  auto* simulate = app.add_subcommand("simulate", "generate telemetry.txt and truth.txt");

  std::string telemetry;
  auto* map = app.add_subcommand("map", "build and export a gridmap from telemetry");
  map->add_option("telemetry", telemetry, "telemetry file")->required();

  std::string map_dir, truth_file;
  auto* eval = app.add_subcommand("eval-elevation", "elevation RMSE of a map against ground truth");
  eval->add_option("map", map_dir, "exported map directory")->required();
  eval->add_option("truth", truth_file, "ground-truth file")->required();

  std::vector<std::string> maps;
  auto* compare = app.add_subcommand("compare", "tabulate summaries of two or more maps");
  compare->add_option("maps", maps, "exported map directories")->required();

  std::string angles_text = "-20,-15,-10,-5,0,5,10,15,20";
  std::size_t repeats = 4;
  auto* sweep = app.add_subcommand("sweep", "slope sweep with degree-4 trend fits");
  sweep->add_option("--angles", angles_text, "comma-separated slope angles in degrees");
  sweep->add_option("--repeats", repeats, "traversals per angle and direction");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (seed) cfg.seed = *seed;
    const fs::path dest = out_dir.empty() ? fs::path(cfg.out) : fs::path(out_dir);

    if (*simulate) {
      const auto r = cmd_simulate(cfg, dest);
      out << "wrote " << r.telemetry.string() << " (" << r.samples << " samples)\n"
          << "wrote " << r.truth.string() << " (" << r.slips << " injected slips)\n";
    } else if (*map) {
      const auto r = cmd_map(telemetry, cfg, dest);
      out << "mapped " << r.stats.samples << " samples into " << dest.string() << '\n'
          << "slip_events " << r.stats.slip_events << '\n';
      print_summary(out, r.grid.summarize());
    } else if (*eval) {
      const auto r = cmd_eval_elevation(map_dir, truth_file);
      out << "rmse_m " << fmt("%.17g", r.rmse) << "\ncells " << r.cells << '\n';
      if (!out_dir.empty()) {
        ensure_dir(dest);
        write_text(dest / "elevation_eval.txt",
                   "rmse_m " + fmt("%.17g", r.rmse) + "\ncells " + std::to_string(r.cells) + '\n');
      }
    } else if (*compare) {
      std::vector<fs::path> paths(maps.begin(), maps.end());
      const auto cols = cmd_compare(paths, out_dir.empty() ? fs::path() : dest);
      out << format_compare_table(cols);
    } else if (*sweep) {
      const auto r = cmd_sweep(parse_angles(angles_text), repeats, cfg, dest);
      out << "angle_deg  static_giim  cot  giim  giam\n";
      for (const auto& row : r.rows) {
        auto opt = [](const std::optional<double>& v) { return v ? fmt("%.6g", *v) : std::string("n/a"); };
        out << fmt("%g", row.angle_deg) << "  " << fmt("%.6g", row.static_margins.giim) << "  "
            << opt(row.cot) << "  " << opt(row.giim) << "  " << opt(row.giam) << '\n';
      }
      out << "cot fit vs model: max deviation " << fmt("%.3g", r.fits.cot_model_deviation) << '\n'
          << "wrote " << (dest / "sweep.csv").string() << ", fits.csv, fit_curves.csv\n";
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitOk;
}

}  // namespace proprio::cli
