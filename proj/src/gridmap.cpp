#include "proprio/gridmap.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "proprio/telemetry.hpp"

namespace proprio {

namespace {

constexpr std::array<std::string_view, kLayerCount> kLayerNames = {"elevation", "slip_count", "cot",
                                                                   "giim", "giam"};

// Recorded in every export so a map carries the choices it was built under.
const std::vector<std::string> kDecisionRecord = {
    "grid is fixed-size and centered on the initial CoM; out-of-bounds data is counted and dropped",
    "cells with no visits are invalid and exported as nan",
    "layers use an equal-weight running mean; slip_count is an event counter",
    "a slip event is a maximal run of flagged samples on one foot, counted at its first sample",
    "elevation skips feet flagged as slipping; stability updates are suppressed while any stance "
    "foot is flagged",
    "CoT is segmented by CoM cell crossings; the crossing interval is charged to the departed cell",
    "support faces are (CoM, a, b) triangles over adjacent hull pairs; two contacts give two "
    "opposed faces about the contact line",
    "smoothing is applied only to the exported copies; raw layers are the source of truth",
};

std::ofstream open_out(const std::filesystem::path& p, bool binary = false) {
  std::ofstream out(p, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!out) throw IoError("cannot open " + p.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.string());
  return in;
}

void write_pgm(const std::filesystem::path& p, const GridSpec& spec,
               const std::vector<std::uint8_t>& pixels) {
  auto out = open_out(p, true);
  out << "P5\n" << spec.n_x << ' ' << spec.n_y << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
  if (!out) throw IoError("write failed for " + p.string());
}

void write_layer_files(const Layer& layer, const std::filesystem::path& dir,
                       const std::string& stem) {
  {
    auto out = open_out(dir / (stem + ".txt"));
    write_matrix(out, layer.spec(), layer.values(), layer.counts());
    if (!out) throw IoError("write failed for " + stem);
  }
  write_pgm(dir / (stem + ".pgm"), layer.spec(), grayscale(layer));
}

}  // namespace

void GridSpec::validate() const {
  if (n_x < 1 || n_y < 1) throw ValidationError("grid: n_x and n_y must be >= 1");
  if (!(resolution > 0.0) || !std::isfinite(resolution)) {
    throw ValidationError("grid: resolution must be > 0");
  }
  if (!origin.allFinite()) throw ValidationError("grid: origin must be finite");
}

bool GridSpec::operator==(const GridSpec& o) const {
  return n_x == o.n_x && n_y == o.n_y && resolution == o.resolution && origin == o.origin;
}

std::optional<CellIndex> index(const GridSpec& spec, double x, double y) {
  const double u = (y - spec.origin.y()) / spec.resolution + static_cast<double>(spec.n_y) / 2.0;
  const double w = (x - spec.origin.x()) / spec.resolution + static_cast<double>(spec.n_x) / 2.0;
  if (!std::isfinite(u) || !std::isfinite(w)) return std::nullopt;
  const double i = std::floor(u);
  const double j = std::floor(w);
  if (i < 0.0 || j < 0.0 || i >= static_cast<double>(spec.n_y) ||
      j >= static_cast<double>(spec.n_x)) {
    return std::nullopt;
  }
  return CellIndex{static_cast<std::size_t>(i), static_cast<std::size_t>(j)};
}

Vec2 cell_center(const GridSpec& spec, CellIndex c) {
  const double x = spec.origin.x() +
                   (static_cast<double>(c.j) + 0.5 - static_cast<double>(spec.n_x) / 2.0) *
                       spec.resolution;
  const double y = spec.origin.y() +
                   (static_cast<double>(c.i) + 0.5 - static_cast<double>(spec.n_y) / 2.0) *
                       spec.resolution;
  return {x, y};
}

std::string_view layer_name(LayerId id) { return kLayerNames[static_cast<std::size_t>(id)]; }

std::optional<LayerId> layer_from_name(std::string_view name) {
  for (auto id : kAllLayers) {
    if (layer_name(id) == name) return id;
  }
  return std::nullopt;
}

// ─── Layer ──────────────────────────────────────────────────────────────────

Layer::Layer(const GridSpec& spec)
    : spec_(spec), values_(spec.cell_count(), 0.0), counts_(spec.cell_count(), 0) {}

void Layer::add_mean(CellIndex c, double observation) {
  const auto k = flat(c);
  const auto next = update_mean(values_[k], counts_[k], observation);
  values_[k] = next.value;
  counts_[k] = next.count;
}

void Layer::add_count(CellIndex c, double increment) {
  const auto k = flat(c);
  values_[k] += increment;
  ++counts_[k];
}

void Layer::set(CellIndex c, double value, std::uint64_t visits) {
  const auto k = flat(c);
  values_[k] = visits > 0 ? value : 0.0;
  counts_[k] = visits;
}

std::size_t Layer::valid_cells() const {
  return static_cast<std::size_t>(
      std::count_if(counts_.begin(), counts_.end(), [](std::uint64_t n) { return n > 0; }));
}

bool Layer::operator==(const Layer& o) const {
  return spec_ == o.spec_ && values_ == o.values_ && counts_ == o.counts_;
}

Layer smooth(const Layer& layer, double sigma) {
  if (!(sigma >= 0.0)) throw ValidationError("smooth: sigma must be >= 0");
  if (sigma == 0.0) return layer;

  const GridSpec& spec = layer.spec();
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  const std::ptrdiff_t side = 2 * radius + 1;
  std::vector<double> kernel(static_cast<std::size_t>(side * side));
  for (std::ptrdiff_t du = -radius; du <= radius; ++du) {
    for (std::ptrdiff_t dv = -radius; dv <= radius; ++dv) {
      const double r2 = static_cast<double>(du * du + dv * dv);
      kernel[static_cast<std::size_t>((du + radius) * side + dv + radius)] =
          std::exp(-r2 / (2.0 * sigma * sigma));
    }
  }

  const auto ny = static_cast<std::ptrdiff_t>(spec.n_y);
  const auto nx = static_cast<std::ptrdiff_t>(spec.n_x);
  std::vector<double> out(spec.cell_count(), 0.0);

  for (std::ptrdiff_t i = 0; i < ny; ++i) {
    for (std::ptrdiff_t j = 0; j < nx; ++j) {
      const CellIndex src{static_cast<std::size_t>(i), static_cast<std::size_t>(j)};
      if (!layer.valid(src)) continue;
      const double v = layer.value(src);

      const std::ptrdiff_t i0 = std::max<std::ptrdiff_t>(0, i - radius);
      const std::ptrdiff_t i1 = std::min<std::ptrdiff_t>(ny - 1, i + radius);
      const std::ptrdiff_t j0 = std::max<std::ptrdiff_t>(0, j - radius);
      const std::ptrdiff_t j1 = std::min<std::ptrdiff_t>(nx - 1, j + radius);

      double norm = 0.0;
      for (std::ptrdiff_t u = i0; u <= i1; ++u) {
        for (std::ptrdiff_t w = j0; w <= j1; ++w) {
          if (!layer.valid({static_cast<std::size_t>(u), static_cast<std::size_t>(w)})) continue;
          norm += kernel[static_cast<std::size_t>((u - i + radius) * side + (w - j + radius))];
        }
      }
      for (std::ptrdiff_t u = i0; u <= i1; ++u) {
        for (std::ptrdiff_t w = j0; w <= j1; ++w) {
          if (!layer.valid({static_cast<std::size_t>(u), static_cast<std::size_t>(w)})) continue;
          const double k =
              kernel[static_cast<std::size_t>((u - i + radius) * side + (w - j + radius))];
          out[static_cast<std::size_t>(u * nx + w)] += v * k / norm;
        }
      }
    }
  }

  Layer result(spec);
  for (std::size_t i = 0; i < spec.n_y; ++i) {
    for (std::size_t j = 0; j < spec.n_x; ++j) {
      const CellIndex c{i, j};
      result.set(c, out[i * spec.n_x + j], layer.visits(c));
    }
  }
  return result;
}

// ─── TerrainGrid ────────────────────────────────────────────────────────────

TerrainGrid::TerrainGrid(const GridSpec& spec) : spec_(spec) {
  spec_.validate();
  for (auto& l : layers_) l = Layer(spec_);
}

void TerrainGrid::ingest(const GridObservation& obs) {
  std::visit(
      [this](const auto& o) {
        using T = std::decay_t<decltype(o)>;
        const auto cell = index(spec_, o.xy.x(), o.xy.y());
        if constexpr (std::is_same_v<T, ElevationSample>) {
          if (!cell) {
            ++dropped_.elevation;
            return;
          }
          layer(LayerId::elevation).add_mean(*cell, o.h);
        } else if constexpr (std::is_same_v<T, ContactSample>) {
          if (!cell) {
            ++dropped_.contacts;
            if (o.slip_event) ++dropped_.slip_events;
            return;
          }
          layer(LayerId::slip_count).add_count(*cell, o.slip_event ? 1.0 : 0.0);
        } else if constexpr (std::is_same_v<T, CotSample>) {
          if (!cell) {
            ++dropped_.cot;
            return;
          }
          layer(LayerId::cot).add_mean(*cell, o.cot);
        } else {
          if (!cell) {
            ++dropped_.margins;
            return;
          }
          layer(LayerId::giim).add_mean(*cell, o.giim);
          layer(LayerId::giam).add_mean(*cell, o.giam);
        }
      },
      obs);
}

void TerrainGrid::ingest(std::span<const GridObservation> observations) {
  for (const auto& o : observations) ingest(o);
}

void TerrainGrid::count_slip(const SlipVerdict& verdict, const PerFoot<bool>& contact,
                             const PerFoot<Vec2>& foot_xy) {
  for (std::size_t f = 0; f < kFeet; ++f) {
    if (!contact[f]) continue;
    const auto& v = verdict.feet[f];
    ingest(ContactSample{foot_xy[f], v.beta && v.run_start});
  }
}

std::optional<GridSummary> TerrainGrid::summarize() const {
  auto mean_of = [](const Layer& l) -> std::optional<double> {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < l.values().size(); ++k) {
      if (l.counts()[k] == 0) continue;
      sum += l.values()[k];
      ++n;
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  };

  bool any_valid = false;
  for (const auto& l : layers_) any_valid = any_valid || l.valid_cells() > 0;
  if (!any_valid) return std::nullopt;

  GridSummary s;
  const Layer& slips = layer(LayerId::slip_count);
  for (std::size_t k = 0; k < slips.values().size(); ++k) {
    if (slips.counts()[k] > 0) s.total_slip += slips.values()[k];
  }
  s.mean_cot = mean_of(layer(LayerId::cot));
  s.mean_giim = mean_of(layer(LayerId::giim));
  s.mean_giam = mean_of(layer(LayerId::giam));
  return s;
}

bool TerrainGrid::operator==(const TerrainGrid& o) const {
  return spec_ == o.spec_ && layers_ == o.layers_;
}

// ─── Export / import ────────────────────────────────────────────────────────

void write_matrix(std::ostream& out, const GridSpec& spec, std::span<const double> values,
                  std::span<const std::uint64_t> counts) {
  for (std::size_t i = 0; i < spec.n_y; ++i) {
    for (std::size_t j = 0; j < spec.n_x; ++j) {
      const std::size_t k = i * spec.n_x + j;
      if (j > 0) out << ' ';
      const bool invalid = (!counts.empty() && counts[k] == 0) || std::isnan(values[k]);
      out << (invalid ? std::string("nan") : format_number(values[k]));
    }
    out << '\n';
  }
}

std::vector<double> read_matrix(std::istream& in, const GridSpec& spec, const std::string& what) {
  std::vector<double> values;
  values.reserve(spec.cell_count());
  std::string tok;
  while (values.size() < spec.cell_count() && in >> tok) {
    if (tok == "nan") {
      values.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
      throw ValidationError(what + ": malformed value '" + tok + "'");
    }
    values.push_back(v);
  }
  if (values.size() != spec.cell_count()) {
    throw ValidationError(what + ": expected " + std::to_string(spec.cell_count()) + " values");
  }
  return values;
}

std::vector<std::uint8_t> grayscale(const Layer& layer) {
  const auto values = layer.values();
  const auto counts = layer.counts();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (counts[k] == 0) continue;
    lo = std::min(lo, values[k]);
    hi = std::max(hi, values[k]);
  }
  std::vector<std::uint8_t> pixels(values.size(), 0);
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (counts[k] == 0) continue;
    if (!(hi > lo)) {
      pixels[k] = 128;
      continue;
    }
    const double frac = (values[k] - lo) / (hi - lo);
    pixels[k] = static_cast<std::uint8_t>(1 + std::lround(254.0 * frac));
  }
  return pixels;
}

void export_grid(const TerrainGrid& grid, const std::filesystem::path& dir,
                 const ExportOptions& options) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  nlohmann::json layers = nlohmann::json::array();
  for (auto id : kAllLayers) {
    const std::string stem(layer_name(id));
    const Layer& l = grid.layer(id);
    write_layer_files(l, dir, stem);
    {
      auto out = open_out(dir / (stem + ".count.txt"));
      for (std::size_t i = 0; i < l.spec().n_y; ++i) {
        for (std::size_t j = 0; j < l.spec().n_x; ++j) {
          if (j > 0) out << ' ';
          out << l.visits({i, j});
        }
        out << '\n';
      }
    }
    if (options.smoothing_sigma > 0.0) {
      write_layer_files(smooth(l, options.smoothing_sigma), dir, stem + ".smoothed");
    }
    layers.push_back({{"name", stem}, {"valid_cells", l.valid_cells()}});
  }

  const GridSpec& spec = grid.spec();
  nlohmann::json meta;
  meta["format"] = "proprio-gridmap/1";
  meta["grid"] = {{"n_x", spec.n_x},
                  {"n_y", spec.n_y},
                  {"resolution", spec.resolution},
                  {"origin_x", spec.origin.x()},
                  {"origin_y", spec.origin.y()}};
  meta["layers"] = layers;
  meta["smoothing_sigma"] = options.smoothing_sigma;
  meta["config"] = options.config;
  meta["config_fingerprint"] = options.config_fingerprint;
  meta["decisions"] = kDecisionRecord;
  const auto& d = grid.dropped();
  meta["dropped"] = {{"elevation", d.elevation},
                     {"contacts", d.contacts},
                     {"slip_events", d.slip_events},
                     {"cot", d.cot},
                     {"margins", d.margins}};

  auto out = open_out(dir / "metadata.json");
  out << meta.dump(2) << '\n';
  if (!out) throw IoError("write failed for metadata.json");
}

TerrainGrid import_grid(const std::filesystem::path& dir) {
  auto meta_in = open_in(dir / "metadata.json");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(meta_in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("metadata.json: " + std::string(e.what()));
  }

  GridSpec spec;
  try {
    const auto& g = meta.at("grid");
    spec.n_x = g.at("n_x").get<std::size_t>();
    spec.n_y = g.at("n_y").get<std::size_t>();
    spec.resolution = g.at("resolution").get<double>();
    spec.origin = Vec2(g.at("origin_x").get<double>(), g.at("origin_y").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("metadata.json: bad grid record: " + std::string(e.what()));
  }

  TerrainGrid grid(spec);
  for (auto id : kAllLayers) {
    const std::string stem(layer_name(id));
    auto vin = open_in(dir / (stem + ".txt"));
    auto values = read_matrix(vin, spec, stem + ".txt");
    auto cin = open_in(dir / (stem + ".count.txt"));
    auto counts = read_matrix(cin, spec, stem + ".count.txt");
    Layer& l = grid.layer(id);
    for (std::size_t i = 0; i < spec.n_y; ++i) {
      for (std::size_t j = 0; j < spec.n_x; ++j) {
        const std::size_t k = i * spec.n_x + j;
        const auto visits = static_cast<std::uint64_t>(counts[k]);
        if ((visits > 0) == std::isnan(values[k])) {
          throw ValidationError(stem + ": validity mask disagrees with visit counts");
        }
        l.set({i, j}, values[k], visits);
      }
    }
  }
  return grid;
}

}  // namespace proprio
