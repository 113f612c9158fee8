#include "proprio/pipeline.hpp"

#include "proprio/elevation.hpp"
#include "proprio/stability.hpp"

namespace proprio {

MappingPipeline::MappingPipeline(const StreamHeader& header, const GridSpec& grid,
                                 const PipelineOptions& options)
    : header_(header),
      validator_(header),
      detector_(options.slip),
      segmenter_(header.robot_mass, header.gravity.norm(), options.cot_d_min),
      grid_(grid) {}

void MappingPipeline::push(const ProprioSample& s) {
  if (finished_) throw std::logic_error("MappingPipeline::push after finish");
  validator_.check(s);
  ++stats_.samples;

  const SlipVerdict verdict = detector_.detect(s);

  PerFoot<Vec2> foot_xy;
  for (std::size_t f = 0; f < kFeet; ++f) foot_xy[f] = sample_foot_world(s, f).head<2>();
  grid_.count_slip(verdict, s.contact, foot_xy);
  for (std::size_t f = 0; f < kFeet; ++f) {
    if (s.contact[f] && verdict.feet[f].run_start) ++stats_.slip_events;
  }

  for (const auto& obs : observe(s, verdict)) {
    grid_.ingest(ElevationSample{obs.xy, obs.h});
    ++stats_.elevation_obs;
  }

  // Body metrics are keyed by the CoM cell; out-of-bounds positions share key -1.
  const Vec2 com_xy = s.com_world.head<2>();
  const auto cell = index(grid_.spec(), com_xy.x(), com_xy.y());
  const CotSegmenter::CellKey key =
      cell ? static_cast<CotSegmenter::CellKey>(cell->i * grid_.spec().n_x + cell->j) : -1;
  const double power = instantaneous_power(s.joint_torque, s.joint_velocity);
  if (auto c = segmenter_.push(s.t, power, s.base_pose.translation.head<2>(), com_xy, key)) {
    grid_.ingest(CotSample{c->xy, c->cot});
    ++stats_.cot_obs;
  }

  std::vector<Vec3> contacts;
  bool slipping = false;
  for (std::size_t f = 0; f < kFeet; ++f) {
    if (!s.contact[f]) continue;
    slipping = slipping || verdict.feet[f].beta;
    contacts.push_back(sample_foot_world(s, f));
  }
  if (slipping) {
    ++stats_.margins_guarded;
    return;
  }
  const PolyhedronResult poly = build_polyhedron(s.com_world, contacts, header_.gravity);
  if (!poly) {
    ++stats_.margins_undefined;
    return;
  }
  const Vec3 a = gia(header_.gravity, header_.robot_mass, s.segment_mass, s.segment_accel);
  const auto m = evaluate_margins(poly.polyhedron, a);
  if (!m) {
    ++stats_.margins_undefined;
    return;
  }
  grid_.ingest(MarginSample{com_xy, m->giim, m->giam});
  ++stats_.margin_obs;
}

void MappingPipeline::finish() {
  if (finished_) return;
  finished_ = true;
  if (auto c = segmenter_.flush()) {
    grid_.ingest(CotSample{c->xy, c->cot});
    ++stats_.cot_obs;
  }
}

Vec2 auto_origin(std::span<const ProprioSample> samples) {
  if (samples.empty()) throw ValidationError("cannot place the grid: stream has no samples");
  return samples.front().com_world.head<2>();
}

TerrainGrid build_map(const StreamHeader& header, std::span<const ProprioSample> samples,
                      const GridSpec& grid, const PipelineOptions& options, PipelineStats* stats) {
  MappingPipeline pipeline(header, grid, options);
  for (const auto& s : samples) pipeline.push(s);
  pipeline.finish();
  if (stats) *stats = pipeline.stats();
  return pipeline.grid();
}

}  // namespace proprio
