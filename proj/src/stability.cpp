#include "proprio/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace proprio {

namespace {

constexpr double kMassSumTolerance = 1e-9;
constexpr double kCoincidentTolerance = 1e-6;  // m
constexpr double kCollinearArea = 1e-12;       // m^2, twice the triangle area
constexpr double kMinNormal = 1e-12;

struct Planar {
  Vec2 q;
  std::size_t source;
};

double cross2(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

/// Orthonormal e1, e2 spanning the plane orthogonal to `up`, with e1 × e2 = up.
std::pair<Vec3, Vec3> plane_basis(const Vec3& up) {
  Vec3 seed = std::abs(up.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  Vec3 e1 = (seed - seed.dot(up) * up).normalized();
  Vec3 e2 = up.cross(e1);
  return {e1, e2};
}

/// Andrew's monotone chain, counterclockwise, collinear points dropped.
std::vector<Planar> convex_hull(std::vector<Planar> pts) {
  std::sort(pts.begin(), pts.end(), [](const Planar& l, const Planar& r) {
    if (l.q.x() != r.q.x()) return l.q.x() < r.q.x();
    if (l.q.y() != r.q.y()) return l.q.y() < r.q.y();
    return l.source < r.source;
  });
  if (pts.size() < 3) return pts;

  std::vector<Planar> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross2(hull[k - 2].q, hull[k - 1].q, p.q) <= kCollinearArea) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross2(hull[k - 2].q, hull[k - 1].q, pts[i].q) <= kCollinearArea) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

}  // namespace

Vec3 gia(const Vec3& gravity, double total_mass, std::span<const double> seg_masses,
         std::span<const Vec3> seg_accels) {
  if (seg_masses.size() != seg_accels.size()) {
    throw ValidationError("gia: segment mass and acceleration counts differ");
  }
  if (!(total_mass > 0.0)) throw ValidationError("gia: total mass must be > 0");
  double mass_sum = 0.0;
  Vec3 weighted = Vec3::Zero();
  for (std::size_t i = 0; i < seg_masses.size(); ++i) {
    mass_sum += seg_masses[i];
    weighted += seg_masses[i] * seg_accels[i];
  }
  if (std::abs(mass_sum - total_mass) > kMassSumTolerance * total_mass) {
    throw ValidationError("gia: segment masses do not sum to the total mass");
  }
  return gravity - weighted / total_mass;
}

PolyhedronResult build_polyhedron(const Vec3& com, std::span<const Vec3> stance_contacts,
                                  const Vec3& gravity) {
  PolyhedronResult result;
  if (stance_contacts.size() < 2) {
    result.issue = SupportIssue::too_few_contacts;
    return result;
  }

  double spread = 0.0;
  for (const auto& p : stance_contacts) {
    spread = std::max(spread, (p - stance_contacts.front()).norm());
  }
  if (spread <= kCoincidentTolerance || !(gravity.norm() > 0.0)) {
    result.issue = SupportIssue::degenerate;
    return result;
  }

  const Vec3 up = -gravity.normalized();
  const auto [e1, e2] = plane_basis(up);
  std::vector<Planar> planar;
  planar.reserve(stance_contacts.size());
  for (std::size_t i = 0; i < stance_contacts.size(); ++i) {
    planar.push_back({Vec2(stance_contacts[i].dot(e1), stance_contacts[i].dot(e2)), i});
  }

  std::vector<Planar> hull = convex_hull(planar);
  if (hull.size() >= 3) {
    // Guard against a hull that is a sliver of numerically collinear points.
    double area2 = 0.0;
    for (std::size_t i = 1; i + 1 < hull.size(); ++i) {
      area2 += cross2(hull[0].q, hull[i].q, hull[i + 1].q);
    }
    if (area2 <= kCollinearArea) hull.clear();
  }
  if (hull.size() < 3) {
    // Collinear support: keep the two extreme points along the contact line.
    auto [lo, hi] = std::minmax_element(planar.begin(), planar.end(),
                                        [](const Planar& l, const Planar& r) {
                                          if (l.q.x() != r.q.x()) return l.q.x() < r.q.x();
                                          return l.q.y() < r.q.y();
                                        });
    if ((hi->q - lo->q).norm() <= kCoincidentTolerance) {
      result.issue = SupportIssue::degenerate;
      return result;
    }
    hull = {*lo, *hi};
  }

  SupportPolyhedron& poly = result.polyhedron;
  poly.apex = com;
  for (const auto& h : hull) poly.contacts.push_back(stance_contacts[h.source]);

  const std::size_t n = poly.contacts.size();
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : poly.contacts) centroid += p;
  centroid /= static_cast<double>(n);

  const std::size_t face_count = n == 2 ? 2 : n;
  for (std::size_t k = 0; k < face_count; ++k) {
    const std::size_t a = k;
    const std::size_t b = (k + 1) % n;
    const Vec3& pa = poly.contacts[a];
    const Vec3& pb = poly.contacts[b];
    Vec3 normal = (pa - com).cross(pb - com);
    const double len = normal.norm();
    if (!(len > kMinNormal)) {
      result.issue = SupportIssue::degenerate;
      result.polyhedron = {};
      return result;
    }
    normal /= len;
    if (n >= 3 && normal.dot(centroid - 0.5 * (pa + pb)) > 0.0) normal = -normal;
    poly.faces.push_back({a, b, normal});
  }
  return result;
}

std::optional<double> giim(const SupportPolyhedron& poly, const Vec3& a_gia) {
  auto m = evaluate_margins(poly, a_gia);
  if (!m) return std::nullopt;
  return m->giim;
}

std::optional<double> giam(const SupportPolyhedron& poly, const Vec3& a_gia) {
  if (poly.faces.empty()) return std::nullopt;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& f : poly.faces) best = std::min(best, -f.normal.dot(a_gia));
  return best;
}

std::optional<StabilityMargins> evaluate_margins(const SupportPolyhedron& poly, const Vec3& a_gia) {
  if (poly.faces.empty() || !(a_gia.norm() > 0.0) || !a_gia.allFinite()) return std::nullopt;

  StabilityMargins m;
  m.contact_count = poly.contacts.size();
  m.giim = std::numeric_limits<double>::infinity();
  m.giam = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poly.faces.size(); ++i) {
    const Vec3& n = poly.faces[i].normal;
    // atan2 keeps full precision where acos of the normalized dot would not.
    const double angle = std::atan2(n.cross(a_gia).norm(), n.dot(a_gia)) - std::numbers::pi / 2;
    if (angle < m.giim) {
      m.giim = angle;
      m.giim_face = i;
    }
    const double accel = -n.dot(a_gia);
    if (accel < m.giam) {
      m.giam = accel;
      m.giam_face = i;
    }
  }
  return m;
}

}  // namespace proprio
