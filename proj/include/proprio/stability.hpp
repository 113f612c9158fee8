#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "proprio/types.hpp"

namespace proprio {

/// Gravito-inertial acceleration g − (1/m) Σ m_i a_i.
/// Throws ValidationError when lengths differ or the masses do not sum to
/// total_mass (1e-9 relative).
Vec3 gia(const Vec3& gravity, double total_mass, std::span<const double> seg_masses,
         std::span<const Vec3> seg_accels);

/// One side of the stability polyhedron: the triangle (CoM, a, b) over an
/// adjacent pair of support-hull vertices.
struct PolyhedronFace {
  std::size_t a = 0;  // indices into SupportPolyhedron::contacts
  std::size_t b = 0;
  Vec3 normal = Vec3::Zero();  // unit, outward
};

struct SupportPolyhedron {
  Vec3 apex = Vec3::Zero();   // CoM
  std::vector<Vec3> contacts;  // hull vertices, counterclockwise seen against gravity
  std::vector<PolyhedronFace> faces;
};

enum class SupportIssue {
  none,
  too_few_contacts,  // fewer than two stance feet
  degenerate,        // coincident contacts or a face with no defined normal
};

struct PolyhedronResult {
  SupportIssue issue = SupportIssue::none;
  SupportPolyhedron polyhedron;

  explicit operator bool() const { return issue == SupportIssue::none; }
};

/// Projects the contacts along gravity, takes their convex hull and builds one
/// outward face per adjacent hull pair. Two contacts (or a collinear set,
/// reduced to its extreme points) yield two faces with opposite normals about
/// the contact line.
PolyhedronResult build_polyhedron(const Vec3& com, std::span<const Vec3> stance_contacts,
                                  const Vec3& gravity);

struct StabilityMargins {
  double giim = 0.0;  // rad
  double giam = 0.0;  // m/s^2
  std::size_t contact_count = 0;
  std::size_t giim_face = 0;  // index of the binding face for each margin
  std::size_t giam_face = 0;
};

/// min over faces of angle(n, a_GIA) − π/2. nullopt for a zero GIA or no faces.
std::optional<double> giim(const SupportPolyhedron& poly, const Vec3& a_gia);

/// min over faces of −n·a_GIA / ‖n‖. nullopt when there are no faces.
std::optional<double> giam(const SupportPolyhedron& poly, const Vec3& a_gia);

/// Both margins plus their binding faces; nullopt when either is undefined.
std::optional<StabilityMargins> evaluate_margins(const SupportPolyhedron& poly, const Vec3& a_gia);

}  // namespace proprio
