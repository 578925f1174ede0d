#pragma once

// Planar gripper geometry.  Palm frame: palm centre at the origin, fingers
// pointing along +y when open, left finger at negative x.  Links are capsules.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tendongrip/mechanism.hpp"

namespace tendongrip {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

inline constexpr double kContactTolerance = 1e-3;  // mm

struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Vec2 apply(const Vec2& p) const {
    const double c = std::cos(theta), s = std::sin(theta);
    return {c * p.x() - s * p.y() + x, s * p.x() + c * p.y() + y};
  }
  Vec2 rotate(const Vec2& v) const {
    const double c = std::cos(theta), s = std::sin(theta);
    return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
  }
  Pose2 inverse() const {
    const double c = std::cos(theta), s = std::sin(theta);
    return {-(c * x + s * y), s * x - c * y, -theta};
  }
  /// this ∘ other: apply `other` first.
  Pose2 compose(const Pose2& other) const {
    const Vec2 t = apply(Vec2(other.x, other.y));
    return {t.x(), t.y(), theta + other.theta};
  }
  Vec2 position() const { return {x, y}; }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(theta); }
};

struct Circle {
  double radius = 0.0;
};

/// Counter-clockwise vertices in the shape's own frame.
struct ConvexPolygon {
  std::vector<Vec2> vertices;
};

using Shape2D = std::variant<Circle, ConvexPolygon>;

inline double polygon_signed_area(std::span<const Vec2> v) {
  double a = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec2& p = v[i];
    const Vec2& q = v[(i + 1) % v.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

inline void validate_shape(const Shape2D& shape) {
  if (const auto* c = std::get_if<Circle>(&shape)) {
    if (!(c->radius > 0.0)) throw std::invalid_argument("circle radius must be positive");
    return;
  }
  const auto& v = std::get<ConvexPolygon>(shape).vertices;
  if (v.size() < 3) throw std::invalid_argument("polygon needs at least 3 vertices");
  if (!(polygon_signed_area(v) > 1e-9)) throw std::invalid_argument("polygon must be CCW with positive area");
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec2 e1 = v[(i + 1) % v.size()] - v[i];
    const Vec2 e2 = v[(i + 2) % v.size()] - v[(i + 1) % v.size()];
    if (e1.x() * e2.y() - e1.y() * e2.x() < -1e-12) throw std::invalid_argument("polygon is not convex");
  }
}

/// Centroid of the shape in its own frame.
inline Vec2 shape_centroid(const Shape2D& shape) {
  if (std::holds_alternative<Circle>(shape)) return Vec2::Zero();
  const auto& v = std::get<ConvexPolygon>(shape).vertices;
  double a = 0.0;
  Vec2 c = Vec2::Zero();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec2& p = v[i];
    const Vec2& q = v[(i + 1) % v.size()];
    const double w = p.x() * q.y() - q.x() * p.y();
    a += w;
    c += w * (p + q);
  }
  return c / (3.0 * a);
}

/// Largest distance from the shape's centroid to its boundary.
inline double shape_max_radius(const Shape2D& shape) {
  if (const auto* c = std::get_if<Circle>(&shape)) return c->radius;
  const Vec2 centroid = shape_centroid(shape);
  double r = 0.0;
  for (const Vec2& p : std::get<ConvexPolygon>(shape).vertices) r = std::max(r, (p - centroid).norm());
  return r;
}

enum class MassClass { Light, Fixed };

inline std::string_view to_string(MassClass m) { return m == MassClass::Light ? "Light" : "Fixed"; }

inline MassClass mass_class_from_string(std::string_view s) {
  if (s == "Light") return MassClass::Light;
  if (s == "Fixed") return MassClass::Fixed;
  throw std::invalid_argument("unknown mass class: " + std::string(s));
}

struct ObjectInstance {
  Shape2D shape = Circle{25.0};
  Pose2 pose;
  double mu = 0.5;
  MassClass mass_class = MassClass::Fixed;

  Vec2 centroid() const { return pose.apply(shape_centroid(shape)); }
};

enum class LinkId { Knuckle = 0, Proximal = 1, Distal = 2, Palm = 3 };

inline std::string_view to_string(LinkId id) {
  switch (id) {
    case LinkId::Knuckle: return "knuckle";
    case LinkId::Proximal: return "proximal";
    case LinkId::Distal: return "distal";
    case LinkId::Palm: return "palm";
  }
  return "?";
}

inline LinkId link_id_from_string(std::string_view s) {
  if (s == "knuckle") return LinkId::Knuckle;
  if (s == "proximal") return LinkId::Proximal;
  if (s == "distal") return LinkId::Distal;
  if (s == "palm") return LinkId::Palm;
  throw std::invalid_argument("unknown link id: " + std::string(s));
}

inline constexpr int kPalmFinger = -1;

/// Contact on the object surface.  The normal points from the link into the
/// object; z is zero for every planar contact.
struct ContactPoint {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitY();
  int finger = 0;  // 0 left, 1 right, kPalmFinger for the palm
  LinkId link = LinkId::Proximal;
  double penetration_depth = 0.0;

  bool moving_link() const { return link == LinkId::Proximal || link == LinkId::Distal; }
};

struct Capsule {
  Vec2 a = Vec2::Zero();
  Vec2 b = Vec2::Zero();
  double radius = 0.0;
};

struct GripperDesign {
  double knuckle_len = 30.0;
  double proximal_len = 60.0;
  double distal_len = 35.0;
  double link_radius = 6.0;
  double palm_width = 80.0;
  std::array<double, 2> q_max{1.5, 1.5};
  TendonNetwork net = TendonNetwork::movable_pulley({13.5, 10.0});
  std::array<double, 2> k_spiral{5.0, 5.0};  // N*mm/rad

  double reach() const { return knuckle_len + proximal_len + distal_len; }

  void validate() const {
    for (double len : {knuckle_len, proximal_len, distal_len})
      if (!(len > 0.0)) throw std::invalid_argument("link lengths must be positive");
    if (!(link_radius > 0.0)) throw std::invalid_argument("link radius must be positive");
    if (!(palm_width > 0.0)) throw std::invalid_argument("palm width must be positive");
    for (double q : q_max)
      if (!(q > 0.0 && q < M_PI)) throw std::invalid_argument("joint limits must lie in (0, pi)");
    if (net.joint_count() != 2) throw std::invalid_argument("each finger has two actuated joints");
    net.validate();
    for (double k : k_spiral)
      if (!(k >= 0.0)) throw std::invalid_argument("spiral spring stiffness must be non-negative");
  }
};

inline std::vector<double> spring_torques(const GripperDesign& design, std::span<const double> q) {
  return spring_torques(std::span<const double>(design.k_spiral), q);
}

/// Link index in the forward-kinematics array: finger * 3 + link.
inline constexpr std::size_t capsule_index(int finger, LinkId link) {
  return static_cast<std::size_t>(finger) * 3 + static_cast<std::size_t>(link);
}

using GripperCapsules = std::array<Capsule, 6>;

/// Joint angles ordered [left q1, left q2, right q1, right q2].  The left
/// finger is computed as the exact mirror of the right one.
inline GripperCapsules forward_kinematics(const GripperDesign& design, std::span<const double> q) {
  if (q.size() != 4) throw std::invalid_argument("forward kinematics expects 4 joint angles");
  for (std::size_t i = 0; i < 4; ++i) {
    const double limit = design.q_max[i % 2];
    if (!(q[i] >= 0.0 && q[i] <= limit)) throw std::out_of_range("joint angle outside [0, q_max]");
  }
  GripperCapsules out;
  const double half = 0.5 * design.palm_width;
  for (int finger = 0; finger < 2; ++finger) {
    const double s = finger == 0 ? -1.0 : 1.0;
    const double t1 = q[finger * 2];
    const double t2 = t1 + q[finger * 2 + 1];
    // Right-finger coordinates; the mirror only flips the sign of x.
    const double j1x = half, j1y = design.knuckle_len;
    const double j2x = j1x - design.proximal_len * std::sin(t1);
    const double j2y = j1y + design.proximal_len * std::cos(t1);
    const double tx = j2x - design.distal_len * std::sin(t2);
    const double ty = j2y + design.distal_len * std::cos(t2);
    const double r = design.link_radius;
    out[capsule_index(finger, LinkId::Knuckle)] = {{s * half, 0.0}, {s * j1x, j1y}, r};
    out[capsule_index(finger, LinkId::Proximal)] = {{s * j1x, j1y}, {s * j2x, j2y}, r};
    out[capsule_index(finger, LinkId::Distal)] = {{s * j2x, j2y}, {s * tx, ty}, r};
  }
  return out;
}

inline Capsule palm_capsule(const GripperDesign& design) {
  const double half = 0.5 * design.palm_width;
  return {{-half, 0.0}, {half, 0.0}, design.link_radius};
}

namespace detail {

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

inline Vec2 closest_on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 <= 0.0) return a;
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return a + t * ab;
}

struct SegmentPair {
  Vec2 on_first;
  Vec2 on_second;
  double distance;
};

// Closest points between segments p1-q1 and p2-q2.
inline SegmentPair closest_segments(const Vec2& p1, const Vec2& q1, const Vec2& p2, const Vec2& q2) {
  const Vec2 d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
  const double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
  double s = 0.0, t = 0.0;
  constexpr double eps = 1e-300;
  if (a <= eps && e <= eps) {
    // both degenerate
  } else if (a <= eps) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= eps) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      s = denom > 0.0 ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  const Vec2 c1 = p1 + s * d1, c2 = p2 + t * d2;
  return {c1, c2, (c1 - c2).norm()};
}

inline bool point_in_convex(std::span<const Vec2> poly, const Vec2& p) {
  for (std::size_t i = 0; i < poly.size(); ++i)
    if (cross2(poly[(i + 1) % poly.size()] - poly[i], p - poly[i]) < 0.0) return false;
  return true;
}

inline Vec2 segment_normal(const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double len = d.norm();
  if (len <= 0.0) return Vec2::UnitY();
  return Vec2(-d.y(), d.x()) / len;
}

// Signed separation between segment a-b and a convex polygon: the object-side
// closest point, the unit direction from the segment towards the object, and
// the core-to-boundary gap (negative when the segment enters the polygon).
struct Separation {
  Vec2 object_point;
  Vec2 direction;
  double gap;
};

inline Separation separate_polygon(const Vec2& a, const Vec2& b, std::span<const Vec2> poly) {
  const std::size_t n = poly.size();
  SegmentPair best{a, poly[0], std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < n; ++i) {
    const SegmentPair sp = closest_segments(a, b, poly[i], poly[(i + 1) % n]);
    if (sp.distance < best.distance) best = sp;
  }
  const bool inside = point_in_convex(poly, a) || point_in_convex(poly, b);
  if (!inside && best.distance > 1e-12) {
    return {best.on_second, (best.on_second - best.on_first) / best.distance, best.distance};
  }

  // Segment core touches or enters the polygon: minimum-overlap axis.
  std::vector<Vec2> axes;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e = poly[(i + 1) % n] - poly[i];
    axes.emplace_back(Vec2(e.y(), -e.x()).normalized());
  }
  if ((b - a).squaredNorm() > 0.0) axes.push_back(segment_normal(a, b));
  Vec2 poly_centre = Vec2::Zero();
  for (const Vec2& p : poly) poly_centre += p;
  poly_centre /= static_cast<double>(n);
  const Vec2 seg_centre = 0.5 * (a + b);

  double best_overlap = std::numeric_limits<double>::infinity();
  Vec2 best_dir = Vec2::UnitY();
  std::size_t best_axis = 0;
  for (std::size_t k = 0; k < axes.size(); ++k) {
    Vec2 axis = axes[k];
    if (axis.dot(poly_centre - seg_centre) < 0.0) axis = -axis;
    const double seg_max = std::max(a.dot(axis), b.dot(axis));
    double poly_min = std::numeric_limits<double>::infinity();
    for (const Vec2& p : poly) poly_min = std::min(poly_min, p.dot(axis));
    const double overlap = seg_max - poly_min;
    if (overlap < best_overlap) {
      best_overlap = overlap;
      best_dir = axis;
      best_axis = k;
    }
  }
  if (best_axis < n) {
    // Edge axis: the contact lies on that edge, under the deepest part of the segment.
    const double da = a.dot(best_dir), db = b.dot(best_dir);
    const Vec2 deep = std::abs(da - db) <= 1e-9 * (1.0 + std::abs(da)) ? seg_centre : (da > db ? a : b);
    const Vec2 on_edge = closest_on_segment(poly[best_axis], poly[(best_axis + 1) % n], deep);
    return {on_edge, best_dir, -best_overlap};
  }
  Vec2 support = poly[0];
  for (const Vec2& p : poly)
    if (p.dot(best_dir) < support.dot(best_dir)) support = p;
  return {support, best_dir, -best_overlap};
}

inline Separation separate_circle(const Vec2& a, const Vec2& b, const Vec2& centre, double radius) {
  const Vec2 p = closest_on_segment(a, b, centre);
  const Vec2 v = centre - p;
  const double d = v.norm();
  const Vec2 n = d > 1e-12 ? Vec2(v / d) : segment_normal(a, b);
  return {centre - radius * n, n, d - radius};
}

inline std::vector<Vec2> world_vertices(const ConvexPolygon& poly, const Pose2& pose) {
  std::vector<Vec2> out;
  out.reserve(poly.vertices.size());
  for (const Vec2& v : poly.vertices) out.push_back(pose.apply(v));
  return out;
}

inline Separation separate(const Capsule& cap, const ObjectInstance& obj) {
  if (const auto* c = std::get_if<Circle>(&obj.shape))
    return separate_circle(cap.a, cap.b, obj.pose.position(), c->radius);
  const auto verts = world_vertices(std::get<ConvexPolygon>(obj.shape), obj.pose);
  return separate_polygon(cap.a, cap.b, verts);
}

}  // namespace detail

/// Surface gap between a capsule and an object (negative when they overlap).
inline double capsule_gap(const Capsule& cap, const ObjectInstance& obj) {
  return detail::separate(cap, obj).gap - cap.radius;
}

/// Deepest contact between one capsule and the object, if they touch within
/// the contact tolerance.  finger/link are left for the caller to fill in.
inline std::optional<ContactPoint> contact_query(const Capsule& cap, const ObjectInstance& obj,
                                                 double tolerance = kContactTolerance) {
  const detail::Separation sep = detail::separate(cap, obj);
  if (sep.gap > cap.radius + tolerance) return std::nullopt;
  ContactPoint c;
  c.point = Vec3(sep.object_point.x(), sep.object_point.y(), 0.0);
  c.normal = Vec3(sep.direction.x(), sep.direction.y(), 0.0).normalized();
  c.penetration_depth = std::max(0.0, cap.radius - sep.gap);
  return c;
}

inline bool capsules_overlap(const Capsule& c1, const Capsule& c2) {
  return detail::closest_segments(c1.a, c1.b, c2.a, c2.b).distance < c1.radius + c2.radius;
}

inline bool finger_self_collision(const GripperCapsules& caps) {
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (capsules_overlap(caps[capsule_index(0, LinkId(i))], caps[capsule_index(1, LinkId(j))])) return true;
  return false;
}

inline bool finger_self_collision(const GripperDesign& design, std::span<const double> q) {
  return finger_self_collision(forward_kinematics(design, q));
}

}  // namespace tendongrip
