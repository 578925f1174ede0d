#pragma once

// Grasp wrench space: friction pyramids, 6D contact wrenches, hull volume and
// force closure.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "tendongrip/convex_hull.hpp"
#include "tendongrip/geometry.hpp"
#include "tendongrip/lp.hpp"

namespace tendongrip {

using Wrench = Eigen::Matrix<double, 6, 1>;

inline constexpr double kDefaultLineHalfWidth = 10.0;  // mm

struct FrictionModel {
  double mu = 0.5;
  int m = 8;

  void validate() const {
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw std::invalid_argument("friction coefficient must be non-negative");
    if (m < 3) throw std::invalid_argument("friction pyramid needs at least 3 sides");
  }
  double half_angle() const { return std::atan(mu); }
};

/// m unit edge vectors at angle atan(mu) around `normal`, equally spaced in
/// azimuth.  Azimuth 0 lies along the projection of +x (or +y when the normal
/// is close to x).
inline std::vector<Vec3> friction_pyramid(const Vec3& normal, const FrictionModel& fm) {
  fm.validate();
  const double len = normal.norm();
  if (!(len > 0.0) || !std::isfinite(len)) throw std::invalid_argument("contact normal must be non-zero");
  const Vec3 n = normal / len;
  const Vec3 helper = std::abs(n.x()) > 0.9 ? Vec3::UnitY() : Vec3::UnitX();
  const Vec3 t1 = (helper - helper.dot(n) * n).normalized();
  const Vec3 t2 = n.cross(t1);
  const double alpha = fm.half_angle();
  const double c = std::cos(alpha), s = std::sin(alpha);
  std::vector<Vec3> out;
  out.reserve(fm.m);
  for (int j = 0; j < fm.m; ++j) {
    const double phi = 2.0 * std::numbers::pi * j / fm.m;
    out.push_back(c * n + s * (std::cos(phi) * t1 + std::sin(phi) * t2));
  }
  return out;
}

inline std::vector<Wrench> contact_wrenches(const ContactPoint& c, const FrictionModel& fm,
                                            const Vec3& torque_origin, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("torque scale must be positive");
  const Vec3 d = c.point - torque_origin;
  std::vector<Wrench> out;
  for (const Vec3& f : friction_pyramid(c.normal, fm)) {
    Wrench w;
    w << f, lambda * d.cross(f);
    out.push_back(w);
  }
  return out;
}

/// Where torques are taken and how planar contacts are turned into 3D ones.
/// A positive line_half_width replaces every contact by a pair at
/// z = +/- line_half_width (the links and objects are prisms).  torque_scale 0
/// means 1 / max |d_i| over the contacts.
struct GraspFrame {
  Vec3 torque_origin = Vec3::Zero();
  double torque_scale = 0.0;
  double line_half_width = 0.0;
};

/// Frame for contacts on `obj` (same frame as the contacts): torques about
/// the centroid, scaled by the object's largest radius so |torque| <= |force|.
inline GraspFrame object_grasp_frame(const ObjectInstance& obj, double line_half_width = kDefaultLineHalfWidth) {
  const Vec2 c = obj.centroid();
  GraspFrame frame;
  frame.torque_origin = Vec3(c.x(), c.y(), 0.0);
  frame.line_half_width = line_half_width;
  frame.torque_scale = 1.0 / std::hypot(shape_max_radius(obj.shape), line_half_width);
  return frame;
}

inline std::vector<ContactPoint> extrude_contacts(const std::vector<ContactPoint>& contacts, double half_width) {
  if (!(half_width > 0.0)) return contacts;
  std::vector<ContactPoint> out;
  out.reserve(2 * contacts.size());
  for (const ContactPoint& c : contacts) {
    for (double z : {-half_width, half_width}) {
      ContactPoint e = c;
      e.point.z() += z;
      out.push_back(e);
    }
  }
  return out;
}

struct WrenchSet {
  std::vector<Wrench> wrenches;
  double lambda = 1.0;
};

inline WrenchSet grasp_wrenches(const std::vector<ContactPoint>& contacts, const FrictionModel& fm,
                                const GraspFrame& frame = {}) {
  if (contacts.empty()) throw std::invalid_argument("grasp needs at least one contact");
  const std::vector<ContactPoint> pts = extrude_contacts(contacts, frame.line_half_width);
  WrenchSet out;
  out.lambda = frame.torque_scale;
  if (!(out.lambda > 0.0)) {
    double reach = 0.0;
    for (const ContactPoint& c : pts) reach = std::max(reach, (c.point - frame.torque_origin).norm());
    out.lambda = reach > 0.0 ? 1.0 / reach : 1.0;
  }
  for (const ContactPoint& c : pts) {
    const auto w = contact_wrenches(c, fm, frame.torque_origin, out.lambda);
    out.wrenches.insert(out.wrenches.end(), w.begin(), w.end());
  }
  return out;
}

struct GraspWrenchSpace {
  WrenchSet set;
  ConvexHull<6> hull;
};

inline GraspWrenchSpace grasp_wrench_hull(const std::vector<ContactPoint>& contacts, const FrictionModel& fm,
                                          const GraspFrame& frame = {}) {
  WrenchSet set = grasp_wrenches(contacts, fm, frame);
  ConvexHull<6> hull(set.wrenches);
  return {std::move(set), std::move(hull)};
}

struct HullVolume {
  double volume = 0.0;
  bool degenerate = true;
};

inline HullVolume hull_volume(std::span<const Wrench> wrenches) {
  if (wrenches.size() < 7) return {};
  const ConvexHull<6> hull(std::vector<Wrench>(wrenches.begin(), wrenches.end()));
  if (hull.degenerate()) return {};
  return {hull.volume(), false};
}

/// Largest t such that the origin is a convex combination of the wrenches
/// with every weight >= t.  Negative when the origin is outside the hull.
inline double closure_margin(std::span<const Wrench> wrenches) {
  const auto n = static_cast<Eigen::Index>(wrenches.size());
  if (n == 0) return -1.0;
  // Weights mu_i + t with mu_i, t >= 0.
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(7, n + 1);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(7);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    A.block<6, 1>(0, i) = wrenches[i];
    A.block<6, 1>(0, n) += wrenches[i];
    A(6, i) = 1.0;
  }
  A(6, n) = static_cast<double>(n);
  b(6) = 1.0;
  c(n) = 1.0;
  const lp::Result r = lp::maximize(A, b, c);
  if (r.status != lp::Status::Optimal) return -1.0;
  return r.value;
}

inline bool force_closure(std::span<const Wrench> wrenches) {
  if (wrenches.size() < 7) return false;
  Eigen::MatrixXd W(6, wrenches.size());
  for (std::size_t i = 0; i < wrenches.size(); ++i) W.col(static_cast<Eigen::Index>(i)) = wrenches[i];
  Eigen::FullPivLU<Eigen::MatrixXd> lu(W);
  lu.setThreshold(1e-10);
  if (lu.rank() < 6) return false;
  return closure_margin(wrenches) > 1e-9;
}

struct QualityResult {
  double volume = 0.0;
  bool force_closure = false;
  int wrench_count = 0;
};

inline QualityResult grasp_quality(const std::vector<ContactPoint>& contacts, const FrictionModel& fm,
                                   const GraspFrame& frame) {
  fm.validate();
  QualityResult out;
  if (contacts.empty()) return out;
  const WrenchSet set = grasp_wrenches(contacts, fm, frame);
  out.wrench_count = static_cast<int>(set.wrenches.size());
  out.force_closure = force_closure(set.wrenches);
  if (out.force_closure) out.volume = hull_volume(set.wrenches).volume;
  return out;
}

/// Quality of a grasp on `obj` with the default line-contact frame.
inline QualityResult grasp_quality(const std::vector<ContactPoint>& contacts, const FrictionModel& fm,
                                   const ObjectInstance& obj) {
  return grasp_quality(contacts, fm, object_grasp_frame(obj));
}

}  // namespace tendongrip
