#pragma once

// SVG snapshots of the gripper and object in the palm frame (y up).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "tendongrip/closure.hpp"
#include "tendongrip/geometry.hpp"

namespace tendongrip {

struct SvgFrame {
  std::array<double, 4> q{};
  Pose2 object_pose;
  std::vector<ContactPoint> contacts;
  double opacity = 1.0;
};

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

inline std::string capsule_svg(const Capsule& c, const char* colour, double opacity) {
  return "<line x1=\"" + num(c.a.x()) + "\" y1=\"" + num(-c.a.y()) + "\" x2=\"" + num(c.b.x()) + "\" y2=\"" +
         num(-c.b.y()) + "\" stroke=\"" + colour + "\" stroke-width=\"" + num(2.0 * c.radius) +
         "\" stroke-linecap=\"round\" stroke-opacity=\"" + num(opacity) + "\"/>\n";
}

inline std::string object_svg(const ObjectInstance& obj, double opacity) {
  const std::string style = " fill=\"#9cc3e6\" fill-opacity=\"" + num(0.6 * opacity) +
                            "\" stroke=\"#1f4e79\" stroke-width=\"0.8\" stroke-opacity=\"" + num(opacity) + "\"/>\n";
  if (const auto* c = std::get_if<Circle>(&obj.shape)) {
    const Vec2 centre = obj.pose.position();
    return "<circle cx=\"" + num(centre.x()) + "\" cy=\"" + num(-centre.y()) + "\" r=\"" + num(c->radius) + "\"" +
           style;
  }
  std::string pts;
  for (const Vec2& v : world_vertices(std::get<ConvexPolygon>(obj.shape), obj.pose))
    pts += num(v.x()) + "," + num(-v.y()) + " ";
  return "<polygon points=\"" + pts + "\"" + style;
}

inline std::string frame_body(const GripperDesign& design, const ObjectInstance& obj, const SvgFrame& f) {
  std::string out;
  ObjectInstance placed = obj;
  placed.pose = f.object_pose;
  out += object_svg(placed, f.opacity);
  out += capsule_svg(palm_capsule(design), "#555555", f.opacity);
  const GripperCapsules caps = forward_kinematics(design, f.q);
  for (int finger = 0; finger < 2; ++finger) {
    out += capsule_svg(caps[capsule_index(finger, LinkId::Knuckle)], "#777777", f.opacity);
    out += capsule_svg(caps[capsule_index(finger, LinkId::Proximal)], "#c55a11", f.opacity);
    out += capsule_svg(caps[capsule_index(finger, LinkId::Distal)], "#ed7d31", f.opacity);
  }
  for (const ContactPoint& c : f.contacts) {
    const Vec2 p = c.point.head<2>();
    const Vec2 tip = p + 8.0 * c.normal.head<2>();
    out += "<circle cx=\"" + num(p.x()) + "\" cy=\"" + num(-p.y()) + "\" r=\"1.6\" fill=\"#c00000\"/>\n";
    out += "<line x1=\"" + num(p.x()) + "\" y1=\"" + num(-p.y()) + "\" x2=\"" + num(tip.x()) + "\" y2=\"" +
           num(-tip.y()) + "\" stroke=\"#c00000\" stroke-width=\"0.6\"/>\n";
  }
  return out;
}

}  // namespace detail

/// One document holding every frame drawn over the others in order.
inline std::string render_svg(const GripperDesign& design, const ObjectInstance& obj, std::span<const SvgFrame> frames,
                              const std::string& title = {}) {
  const double half = 0.5 * design.palm_width + design.reach() + 40.0;
  const double top = design.reach() + 80.0;
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" + detail::num(-half) + " " +
                    detail::num(-top) + " " + detail::num(2 * half) + " " + detail::num(top + 40.0) +
                    "\" width=\"" + detail::num(4 * half) + "\" height=\"" + detail::num(2 * (top + 40.0)) + "\">\n";
  out += "<rect x=\"" + detail::num(-half) + "\" y=\"" + detail::num(-top) + "\" width=\"" + detail::num(2 * half) +
         "\" height=\"" + detail::num(top + 40.0) + "\" fill=\"white\"/>\n";
  if (!title.empty())
    out += "<text x=\"" + detail::num(-half + 4) + "\" y=\"" + detail::num(-top + 10) +
           "\" font-family=\"sans-serif\" font-size=\"8\">" + title + "</text>\n";
  for (const SvgFrame& f : frames) out += detail::frame_body(design, obj, f);
  out += "</svg>\n";
  return out;
}

/// Evenly spaced keyframes of a recorded closure (the last one carries the
/// final contacts).
inline std::vector<SvgFrame> keyframes(const ClosureResult& r, int count) {
  std::vector<SvgFrame> out;
  if (r.trajectory.empty() || count < 1) {
    out.push_back({r.q_final, r.object_pose, r.contacts, 1.0});
    return out;
  }
  const std::size_t n = r.trajectory.size();
  for (int k = 1; k <= count; ++k) {
    const std::size_t idx = std::min(n - 1, (n - 1) * static_cast<std::size_t>(k) / static_cast<std::size_t>(count));
    const TrajectorySample& s = r.trajectory[idx];
    SvgFrame f{s.q, s.object_pose, {}, 1.0};
    if (k == count) f = {r.q_final, r.object_pose, r.contacts, 1.0};
    out.push_back(f);
  }
  return out;
}

}  // namespace tendongrip
