#pragma once

// Quasi-static closing of the two-finger gripper on a planar object.
//
// Each step pulls both actuator tendons by dl_step, moves the joints with the
// transmission law, blocks links at the object surface, and pushes light
// objects along the net contact force.  Everything is expressed in the palm
// frame.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tendongrip/geometry.hpp"
#include "tendongrip/mechanism.hpp"

namespace tendongrip {

struct ClosureConfig {
  double dl_step = 0.05;          // mm of tendon per step
  int max_steps = 20000;
  double f_act = 10.0;            // N
  double ejection_radius = 150.0;  // mm from the palm centre
  double balance_tol = 0.05;      // N
  double push_gain = 0.5;         // mm per N per step
  double push_cap = 1.0;          // mm per step
  int contact_loss_limit = 3;
  bool record_trajectory = true;

  void validate() const {
    if (!(dl_step > 0.0)) throw std::invalid_argument("dl_step must be positive");
    if (max_steps <= 0) throw std::invalid_argument("max_steps must be positive");
    if (!(f_act >= 0.0)) throw std::invalid_argument("actuator force must be non-negative");
    if (!(ejection_radius > 0.0)) throw std::invalid_argument("ejection radius must be positive");
    if (!(balance_tol >= 0.0)) throw std::invalid_argument("balance tolerance must be non-negative");
    if (!(push_gain >= 0.0) || !(push_cap >= 0.0)) throw std::invalid_argument("push law must be non-negative");
    if (contact_loss_limit <= 0) throw std::invalid_argument("contact loss limit must be positive");
  }
};

enum class Outcome { Envelope, Fingertip, Partial, Ejected, Collision, NoContact };

inline std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Envelope: return "Envelope";
    case Outcome::Fingertip: return "Fingertip";
    case Outcome::Partial: return "Partial";
    case Outcome::Ejected: return "Ejected";
    case Outcome::Collision: return "Collision";
    case Outcome::NoContact: return "NoContact";
  }
  return "?";
}

inline Outcome outcome_from_string(std::string_view s) {
  for (Outcome o : {Outcome::Envelope, Outcome::Fingertip, Outcome::Partial, Outcome::Ejected,
                    Outcome::Collision, Outcome::NoContact})
    if (to_string(o) == s) return o;
  throw std::invalid_argument("unknown outcome: " + std::string(s));
}

struct TrajectorySample {
  std::array<double, 4> q{};
  Pose2 object_pose;
  int contact_count = 0;
};

/// Total joint travel of one finger over a closure.
struct JointDisplacement {
  double proximal = 0.0;
  double distal = 0.0;
};

struct ClosureResult {
  Outcome outcome = Outcome::NoContact;
  std::vector<ContactPoint> contacts;
  std::vector<double> contact_forces;
  std::array<double, 4> q_final{};
  std::vector<TrajectorySample> trajectory;
  std::array<JointDisplacement, 2> displacement{};
  Pose2 object_pose;  // final, palm frame
  int steps = 0;
  int contact_losses = 0;
  bool self_collision = false;

  int moving_contact_count() const {
    return static_cast<int>(std::count_if(contacts.begin(), contacts.end(),
                                           [](const ContactPoint& c) { return c.moving_link(); }));
  }
};

struct ContactForces {
  std::vector<double> force;    // per contact, N
  std::vector<std::size_t> dropped;  // contacts ignored because of a vanishing moment arm
};

/// Normal force at every contact from the quasi-static torque balance of each
/// finger.  Knuckle and palm contacts are passive and carry no actuated force.
inline ContactForces contact_forces(const GripperDesign& design, std::span<const double> q,
                                    const std::vector<ContactPoint>& contacts, double f_act) {
  if (q.size() != 4) throw std::invalid_argument("contact_forces expects 4 joint angles");
  ContactForces out{std::vector<double>(contacts.size(), 0.0), {}};
  const GripperCapsules caps = forward_kinematics(design, q);
  const std::vector<double> tendon = joint_torques(design.net, f_act);

  for (int finger = 0; finger < 2; ++finger) {
    const double flex = finger == 0 ? -1.0 : 1.0;
    const Vec2 joint1 = caps[capsule_index(finger, LinkId::Proximal)].a;
    const Vec2 joint2 = caps[capsule_index(finger, LinkId::Distal)].a;
    const std::array<double, 2> qf{q[finger * 2], q[finger * 2 + 1]};
    const std::vector<double> spring = spring_torques(design, qf);
    const double tau1 = tendon[0] + spring[0];
    const double tau2 = tendon[1] + spring[1];

    std::optional<std::size_t> prox, dist;
    for (std::size_t i = 0; i < contacts.size(); ++i) {
      const ContactPoint& c = contacts[i];
      if (c.finger != finger || !c.moving_link()) continue;
      auto& slot = c.link == LinkId::Proximal ? prox : dist;
      if (!slot || c.penetration_depth > contacts[*slot].penetration_depth) slot = i;
    }
    const auto arm = [&](const Vec2& joint, const ContactPoint& c) {
      return flex * detail::cross2(c.point.head<2>() - joint, c.normal.head<2>());
    };
    const double singular = 1e-9 * design.reach();

    double f_dist = 0.0;
    if (dist) {
      const double a22 = arm(joint2, contacts[*dist]);
      if (std::abs(a22) < singular) {
        out.dropped.push_back(*dist);
        dist.reset();
      } else {
        f_dist = std::max(0.0, tau2 / a22);
      }
    }
    if (prox) {
      const double a11 = arm(joint1, contacts[*prox]);
      if (std::abs(a11) < singular) {
        out.dropped.push_back(*prox);
      } else {
        const double a12 = dist ? arm(joint1, contacts[*dist]) : 0.0;
        out.force[*prox] = std::max(0.0, (tau1 - a12 * f_dist) / a11);
      }
    }
    if (dist) out.force[*dist] = f_dist;
  }
  return out;
}

/// Light objects translate along the net contact force; no rotation.
inline Pose2 object_update(const Pose2& pose, const Vec2& net_force, const ClosureConfig& cfg) {
  const double magnitude = net_force.norm();
  if (!(magnitude > cfg.balance_tol) || magnitude == 0.0) return pose;
  const double step = std::min(cfg.push_gain * magnitude, cfg.push_cap);
  const Vec2 d = net_force / magnitude * step;
  return {pose.x + d.x(), pose.y + d.y(), pose.theta};
}

/// Net force on the object that the contacts cannot cancel.  Every contact
/// pushes with its actuated force, may add any extra normal reaction, and
/// carries Coulomb friction up to mu times its normal force.  Returns the
/// smallest resultant over all admissible reactions; zero means the object
/// is held.
inline Vec2 unbalanced_force(const std::vector<ContactPoint>& contacts, std::span<const double> force,
                             double mu) {
  if (force.size() != contacts.size()) throw std::invalid_argument("one force per contact expected");
  Vec2 total = Vec2::Zero();
  // Generators: bounded tangential friction of the actuated part (coefficient
  // in [-1, 1]) and the two friction-cone edges of the free reaction (>= 0).
  struct Generator {
    Vec2 dir;
    double lo, hi;
  };
  std::vector<Generator> gens;
  for (std::size_t i = 0; i < contacts.size(); ++i) {
    const Vec2 n = contacts[i].normal.head<2>();
    const Vec2 t(-n.y(), n.x());
    total += force[i] * n;
    if (force[i] > 0.0 && mu > 0.0) gens.push_back({mu * force[i] * t, -1.0, 1.0});
    gens.push_back({n + mu * t, 0.0, std::numeric_limits<double>::infinity()});
    gens.push_back({n - mu * t, 0.0, std::numeric_limits<double>::infinity()});
  }
  if (gens.empty()) return total;
  std::vector<double> coef(gens.size(), 0.0);
  Vec2 r = total;
  for (int sweep = 0; sweep < 400; ++sweep) {
    double change = 0.0;
    for (std::size_t k = 0; k < gens.size(); ++k) {
      const double g2 = gens[k].dir.squaredNorm();
      if (g2 <= 0.0) continue;
      const double target = std::clamp(coef[k] - r.dot(gens[k].dir) / g2, gens[k].lo, gens[k].hi);
      const double delta = target - coef[k];
      if (delta != 0.0) {
        r += delta * gens[k].dir;
        coef[k] = target;
        change = std::max(change, std::abs(delta) * std::sqrt(g2));
      }
    }
    if (change < 1e-12) break;
  }
  return r;
}

/// Radius of the region swept by the open gripper around the palm centre.
inline double open_workspace_radius(const GripperDesign& design) {
  return std::hypot(0.5 * design.palm_width, design.reach()) + design.link_radius;
}

/// Does the open gripper overlap `obj` (given in the palm frame)?
inline bool open_gripper_collides(const GripperDesign& design, const ObjectInstance& obj) {
  const std::array<double, 4> q{};
  const GripperCapsules caps = forward_kinematics(design, q);
  if (finger_self_collision(caps) || capsule_gap(palm_capsule(design), obj) < -kContactTolerance) return true;
  return std::any_of(caps.begin(), caps.end(),
                     [&](const Capsule& cap) { return capsule_gap(cap, obj) < -kContactTolerance; });
}

namespace detail {

struct FingerState {
  JointState joints = JointState::at_rest(2);
  std::array<bool, 2> contact_stop{false, false};  // stopped because the link touched
  std::array<bool, 2> jammed{false, false};
};

inline std::array<double, 4> joint_vector(const std::array<FingerState, 2>& fingers) {
  return {fingers[0].joints.q[0], fingers[0].joints.q[1], fingers[1].joints.q[0], fingers[1].joints.q[1]};
}

inline std::vector<ContactPoint> query_contacts(const GripperCapsules& caps, const Capsule& palm,
                                                const ObjectInstance& obj) {
  std::vector<ContactPoint> out;
  for (int finger = 0; finger < 2; ++finger) {
    for (LinkId link : {LinkId::Knuckle, LinkId::Proximal, LinkId::Distal}) {
      if (auto c = contact_query(caps[capsule_index(finger, link)], obj)) {
        c->finger = finger;
        c->link = link;
        out.push_back(*c);
      }
    }
  }
  if (auto c = contact_query(palm, obj)) {
    c->finger = kPalmFinger;
    c->link = LinkId::Palm;
    out.push_back(*c);
  }
  return out;
}

inline double moving_penetration(const GripperCapsules& caps, int finger, const ObjectInstance& obj) {
  double depth = 0.0;
  for (LinkId link : {LinkId::Proximal, LinkId::Distal})
    depth = std::max(depth, -capsule_gap(caps[capsule_index(finger, link)], obj));
  return depth;
}

// Push a light object out of every body it overlaps (palm, knuckles, links).
inline void resolve_overlap(ObjectInstance& obj, const GripperCapsules& caps, const Capsule& palm) {
  for (int iter = 0; iter < 8; ++iter) {
    bool moved = false;
    const auto push_out = [&](const Capsule& cap) {
      const Separation sep = separate(cap, obj);
      const double overlap = cap.radius - sep.gap;
      if (overlap > kContactTolerance * 0.5) {
        obj.pose.x += sep.direction.x() * overlap;
        obj.pose.y += sep.direction.y() * overlap;
        moved = true;
      }
    };
    push_out(palm);
    for (const Capsule& cap : caps) push_out(cap);
    if (!moved) break;
  }
}

inline bool in_grasp_region(const GripperDesign& design, const ObjectInstance& obj) {
  const Vec2 c = obj.centroid();
  return std::abs(c.x()) < 0.5 * design.palm_width && c.y() > 0.0 && c.y() < design.reach();
}

}  // namespace detail

/// Simulate closing the gripper placed at `palm_pose` (world frame) on `obj`
/// (world frame).  Deterministic.
inline ClosureResult close_grasp(const GripperDesign& design, const ObjectInstance& obj,
                                 const Pose2& palm_pose, const ClosureConfig& cfg = {}) {
  design.validate();
  cfg.validate();
  validate_shape(obj.shape);
  if (!palm_pose.finite() || !obj.pose.finite()) throw std::invalid_argument("non-finite pose");
  if (!(obj.mu >= 0.0)) throw std::invalid_argument("friction coefficient must be non-negative");

  ObjectInstance body = obj;
  body.pose = palm_pose.inverse().compose(obj.pose);
  const double ejection_radius = std::max(cfg.ejection_radius, open_workspace_radius(design) + design.link_radius);
  const std::span<const double> limits(design.q_max);

  ClosureResult result;
  std::array<detail::FingerState, 2> fingers;
  const Capsule palm = palm_capsule(design);

  auto q = detail::joint_vector(fingers);
  GripperCapsules caps = forward_kinematics(design, q);
  const auto finish = [&](Outcome outcome) {
    result.outcome = outcome;
    result.q_final = detail::joint_vector(fingers);
    result.object_pose = body.pose;
    for (int f = 0; f < 2; ++f)
      result.displacement[f] = {fingers[f].joints.q[0], fingers[f].joints.q[1]};
    result.contact_forces = contact_forces(design, result.q_final, result.contacts, cfg.f_act).force;
    return result;
  };

  if (open_gripper_collides(design, body)) {
    result.contacts = detail::query_contacts(caps, palm, body);
    return finish(Outcome::Collision);
  }

  bool touched = false;
  bool had_contact = false;
  const bool light = body.mass_class == MassClass::Light;
  for (int step = 0; step < cfg.max_steps; ++step) {
    result.steps = step + 1;
    bool progressed = false;

    std::array<JointIncrement, 2> inc;
    for (int f = 0; f < 2; ++f) {
      auto& fs = fingers[f];
      inc[f] = joint_increments(design.net, fs.joints, {cfg.dl_step, cfg.f_act}, limits);
      fs.joints.stopped = inc[f].stopped;
      for (std::size_t j = 0; j < 2; ++j) fs.joints.elongation[j] += inc[f].elongation_delta[j];
    }
    const auto trial = [&](int f, double s) {
      auto qt = detail::joint_vector(fingers);
      qt[f * 2] = std::min(fingers[f].joints.q[0] + s * inc[f].dq[0], design.q_max[0]);
      qt[f * 2 + 1] = std::min(fingers[f].joints.q[1] + s * inc[f].dq[1], design.q_max[1]);
      return qt;
    };

    if (light) {
      // The closing fingers push the object as far as the unbalanced force
      // lets it go, but no farther than they advance into it.
      auto qt = trial(0, 1.0);
      const auto q1 = trial(1, 1.0);
      qt[2] = q1[2];
      qt[3] = q1[3];
      const GripperCapsules ahead = forward_kinematics(design, qt);
      if (std::max(detail::moving_penetration(ahead, 0, body), detail::moving_penetration(ahead, 1, body)) >
          kContactTolerance) {
        const auto pushed = detail::query_contacts(ahead, palm, body);
        const ContactForces forces = contact_forces(design, qt, pushed, cfg.f_act);
        const Vec2 net = unbalanced_force(pushed, forces.force, body.mu);
        const double magnitude = net.norm();
        if (magnitude > cfg.balance_tol) {
          const Vec2 dir = net / magnitude;
          double needed = 0.0;
          for (const ContactPoint& c : pushed) {
            const double along = c.normal.head<2>().dot(dir);
            if (c.moving_link() && along > 1e-3) needed = std::max(needed, c.penetration_depth / along);
          }
          const double step_len = std::min({needed, cfg.push_gain * magnitude, cfg.push_cap});
          if (step_len > 0.0) {
            body.pose.x += dir.x() * step_len;
            body.pose.y += dir.y() * step_len;
            detail::resolve_overlap(body, caps, palm);
            progressed = true;
          }
        }
      }
    }

    for (int f = 0; f < 2; ++f) {
      auto& fs = fingers[f];
      if (inc[f].dq[0] == 0.0 && inc[f].dq[1] == 0.0) continue;
      const auto penetrates = [&](double s) {
        return detail::moving_penetration(forward_kinematics(design, trial(f, s)), f, body) > kContactTolerance;
      };
      double s = 1.0;
      if (penetrates(1.0)) {
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < 40; ++it) {
          const double mid = 0.5 * (lo + hi);
          (penetrates(mid) ? hi : lo) = mid;
        }
        s = lo;
      }
      const auto qt = trial(f, s);
      progressed = progressed || qt[f * 2] != fs.joints.q[0] || qt[f * 2 + 1] != fs.joints.q[1];
      fs.joints.q = {qt[f * 2], qt[f * 2 + 1]};
      if (s == 1.0) continue;

      // Blocked: links resting on the object stop.  A link that was already
      // stopped and still blocks the finger jams the joints upstream of it.
      const GripperCapsules now = forward_kinematics(design, qt);
      for (LinkId link : {LinkId::Distal, LinkId::Proximal}) {
        if (capsule_gap(now[capsule_index(f, link)], body) > kContactTolerance) continue;
        const std::size_t own = link == LinkId::Distal ? 1 : 0;
        if (!fs.joints.stopped[own]) {
          fs.joints.stopped[own] = true;
          fs.contact_stop[own] = true;
        } else if (s < 1e-6) {
          for (std::size_t j = 0; j <= own; ++j) {
            if (!fs.joints.stopped[j]) {
              fs.joints.stopped[j] = true;
              fs.jammed[j] = true;
            }
          }
        }
      }
    }

    q = detail::joint_vector(fingers);
    caps = forward_kinematics(design, q);
    result.self_collision = result.self_collision || finger_self_collision(caps);
    result.contacts = detail::query_contacts(caps, palm, body);

    if (light) {
      // Links whose contact vanished close again.
      for (int f = 0; f < 2; ++f) {
        auto& fs = fingers[f];
        const bool touching = std::any_of(result.contacts.begin(), result.contacts.end(),
                                          [&](const ContactPoint& c) { return c.finger == f && c.moving_link(); });
        for (LinkId link : {LinkId::Proximal, LinkId::Distal}) {
          const std::size_t j = link == LinkId::Proximal ? 0 : 1;
          if (!fs.contact_stop[j] && !fs.jammed[j]) continue;
          const bool own = std::any_of(result.contacts.begin(), result.contacts.end(),
                                       [&](const ContactPoint& c) { return c.finger == f && c.link == link; });
          if ((fs.contact_stop[j] && own) || (fs.jammed[j] && touching)) continue;
          if (fs.joints.q[j] >= design.q_max[j]) continue;
          fs.joints.stopped[j] = false;
          fs.contact_stop[j] = false;
          fs.jammed[j] = false;
          fs.joints.elongation[j] = 0.0;
          progressed = true;
        }
      }
    }

    const int object_contacts = static_cast<int>(result.contacts.size());
    if (object_contacts > 0) {
      touched = true;
      had_contact = true;
    } else if (had_contact) {
      had_contact = false;
      ++result.contact_losses;
    }
    if (cfg.record_trajectory) result.trajectory.push_back({q, body.pose, object_contacts});

    if (touched && (body.pose.position().norm() > ejection_radius || result.contact_losses >= cfg.contact_loss_limit))
      return finish(Outcome::Ejected);

    const bool all_stopped = std::all_of(fingers.begin(), fingers.end(), [](const detail::FingerState& fs) {
      return fs.joints.stopped[0] && fs.joints.stopped[1];
    });
    if (all_stopped || !progressed) break;
  }

  std::array<std::array<bool, 2>, 2> touching{};
  for (const ContactPoint& c : result.contacts)
    if (c.moving_link()) touching[c.finger][c.link == LinkId::Proximal ? 0 : 1] = true;
  const bool any_moving = touching[0][0] || touching[0][1] || touching[1][0] || touching[1][1];
  if (!any_moving && result.contacts.empty()) {
    if (touched && light) return finish(Outcome::Ejected);
    if (!touched && result.self_collision && detail::in_grasp_region(design, body))
      return finish(Outcome::Collision);
    return finish(Outcome::NoContact);
  }
  if (touching[0][0] && touching[0][1] && touching[1][0] && touching[1][1]) return finish(Outcome::Envelope);
  if (touching[0][1] && touching[1][1] && !touching[0][0] && !touching[1][0]) return finish(Outcome::Fingertip);
  if (result.self_collision) return finish(Outcome::Collision);
  return finish(Outcome::Partial);
}

}  // namespace tendongrip
