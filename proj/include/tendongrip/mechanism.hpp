#pragma once

// Tendon transmission laws for one underactuated finger.
//
// Joints are numbered from 1 (proximal) in the public API, so that the
// force at the j-th bifurcation is f / 2^j.  Containers are 0-based as usual;
// element 0 belongs to joint 1.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tendongrip {

enum class MechanismMode { RigidCoupled, SpringLoaded, MovablePulley };

inline std::string_view to_string(MechanismMode mode) {
  switch (mode) {
    case MechanismMode::RigidCoupled: return "RigidCoupled";
    case MechanismMode::SpringLoaded: return "SpringLoaded";
    case MechanismMode::MovablePulley: return "MovablePulley";
  }
  return "?";
}

inline MechanismMode mechanism_mode_from_string(std::string_view s) {
  if (s == "RigidCoupled") return MechanismMode::RigidCoupled;
  if (s == "SpringLoaded") return MechanismMode::SpringLoaded;
  if (s == "MovablePulley") return MechanismMode::MovablePulley;
  throw std::invalid_argument("unknown mechanism mode: " + std::string(s));
}

/// Pulley radii (mm) of a serial tendon network.  r1 is the branch that ends
/// on the joint's own link, r2 the branch that runs through to the next
/// bifurcation.  tendon_stiffness (N/mm) is only meaningful for SpringLoaded.
struct TendonNetwork {
  MechanismMode mode = MechanismMode::MovablePulley;
  std::vector<double> r1;
  std::vector<double> r2;
  std::vector<double> tendon_stiffness;

  std::size_t joint_count() const { return r1.size(); }

  void validate() const {
    if (r1.empty()) throw std::invalid_argument("tendon network needs at least one joint");
    if (r2.size() != r1.size()) throw std::invalid_argument("r1/r2 size mismatch");
    for (std::size_t j = 0; j < r1.size(); ++j) {
      if (!(r1[j] > 0.0)) throw std::invalid_argument("r1 must be positive");
      if (!(r2[j] >= 0.0)) throw std::invalid_argument("r2 must be non-negative");
      if (mode == MechanismMode::MovablePulley && r2[j] != 0.0)
        throw std::invalid_argument("movable-pulley network requires r2 = 0");
    }
    if (mode == MechanismMode::SpringLoaded) {
      if (tendon_stiffness.size() != r1.size())
        throw std::invalid_argument("spring-loaded network needs one stiffness per joint");
      for (double k : tendon_stiffness)
        if (!(k > 0.0)) throw std::invalid_argument("tendon stiffness must be positive");
    }
  }

  static TendonNetwork movable_pulley(std::vector<double> r1) {
    TendonNetwork net;
    net.mode = MechanismMode::MovablePulley;
    net.r2.assign(r1.size(), 0.0);
    net.r1 = std::move(r1);
    net.validate();
    return net;
  }

  static TendonNetwork rigid_coupled(std::vector<double> r1, std::vector<double> r2) {
    TendonNetwork net;
    net.mode = MechanismMode::RigidCoupled;
    net.r1 = std::move(r1);
    net.r2 = std::move(r2);
    net.validate();
    return net;
  }

  static TendonNetwork spring_loaded(std::vector<double> r1, std::vector<double> r2,
                                     std::vector<double> stiffness) {
    TendonNetwork net;
    net.mode = MechanismMode::SpringLoaded;
    net.r1 = std::move(r1);
    net.r2 = std::move(r2);
    net.tendon_stiffness = std::move(stiffness);
    net.validate();
    return net;
  }
};

/// Joint angles (rad), stop flags and accumulated stretch of the spring-loaded
/// branches (mm).  A stopped joint is held by contact or by its limit.
struct JointState {
  std::vector<double> q;
  std::vector<bool> stopped;
  std::vector<double> elongation;

  static JointState at_rest(std::size_t n) {
    return JointState{std::vector<double>(n, 0.0), std::vector<bool>(n, false),
                      std::vector<double>(n, 0.0)};
  }
};

struct PullIncrement {
  double dl = 0.0;  // mm
  double f = 0.0;   // N
};

struct JointIncrement {
  std::vector<double> dq;
  std::vector<bool> stopped;            // flags after limit clamping
  std::vector<double> elongation_delta;  // spring stretch taken this step
};

namespace detail {

inline void check_state(const TendonNetwork& net, const JointState& state) {
  const std::size_t n = net.joint_count();
  if (state.q.size() != n || state.stopped.size() != n)
    throw std::invalid_argument("joint state does not match tendon network");
  if (!state.elongation.empty() && state.elongation.size() != n)
    throw std::invalid_argument("elongation vector does not match tendon network");
}

// Is every joint from `node` to the distal end stopped?
inline bool subtree_stopped(const std::vector<bool>& stopped, std::size_t node) {
  for (std::size_t j = node; j < stopped.size(); ++j)
    if (!stopped[j]) return false;
  return true;
}

// Movable pulley j splits the displacement arriving at it between joint j and
// the rest of the chain.  An idle branch lets the other branch take twice the
// displacement.  The last joint is the terminal branch of pulley n-1.
inline void distribute_pulley(const TendonNetwork& net, const std::vector<bool>& stopped,
                              std::size_t node, double displacement, std::vector<double>& dq) {
  const std::size_t n = net.joint_count();
  if (node + 1 == n) {
    if (!stopped[node]) dq[node] = displacement / net.r1[node];
    return;
  }
  const bool own_idle = stopped[node];
  const bool rest_idle = subtree_stopped(stopped, node + 1);
  if (!own_idle && !rest_idle) {
    dq[node] = displacement / net.r1[node];
    distribute_pulley(net, stopped, node + 1, displacement, dq);
  } else if (own_idle && !rest_idle) {
    distribute_pulley(net, stopped, node + 1, 2.0 * displacement, dq);
  } else if (!own_idle && rest_idle) {
    dq[node] = 2.0 * displacement / net.r1[node];
  }
}

}  // namespace detail

/// Joint-angle increments produced by pulling the actuator tendon by
/// `pull.dl`.  When `q_max` is non-empty the increments are clamped so no joint
/// passes its limit; a clamped joint is reported as stopped.
inline JointIncrement joint_increments(const TendonNetwork& net, const JointState& state,
                                       const PullIncrement& pull,
                                       std::span<const double> q_max = {}) {
  detail::check_state(net, state);
  if (!(pull.dl >= 0.0)) throw std::invalid_argument("tendon pull must be non-negative");
  if (!q_max.empty() && q_max.size() != net.joint_count())
    throw std::invalid_argument("joint limit vector does not match tendon network");

  const std::size_t n = net.joint_count();
  JointIncrement out{std::vector<double>(n, 0.0), state.stopped, std::vector<double>(n, 0.0)};

  if (net.mode == MechanismMode::MovablePulley) {
    detail::distribute_pulley(net, state.stopped, 0, pull.dl, out.dq);
  } else {
    // Serial chain driven by one tendon.  Propagate a unit input, then scale
    // it by what the stopped joints allow.
    std::vector<double> unit_dq(n, 0.0);
    std::vector<double> unit_stretch(n, 0.0);
    double scale = 1.0;
    double arriving = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (!state.stopped[j]) {
        unit_dq[j] = arriving / net.r1[j];
        arriving = (net.r1[j] - net.r2[j]) * unit_dq[j];
        continue;
      }
      if (arriving <= 0.0) continue;
      if (net.mode == MechanismMode::RigidCoupled) {
        scale = 0.0;
        arriving = 0.0;
      } else {
        // The stopped link's branch stretches; the through branch keeps going.
        unit_stretch[j] = arriving;
        const double force = pull.f / std::ldexp(1.0, static_cast<int>(j + 1));
        const double taken = state.elongation.empty() ? 0.0 : state.elongation[j];
        const double capacity = std::max(0.0, force / net.tendon_stiffness[j] - taken);
        if (pull.dl > 0.0) scale = std::min(scale, capacity / (pull.dl * arriving));
      }
    }
    for (std::size_t j = 0; j < n; ++j) {
      out.dq[j] = scale * pull.dl * unit_dq[j];
      out.elongation_delta[j] = scale * pull.dl * unit_stretch[j];
    }
  }

  if (!q_max.empty()) {
    for (std::size_t j = 0; j < n; ++j) {
      const double next = state.q[j] + out.dq[j];
      if (next >= q_max[j]) {
        out.dq[j] = std::max(0.0, q_max[j] - state.q[j]);
        out.stopped[j] = true;
      } else if (next < 0.0) {
        out.dq[j] = -state.q[j];
        out.stopped[j] = true;
      }
    }
  }
  return out;
}

/// Branch tensions (f_j^1, f_j^2) at bifurcation j (1-based): the actuator
/// force halves at every split.
inline std::pair<double, double> tendon_forces(const TendonNetwork& net, double f, std::size_t j) {
  if (j < 1 || j > net.joint_count()) throw std::out_of_range("joint index out of range");
  if (!(f >= 0.0)) throw std::invalid_argument("actuator force must be non-negative");
  const double branch = f / std::ldexp(1.0, static_cast<int>(j));
  return {branch, branch};
}

/// Tendon torque at every joint (N*mm).
inline std::vector<double> joint_torques(const TendonNetwork& net, double f) {
  std::vector<double> tau(net.joint_count());
  for (std::size_t j = 0; j < tau.size(); ++j) {
    const auto [f1, f2] = tendon_forces(net, f, j + 1);
    tau[j] = net.r1[j] * f1 + net.r2[j] * f2;
  }
  return tau;
}

/// Linear torsional return springs, zero preload.
inline std::vector<double> spring_torques(std::span<const double> stiffness,
                                          std::span<const double> q) {
  if (stiffness.size() != q.size()) throw std::invalid_argument("spring/joint size mismatch");
  std::vector<double> tau(q.size());
  for (std::size_t j = 0; j < q.size(); ++j) tau[j] = -stiffness[j] * q[j];
  return tau;
}

}  // namespace tendongrip
