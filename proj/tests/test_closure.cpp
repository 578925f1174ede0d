#include <algorithm>
#include <array>
#include <cmath>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "tendongrip/closure.hpp"

using namespace tendongrip;

namespace {

ObjectInstance disc(double radius, double x, double y, MassClass mass = MassClass::Fixed) {
  ObjectInstance o;
  o.shape = Circle{radius};
  o.pose = {x, y, 0.0};
  o.mass_class = mass;
  return o;
}

}  // namespace

TEST(CloseGrasp, FixedCentredDiscIsEnveloped) {
  const ClosureResult r = close_grasp(GripperDesign{}, disc(25.0, 0.0, 70.0), Pose2{});
  EXPECT_EQ(r.outcome, Outcome::Envelope);
  EXPECT_GE(r.moving_contact_count(), 4);
  for (int finger = 0; finger < 2; ++finger)
    for (LinkId link : {LinkId::Proximal, LinkId::Distal})
      EXPECT_TRUE(std::any_of(r.contacts.begin(), r.contacts.end(), [&](const ContactPoint& c) {
        return c.finger == finger && c.link == link;
      }));
}

TEST(CloseGrasp, FixedCentredDiscContactsAreMirrored) {
  const ClosureResult r = close_grasp(GripperDesign{}, disc(25.0, 0.0, 70.0), Pose2{});
  EXPECT_NEAR(r.q_final[0], r.q_final[2], 1e-9);
  EXPECT_NEAR(r.q_final[1], r.q_final[3], 1e-9);
  for (const ContactPoint& c : r.contacts) {
    const auto twin = std::find_if(r.contacts.begin(), r.contacts.end(), [&](const ContactPoint& o) {
      return o.finger == 1 - c.finger && o.link == c.link;
    });
    ASSERT_NE(twin, r.contacts.end());
    EXPECT_NEAR(c.point.x(), -twin->point.x(), 1e-6);
    EXPECT_NEAR(c.point.y(), twin->point.y(), 1e-6);
  }
}

TEST(CloseGrasp, EmptyWorkspaceRunsToLimits) {
  const GripperDesign d;
  const ClosureResult r = close_grasp(d, disc(10.0, 400.0, 400.0), Pose2{});
  EXPECT_EQ(r.outcome, Outcome::NoContact);
  EXPECT_TRUE(r.contacts.empty());
  for (int j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(r.q_final[j], d.q_max[j % 2]);
}

TEST(CloseGrasp, DistalOnlyReachGivesFingertip) {
  const GripperDesign d;
  const double y = 115.0;
  ASSERT_GT(y - 15.0, d.knuckle_len + d.proximal_len - 15.0);
  const ClosureResult r = close_grasp(d, disc(15.0, 0.0, y), Pose2{});
  EXPECT_EQ(r.outcome, Outcome::Fingertip);
  for (const ContactPoint& c : r.contacts) EXPECT_EQ(c.link, LinkId::Distal);
}

TEST(CloseGrasp, InitialOverlapIsCollision) {
  const ClosureResult r = close_grasp(GripperDesign{}, disc(10.0, 40.0, 50.0), Pose2{});
  EXPECT_EQ(r.outcome, Outcome::Collision);
  EXPECT_EQ(r.steps, 0);
}

TEST(CloseGrasp, Deterministic) {
  const ObjectInstance obj = disc(25.0, 5.0, 70.0, MassClass::Light);
  const ClosureResult a = close_grasp(GripperDesign{}, obj, Pose2{});
  const ClosureResult b = close_grasp(GripperDesign{}, obj, Pose2{});
  EXPECT_EQ(a.outcome, b.outcome);
  EXPECT_EQ(a.steps, b.steps);
  EXPECT_EQ(a.q_final, b.q_final);
  ASSERT_EQ(a.trajectory.size(), b.trajectory.size());
  for (std::size_t i = 0; i < a.trajectory.size(); ++i) {
    EXPECT_EQ(a.trajectory[i].q, b.trajectory[i].q);
    EXPECT_EQ(a.trajectory[i].object_pose.x, b.trajectory[i].object_pose.x);
    EXPECT_EQ(a.trajectory[i].object_pose.y, b.trajectory[i].object_pose.y);
  }
  ASSERT_EQ(a.contacts.size(), b.contacts.size());
  for (std::size_t i = 0; i < a.contacts.size(); ++i) EXPECT_EQ(a.contacts[i].point, b.contacts[i].point);
}

TEST(CloseGrasp, JointsNeverOpen) {
  for (const auto& net : {TendonNetwork::movable_pulley({13.5, 10.0}), TendonNetwork::rigid_coupled({13.5, 10.0}, {5.0, 0.0})}) {
    GripperDesign d;
    d.net = net;
    for (double x : {0.0, 5.0, 12.0}) {
      for (MassClass mass : {MassClass::Fixed, MassClass::Light}) {
        const ClosureResult r = close_grasp(d, disc(20.0, x, 75.0, mass), Pose2{});
        for (std::size_t i = 1; i < r.trajectory.size(); ++i)
          for (int j = 0; j < 4; ++j) ASSERT_GE(r.trajectory[i].q[j], r.trajectory[i - 1].q[j]);
      }
    }
  }
}

TEST(CloseGrasp, CentredLightDiscStaysPut) {
  const ClosureResult r = close_grasp(GripperDesign{}, disc(25.0, 0.0, 70.0, MassClass::Light), Pose2{});
  EXPECT_EQ(r.outcome, Outcome::Envelope);
  EXPECT_NEAR(r.object_pose.x, 0.0, 1e-6);
  const Vec2 net = unbalanced_force(r.contacts, r.contact_forces, 0.5);
  EXPECT_LT(std::abs(net.x()), ClosureConfig{}.balance_tol);
}

TEST(CloseGrasp, PalmPoseIsApplied) {
  const Pose2 palm{100.0, -40.0, 0.7};
  ObjectInstance world = disc(25.0, 0.0, 0.0);
  world.pose = palm.compose(Pose2{0.0, 70.0, 0.0});
  const ClosureResult moved = close_grasp(GripperDesign{}, world, palm);
  const ClosureResult local = close_grasp(GripperDesign{}, disc(25.0, 0.0, 70.0), Pose2{});
  EXPECT_EQ(moved.outcome, local.outcome);
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(moved.q_final[j], local.q_final[j], 1e-6);
}

TEST(CloseGrasp, RejectsInvalidInput) {
  ClosureConfig bad;
  bad.dl_step = 0.0;
  EXPECT_THROW(close_grasp(GripperDesign{}, disc(25.0, 0.0, 70.0), Pose2{}, bad), std::invalid_argument);
  EXPECT_THROW(close_grasp(GripperDesign{}, disc(25.0, 0.0, 70.0), Pose2{NAN, 0.0, 0.0}), std::invalid_argument);
}

TEST(ObjectUpdate, Examples) {
  ClosureConfig cfg;
  cfg.push_gain = 0.5;
  cfg.push_cap = 5.0;
  const Pose2 p{1.0, 2.0, 0.3};
  const Pose2 same = object_update(p, Vec2::Zero(), cfg);
  EXPECT_EQ(same.x, p.x);
  EXPECT_EQ(same.y, p.y);
  const Pose2 pushed = object_update(p, Vec2(0.0, 3.0), cfg);
  EXPECT_DOUBLE_EQ(pushed.x, 1.0);
  EXPECT_DOUBLE_EQ(pushed.y, 3.5);
  EXPECT_EQ(pushed.theta, 0.3);
  cfg.push_cap = 1.0;
  EXPECT_DOUBLE_EQ(object_update(p, Vec2(0.0, 3.0), cfg).y, 3.0);
}

TEST(ContactForces, SingleDistalContact) {
  const GripperDesign d;
  const std::array<double, 4> q{0.0, 0.0, 0.3, 0.4};
  const auto caps = forward_kinematics(d, q);
  const Capsule& distal = caps[capsule_index(1, LinkId::Distal)];
  ContactPoint c;
  c.finger = 1;
  c.link = LinkId::Distal;
  const Vec2 dir = (distal.b - distal.a).normalized();
  const Vec2 p = distal.a + 20.0 * dir + d.link_radius * Vec2(-dir.y(), dir.x());
  c.point = Vec3(p.x(), p.y(), 0.0);
  c.normal = Vec3(-dir.y(), dir.x(), 0.0);
  const auto f = contact_forces(d, q, {c}, 10.0);
  const double tau2 = joint_torques(d.net, 10.0)[1] - d.k_spiral[1] * q[3];
  const double arm = detail::cross2(p - distal.a, c.normal.head<2>());
  EXPECT_NEAR(f.force[0], tau2 / arm, 1e-12);
  EXPECT_GT(f.force[0], 0.0);
}

TEST(ContactForces, ZeroActuatorForce) {
  const GripperDesign d;
  const ClosureResult r = close_grasp(d, disc(25.0, 0.0, 70.0), Pose2{});
  for (double f : contact_forces(d, r.q_final, r.contacts, 0.0).force) EXPECT_EQ(f, 0.0);
}

TEST(ContactForces, TwoContactsMatchLinearSolve) {
  const GripperDesign d;
  const ClosureResult r = close_grasp(d, disc(25.0, 0.0, 70.0), Pose2{});
  const auto forces = contact_forces(d, r.q_final, r.contacts, 10.0);
  const auto caps = forward_kinematics(d, r.q_final);
  const std::vector<double> tendon = joint_torques(d.net, 10.0);
  for (int finger = 0; finger < 2; ++finger) {
    const double flex = finger == 0 ? -1.0 : 1.0;
    const Vec2 j1 = caps[capsule_index(finger, LinkId::Proximal)].a;
    const Vec2 j2 = caps[capsule_index(finger, LinkId::Distal)].a;
    std::size_t prox = 99, dist = 99;
    for (std::size_t i = 0; i < r.contacts.size(); ++i) {
      if (r.contacts[i].finger != finger) continue;
      if (r.contacts[i].link == LinkId::Proximal) prox = i;
      if (r.contacts[i].link == LinkId::Distal) dist = i;
    }
    ASSERT_NE(prox, 99u);
    ASSERT_NE(dist, 99u);
    const auto moment = [&](const Vec2& joint, const ContactPoint& c) {
      const Vec2 rel = c.point.head<2>() - joint;
      return flex * (rel.x() * c.normal.y() - rel.y() * c.normal.x());
    };
    Eigen::Matrix2d A;
    A << moment(j1, r.contacts[prox]), moment(j1, r.contacts[dist]), 0.0, moment(j2, r.contacts[dist]);
    const Eigen::Vector2d tau(tendon[0] - d.k_spiral[0] * r.q_final[finger * 2],
                              tendon[1] - d.k_spiral[1] * r.q_final[finger * 2 + 1]);
    Eigen::Vector2d x = A.colPivHouseholderQr().solve(tau);
    // Unilateral contacts: a pulling distal contact is dropped and the
    // proximal balance re-solved without it.
    if (x(1) < 0.0) x = Eigen::Vector2d(tau(0) / A(0, 0), 0.0);
    x = x.cwiseMax(0.0);
    EXPECT_NEAR(forces.force[prox], x(0), 1e-9 * std::max(1.0, x(0)));
    EXPECT_NEAR(forces.force[dist], x(1), 1e-9 * std::max(1.0, x(1)));
    EXPECT_GT(x(0) + x(1), 0.0);
  }
}

TEST(UnbalancedForce, OpposedContactsCancel) {
  ContactPoint left, right;
  left.point = Vec3(-10.0, 0.0, 0.0);
  left.normal = Vec3(1.0, 0.0, 0.0);
  right.point = Vec3(10.0, 0.0, 0.0);
  right.normal = Vec3(-1.0, 0.0, 0.0);
  const std::vector<double> f{2.0, 2.0};
  EXPECT_LT(unbalanced_force({left, right}, f, 0.5).norm(), 1e-9);
  const std::vector<double> lone{2.0};
  EXPECT_NEAR(unbalanced_force({left}, lone, 0.0).x(), 2.0, 1e-12);
}

TEST(Outcome, RoundTripsThroughStrings) {
  for (Outcome o : {Outcome::Envelope, Outcome::Fingertip, Outcome::Partial, Outcome::Ejected, Outcome::Collision,
                    Outcome::NoContact})
    EXPECT_EQ(outcome_from_string(to_string(o)), o);
}
