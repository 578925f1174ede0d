#pragma once

// Synthetic object sets, palm-pose sampling and grasp pools.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "tendongrip/closure.hpp"
#include "tendongrip/geometry.hpp"
#include "tendongrip/parallel.hpp"
#include "tendongrip/quality.hpp"

namespace tendongrip {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct ObjectSetSpec {
  int discs = 6;
  int rectangles = 6;
  int polygons = 6;
  int bottles = 0;
  Range disc_diameter{30.0, 70.0};
  Range rect_side{30.0, 70.0};
  Range polygon_diameter{30.0, 70.0};
  int polygon_sides_min = 5;
  int polygon_sides_max = 8;
  Range bottle_diameter{50.0, 70.0};
  Range mu{0.3, 0.7};
  MassClass mass_class = MassClass::Light;
  std::uint64_t seed = 1;

  void validate() const {
    for (int n : {discs, rectangles, polygons, bottles})
      if (n < 0) throw std::invalid_argument("object counts must be non-negative");
    for (const Range& r : {disc_diameter, rect_side, polygon_diameter, bottle_diameter})
      if (!(r.lo > 0.0) || !(r.hi >= r.lo)) throw std::invalid_argument("size ranges must be positive and ordered");
    if (!(mu.lo >= 0.0) || !(mu.hi >= mu.lo)) throw std::invalid_argument("friction range must be non-negative and ordered");
    if (polygon_sides_min < 3 || polygon_sides_max < polygon_sides_min)
      throw std::invalid_argument("polygon side counts must be >= 3 and ordered");
  }
};

struct ObjectDef {
  std::string id;
  std::string family;
  ObjectInstance object;  // canonical pose: centroid at the origin
};

struct ObjectSet {
  std::uint64_t seed = 0;
  std::vector<ObjectDef> objects;
};

namespace detail {

inline double draw(std::mt19937_64& rng, const Range& r) {
  const double u = std::generate_canonical<double, 53>(rng);
  return r.lo + (r.hi - r.lo) * u;
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Convex hull (counter-clockwise) of a planar point set, monotone chain.
inline std::vector<Vec2> hull_2d(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(),
            [](const Vec2& a, const Vec2& b) { return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y()); });
  std::vector<Vec2> h(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross2(h[k - 1] - h[k - 2], pts[i] - h[k - 2]) <= 0.0) --k;
    h[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross2(h[k - 1] - h[k - 2], pts[i - 1] - h[k - 2]) <= 0.0) --k;
    h[k++] = pts[i - 1];
  }
  h.resize(k - 1);
  return h;
}

inline ConvexPolygon centred(std::vector<Vec2> vertices) {
  ConvexPolygon poly{std::move(vertices)};
  const Vec2 c = shape_centroid(Shape2D(poly));
  for (Vec2& v : poly.vertices) v -= c;
  return poly;
}

inline ConvexPolygon regular_polygon(int sides, double circumradius) {
  std::vector<Vec2> v;
  for (int k = 0; k < sides; ++k) {
    const double a = std::numbers::pi / 2.0 + 2.0 * std::numbers::pi * k / sides;
    v.emplace_back(circumradius * std::cos(a), circumradius * std::sin(a));
  }
  return centred(std::move(v));
}

// Convex outline of a bottle: body circle plus a narrower neck circle above it.
inline ConvexPolygon bottle_outline(double body_radius) {
  const double neck = 0.45 * body_radius;
  const double lift = 1.6 * body_radius;
  std::vector<Vec2> pts;
  for (int k = 0; k < 32; ++k) {
    const double a = 2.0 * std::numbers::pi * k / 32.0;
    pts.emplace_back(body_radius * std::cos(a), body_radius * std::sin(a));
    pts.emplace_back(neck * std::cos(a), lift + neck * std::sin(a));
  }
  return centred(hull_2d(std::move(pts)));
}

}  // namespace detail

inline ObjectSet gen_objects(const ObjectSetSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  ObjectSet set;
  set.seed = spec.seed;
  const auto add = [&](std::string family, int index, Shape2D shape) {
    ObjectDef def;
    def.id = family + "-" + std::to_string(index);
    def.family = std::move(family);
    def.object.shape = std::move(shape);
    def.object.mu = detail::draw(rng, spec.mu);
    def.object.mass_class = spec.mass_class;
    set.objects.push_back(std::move(def));
  };
  for (int i = 0; i < spec.discs; ++i) add("disc", i, Circle{0.5 * detail::draw(rng, spec.disc_diameter)});
  for (int i = 0; i < spec.rectangles; ++i) {
    const double w = detail::draw(rng, spec.rect_side);
    const double h = detail::draw(rng, spec.rect_side);
    add("rect", i, detail::centred({{-w / 2, -h / 2}, {w / 2, -h / 2}, {w / 2, h / 2}, {-w / 2, h / 2}}));
  }
  for (int i = 0; i < spec.polygons; ++i) {
    std::uniform_int_distribution<int> sides(spec.polygon_sides_min, spec.polygon_sides_max);
    const int n = sides(rng);
    add("poly", i, detail::regular_polygon(n, 0.5 * detail::draw(rng, spec.polygon_diameter)));
  }
  for (int i = 0; i < spec.bottles; ++i)
    add("bottle", i, detail::bottle_outline(0.5 * detail::draw(rng, spec.bottle_diameter)));
  return set;
}

/// Random perturbation of the approach ring.  `angle` is a fraction of the
/// ring spacing, `lateral` a sideways offset in mm, `depth` the fraction of the
/// way from fingertip level towards the deepest collision-free standoff.
struct PoseJitter {
  double angle = 0.5;
  double lateral = 5.0;
  double depth = 1.0;
};

namespace detail {

inline Pose2 approach_pose(const Vec2& centre, double phi, double standoff, double lateral) {
  const Vec2 u(std::cos(phi), std::sin(phi));
  const Vec2 v(-u.y(), u.x());
  const Vec2 p = centre + standoff * u + lateral * v;
  return {p.x(), p.y(), phi + std::numbers::pi / 2.0};
}

inline bool pose_collides(const GripperDesign& design, const ObjectInstance& obj, const Pose2& palm) {
  ObjectInstance local = obj;
  local.pose = palm.inverse().compose(obj.pose);
  return open_gripper_collides(design, local);
}

}  // namespace detail

/// n palm poses (world frame) on a ring around the object's centroid, each
/// approaching along the line through the centroid.  Without jitter the
/// centroid sits at fingertip level of the open gripper.
inline std::vector<Pose2> sample_poses(const GripperDesign& design, const ObjectInstance& obj, int n,
                                       std::uint64_t seed, const PoseJitter& jitter = {}) {
  if (n < 1) throw std::invalid_argument("need at least one pose");
  design.validate();
  std::mt19937_64 rng(seed);
  const Vec2 centre = obj.centroid();
  const double reach = design.reach();
  const double far = reach + shape_max_radius(obj.shape) + design.link_radius + 1.0;
  const double spacing = 2.0 * std::numbers::pi / n;

  std::vector<Pose2> out;
  for (int k = 0; k < n; ++k) {
    bool found = false;
    for (int attempt = 0; attempt < 100 && !found; ++attempt) {
      const double phi = k * spacing + jitter.angle * spacing * detail::draw(rng, {-0.5, 0.5});
      const double lateral = jitter.lateral * detail::draw(rng, {-1.0, 1.0});
      const double depth = jitter.depth * detail::draw(rng, {0.0, 1.0});
      const auto collides = [&](double s) {
        return detail::pose_collides(design, obj, detail::approach_pose(centre, phi, s, lateral));
      };
      if (collides(far)) continue;
      // Deepest collision-free standoff along the approach line.
      double free_s = far, hit_s = -1.0;
      for (double s = far - 2.0; s > 0.0; s -= 2.0) {
        if (collides(s)) {
          hit_s = s;
          break;
        }
        free_s = s;
      }
      if (hit_s >= 0.0) {
        for (int it = 0; it < 30; ++it) {
          const double mid = 0.5 * (free_s + hit_s);
          (collides(mid) ? hit_s : free_s) = mid;
        }
      }
      const double deepest = std::min(free_s + 0.5, far);
      const double standoff = std::max(deepest, reach - depth * (reach - deepest));
      if (collides(standoff)) continue;
      out.push_back(detail::approach_pose(centre, phi, standoff, lateral));
      found = true;
    }
    if (!found) throw std::runtime_error("no collision-free palm pose found");
  }
  return out;
}

struct QualitySettings {
  int pyramid_sides = 8;
  double line_half_width = kDefaultLineHalfWidth;
};

struct PoolOptions {
  std::uint64_t pose_seed = 1;
  PoseJitter jitter;
  QualitySettings quality;
};

struct GraspRecord {
  std::size_t object_index = 0;
  std::string object_id;
  int pose_index = 0;
  Pose2 palm_pose;
  Outcome outcome = Outcome::NoContact;
  int contact_count = 0;
  int moving_contacts = 0;
  std::array<double, 4> q_final{};
  std::array<JointDisplacement, 2> displacement{};
  Pose2 object_pose;  // final, palm frame
  int steps = 0;
  int contact_losses = 0;
  bool self_collision = false;
  QualityResult quality;

  /// Counts towards cumulative quality.
  bool valid() const {
    return quality.force_closure && (outcome == Outcome::Envelope || outcome == Outcome::Fingertip);
  }
};

struct GraspPool {
  int format_version = 1;
  GripperDesign design;
  ClosureConfig closure;
  int poses_per_object = 0;
  PoolOptions options;
  ObjectSet objects;
  std::vector<GraspRecord> records;
  std::vector<std::string> sampling_failures;
};

inline GraspRecord evaluate_grasp(const GripperDesign& design, const ObjectSet& objects, std::size_t object_index,
                                  int pose_index, const Pose2& palm_pose, const ClosureConfig& cfg,
                                  const QualitySettings& qs) {
  const ObjectDef& def = objects.objects.at(object_index);
  ClosureConfig run = cfg;
  run.record_trajectory = false;
  const ClosureResult r = close_grasp(design, def.object, palm_pose, run);

  GraspRecord rec;
  rec.object_index = object_index;
  rec.object_id = def.id;
  rec.pose_index = pose_index;
  rec.palm_pose = palm_pose;
  rec.outcome = r.outcome;
  rec.contact_count = static_cast<int>(r.contacts.size());
  rec.moving_contacts = r.moving_contact_count();
  rec.q_final = r.q_final;
  rec.displacement = r.displacement;
  rec.object_pose = r.object_pose;
  rec.steps = r.steps;
  rec.contact_losses = r.contact_losses;
  rec.self_collision = r.self_collision;

  ObjectInstance held = def.object;
  held.pose = r.object_pose;
  rec.quality = grasp_quality(r.contacts, FrictionModel{def.object.mu, qs.pyramid_sides},
                              object_grasp_frame(held, qs.line_half_width));
  return rec;
}

/// Records are ordered object-major, pose-minor whatever the thread count.
inline GraspPool build_pool(const GripperDesign& design, const ObjectSet& objects, int poses_per_object,
                            const ClosureConfig& cfg, const PoolOptions& options = {}) {
  if (objects.objects.empty()) throw std::invalid_argument("object set is empty");
  if (poses_per_object < 1) throw std::invalid_argument("need at least one pose per object");
  design.validate();
  cfg.validate();

  GraspPool pool;
  pool.design = design;
  pool.closure = cfg;
  pool.poses_per_object = poses_per_object;
  pool.options = options;
  pool.objects = objects;

  struct Job {
    std::size_t object;
    int pose;
    Pose2 palm;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < objects.objects.size(); ++i) {
    try {
      const auto poses = sample_poses(design, objects.objects[i].object, poses_per_object,
                                      detail::mix_seed(options.pose_seed, i), options.jitter);
      for (int k = 0; k < poses_per_object; ++k) jobs.push_back({i, k, poses[k]});
    } catch (const std::runtime_error& e) {
      pool.sampling_failures.push_back(objects.objects[i].id + ": " + e.what());
    }
  }
  pool.records = parallel_map(jobs.size(), [&](std::size_t j) {
    return evaluate_grasp(design, objects, jobs[j].object, jobs[j].pose, jobs[j].palm, cfg, options.quality);
  });
  return pool;
}

}  // namespace tendongrip
