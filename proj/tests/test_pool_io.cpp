#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <stdexcept>

#include <gtest/gtest.h>

#include "tendongrip/io.hpp"
#include "tendongrip/parallel.hpp"
#include "tendongrip/pool.hpp"

using namespace tendongrip;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("tendongrip_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ObjectSet few_objects() {
  ObjectSetSpec spec;
  spec.discs = 2;
  spec.rectangles = 1;
  spec.polygons = 1;
  spec.seed = 5;
  return gen_objects(spec);
}

}  // namespace

TEST(GenObjects, SingleFixedSizeDisc) {
  ObjectSetSpec spec;
  spec.discs = 1;
  spec.rectangles = spec.polygons = 0;
  spec.disc_diameter = {50.0, 50.0};
  const ObjectSet set = gen_objects(spec);
  ASSERT_EQ(set.objects.size(), 1u);
  const auto* c = std::get_if<Circle>(&set.objects[0].object.shape);
  ASSERT_NE(c, nullptr);
  EXPECT_EQ(c->radius, 25.0);
}

TEST(GenObjects, DefaultSetHasEighteenObjects) {
  const ObjectSet set = gen_objects(ObjectSetSpec{});
  ASSERT_EQ(set.objects.size(), 18u);
  int discs = 0, rects = 0, polys = 0;
  for (const ObjectDef& d : set.objects) {
    discs += d.family == "disc";
    rects += d.family == "rect";
    polys += d.family == "poly";
    EXPECT_NO_THROW(validate_shape(d.object.shape));
    EXPECT_NEAR(d.object.centroid().norm(), 0.0, 1e-9);
    EXPECT_GE(d.object.mu, 0.3);
    EXPECT_LE(d.object.mu, 0.7);
  }
  EXPECT_EQ(discs, 6);
  EXPECT_EQ(rects, 6);
  EXPECT_EQ(polys, 6);
}

TEST(GenObjects, SeededAndValidated) {
  EXPECT_EQ(dump(objects_document(gen_objects(ObjectSetSpec{}))), dump(objects_document(gen_objects(ObjectSetSpec{}))));
  ObjectSetSpec other;
  other.seed = 2;
  EXPECT_NE(dump(objects_document(gen_objects(ObjectSetSpec{}))), dump(objects_document(gen_objects(other))));
  ObjectSetSpec bad;
  bad.discs = -1;
  EXPECT_THROW(gen_objects(bad), std::invalid_argument);
  bad = ObjectSetSpec{};
  bad.rect_side = {40.0, 30.0};
  EXPECT_THROW(gen_objects(bad), std::invalid_argument);
}

TEST(SamplePoses, UnjitteredRing) {
  const GripperDesign d;
  ObjectInstance obj;
  obj.shape = Circle{20.0};
  const auto poses = sample_poses(d, obj, 4, 1, PoseJitter{0.0, 0.0, 0.0});
  ASSERT_EQ(poses.size(), 4u);
  for (int k = 0; k < 4; ++k) {
    const double phi = std::atan2(poses[k].y, poses[k].x);
    EXPECT_NEAR(std::remainder(phi - k * std::numbers::pi / 2, 2 * std::numbers::pi), 0.0, 1e-9);
    // The palm's closing axis points back at the object.
    const Vec2 axis = poses[k].rotate(Vec2::UnitY());
    EXPECT_NEAR(axis.dot(-Vec2(poses[k].x, poses[k].y).normalized()), 1.0, 1e-9);
  }
}

TEST(SamplePoses, CollisionFreeAndSeeded) {
  const GripperDesign d;
  for (const ObjectDef& def : gen_objects(ObjectSetSpec{}).objects) {
    const auto poses = sample_poses(d, def.object, 5, 77);
    const auto again = sample_poses(d, def.object, 5, 77);
    for (std::size_t k = 0; k < poses.size(); ++k) {
      EXPECT_EQ(poses[k].x, again[k].x);
      EXPECT_EQ(poses[k].theta, again[k].theta);
      ObjectInstance local = def.object;
      local.pose = poses[k].inverse().compose(def.object.pose);
      EXPECT_FALSE(open_gripper_collides(d, local)) << def.id << " pose " << k;
    }
  }
  EXPECT_THROW(sample_poses(d, ObjectInstance{}, 0, 1), std::invalid_argument);
}

TEST(BuildPool, SizeOrderAndDeterminism) {
  const ObjectSet set = few_objects();
  const GraspPool pool = build_pool(GripperDesign{}, set, 3, ClosureConfig{});
  ASSERT_EQ(pool.records.size(), 12u);
  EXPECT_TRUE(pool.sampling_failures.empty());
  for (std::size_t i = 0; i < pool.records.size(); ++i) {
    EXPECT_EQ(pool.records[i].object_index, i / 3);
    EXPECT_EQ(pool.records[i].pose_index, static_cast<int>(i % 3));
    EXPECT_EQ(pool.records[i].object_id, set.objects[i / 3].id);
    const QualityResult& q = pool.records[i].quality;
    if (q.volume > 0.0) EXPECT_TRUE(q.force_closure);
    if (!q.force_closure) EXPECT_EQ(q.volume, 0.0);
  }
  const GraspPool again = build_pool(GripperDesign{}, set, 3, ClosureConfig{});
  EXPECT_EQ(dump(pool_document(pool)), dump(pool_document(again)));
  EXPECT_THROW(build_pool(GripperDesign{}, ObjectSet{}, 3, ClosureConfig{}), std::invalid_argument);
}

TEST(BuildPool, SaveLoadSaveIsByteIdentical) {
  const fs::path dir = scratch_dir("pool");
  const GraspPool pool = build_pool(GripperDesign{}, few_objects(), 2, ClosureConfig{});
  save_pool(dir / "a.json", pool);
  const GraspPool loaded = load_pool(dir / "a.json");
  save_pool(dir / "b.json", loaded);
  EXPECT_EQ(read_text_file(dir / "a.json"), read_text_file(dir / "b.json"));
  ASSERT_EQ(loaded.records.size(), pool.records.size());
  for (std::size_t i = 0; i < pool.records.size(); ++i) {
    EXPECT_EQ(loaded.records[i].quality.volume, pool.records[i].quality.volume);
    EXPECT_EQ(loaded.records[i].palm_pose.theta, pool.records[i].palm_pose.theta);
    EXPECT_EQ(loaded.records[i].outcome, pool.records[i].outcome);
  }
  fs::remove_all(dir);
}

TEST(Documents, ObjectsAndDesignRoundTrip) {
  const fs::path dir = scratch_dir("docs");
  const ObjectSet set = gen_objects(ObjectSetSpec{});
  save_objects(dir / "objects.json", set);
  save_objects(dir / "objects2.json", load_objects(dir / "objects.json"));
  EXPECT_EQ(read_text_file(dir / "objects.json"), read_text_file(dir / "objects2.json"));

  GripperDesign d;
  d.net = TendonNetwork::spring_loaded({12.0, 9.0}, {3.0, 0.0}, {1.5, 2.5});
  d.proximal_len = 57.123456789012345;
  save_design(dir / "design.json", d);
  const GripperDesign back = load_design(dir / "design.json");
  EXPECT_EQ(back.proximal_len, d.proximal_len);
  EXPECT_EQ(back.net.mode, MechanismMode::SpringLoaded);
  EXPECT_EQ(back.net.tendon_stiffness, d.net.tendon_stiffness);
  fs::remove_all(dir);
}

TEST(Documents, RejectMalformedInput) {
  const fs::path dir = scratch_dir("bad");
  write_text_file(dir / "garbage.json", "{ not json");
  EXPECT_THROW(load_objects(dir / "garbage.json"), FormatError);
  write_text_file(dir / "unknown.json", R"({"format_version": 1, "kind": "design", "knuckle_len": 30, "wings": 2})");
  EXPECT_THROW(load_design(dir / "unknown.json"), FormatError);
  write_text_file(dir / "version.json", R"({"format_version": 99, "kind": "design"})");
  EXPECT_THROW(load_design(dir / "version.json"), FormatError);
  write_text_file(dir / "kind.json", R"({"format_version": 1, "kind": "pool"})");
  EXPECT_THROW(load_design(dir / "kind.json"), FormatError);
  write_text_file(dir / "type.json", R"({"format_version": 1, "kind": "design", "knuckle_len": "long"})");
  EXPECT_THROW(load_design(dir / "type.json"), FormatError);
  EXPECT_THROW(load_pool(dir / "missing.json"), std::system_error);
  fs::remove_all(dir);
}

TEST(Csv, TraceHasOneRowPerProposal) {
  SAConfig cfg;
  cfg.iterations = 4;
  const OptimizationTrace t = sa_optimize([](const LinkLengths& x) { return -x[0]; }, cfg);
  const std::string csv = trace_csv(t);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 4);
  EXPECT_EQ(format_number(0.1), "0.10000000000000001");
}

TEST(ParallelMap, OrderedAndRethrowsLowestIndex) {
  const auto v = parallel_map(100, [](std::size_t i) { return static_cast<int>(i * i); }, 4);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(v[i], static_cast<int>(i * i));
  try {
    parallel_map(50, [](std::size_t i) -> int {
      if (i == 7 || i == 30) throw std::runtime_error("fail " + std::to_string(i));
      return 0;
    }, 4);
    FAIL() << "expected an exception";
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "fail 7");
  }
}
