#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <set>
#include <string>

#include <gtest/gtest.h>

#include "tendongrip/io.hpp"

namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("tendongrip_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  CliRun run(const std::string& args) const {
    const fs::path log = dir_ / "stdout.txt";
    const std::string cmd = "cd '" + dir_.string() + "' && TENDONGRIP_THREADS=2 '" + std::string(TENDONGRIP_CLI) +
                            "' " + args + " > '" + log.string() + "' 2>&1";
    const int status = std::system(cmd.c_str());
    CliRun r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    r.out = ss.str();
    return r;
  }

  void write(const std::string& name, const std::string& text) const { std::ofstream(dir_ / name) << text; }
  std::string read(const std::string& name) const { return tendongrip::read_text_file(dir_ / name); }
  bool exists(const std::string& name) const { return fs::exists(dir_ / name); }

  // Four objects, two poses each: enough for every subcommand, fast to build.
  void small_pool(const std::string& name) const {
    write("small.json", R"({"objects": {"discs": 2, "rectangles": 1, "polygons": 1}, "poses_per_object": 2})");
    ASSERT_EQ(run("pool --config small.json --out " + name).code, 0);
  }

  fs::path dir_;
};

int count_svg(const fs::path& dir) {
  int n = 0;
  for (const auto& e : fs::directory_iterator(dir)) n += e.path().extension() == ".svg";
  return n;
}

}  // namespace

TEST_F(Cli, GenObjectsDefaultWritesEighteen) {
  const CliRun r = run("gen-objects --out objects.json");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("repro:"), std::string::npos);
  const tendongrip::ObjectSet set = tendongrip::load_objects(dir_ / "objects.json");
  EXPECT_EQ(set.objects.size(), 18u);
}

TEST_F(Cli, GenObjectsSameSeedIsIdentical) {
  ASSERT_EQ(run("gen-objects --seed 9 --out a.json").code, 0);
  ASSERT_EQ(run("gen-objects --seed 9 --out b.json").code, 0);
  ASSERT_EQ(run("gen-objects --seed 10 --out c.json").code, 0);
  EXPECT_EQ(read("a.json"), read("b.json"));
  EXPECT_NE(read("a.json"), read("c.json"));
}

TEST_F(Cli, GenObjectsFromSpecFile) {
  write("spec.json", R"({"discs": 3, "rectangles": 0, "polygons": 1})");
  ASSERT_EQ(run("gen-objects --spec spec.json --out o.json").code, 0);
  EXPECT_EQ(tendongrip::load_objects(dir_ / "o.json").objects.size(), 4u);
}

TEST_F(Cli, MalformedInputsExitTwo) {
  write("spec.json", "{ \"discs\": ");
  CliRun r = run("gen-objects --spec spec.json --out o.json");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("error"), std::string::npos);
  EXPECT_FALSE(exists("o.json"));

  write("cfg.json", R"({"objects": {"discs": "many"}})");
  EXPECT_EQ(run("gen-objects --config cfg.json").code, 2);
  write("cfg.json", R"({"flavour": 1})");
  EXPECT_EQ(run("gen-objects --config cfg.json").code, 2);

  EXPECT_EQ(run("gen-objects --spec missing.json").code, 2);
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("juggle").code, 2);
  EXPECT_EQ(run("close --svg maybe").code, 2);
  EXPECT_EQ(run("optimize --self-test --iterations 0").code, 2);
  EXPECT_EQ(run("close --object-at 1,2,3,4").code, 2);
  EXPECT_EQ(run("close --disc -5").code, 2);
}

TEST_F(Cli, CloseNoContactExitsZero) {
  const CliRun r = run("close --disc 20 --object-at 0,400 --svg off --out res");
  EXPECT_EQ(r.code, 0) << r.out;
  const tendongrip::Json j = tendongrip::Json::parse(read("res/result.json"));
  EXPECT_EQ(j["outcome"], "NoContact");
  EXPECT_EQ(j["kind"], "closure");
  EXPECT_EQ(count_svg(dir_ / "res"), 0);
}

TEST_F(Cli, CloseEnvelopeWritesFrames) {
  const CliRun r = run("close --disc 50 --object-at 0,70 --out res");
  EXPECT_EQ(r.code, 0) << r.out;
  const tendongrip::Json j = tendongrip::Json::parse(read("res/result.json"));
  EXPECT_EQ(j["outcome"], "Envelope");
  std::set<std::string> touched;
  for (const auto& c : j["contacts"]) touched.insert(std::to_string(c["finger"].get<int>()) + c["link"].get<std::string>());
  EXPECT_TRUE(touched.count("0proximal") && touched.count("0distal") && touched.count("1proximal") &&
              touched.count("1distal"));
  EXPECT_TRUE(exists("res/composite.svg"));
  EXPECT_GE(count_svg(dir_ / "res"), 3);
  const std::string svg = read("res/composite.svg");
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("Envelope"), std::string::npos);
}

TEST_F(Cli, OptimizeSingleIterationTrace) {
  const CliRun r = run("optimize --self-test --iterations 1 --out opt");
  // One proposal rarely recovers the optimum; the trace is what matters here.
  EXPECT_TRUE(r.code == 0 || r.code == 1) << r.out;
  const std::string csv = read("opt/trace.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
  EXPECT_EQ(csv.rfind("iteration,", 0), 0u);
}

TEST_F(Cli, OptimizeSelfTestRecovers) {
  const CliRun r = run("optimize --self-test --seed 4 --out opt");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("recovered"), std::string::npos);
}

TEST_F(Cli, OptimizeOnPoolWritesDesign) {
  small_pool("pool.json");
  const CliRun r = run("optimize --pool pool.json --iterations 5 --seed 3 --out opt");
  EXPECT_EQ(r.code, 0) << r.out;
  const tendongrip::GripperDesign d = tendongrip::load_design(dir_ / "opt/design.json");
  EXPECT_GE(d.knuckle_len, 25.0);
  EXPECT_LE(d.knuckle_len, 35.0);
  const tendongrip::Json j = tendongrip::Json::parse(read("opt/design.json"));
  EXPECT_EQ(j["optimization"]["iterations"], 5);
  const std::string trace = read("opt/trace.csv");
  ASSERT_EQ(run("optimize --pool pool.json --iterations 5 --seed 3 --out opt2").code, 0);
  EXPECT_EQ(read("opt2/trace.csv"), trace);
  EXPECT_EQ(read("opt2/design.json"), read("opt/design.json"));
}

TEST_F(Cli, PoolQualityReportAndFit) {
  small_pool("pool.json");
  const tendongrip::GraspPool pool = tendongrip::load_pool(dir_ / "pool.json");
  EXPECT_EQ(pool.records.size(), 8u);

  CliRun r = run("quality --pool pool.json");
  EXPECT_TRUE(r.code == 0 || r.code == 1) << r.out;
  EXPECT_NE(r.out.find("N = 8"), std::string::npos);

  r = run("report --pool pool.json --out rep");
  EXPECT_EQ(r.code, 0) << r.out;
  const std::string table = read("rep/summary.csv");
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 1 + 4);

  r = run("fit-ratio --pool pool.json");
  EXPECT_TRUE(r.code == 0 || r.code == 1) << r.out;
  EXPECT_NE(r.out.find("N = 8"), std::string::npos);
}

TEST_F(Cli, FitRatioOnCollinearPool) {
  small_pool("pool.json");
  tendongrip::GraspPool pool = tendongrip::load_pool(dir_ / "pool.json");
  for (tendongrip::GraspRecord& rec : pool.records) {
    rec.outcome = tendongrip::Outcome::Envelope;
    rec.quality.force_closure = true;
    rec.quality.volume = 1.0;
    for (std::size_t f = 0; f < rec.displacement.size(); ++f) {
      rec.displacement[f].proximal = 0.1 * static_cast<double>(rec.pose_index + f + 1);
      rec.displacement[f].distal = 1.35 * rec.displacement[f].proximal;
    }
  }
  tendongrip::save_pool(dir_ / "collinear.json", pool);
  const CliRun r = run("fit-ratio --pool collinear.json");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("pulley ratio 1.350000"), std::string::npos) << r.out;
}

TEST_F(Cli, EmptyPoolExitsTwo) {
  small_pool("pool.json");
  tendongrip::GraspPool pool = tendongrip::load_pool(dir_ / "pool.json");
  pool.records.clear();
  tendongrip::save_pool(dir_ / "empty.json", pool);
  EXPECT_EQ(run("fit-ratio --pool empty.json").code, 2);
  EXPECT_EQ(run("quality --pool empty.json").code, 2);
  EXPECT_EQ(run("optimize --pool empty.json --iterations 2").code, 2);
}

TEST_F(Cli, PoolRerunIsByteIdentical) {
  small_pool("a.json");
  small_pool("b.json");
  EXPECT_EQ(read("a.json"), read("b.json"));
  write("threads.json", R"({"objects": {"discs": 2, "rectangles": 1, "polygons": 1}, "poses_per_object": 2})");
  const std::string cmd = "cd '" + dir_.string() + "' && TENDONGRIP_THREADS=1 '" + std::string(TENDONGRIP_CLI) +
                          "' pool --config threads.json --out c.json > /dev/null";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_EQ(read("a.json"), read("c.json"));
}
