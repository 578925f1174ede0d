// tendongrip command-line workbench.

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "CLI11.hpp"

#include "tendongrip/closure.hpp"
#include "tendongrip/io.hpp"
#include "tendongrip/optimize.hpp"
#include "tendongrip/pool.hpp"
#include "tendongrip/quality.hpp"
#include "tendongrip/svg.hpp"

namespace fs = std::filesystem;
using namespace tendongrip;

namespace {

constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

// Thrown for bad invocations that CLI11 cannot catch by itself.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Everything a run can be configured with.  Built-in defaults, then the
// --config file, then command-line flags.
struct RunConfig {
  ObjectSetSpec objects;
  GripperDesign design;
  ClosureConfig closure;
  SAConfig sa;
  PoolOptions pool;
  int poses_per_object = 43;
};

RunConfig load_run_config(const std::string& path) {
  RunConfig rc;
  if (path.empty()) return rc;
  const Json j = parse_json(read_text_file(path), path);
  try {
    detail::known_keys(j, {"objects", "design", "closure", "sa", "pool", "poses_per_object"}, "run config");
    detail::take(j, "objects", rc.objects);
    if (j.contains("design")) rc.design = j["design"].get<GripperDesign>();
    detail::take(j, "closure", rc.closure);
    detail::take(j, "sa", rc.sa);
    detail::take(j, "pool", rc.pool);
    detail::take(j, "poses_per_object", rc.poses_per_object);
  } catch (const Json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  return rc;
}

std::string repro_line(int argc, char** argv) {
  std::string line = "repro:";
  for (int i = 0; i < argc; ++i) {
    std::string a = argv[i];
    if (a.find_first_of(" \t\"'") != std::string::npos) a = "'" + a + "'";
    line += " " + a;
  }
  return line;
}

std::array<double, 3> parse_triple(const std::string& text, const char* what) {
  std::array<double, 3> v{};
  std::stringstream ss(text);
  std::string item;
  std::size_t k = 0;
  while (std::getline(ss, item, ',')) {
    if (k >= 3) throw UsageError(std::string(what) + " takes at most three comma-separated numbers");
    try {
      v[k++] = std::stod(item);
    } catch (const std::exception&) {
      throw UsageError(std::string(what) + ": not a number: " + item);
    }
  }
  if (k < 2) throw UsageError(std::string(what) + " needs at least x,y");
  return v;
}

void print_outcomes(const GraspPool& pool) {
  std::map<std::string, int> counts;
  int valid = 0;
  double q = 0.0;
  for (const GraspRecord& r : pool.records) {
    ++counts[std::string(to_string(r.outcome))];
    if (r.valid()) {
      ++valid;
      q += r.quality.volume;
    }
  }
  std::printf("grasps: %zu (valid %d)\n", pool.records.size(), valid);
  for (const auto& [name, n] : counts) std::printf("  %-10s %d\n", name.c_str(), n);
  std::printf("cumulative quality Q = %.6g\n", q);
  for (const std::string& f : pool.sampling_failures) std::printf("  pose sampling failed: %s\n", f.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Design workbench for a tendon-driven two-finger gripper"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::uint64_t> seed;
  std::string config_path, out_path, svg = "on";
  std::optional<int> iterations;
  bool self_test = false;
  app.add_option("--seed", seed, "RNG seed");
  app.add_option("--config", config_path, "run configuration (JSON)")->check(CLI::ExistingFile);
  app.add_option("--out", out_path, "output file or directory");
  app.add_option("--svg", svg, "write SVG snapshots")->check(CLI::IsMember({"on", "off"}));
  app.add_option("--iterations", iterations, "annealing iterations")->check(CLI::PositiveNumber);
  app.add_flag("--self-test", self_test, "optimize a planted objective instead of grasp quality");

  std::string objects_path, design_path, pool_path, object_id, spec_path;
  double disc_diameter = 50.0;
  std::string object_at = "0,70", palm_at = "0,0,0";
  bool light = false;
  int poses = 0;

  auto* gen = app.add_subcommand("gen-objects", "generate a synthetic object set");
  gen->add_option("--spec", spec_path, "object set spec (JSON)")->check(CLI::ExistingFile);

  auto* close = app.add_subcommand("close", "simulate one closure");
  close->add_option("--design", design_path, "design JSON")->check(CLI::ExistingFile);
  close->add_option("--objects", objects_path, "object set JSON")->check(CLI::ExistingFile);
  close->add_option("--object", object_id, "object id within --objects");
  close->add_option("--disc", disc_diameter, "disc diameter in mm when no object set is given");
  close->add_option("--object-at", object_at, "object pose x,y[,theta] in the palm frame");
  close->add_option("--palm", palm_at, "palm pose x,y[,theta] in the world frame");
  close->add_flag("--light", light, "the object is light and can be pushed");

  auto* pool_cmd = app.add_subcommand("pool", "build a grasp pool");
  pool_cmd->add_option("--design", design_path, "design JSON")->check(CLI::ExistingFile);
  pool_cmd->add_option("--objects", objects_path, "object set JSON (default: generated)")->check(CLI::ExistingFile);
  pool_cmd->add_option("--poses", poses, "palm poses per object")->check(CLI::PositiveNumber);

  auto* quality = app.add_subcommand("quality", "cumulative grasp quality of a design over a pool");
  quality->add_option("--pool", pool_path, "pool JSON")->required()->check(CLI::ExistingFile);
  quality->add_option("--design", design_path, "design to evaluate (default: the pool's)")->check(CLI::ExistingFile);

  auto* optimize = app.add_subcommand("optimize", "anneal the link lengths");
  optimize->add_option("--pool", pool_path, "pool JSON")->check(CLI::ExistingFile);
  optimize->add_option("--objects", objects_path, "object set JSON used to build a pool")->check(CLI::ExistingFile);
  optimize->add_option("--poses", poses, "palm poses per object when building a pool")->check(CLI::PositiveNumber);

  auto* fit = app.add_subcommand("fit-ratio", "fit the pulley ratio to pooled joint displacements");
  fit->add_option("--pool", pool_path, "pool JSON")->required()->check(CLI::ExistingFile);

  auto* report = app.add_subcommand("report", "per-object summary of a pool");
  report->add_option("--pool", pool_path, "pool JSON")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    std::printf("%s\n", repro_line(argc, argv).c_str());
    std::fflush(stdout);
    RunConfig rc = load_run_config(config_path);
    if (!spec_path.empty())
      rc.objects = load_document<ObjectSetSpec>(spec_path, [](const Json& j) { return j.get<ObjectSetSpec>(); });
    if (!design_path.empty()) rc.design = load_design(design_path);
    if (iterations) rc.sa.iterations = *iterations;
    if (seed) {
      rc.objects.seed = *seed;
      rc.pool.pose_seed = *seed;
      rc.sa.seed = *seed;
    }
    if (poses > 0) rc.poses_per_object = poses;
    const bool want_svg = svg == "on";

    if (*gen) {
      const ObjectSet set = gen_objects(rc.objects);
      const fs::path out = out_path.empty() ? "objects.json" : out_path;
      save_objects(out, set);
      std::map<std::string, int> families;
      for (const ObjectDef& d : set.objects) ++families[d.family];
      std::printf("%zu objects (seed %llu) -> %s\n", set.objects.size(),
                  static_cast<unsigned long long>(set.seed), out.string().c_str());
      for (const auto& [f, n] : families) std::printf("  %-7s %d\n", f.c_str(), n);
      return 0;
    }

    if (*close) {
      ObjectInstance obj;
      if (!objects_path.empty()) {
        const ObjectSet set = load_objects(objects_path);
        const auto it = std::find_if(set.objects.begin(), set.objects.end(),
                                     [&](const ObjectDef& d) { return d.id == object_id; });
        if (it == set.objects.end()) throw UsageError("object '" + object_id + "' not found in " + objects_path);
        obj = it->object;
      } else {
        if (!(disc_diameter > 0.0)) throw UsageError("--disc must be positive");
        obj.shape = Circle{0.5 * disc_diameter};
      }
      if (light) obj.mass_class = MassClass::Light;
      const auto at = parse_triple(object_at, "--object-at");
      const auto palm_v = parse_triple(palm_at, "--palm");
      const Pose2 palm{palm_v[0], palm_v[1], palm_v[2]};
      obj.pose = palm.compose(Pose2{at[0], at[1], at[2]});

      const ClosureResult r = close_grasp(rc.design, obj, palm, rc.closure);
      ObjectInstance held = obj;
      held.pose = r.object_pose;
      const QualityResult q = grasp_quality(r.contacts, FrictionModel{obj.mu, rc.pool.quality.pyramid_sides},
                                            object_grasp_frame(held, rc.pool.quality.line_half_width));
      std::printf("outcome %s after %d steps, %zu contacts (%d on moving links)\n",
                  std::string(to_string(r.outcome)).c_str(), r.steps, r.contacts.size(), r.moving_contact_count());
      std::printf("q = [%.4f %.4f %.4f %.4f]\n", r.q_final[0], r.q_final[1], r.q_final[2], r.q_final[3]);
      std::printf("force closure %s, volume %.6g\n", q.force_closure ? "yes" : "no", q.volume);

      const fs::path dir = out_path.empty() ? "close_out" : out_path;
      fs::create_directories(dir);
      Json contacts = Json::array();
      for (std::size_t i = 0; i < r.contacts.size(); ++i) {
        const ContactPoint& c = r.contacts[i];
        contacts.push_back(Json{{"finger", c.finger},
                                {"link", std::string(to_string(c.link))},
                                {"point", Json::array({c.point.x(), c.point.y()})},
                                {"normal", Json::array({c.normal.x(), c.normal.y()})},
                                {"force", r.contact_forces[i]}});
      }
      const Json doc{{"format_version", kFormatVersion},
                     {"kind", "closure"},
                     {"outcome", std::string(to_string(r.outcome))},
                     {"steps", r.steps},
                     {"q_final", r.q_final},
                     {"object_pose", r.object_pose},
                     {"contact_losses", r.contact_losses},
                     {"self_collision", r.self_collision},
                     {"contacts", contacts},
                     {"quality", q}};
      write_text_file(dir / "result.json", dump(doc));
      if (want_svg) {
        ObjectInstance local = obj;
        const auto frames = keyframes(r, 6);
        for (std::size_t k = 0; k < frames.size(); ++k) {
          char name[32];
          std::snprintf(name, sizeof name, "frame_%02zu.svg", k);
          write_text_file(dir / name, render_svg(rc.design, local, std::span(&frames[k], 1)));
        }
        std::vector<SvgFrame> composite = frames;
        for (std::size_t k = 0; k < composite.size(); ++k)
          composite[k].opacity = 0.25 + 0.75 * static_cast<double>(k + 1) / static_cast<double>(composite.size());
        write_text_file(dir / "composite.svg",
                        render_svg(rc.design, local, composite, std::string(to_string(r.outcome))));
      }
      std::printf("wrote %s\n", dir.string().c_str());
      return 0;
    }

    if (*pool_cmd) {
      const ObjectSet set = objects_path.empty() ? gen_objects(rc.objects) : load_objects(objects_path);
      const GraspPool pool = build_pool(rc.design, set, rc.poses_per_object, rc.closure, rc.pool);
      const fs::path out = out_path.empty() ? "pool.json" : out_path;
      save_pool(out, pool);
      print_outcomes(pool);
      std::printf("wrote %s\n", out.string().c_str());
      return 0;
    }

    if (*quality) {
      const GraspPool pool = load_pool(pool_path);
      if (pool.records.empty()) throw UsageError("pool is empty");
      const GripperDesign design = design_path.empty() ? pool.design : rc.design;
      const double q = cumulative_quality(design, pool);
      std::printf("pool %s: N = %zu, Q = %.9g\n", pool_path.c_str(), pool.records.size(), q);
      if (!(q > 0.0)) {
        std::printf("no valid grasps\n");
        return kExitDomain;
      }
      return 0;
    }

    if (*optimize) {
      const fs::path dir = out_path.empty() ? "optimize_out" : out_path;
      OptimizationTrace trace;
      GripperDesign best_design = rc.design;
      if (self_test) {
        if (!iterations) rc.sa.iterations = 500;
        const LinkLengths planted{34.2, 58.4, 44.4};
        trace = sa_optimize(
            [&](const LinkLengths& x) {
              double s = 0.0;
              for (std::size_t k = 0; k < 3; ++k) s += (x[k] - planted[k]) * (x[k] - planted[k]);
              return -s;
            },
            rc.sa);
        bool ok = true;
        for (std::size_t k = 0; k < 3; ++k) ok = ok && std::abs(trace.best[k] - planted[k]) <= 1.0;
        std::printf("planted optimum (34.2, 58.4, 44.4); found (%.3f, %.3f, %.3f) -> %s\n", trace.best[0],
                    trace.best[1], trace.best[2], ok ? "recovered" : "missed");
        fs::create_directories(dir);
        write_text_file(dir / "trace.csv", trace_csv(trace));
        return ok ? 0 : kExitDomain;
      }

      GraspPool pool;
      if (!pool_path.empty()) {
        pool = load_pool(pool_path);
      } else {
        const ObjectSet set = objects_path.empty() ? gen_objects(rc.objects) : load_objects(objects_path);
        const GripperDesign start = with_lengths(rc.design, rc.sa.start());
        pool = build_pool(start, set, rc.poses_per_object, rc.closure, rc.pool);
      }
      if (pool.records.empty()) throw UsageError("pool is empty");
      const GripperDesign base = pool_path.empty() ? rc.design : pool.design;
      trace = sa_optimize([&](const LinkLengths& x) { return cumulative_quality(with_lengths(base, x), pool); },
                          rc.sa);
      best_design = with_lengths(base, trace.best);
      fs::create_directories(dir);
      write_text_file(dir / "trace.csv", trace_csv(trace));
      Json doc = design_document(best_design);
      doc["optimization"] = Json{{"iterations", rc.sa.iterations},
                                 {"seed", rc.sa.seed},
                                 {"pool_size", pool.records.size()},
                                 {"start_q", trace.start_q},
                                 {"best_q", trace.best_q},
                                 {"best_iteration", trace.best_iteration}};
      write_text_file(dir / "design.json", dump(doc));
      std::printf("best lengths: knuckle %.2f, proximal %.2f, distal %.2f mm\n", trace.best[0], trace.best[1],
                  trace.best[2]);
      std::printf("best Q = %.9g (start %.9g) at iteration %d of %d\n", trace.best_q, trace.start_q,
                  trace.best_iteration, rc.sa.iterations);
      if (!(trace.best_q > 0.0)) {
        std::printf("no valid grasps for any visited design\n");
        return kExitDomain;
      }
      return 0;
    }

    if (*fit) {
      const GraspPool pool = load_pool(pool_path);
      if (pool.records.empty()) throw UsageError("pool is empty");
      const std::vector<RatioSample> samples = harvest_ratio_samples(pool);
      if (samples.size() < 2) {
        std::printf("pool N = %zu: too few valid grasps for a fit\n", pool.records.size());
        return kExitDomain;
      }
      const RatioFit f = fit_pulley_ratio(samples);
      std::printf("pool N = %zu, samples %zu\n", pool.records.size(), f.samples);
      std::printf("pulley ratio %.6f (residual RMS %.6f rad)\n", f.rho, f.rms);
      return 0;
    }

    if (*report) {
      const GraspPool pool = load_pool(pool_path);
      print_outcomes(pool);
      const std::string table = summary_csv(pool);
      if (!out_path.empty()) {
        fs::create_directories(out_path);
        write_text_file(fs::path(out_path) / "summary.csv", table);
        std::printf("wrote %s\n", (fs::path(out_path) / "summary.csv").string().c_str());
      } else {
        std::printf("%s", table.c_str());
      }
      return pool.records.empty() ? kExitDomain : 0;
    }
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::system_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitDomain;
  }
  return 0;
}
