#pragma once

// JSON documents (objects, designs, pools, configs) and CSV tables.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "tendongrip/closure.hpp"
#include "tendongrip/optimize.hpp"
#include "tendongrip/pool.hpp"
#include "tendongrip/quality.hpp"

namespace tendongrip {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

/// Bad file contents: unparsable, wrong types, unknown keys, wrong version.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

template <class T>
void take(const Json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) it->get_to(out);
}

inline void known_keys(const Json& j, std::initializer_list<const char*> keys, const char* what) {
  if (!j.is_object()) throw FormatError(std::string(what) + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : keys) ok = ok || it.key() == k;
    if (!ok) throw FormatError(std::string("unknown key '") + it.key() + "' in " + what);
  }
}

}  // namespace detail

// --- plain types -----------------------------------------------------------

inline void to_json(Json& j, const Pose2& p) { j = Json{{"x", p.x}, {"y", p.y}, {"theta", p.theta}}; }
inline void from_json(const Json& j, Pose2& p) {
  detail::known_keys(j, {"x", "y", "theta"}, "pose");
  detail::take(j, "x", p.x);
  detail::take(j, "y", p.y);
  detail::take(j, "theta", p.theta);
}

inline void to_json(Json& j, const Range& r) { j = Json::array({r.lo, r.hi}); }
inline void from_json(const Json& j, Range& r) {
  if (!j.is_array() || j.size() != 2) throw FormatError("range must be [lo, hi]");
  r = {j[0].get<double>(), j[1].get<double>()};
}

inline void to_json(Json& j, const Shape2D& s) {
  if (const auto* c = std::get_if<Circle>(&s)) {
    j = Json{{"type", "circle"}, {"radius", c->radius}};
    return;
  }
  Json verts = Json::array();
  for (const Vec2& v : std::get<ConvexPolygon>(s).vertices) verts.push_back(Json::array({v.x(), v.y()}));
  j = Json{{"type", "polygon"}, {"vertices", verts}};
}
inline void from_json(const Json& j, Shape2D& s) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "circle") {
    detail::known_keys(j, {"type", "radius"}, "circle");
    s = Circle{j.at("radius").get<double>()};
  } else if (type == "polygon") {
    detail::known_keys(j, {"type", "vertices"}, "polygon");
    ConvexPolygon poly;
    for (const Json& v : j.at("vertices")) {
      if (!v.is_array() || v.size() != 2) throw FormatError("polygon vertex must be [x, y]");
      poly.vertices.emplace_back(v[0].get<double>(), v[1].get<double>());
    }
    s = std::move(poly);
  } else {
    throw FormatError("unknown shape type: " + type);
  }
}

inline void to_json(Json& j, const ObjectDef& d) {
  j = Json{{"id", d.id},
           {"family", d.family},
           {"shape", d.object.shape},
           {"pose", d.object.pose},
           {"mu", d.object.mu},
           {"mass_class", std::string(to_string(d.object.mass_class))}};
}
inline void from_json(const Json& j, ObjectDef& d) {
  detail::known_keys(j, {"id", "family", "shape", "pose", "mu", "mass_class"}, "object");
  d.id = j.at("id").get<std::string>();
  detail::take(j, "family", d.family);
  d.object.shape = j.at("shape").get<Shape2D>();
  detail::take(j, "pose", d.object.pose);
  detail::take(j, "mu", d.object.mu);
  if (j.contains("mass_class")) d.object.mass_class = mass_class_from_string(j["mass_class"].get<std::string>());
  validate_shape(d.object.shape);
}

inline void to_json(Json& j, const ObjectSetSpec& s) {
  j = Json{{"discs", s.discs},
           {"rectangles", s.rectangles},
           {"polygons", s.polygons},
           {"bottles", s.bottles},
           {"disc_diameter", s.disc_diameter},
           {"rect_side", s.rect_side},
           {"polygon_diameter", s.polygon_diameter},
           {"polygon_sides", Json::array({s.polygon_sides_min, s.polygon_sides_max})},
           {"bottle_diameter", s.bottle_diameter},
           {"mu", s.mu},
           {"mass_class", std::string(to_string(s.mass_class))},
           {"seed", s.seed}};
}
inline void from_json(const Json& j, ObjectSetSpec& s) {
  detail::known_keys(j,
                     {"discs", "rectangles", "polygons", "bottles", "disc_diameter", "rect_side", "polygon_diameter",
                      "polygon_sides", "bottle_diameter", "mu", "mass_class", "seed"},
                     "object set spec");
  detail::take(j, "discs", s.discs);
  detail::take(j, "rectangles", s.rectangles);
  detail::take(j, "polygons", s.polygons);
  detail::take(j, "bottles", s.bottles);
  detail::take(j, "disc_diameter", s.disc_diameter);
  detail::take(j, "rect_side", s.rect_side);
  detail::take(j, "polygon_diameter", s.polygon_diameter);
  if (j.contains("polygon_sides")) {
    const Json& p = j["polygon_sides"];
    if (!p.is_array() || p.size() != 2) throw FormatError("polygon_sides must be [min, max]");
    s.polygon_sides_min = p[0].get<int>();
    s.polygon_sides_max = p[1].get<int>();
  }
  detail::take(j, "bottle_diameter", s.bottle_diameter);
  detail::take(j, "mu", s.mu);
  if (j.contains("mass_class")) s.mass_class = mass_class_from_string(j["mass_class"].get<std::string>());
  detail::take(j, "seed", s.seed);
}

inline void to_json(Json& j, const TendonNetwork& n) {
  j = Json{{"mode", std::string(to_string(n.mode))}, {"r1", n.r1}, {"r2", n.r2}};
  if (n.mode == MechanismMode::SpringLoaded) j["tendon_stiffness"] = n.tendon_stiffness;
}
inline void from_json(const Json& j, TendonNetwork& n) {
  detail::known_keys(j, {"mode", "r1", "r2", "tendon_stiffness"}, "tendon network");
  if (j.contains("mode")) n.mode = mechanism_mode_from_string(j["mode"].get<std::string>());
  detail::take(j, "r1", n.r1);
  if (j.contains("r2")) {
    j["r2"].get_to(n.r2);
  } else {
    n.r2.assign(n.r1.size(), 0.0);
  }
  detail::take(j, "tendon_stiffness", n.tendon_stiffness);
  n.validate();
}

inline void to_json(Json& j, const GripperDesign& d) {
  j = Json{{"knuckle_len", d.knuckle_len},   {"proximal_len", d.proximal_len}, {"distal_len", d.distal_len},
           {"link_radius", d.link_radius},   {"palm_width", d.palm_width},     {"q_max", d.q_max},
           {"k_spiral", d.k_spiral},         {"network", d.net}};
}
inline void from_json(const Json& j, GripperDesign& d) {
  detail::known_keys(j,
                     {"format_version", "kind", "knuckle_len", "proximal_len", "distal_len", "link_radius",
                      "palm_width", "q_max", "k_spiral", "network", "optimization"},
                     "design");
  detail::take(j, "knuckle_len", d.knuckle_len);
  detail::take(j, "proximal_len", d.proximal_len);
  detail::take(j, "distal_len", d.distal_len);
  detail::take(j, "link_radius", d.link_radius);
  detail::take(j, "palm_width", d.palm_width);
  detail::take(j, "q_max", d.q_max);
  detail::take(j, "k_spiral", d.k_spiral);
  detail::take(j, "network", d.net);
  d.validate();
}

inline void to_json(Json& j, const ClosureConfig& c) {
  j = Json{{"dl_step", c.dl_step},
           {"max_steps", c.max_steps},
           {"f_act", c.f_act},
           {"ejection_radius", c.ejection_radius},
           {"balance_tol", c.balance_tol},
           {"push_gain", c.push_gain},
           {"push_cap", c.push_cap},
           {"contact_loss_limit", c.contact_loss_limit}};
}
inline void from_json(const Json& j, ClosureConfig& c) {
  detail::known_keys(j,
                     {"dl_step", "max_steps", "f_act", "ejection_radius", "balance_tol", "push_gain", "push_cap",
                      "contact_loss_limit"},
                     "closure config");
  detail::take(j, "dl_step", c.dl_step);
  detail::take(j, "max_steps", c.max_steps);
  detail::take(j, "f_act", c.f_act);
  detail::take(j, "ejection_radius", c.ejection_radius);
  detail::take(j, "balance_tol", c.balance_tol);
  detail::take(j, "push_gain", c.push_gain);
  detail::take(j, "push_cap", c.push_cap);
  detail::take(j, "contact_loss_limit", c.contact_loss_limit);
  c.validate();
}

inline void to_json(Json& j, const PoseJitter& p) {
  j = Json{{"angle", p.angle}, {"lateral", p.lateral}, {"depth", p.depth}};
}
inline void from_json(const Json& j, PoseJitter& p) {
  detail::known_keys(j, {"angle", "lateral", "depth"}, "pose jitter");
  detail::take(j, "angle", p.angle);
  detail::take(j, "lateral", p.lateral);
  detail::take(j, "depth", p.depth);
}

inline void to_json(Json& j, const QualitySettings& q) {
  j = Json{{"pyramid_sides", q.pyramid_sides}, {"line_half_width", q.line_half_width}};
}
inline void from_json(const Json& j, QualitySettings& q) {
  detail::known_keys(j, {"pyramid_sides", "line_half_width"}, "quality settings");
  detail::take(j, "pyramid_sides", q.pyramid_sides);
  detail::take(j, "line_half_width", q.line_half_width);
  if (q.pyramid_sides < 3) throw FormatError("pyramid_sides must be at least 3");
  if (!(q.line_half_width >= 0.0)) throw FormatError("line_half_width must be non-negative");
}

inline void to_json(Json& j, const PoolOptions& o) {
  j = Json{{"pose_seed", o.pose_seed}, {"jitter", o.jitter}, {"quality", o.quality}};
}
inline void from_json(const Json& j, PoolOptions& o) {
  detail::known_keys(j, {"pose_seed", "jitter", "quality"}, "pool options");
  detail::take(j, "pose_seed", o.pose_seed);
  detail::take(j, "jitter", o.jitter);
  detail::take(j, "quality", o.quality);
}

inline void to_json(Json& j, const SAConfig& c) {
  j = Json{{"iterations", c.iterations},
           {"T0", c.T0},
           {"cooling", c.cooling},
           {"sigma", c.sigma},
           {"seed", c.seed},
           {"bounds", c.bounds}};
}
inline void from_json(const Json& j, SAConfig& c) {
  detail::known_keys(j, {"iterations", "T0", "cooling", "sigma", "seed", "bounds"}, "annealing config");
  detail::take(j, "iterations", c.iterations);
  detail::take(j, "T0", c.T0);
  detail::take(j, "cooling", c.cooling);
  detail::take(j, "sigma", c.sigma);
  detail::take(j, "seed", c.seed);
  detail::take(j, "bounds", c.bounds);
  c.validate();
}

inline void to_json(Json& j, const QualityResult& q) {
  j = Json{{"volume", q.volume}, {"force_closure", q.force_closure}, {"wrench_count", q.wrench_count}};
}
inline void from_json(const Json& j, QualityResult& q) {
  detail::known_keys(j, {"volume", "force_closure", "wrench_count"}, "quality");
  detail::take(j, "volume", q.volume);
  detail::take(j, "force_closure", q.force_closure);
  detail::take(j, "wrench_count", q.wrench_count);
}

inline void to_json(Json& j, const GraspRecord& r) {
  j = Json{{"object_index", r.object_index},
           {"object_id", r.object_id},
           {"pose_index", r.pose_index},
           {"palm_pose", r.palm_pose},
           {"outcome", std::string(to_string(r.outcome))},
           {"contact_count", r.contact_count},
           {"moving_contacts", r.moving_contacts},
           {"q_final", r.q_final},
           {"displacement", Json::array({Json::array({r.displacement[0].proximal, r.displacement[0].distal}),
                                         Json::array({r.displacement[1].proximal, r.displacement[1].distal})})},
           {"object_pose", r.object_pose},
           {"steps", r.steps},
           {"contact_losses", r.contact_losses},
           {"self_collision", r.self_collision},
           {"quality", r.quality}};
}
inline void from_json(const Json& j, GraspRecord& r) {
  detail::known_keys(j,
                     {"object_index", "object_id", "pose_index", "palm_pose", "outcome", "contact_count",
                      "moving_contacts", "q_final", "displacement", "object_pose", "steps", "contact_losses",
                      "self_collision", "quality"},
                     "grasp record");
  j.at("object_index").get_to(r.object_index);
  detail::take(j, "object_id", r.object_id);
  detail::take(j, "pose_index", r.pose_index);
  j.at("palm_pose").get_to(r.palm_pose);
  r.outcome = outcome_from_string(j.at("outcome").get<std::string>());
  detail::take(j, "contact_count", r.contact_count);
  detail::take(j, "moving_contacts", r.moving_contacts);
  detail::take(j, "q_final", r.q_final);
  if (j.contains("displacement")) {
    const Json& d = j["displacement"];
    if (!d.is_array() || d.size() != 2) throw FormatError("displacement must hold two fingers");
    for (std::size_t f = 0; f < 2; ++f) {
      if (!d[f].is_array() || d[f].size() != 2) throw FormatError("displacement entry must be [proximal, distal]");
      r.displacement[f] = {d[f][0].get<double>(), d[f][1].get<double>()};
    }
  }
  detail::take(j, "object_pose", r.object_pose);
  detail::take(j, "steps", r.steps);
  detail::take(j, "contact_losses", r.contact_losses);
  detail::take(j, "self_collision", r.self_collision);
  detail::take(j, "quality", r.quality);
}

// --- documents -------------------------------------------------------------

namespace detail {

inline void check_header(const Json& j, const char* kind) {
  if (!j.is_object()) throw FormatError(std::string(kind) + " document must be a JSON object");
  if (!j.contains("format_version")) throw FormatError(std::string(kind) + " document lacks format_version");
  const int v = j["format_version"].get<int>();
  if (v != kFormatVersion) throw FormatError("unsupported format_version " + std::to_string(v));
  if (j.contains("kind") && j["kind"] != kind)
    throw FormatError("expected a '" + std::string(kind) + "' document, got '" + j["kind"].get<std::string>() + "'");
}

}  // namespace detail

inline Json objects_document(const ObjectSet& set) {
  return Json{{"format_version", kFormatVersion}, {"kind", "objects"}, {"seed", set.seed}, {"objects", set.objects}};
}

inline ObjectSet object_set_from_document(const Json& j) {
  detail::check_header(j, "objects");
  detail::known_keys(j, {"format_version", "kind", "seed", "objects"}, "objects document");
  ObjectSet set;
  detail::take(j, "seed", set.seed);
  j.at("objects").get_to(set.objects);
  return set;
}

inline Json design_document(const GripperDesign& d) {
  Json j{{"format_version", kFormatVersion}, {"kind", "design"}};
  const Json body = d;
  for (const auto& [k, v] : body.items()) j[k] = v;
  return j;
}

inline GripperDesign design_from_document(const Json& j) {
  detail::check_header(j, "design");
  return j.get<GripperDesign>();
}

inline Json pool_document(const GraspPool& pool) {
  return Json{{"format_version", kFormatVersion},
              {"kind", "grasp_pool"},
              {"design", pool.design},
              {"closure", pool.closure},
              {"poses_per_object", pool.poses_per_object},
              {"options", pool.options},
              {"objects", objects_document(pool.objects)},
              {"records", pool.records},
              {"sampling_failures", pool.sampling_failures}};
}

inline GraspPool pool_from_document(const Json& j) {
  detail::check_header(j, "grasp_pool");
  detail::known_keys(j,
                     {"format_version", "kind", "design", "closure", "poses_per_object", "options", "objects",
                      "records", "sampling_failures"},
                     "pool document");
  GraspPool pool;
  pool.design = j.at("design").get<GripperDesign>();
  detail::take(j, "closure", pool.closure);
  detail::take(j, "poses_per_object", pool.poses_per_object);
  detail::take(j, "options", pool.options);
  pool.objects = object_set_from_document(j.at("objects"));
  j.at("records").get_to(pool.records);
  detail::take(j, "sampling_failures", pool.sampling_failures);
  for (const GraspRecord& r : pool.records)
    if (r.object_index >= pool.objects.objects.size()) throw FormatError("record refers to a missing object");
  return pool;
}

// --- files -----------------------------------------------------------------

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::system_error(errno, std::generic_category(), "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes via a temporary file in the same directory and renames it.
inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::system_error(errno, std::generic_category(), "cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw std::system_error(errno, std::generic_category(), "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline Json parse_json(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw FormatError(origin + ": " + e.what());
  }
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

/// Loads a document, turning JSON type errors into FormatError.
template <class T, class Reader>
T load_document(const std::filesystem::path& path, Reader reader) {
  const Json j = parse_json(read_text_file(path), path.string());
  try {
    return reader(j);
  } catch (const Json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

inline void save_objects(const std::filesystem::path& path, const ObjectSet& set) {
  write_text_file(path, dump(objects_document(set)));
}
inline ObjectSet load_objects(const std::filesystem::path& path) {
  return load_document<ObjectSet>(path, object_set_from_document);
}
inline void save_design(const std::filesystem::path& path, const GripperDesign& d) {
  write_text_file(path, dump(design_document(d)));
}
inline GripperDesign load_design(const std::filesystem::path& path) {
  return load_document<GripperDesign>(path, design_from_document);
}
inline void save_pool(const std::filesystem::path& path, const GraspPool& pool) {
  write_text_file(path, dump(pool_document(pool)));
}
inline GraspPool load_pool(const std::filesystem::path& path) {
  return load_document<GraspPool>(path, pool_from_document);
}

// --- CSV -------------------------------------------------------------------

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string trace_csv(const OptimizationTrace& trace) {
  std::string out = "iteration,knuckle,proximal,distal,q,accepted,non_finite,temperature,best_q\n";
  for (const TraceRow& r : trace.rows) {
    out += std::to_string(r.iteration);
    for (double x : r.candidate) out += "," + format_number(x);
    out += "," + format_number(r.q) + "," + (r.accepted ? "1" : "0") + "," + (r.non_finite ? "1" : "0") + "," +
           format_number(r.temperature) + "," + format_number(r.best_q) + "\n";
  }
  return out;
}

/// One row per object: outcome counts and summed volume of valid grasps.
inline std::string summary_csv(const GraspPool& pool) {
  std::string out = "object_id,family,records,valid,Envelope,Fingertip,Partial,Ejected,Collision,NoContact,quality\n";
  for (std::size_t i = 0; i < pool.objects.objects.size(); ++i) {
    int records = 0, valid = 0;
    std::array<int, 6> counts{};
    double q = 0.0;
    for (const GraspRecord& r : pool.records) {
      if (r.object_index != i) continue;
      ++records;
      ++counts[static_cast<std::size_t>(r.outcome)];
      if (r.valid()) {
        ++valid;
        q += r.quality.volume;
      }
    }
    const ObjectDef& d = pool.objects.objects[i];
    out += d.id + "," + d.family + "," + std::to_string(records) + "," + std::to_string(valid);
    for (int c : counts) out += "," + std::to_string(c);
    out += "," + format_number(q) + "\n";
  }
  return out;
}

}  // namespace tendongrip
