#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "wfov/dataset_io.hpp"

namespace wfov {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

template <typename T>
T field(const Json& j, const char* key) {
  if (!j.is_object()) throw ConfigError(std::string("json: expected an object holding '") + key + "'");
  const auto it = j.find(key);
  if (it == j.end()) throw ConfigError(std::string("json: missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("json: field '") + key + "': " + e.what());
  }
}

template <typename T>
T field_or(const Json& j, const char* key, T fallback) {
  return j.contains(key) ? field<T>(j, key) : fallback;
}

Json matrix_json(const Eigen::Matrix3d& m) {
  Json a = Json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) a.push_back(m(r, c));
  return a;
}

Eigen::Matrix3d matrix_from_json(const Json& j, const char* what) {
  if (!j.is_array() || j.size() != 9) throw ConfigError(std::string("json: '") + what + "' needs 9 numbers");
  Eigen::Matrix3d m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      const Json& v = j[std::size_t(3 * r + c)];
      if (!v.is_number()) throw ConfigError(std::string("json: '") + what + "' holds a non-number");
      m(r, c) = v.get<double>();
    }
  return m;
}

void check_schema(const Json& j, const char* what) {
  const int v = field<int>(j, "schema_version");
  if (v != kSchemaVersion)
    throw ConfigError(std::string(what) + ": unsupported schema_version " + std::to_string(v) + " (expected " +
                      std::to_string(kSchemaVersion) + ")");
}

Json read_json_file(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("json: " + path.string() + ": " + e.what());
  }
}

std::string mode_name(MaskMode m) { return m == MaskMode::zero_out ? "zero_out" : "clip_to"; }

MaskMode parse_mode(const std::string& s) {
  if (s == "zero_out") return MaskMode::zero_out;
  if (s == "clip_to") return MaskMode::clip_to;
  throw ConfigError("unknown mask mode '" + s + "'");
}

}  // namespace

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

Json to_json(const DoubleSphereIntrinsics<double>& K) {
  return Json{{"model", "double_sphere"}, {"fx", K.fx},       {"fy", K.fy},        {"cx", K.cx},
              {"cy", K.cy},               {"xi", K.xi},       {"alpha", K.alpha},  {"width", K.width},
              {"height", K.height}};
}

DoubleSphereIntrinsics<double> ds_intrinsics_from_json(const Json& j) {
  const auto model = field_or<std::string>(j, "model", "double_sphere");
  if (model != "double_sphere") throw ConfigError("intrinsics: expected model 'double_sphere', got '" + model + "'");
  DoubleSphereIntrinsics<double> K;
  K.fx = field<double>(j, "fx");
  K.fy = field<double>(j, "fy");
  K.cx = field<double>(j, "cx");
  K.cy = field<double>(j, "cy");
  K.xi = field<double>(j, "xi");
  K.alpha = field<double>(j, "alpha");
  K.width = field<int>(j, "width");
  K.height = field<int>(j, "height");
  validate(K);
  return K;
}

Json to_json(const PinholeIntrinsics<double>& K) {
  return Json{{"model", "pinhole"}, {"fx", K.fx}, {"fy", K.fy}, {"cx", K.cx}, {"cy", K.cy},
              {"width", K.width},   {"height", K.height}};
}

PinholeIntrinsics<double> pinhole_intrinsics_from_json(const Json& j) {
  const auto model = field_or<std::string>(j, "model", "pinhole");
  if (model != "pinhole") throw ConfigError("intrinsics: expected model 'pinhole', got '" + model + "'");
  PinholeIntrinsics<double> K;
  K.fx = field<double>(j, "fx");
  K.fy = field<double>(j, "fy");
  K.cx = field<double>(j, "cx");
  K.cy = field<double>(j, "cy");
  K.width = field<int>(j, "width");
  K.height = field<int>(j, "height");
  validate(K);
  return K;
}

Json to_json(const ProjectionSpec& spec) {
  Json j{{"kind", std::string(to_string(spec.kind))}, {"width", spec.width}, {"height", spec.height}};
  j["orientation"] = matrix_json(spec.orientation);
  switch (spec.kind) {
    case ProjectionKind::equirectangular:
    case ProjectionKind::cassini:
      j["lon_span_deg"] = spec.lon_span_rad * kRadToDeg;
      break;
    case ProjectionKind::cubemap:
      j["face_size"] = spec.face_size();
      break;
    case ProjectionKind::pinhole:
      j["intrinsics"] = to_json(spec.pinhole);
      break;
    case ProjectionKind::ds_fisheye:
      j["intrinsics"] = to_json(spec.ds);
      break;
  }
  if (spec.max_fov_deg) j["max_fov_deg"] = *spec.max_fov_deg;
  return j;
}

ProjectionSpec projection_from_json(const Json& j) {
  ProjectionSpec spec;
  try {
    spec.kind = parse_projection_kind(field<std::string>(j, "kind"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const Eigen::Matrix3d R = j.contains("orientation") ? matrix_from_json(j["orientation"], "orientation")
                                                      : Eigen::Matrix3d::Identity();
  const std::optional<double> cone =
      j.contains("max_fov_deg") ? std::optional<double>(field<double>(j, "max_fov_deg")) : std::nullopt;
  switch (spec.kind) {
    case ProjectionKind::equirectangular:
    case ProjectionKind::cassini: {
      spec.width = field<int>(j, "width");
      spec.height = field<int>(j, "height");
      if (j.contains("lon_span_deg")) {
        const double deg = field<double>(j, "lon_span_deg");
        // 360 is stored exactly; keep the canonical 2*pi so full-longitude wrapping stays exact.
        spec.lon_span_rad = deg == 360.0 ? 2.0 * std::numbers::pi : deg / kRadToDeg;
      }
      break;
    }
    case ProjectionKind::cubemap: {
      const int f = j.contains("face_size") ? field<int>(j, "face_size") : field<int>(j, "width") / 4;
      spec = ProjectionSpec::cubemap(f);
      break;
    }
    case ProjectionKind::pinhole:
      spec = ProjectionSpec::pinhole_camera(pinhole_intrinsics_from_json(field<Json>(j, "intrinsics")));
      break;
    case ProjectionKind::ds_fisheye:
      spec = ProjectionSpec::ds_camera(ds_intrinsics_from_json(field<Json>(j, "intrinsics")));
      break;
  }
  spec.orientation = R;
  spec.max_fov_deg = cone;
  if (j.contains("width") && field<int>(j, "width") != spec.width)
    throw ConfigError("projection: width disagrees with the intrinsics or face size");
  if (j.contains("height") && field<int>(j, "height") != spec.height)
    throw ConfigError("projection: height disagrees with the intrinsics or face size");
  validate(spec);
  return spec;
}

Json to_json(const Eigen::Isometry3d& pose) {
  const Eigen::Vector3d t = pose.translation();
  return Json{{"position", Json::array({t.x(), t.y(), t.z()})}, {"rotation", matrix_json(pose.linear())}};
}

Eigen::Isometry3d pose_from_json(const Json& j) {
  const Json& p = field<Json>(j, "position");
  if (!p.is_array() || p.size() != 3) throw ConfigError("pose: 'position' needs 3 numbers");
  Eigen::Isometry3d pose = Eigen::Isometry3d::Identity();
  for (int i = 0; i < 3; ++i) pose.translation()[i] = p[std::size_t(i)].get<double>();
  if (j.contains("rotation")) {
    const Eigen::Matrix3d R = matrix_from_json(j["rotation"], "rotation");
    if (!(R.transpose() * R).isIdentity(1e-9) || R.determinant() < 0)
      throw ConfigError("pose: 'rotation' is not a proper rotation");
    pose.linear() = R;
  }
  return pose;
}

Json to_json(const BenchmarkGrid& grid) {
  return Json{{"baselines_m", grid.baselines_m}, {"fovs_deg", grid.fovs_deg}, {"pinhole_fov_deg", grid.pinhole_fov_deg}};
}

BenchmarkGrid grid_from_json(const Json& j) {
  BenchmarkGrid g;
  g.baselines_m = field_or<std::vector<double>>(j, "baselines_m", g.baselines_m);
  g.fovs_deg = field_or<std::vector<double>>(j, "fovs_deg", g.fovs_deg);
  g.pinhole_fov_deg = field_or<double>(j, "pinhole_fov_deg", g.pinhole_fov_deg);
  validate(g);
  return g;
}

// ---- scene manifest ----

Json to_json(const SceneManifest& m) {
  Json scans = Json::array();
  for (const auto& s : m.scans) scans.push_back(Json{{"id", s.id}, {"path", s.path}});
  Json j{{"schema_version", m.schema_version},
         {"scene_id", m.scene_id},
         {"scans", scans},
         {"central_scan", m.central_scan},
         {"capture_height_m", m.capture_height_m},
         {"lighting", m.lighting}};
  if (m.masks) j["masks"] = *m.masks;
  j["camera"] = Json{{"reference", to_json(m.camera.reference)}, {"m", m.camera.m}, {"n", m.camera.n}};
  j["camera_pose"] = to_json(m.camera_pose);
  return j;
}

SceneManifest scene_manifest_from_json(const Json& j) {
  check_schema(j, "scene manifest");
  SceneManifest m;
  m.schema_version = field<int>(j, "schema_version");
  m.scene_id = field<std::string>(j, "scene_id");
  const Json& scans = field<Json>(j, "scans");
  if (!scans.is_array()) throw ConfigError("scene manifest: 'scans' must be an array");
  for (const auto& s : scans) m.scans.push_back({field<std::uint16_t>(s, "id"), field<std::string>(s, "path")});
  m.central_scan = field<std::uint16_t>(j, "central_scan");
  m.capture_height_m = field<double>(j, "capture_height_m");
  m.lighting = field<std::string>(j, "lighting");
  if (j.contains("masks") && !j["masks"].is_null()) m.masks = field<std::string>(j, "masks");
  const Json& cam = field<Json>(j, "camera");
  m.camera.reference = ds_intrinsics_from_json(field<Json>(cam, "reference"));
  m.camera.m = field_or<double>(cam, "m", m.camera.m);
  m.camera.n = field_or<double>(cam, "n", m.camera.n);
  if (j.contains("camera_pose")) m.camera_pose = pose_from_json(j["camera_pose"]);
  return m;
}

SceneManifest read_scene_manifest(const fs::path& path) {
  const SceneManifest m = scene_manifest_from_json(read_json_file(path));
  validate(m, path.parent_path());
  return m;
}

void write_scene_manifest(const fs::path& path, const SceneManifest& m) {
  write_file_atomically(path, dump_json(to_json(m)));
}

void validate(const SceneManifest& m, const fs::path& base_dir) {
  if (m.schema_version != kSchemaVersion)
    throw ConfigError("scene manifest: unsupported schema_version " + std::to_string(m.schema_version));
  if (m.scene_id.empty()) throw ConfigError("scene manifest: empty scene_id");
  if (m.scans.empty()) throw ConfigError("scene manifest: no scans");
  std::set<std::uint16_t> ids;
  for (const auto& s : m.scans)
    if (!ids.insert(s.id).second) throw ConfigError("scene manifest: duplicate scan id " + std::to_string(s.id));
  if (!ids.count(m.central_scan))
    throw ConfigError("scene manifest: central scan " + std::to_string(m.central_scan) + " is not in the bundle");
  constexpr double kHeights[] = {0.5, 1.65, 2.5};
  if (std::none_of(std::begin(kHeights), std::end(kHeights),
                   [&](double h) { return std::abs(h - m.capture_height_m) < 1e-9; }))
    throw ConfigError("scene manifest: capture height must be one of 0.5, 1.65, 2.5 m");
  if (m.lighting != "natural" && m.lighting != "office" && m.lighting != "mixed")
    throw ConfigError("scene manifest: lighting must be natural, office or mixed");
  validate(m.camera.reference);
  if (!(m.camera.n > 0) || !std::isfinite(m.camera.m)) throw ConfigError("scene manifest: bad camera policy");
  for (const auto& s : m.scans)
    if (!fs::is_regular_file(base_dir / s.path))
      throw DataError("scene manifest: missing scan file " + (base_dir / s.path).string());
  if (m.masks && !fs::is_regular_file(base_dir / *m.masks))
    throw DataError("scene manifest: missing mask file " + (base_dir / *m.masks).string());
}

// ---- world regions ----

std::vector<WorldRegion> read_world_regions(const fs::path& path) {
  const Json j = read_json_file(path);
  check_schema(j, "mask regions");
  std::vector<WorldRegion> out;
  for (const auto& r : field<Json>(j, "regions")) {
    WorldRegion w;
    for (const auto& p : field<Json>(r, "polygon")) {
      if (!p.is_array() || p.size() != 3) throw ConfigError("mask regions: vertices need 3 coordinates");
      w.polygon.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
    }
    if (w.polygon.size() < 3) throw ConfigError("mask regions: polygon needs at least 3 vertices");
    w.mode = parse_mode(field_or<std::string>(r, "mode", "zero_out"));
    w.clip_m = field_or<double>(r, "clip_m", 0.0);
    out.push_back(std::move(w));
  }
  return out;
}

void write_world_regions(const fs::path& path, const std::vector<WorldRegion>& regions) {
  Json arr = Json::array();
  for (const auto& r : regions) {
    Json poly = Json::array();
    for (const auto& p : r.polygon) poly.push_back(Json::array({p.x(), p.y(), p.z()}));
    arr.push_back(Json{{"polygon", poly}, {"mode", mode_name(r.mode)}, {"clip_m", r.clip_m}});
  }
  write_file_atomically(path, dump_json(Json{{"schema_version", kSchemaVersion}, {"regions", arr}}));
}

// ---- samples ----

Json to_json(const SampleRecord& r) {
  return Json{{"scene_id", r.scene_id},
              {"id", r.id},
              {"camera", std::string(to_string(r.camera))},
              {"orientation", std::string(to_string(r.orientation))},
              {"projection", r.projection},
              {"baseline_m", r.baseline_m},
              {"fov_deg", r.fov_deg},
              {"width", r.width},
              {"height", r.height},
              {"depth_clamped", r.depth_clamped},
              {"rgb_ref", r.rgb_ref},
              {"rgb_sec", r.rgb_sec},
              {"depth_ref", r.depth_ref},
              {"disparity_ref", r.disparity_ref}};
}

SampleRecord sample_record_from_json(const Json& j) {
  SampleRecord r;
  r.scene_id = field<std::string>(j, "scene_id");
  r.id = field<std::string>(j, "id");
  try {
    r.camera = parse_camera_kind(field<std::string>(j, "camera"));
    r.orientation = parse_rig_orientation(field<std::string>(j, "orientation"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  r.projection = field<std::string>(j, "projection");
  r.baseline_m = field<double>(j, "baseline_m");
  r.fov_deg = field<double>(j, "fov_deg");
  r.width = field<int>(j, "width");
  r.height = field<int>(j, "height");
  r.depth_clamped = field_or<bool>(j, "depth_clamped", false);
  r.rgb_ref = field<std::string>(j, "rgb_ref");
  r.rgb_sec = field<std::string>(j, "rgb_sec");
  r.depth_ref = field<std::string>(j, "depth_ref");
  r.disparity_ref = field<std::string>(j, "disparity_ref");
  return r;
}

Json to_json(const SampleIndex& idx) {
  Json arr = Json::array();
  for (const auto& r : idx.samples) arr.push_back(to_json(r));
  return Json{{"schema_version", idx.schema_version}, {"samples", arr}};
}

SampleIndex sample_index_from_json(const Json& j) {
  check_schema(j, "sample index");
  SampleIndex idx;
  for (const auto& r : field<Json>(j, "samples")) idx.samples.push_back(sample_record_from_json(r));
  return idx;
}

SampleIndex read_sample_index(const fs::path& path) { return sample_index_from_json(read_json_file(path)); }

void write_sample_index(const fs::path& path, const SampleIndex& idx) {
  write_file_atomically(path, dump_json(to_json(idx)));
}

void validate(const SampleRecord& r, const fs::path& base_dir) {
  const auto check_png = [&](const std::string& rel, int channels, int depth) {
    const fs::path p = base_dir / rel;
    if (!fs::is_regular_file(p)) throw DataError("sample " + r.id + ": missing " + p.string());
    const PngInfo info = probe_png(p);
    if (info.width != r.width || info.height != r.height)
      throw DataError("sample " + r.id + ": " + p.string() + " size disagrees with the record");
    if (info.channels != channels || info.bit_depth != depth)
      throw DataError("sample " + r.id + ": " + p.string() + " has an unexpected pixel format");
  };
  check_png(r.rgb_ref, 3, 8);
  check_png(r.rgb_sec, 3, 8);
  check_png(r.depth_ref, 1, 16);
  const fs::path pfm = base_dir / r.disparity_ref;
  if (!fs::is_regular_file(pfm)) throw DataError("sample " + r.id + ": missing " + pfm.string());
  const PfmImage disp = read_pfm(pfm);
  if (disp.values.cols() != r.width || disp.values.rows() != r.height)
    throw DataError("sample " + r.id + ": " + pfm.string() + " size disagrees with the record");
}

// ---- reports ----

Json to_json(const EvalReport& report) {
  Json domain{{"kind", report.domain.kind}};
  domain["fov_deg"] = std::isnan(report.domain.fov_deg) ? Json(nullptr) : Json(report.domain.fov_deg);
  domain["baseline_m"] = std::isnan(report.domain.baseline_m) ? Json(nullptr) : Json(report.domain.baseline_m);
  domain["projection"] = report.domain.projection;
  Json metrics = Json::array();
  for (const auto& m : report.metrics)
    metrics.push_back(
        Json{{"name", m.name}, {"value", m.value}, {"unit", m.unit}, {"valid_pixel_count", m.valid_pixel_count}});
  return Json{{"schema_version", kSchemaVersion}, {"domain", domain}, {"metrics", metrics}};
}

EvalReport eval_report_from_json(const Json& j) {
  check_schema(j, "eval report");
  EvalReport rep;
  const Json& d = field<Json>(j, "domain");
  rep.domain.kind = field<std::string>(d, "kind");
  if (d.contains("fov_deg") && !d["fov_deg"].is_null()) rep.domain.fov_deg = d["fov_deg"].get<double>();
  if (d.contains("baseline_m") && !d["baseline_m"].is_null()) rep.domain.baseline_m = d["baseline_m"].get<double>();
  rep.domain.projection = field_or<std::string>(d, "projection", "");
  for (const auto& m : field<Json>(j, "metrics"))
    rep.metrics.push_back({field<std::string>(m, "name"), field<double>(m, "value"), field<std::string>(m, "unit"),
                           field<std::size_t>(m, "valid_pixel_count")});
  return rep;
}

}  // namespace wfov
