#include "wfov/projections.hpp"

#include <string>

namespace wfov {

namespace {

constexpr double kPi = std::numbers::pi;

bool in_bounds(const Vec2<double>& px, int width, int height) {
  return px.x() >= -0.5 && px.x() <= width - 0.5 && px.y() >= -0.5 && px.y() <= height - 0.5;
}

bool inside_cone(const ProjectionSpec& spec, const Vec3<double>& unit_dir) {
  if (!spec.max_fov_deg) return true;
  return unit_dir.z() >= std::cos(0.5 * *spec.max_fov_deg * kPi / 180.0) - 1e-15;
}

// Wraps a full-span longitude coordinate into [-0.5, n - 0.5).
double wrap_coord(double x, int n) {
  if (x >= n - 0.5) x -= n;
  if (x < -0.5) x += n;
  return x;
}

const std::array<CubeFaceBasis, 6> kCubeFaces{{
    {{1, 0, 0}, {0, 0, -1}, {0, 1, 0}, 1, 2},   // +x
    {{-1, 0, 0}, {0, 0, 1}, {0, 1, 0}, 1, 0},   // -x
    {{0, 1, 0}, {1, 0, 0}, {0, 0, -1}, 2, 1},   // +y (down)
    {{0, -1, 0}, {1, 0, 0}, {0, 0, 1}, 0, 1},   // -y (up)
    {{0, 0, 1}, {1, 0, 0}, {0, 1, 0}, 1, 1},    // +z
    {{0, 0, -1}, {-1, 0, 0}, {0, 1, 0}, 1, 3},  // -z
}};

std::optional<int> face_at_cell(int row, int col) {
  for (int i = 0; i < 6; ++i)
    if (kCubeFaces[i].cell_row == row && kCubeFaces[i].cell_col == col) return i;
  return std::nullopt;
}

}  // namespace

const CubeFaceBasis& cube_face_basis(CubeFace face) { return kCubeFaces[static_cast<int>(face)]; }

std::string_view to_string(ProjectionKind kind) {
  switch (kind) {
    case ProjectionKind::equirectangular: return "equirectangular";
    case ProjectionKind::pinhole: return "pinhole";
    case ProjectionKind::cubemap: return "cubemap";
    case ProjectionKind::cassini: return "cassini";
    case ProjectionKind::ds_fisheye: return "ds_fisheye";
  }
  return "unknown";
}

ProjectionKind parse_projection_kind(std::string_view name) {
  for (auto k : {ProjectionKind::equirectangular, ProjectionKind::pinhole, ProjectionKind::cubemap,
                 ProjectionKind::cassini, ProjectionKind::ds_fisheye})
    if (to_string(k) == name) return k;
  throw ConfigError("unsupported projection kind '" + std::string(name) + "'");
}

ProjectionSpec ProjectionSpec::equirectangular(int height, const Eigen::Matrix3d& orientation) {
  ProjectionSpec s;
  s.kind = ProjectionKind::equirectangular;
  s.width = 2 * height;
  s.height = height;
  s.orientation = orientation;
  return s;
}

ProjectionSpec ProjectionSpec::cassini(int width, const Eigen::Matrix3d& orientation) {
  ProjectionSpec s;
  s.kind = ProjectionKind::cassini;
  s.width = width;
  s.height = 2 * width;
  s.orientation = orientation;
  return s;
}

ProjectionSpec ProjectionSpec::cubemap(int face_size, const Eigen::Matrix3d& orientation) {
  ProjectionSpec s;
  s.kind = ProjectionKind::cubemap;
  s.width = 4 * face_size;
  s.height = 3 * face_size;
  s.orientation = orientation;
  return s;
}

ProjectionSpec ProjectionSpec::pinhole_camera(const PinholeIntrinsics<double>& K, const Eigen::Matrix3d& orientation) {
  ProjectionSpec s;
  s.kind = ProjectionKind::pinhole;
  s.width = K.width;
  s.height = K.height;
  s.pinhole = K;
  s.orientation = orientation;
  return s;
}

ProjectionSpec ProjectionSpec::ds_camera(const DoubleSphereIntrinsics<double>& K, std::optional<double> max_fov_deg,
                                         const Eigen::Matrix3d& orientation) {
  ProjectionSpec s;
  s.kind = ProjectionKind::ds_fisheye;
  s.width = K.width;
  s.height = K.height;
  s.ds = K;
  s.max_fov_deg = max_fov_deg;
  s.orientation = orientation;
  return s;
}

void validate(const ProjectionSpec& spec) {
  if (spec.width <= 0 || spec.height <= 0) throw ConfigError("projection: size must be positive");
  const Eigen::Matrix3d& R = spec.orientation;
  if (!R.allFinite() || !(R.transpose() * R).isApprox(Eigen::Matrix3d::Identity(), 1e-9) ||
      std::abs(R.determinant() - 1.0) > 1e-9)
    throw ConfigError("projection: orientation must be a proper rotation");
  if (spec.max_fov_deg && !(*spec.max_fov_deg > 0 && *spec.max_fov_deg <= 360))
    throw ConfigError("projection: max_fov_deg must lie in (0, 360]");

  switch (spec.kind) {
    case ProjectionKind::equirectangular:
    case ProjectionKind::cassini: {
      if (!(spec.lon_span_rad > 0 && spec.lon_span_rad <= 2 * kPi + 1e-12))
        throw ConfigError("projection: longitude span must lie in (0, 2pi]");
      const bool eq = spec.kind == ProjectionKind::equirectangular;
      const int lon = eq ? spec.width : spec.height, lat = eq ? spec.height : spec.width;
      if (spec.full_longitude() && lon != 2 * lat)
        throw ConfigError(std::string("projection: full-sphere ") + std::string(to_string(spec.kind)) +
                          " requires a 2:1 aspect ratio");
      break;
    }
    case ProjectionKind::cubemap:
      if (spec.width % 4 != 0 || spec.height * 4 != spec.width * 3)
        throw ConfigError("projection: cubemap cross layout must be 4F x 3F");
      break;
    case ProjectionKind::pinhole:
      validate(spec.pinhole);
      if (spec.pinhole.width != spec.width || spec.pinhole.height != spec.height)
        throw ConfigError("projection: pinhole intrinsics size mismatch");
      break;
    case ProjectionKind::ds_fisheye:
      validate(spec.ds);
      if (spec.ds.width != spec.width || spec.ds.height != spec.height)
        throw ConfigError("projection: double sphere intrinsics size mismatch");
      break;
  }
}

std::optional<Ray<double>> pixel_to_ray(const ProjectionSpec& spec, const Vec2<double>& px) {
  if (!in_bounds(px, spec.width, spec.height)) return std::nullopt;
  const double u = px.x(), v = px.y();
  switch (spec.kind) {
    case ProjectionKind::equirectangular: {
      const double lat = equirect_latitude(v, spec.height);
      const double lon = ((u + 0.5) / spec.width - 0.5) * spec.lon_span_rad;
      return Ray<double>(std::sin(lat) * std::sin(lon), -std::cos(lat), std::sin(lat) * std::cos(lon));
    }
    case ProjectionKind::cassini: {
      const double lat = equirect_latitude(u, spec.width);
      const double lon = ((v + 0.5) / spec.height - 0.5) * spec.lon_span_rad;
      return Ray<double>(-std::cos(lat), std::sin(lat) * std::sin(lon), std::sin(lat) * std::cos(lon));
    }
    case ProjectionKind::cubemap: {
      const int f = spec.face_size();
      const int col = std::min(int(std::floor((u + 0.5) / f)), 3);
      const int row = std::min(int(std::floor((v + 0.5) / f)), 2);
      const auto face = face_at_cell(row, col);
      if (!face) return std::nullopt;
      const auto& b = kCubeFaces[*face];
      const double a = ((u + 0.5) - col * f) / f * 2.0 - 1.0;
      const double c = ((v + 0.5) - row * f) / f * 2.0 - 1.0;
      return Ray<double>((b.forward + a * b.right + c * b.down).normalized());
    }
    case ProjectionKind::pinhole: {
      const Ray<double> d = pinhole_unproject(spec.pinhole, px);
      if (!inside_cone(spec, d)) return std::nullopt;
      return d;
    }
    case ProjectionKind::ds_fisheye: {
      const auto d = ds_unproject(spec.ds, px);
      // Past the projection domain boundary the image folds back on itself; those
      // pixels have no unique ray.
      if (!d || !inside_cone(spec, *d) || !ds_project(spec.ds, *d)) return std::nullopt;
      return d;
    }
  }
  return std::nullopt;
}

std::optional<Vec2<double>> ray_to_pixel(const ProjectionSpec& spec, const Vec3<double>& dir) {
  const double n = dir.norm();
  if (!(n > 0) || !std::isfinite(n)) return std::nullopt;
  const Vec3<double> d = dir / n;
  Vec2<double> px;
  switch (spec.kind) {
    case ProjectionKind::equirectangular: {
      const double lat = std::acos(std::clamp(-d.y(), -1.0, 1.0));
      const double lon = std::atan2(d.x(), d.z());
      if (std::abs(lon) > 0.5 * spec.lon_span_rad) return std::nullopt;
      px = {(lon / spec.lon_span_rad + 0.5) * spec.width - 0.5, lat / kPi * spec.height - 0.5};
      if (spec.full_longitude()) px.x() = wrap_coord(px.x(), spec.width);
      break;
    }
    case ProjectionKind::cassini: {
      const double lat = std::acos(std::clamp(-d.x(), -1.0, 1.0));
      const double lon = std::atan2(d.y(), d.z());
      if (std::abs(lon) > 0.5 * spec.lon_span_rad) return std::nullopt;
      px = {lat / kPi * spec.width - 0.5, (lon / spec.lon_span_rad + 0.5) * spec.height - 0.5};
      if (spec.full_longitude()) px.y() = wrap_coord(px.y(), spec.height);
      break;
    }
    case ProjectionKind::cubemap: {
      int best = 0;
      double best_dot = -2.0;
      for (int i = 0; i < 6; ++i) {
        const double dd = kCubeFaces[i].forward.dot(d);
        if (dd > best_dot) best_dot = dd, best = i;
      }
      const auto& b = kCubeFaces[best];
      const int f = spec.face_size();
      const double a = b.right.dot(d) / best_dot, c = b.down.dot(d) / best_dot;
      px = {b.cell_col * f + (a + 1.0) * 0.5 * f - 0.5, b.cell_row * f + (c + 1.0) * 0.5 * f - 0.5};
      break;
    }
    case ProjectionKind::pinhole: {
      if (!inside_cone(spec, d)) return std::nullopt;
      const auto p = pinhole_project(spec.pinhole, d);
      if (!p) return std::nullopt;
      px = *p;
      break;
    }
    case ProjectionKind::ds_fisheye: {
      if (!inside_cone(spec, d)) return std::nullopt;
      const auto p = ds_project(spec.ds, d);
      if (!p) return std::nullopt;
      px = *p;
      break;
    }
  }
  if (!in_bounds(px, spec.width, spec.height)) return std::nullopt;
  return px;
}

RayGrid make_ray_grid(const ProjectionSpec& spec) {
  validate(spec);
  RayGrid grid;
  grid.width = spec.width;
  grid.height = spec.height;
  grid.directions = Eigen::Matrix3Xd::Zero(3, Eigen::Index(spec.width) * spec.height);
  grid.valid = Mask::Constant(spec.height, spec.width, false);
  parallel_rows(spec.height, [&](Eigen::Index r) {
    for (Eigen::Index c = 0; c < spec.width; ++c) {
      const auto d = pixel_to_ray(spec, Vec2<double>(double(c), double(r)));
      if (!d) continue;
      grid.directions.col(r * spec.width + c) = *d;
      grid.valid(r, c) = true;
    }
  });
  return grid;
}

WarpMap make_warp_map(const ProjectionSpec& source, const ProjectionSpec& target) {
  validate(source);
  const RayGrid grid = make_ray_grid(target);
  // target projection frame -> camera frame -> source projection frame
  const Eigen::Matrix3d to_source = source.orientation.transpose() * target.orientation;

  WarpMap map;
  map.src_u = Plane<double>::Zero(target.height, target.width);
  map.src_v = Plane<double>::Zero(target.height, target.width);
  map.valid = Mask::Constant(target.height, target.width, false);
  map.src_width = source.width;
  map.src_height = source.height;
  map.wrap_u = source.wraps_u();
  map.wrap_v = source.wraps_v();

  parallel_rows(target.height, [&](Eigen::Index r) {
    for (Eigen::Index c = 0; c < target.width; ++c) {
      if (!grid.valid(r, c)) continue;
      const auto px = ray_to_pixel(source, to_source * grid.at(r, c));
      if (!px) continue;
      map.src_u(r, c) = px->x();
      map.src_v(r, c) = px->y();
      map.valid(r, c) = true;
    }
  });
  return map;
}

WarpedRgb warp_rgb(const RgbImage& src, const Mask* src_valid, const WarpMap& map, Interpolation interp) {
  WarpedRgb out;
  for (int ch = 0; ch < 3; ++ch) {
    auto w = apply_warp(src.channel[ch], src_valid, map, interp, SampleKind::color);
    out.image.channel[ch] = std::move(w.values);
    if (ch == 0) out.valid = std::move(w.valid);
  }
  return out;
}

StereoCrop compute_stereo_crop(const Mask& valid) {
  if (valid.size() == 0 || !valid.any()) throw DataError("crop: image has no valid pixels");
  const int rows = int(valid.rows()), cols = int(valid.cols());
  const auto row_has = [&](int r) { return valid.row(r).any(); };
  const auto col_has = [&](int c) { return valid.col(c).any(); };
  int top = 0, bottom = 0, left = 0, right = 0;
  while (!row_has(top)) ++top;
  while (!row_has(rows - 1 - bottom)) ++bottom;
  while (!col_has(left)) ++left;
  while (!col_has(cols - 1 - right)) ++right;
  return {rows, cols, std::min(top, bottom), std::min(left, right)};
}

}  // namespace wfov
