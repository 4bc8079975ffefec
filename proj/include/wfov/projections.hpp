#pragma once

// Target projections, per-pixel ray grids, and resampling warps between any two
// projections that share a camera center.

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string_view>
#include <type_traits>

#include <Eigen/Geometry>

#include "wfov/camera_models.hpp"
#include "wfov/common.hpp"

namespace wfov {

enum class ProjectionKind { equirectangular, pinhole, cubemap, cassini, ds_fisheye };

std::string_view to_string(ProjectionKind kind);
ProjectionKind parse_projection_kind(std::string_view name);

struct ProjectionSpec {
  ProjectionKind kind{ProjectionKind::equirectangular};
  int width{0}, height{0};
  /// Rotation taking projection-frame directions into the camera frame.
  Eigen::Matrix3d orientation{Eigen::Matrix3d::Identity()};
  /// Longitude coverage for equirectangular and Cassini grids.
  double lon_span_rad{2.0 * std::numbers::pi};
  PinholeIntrinsics<double> pinhole{};
  DoubleSphereIntrinsics<double> ds{};
  /// Optional cone limit (full angle about +z) for pinhole and DS cameras.
  std::optional<double> max_fov_deg{};

  int face_size() const { return width / 4; }
  bool full_longitude() const { return std::abs(lon_span_rad - 2.0 * std::numbers::pi) < 1e-12; }
  bool wraps_u() const { return kind == ProjectionKind::equirectangular && full_longitude(); }
  bool wraps_v() const { return kind == ProjectionKind::cassini && full_longitude(); }

  static ProjectionSpec equirectangular(int height, const Eigen::Matrix3d& orientation = Eigen::Matrix3d::Identity());
  static ProjectionSpec cassini(int width, const Eigen::Matrix3d& orientation = Eigen::Matrix3d::Identity());
  static ProjectionSpec cubemap(int face_size, const Eigen::Matrix3d& orientation = Eigen::Matrix3d::Identity());
  static ProjectionSpec pinhole_camera(const PinholeIntrinsics<double>& K,
                                       const Eigen::Matrix3d& orientation = Eigen::Matrix3d::Identity());
  static ProjectionSpec ds_camera(const DoubleSphereIntrinsics<double>& K, std::optional<double> max_fov_deg = {},
                                  const Eigen::Matrix3d& orientation = Eigen::Matrix3d::Identity());
};

void validate(const ProjectionSpec& spec);

/// Latitude (angle from the v = 0 pole) of a possibly fractional equirectangular row.
inline double equirect_latitude(double v, int height) { return (v + 0.5) / height * std::numbers::pi; }

/// Unit direction in the projection frame seen by a continuous pixel coordinate.
std::optional<Ray<double>> pixel_to_ray(const ProjectionSpec& spec, const Vec2<double>& px);

/// Continuous pixel coordinate of a projection-frame direction, empty when the
/// direction is not imaged inside the grid bounds [-0.5, size - 0.5].
std::optional<Vec2<double>> ray_to_pixel(const ProjectionSpec& spec, const Vec3<double>& dir);

struct RayGrid {
  int width{0}, height{0};
  Eigen::Matrix3Xd directions;  // column r * width + c
  Mask valid;

  Ray<double> at(Eigen::Index row, Eigen::Index col) const { return directions.col(row * width + col); }
};

RayGrid make_ray_grid(const ProjectionSpec& spec);

enum class Interpolation { nearest, bilinear };

/// Range-like grids (depth, disparity) must never be blended across pixels.
enum class SampleKind { color, range };

/// For every target pixel, the continuous source pixel it samples.
struct WarpMap {
  Plane<double> src_u, src_v;
  Mask valid;
  int src_width{0}, src_height{0};
  bool wrap_u{false}, wrap_v{false};
};

/// Source and target share a camera center; orientations relate both to the common
/// camera frame.
WarpMap make_warp_map(const ProjectionSpec& source, const ProjectionSpec& target);

template <typename T>
struct Warped {
  Plane<T> values;
  Mask valid;
};

namespace detail {

inline Eigen::Index wrap_or_clamp(Eigen::Index i, Eigen::Index n, bool wrap) {
  if (wrap) return ((i % n) + n) % n;
  return std::clamp<Eigen::Index>(i, 0, n - 1);
}

}  // namespace detail

template <typename T>
Warped<T> apply_warp(const Plane<T>& src, const Mask* src_valid, const WarpMap& map, Interpolation interp,
                     SampleKind kind) {
  if (interp == Interpolation::bilinear && kind == SampleKind::range)
    throw ContractError("warp: bilinear interpolation of range data is not allowed");
  if (src.rows() != map.src_height || src.cols() != map.src_width)
    throw ContractError("warp: source grid does not match the warp map");
  if (src_valid && (src_valid->rows() != src.rows() || src_valid->cols() != src.cols()))
    throw ContractError("warp: source mask shape mismatch");

  const Eigen::Index rows = map.valid.rows(), cols = map.valid.cols();
  Warped<T> out{Plane<T>::Zero(rows, cols), Mask::Constant(rows, cols, false)};
  const Eigen::Index sw = src.cols(), sh = src.rows();

  parallel_rows(rows, [&](Eigen::Index r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!map.valid(r, c)) continue;
      const double u = map.src_u(r, c), v = map.src_v(r, c);
      if (interp == Interpolation::nearest) {
        const Eigen::Index x = detail::wrap_or_clamp(Eigen::Index(std::floor(u + 0.5)), sw, map.wrap_u);
        const Eigen::Index y = detail::wrap_or_clamp(Eigen::Index(std::floor(v + 0.5)), sh, map.wrap_v);
        if (src_valid && !(*src_valid)(y, x)) continue;
        out.values(r, c) = src(y, x);
        out.valid(r, c) = true;
        continue;
      }
      const double fu = std::floor(u), fv = std::floor(v);
      const double au = u - fu, av = v - fv;
      const std::array<Eigen::Index, 2> xs{detail::wrap_or_clamp(Eigen::Index(fu), sw, map.wrap_u),
                                           detail::wrap_or_clamp(Eigen::Index(fu) + 1, sw, map.wrap_u)};
      const std::array<Eigen::Index, 2> ys{detail::wrap_or_clamp(Eigen::Index(fv), sh, map.wrap_v),
                                           detail::wrap_or_clamp(Eigen::Index(fv) + 1, sh, map.wrap_v)};
      const std::array<double, 2> wx{1.0 - au, au}, wy{1.0 - av, av};
      double acc = 0.0;
      bool ok = true;
      for (int j = 0; j < 2 && ok; ++j)
        for (int i = 0; i < 2; ++i) {
          const double w = wx[i] * wy[j];
          if (w == 0.0) continue;
          if (src_valid && !(*src_valid)(ys[j], xs[i])) {
            ok = false;
            break;
          }
          acc += w * static_cast<double>(src(ys[j], xs[i]));
        }
      if (!ok) continue;
      if constexpr (std::is_integral_v<T>) {
        acc = std::clamp(std::floor(acc + 0.5), double(std::numeric_limits<T>::lowest()),
                         double(std::numeric_limits<T>::max()));
      }
      out.values(r, c) = static_cast<T>(acc);
      out.valid(r, c) = true;
    }
  });
  return out;
}

template <typename T>
Warped<T> warp(const Plane<T>& src, const Mask* src_valid, const ProjectionSpec& source, const ProjectionSpec& target,
               Interpolation interp, SampleKind kind) {
  return apply_warp(src, src_valid, make_warp_map(source, target), interp, kind);
}

struct WarpedRgb {
  RgbImage image;
  Mask valid;
};

WarpedRgb warp_rgb(const RgbImage& src, const Mask* src_valid, const WarpMap& map, Interpolation interp);

/// Symmetric trim of empty border rows/columns applied before a 90 degree
/// counter-clockwise rotation.
struct StereoCrop {
  int rows{0}, cols{0};  // input size
  int row_trim{0};       // removed from both top and bottom
  int col_trim{0};       // removed from both left and right
};

/// Throws DataError for a fully invalid mask.
StereoCrop compute_stereo_crop(const Mask& valid);

template <typename T>
Plane<T> crop_rotate(const Plane<T>& img, const StereoCrop& crop) {
  if (img.rows() != crop.rows || img.cols() != crop.cols) throw ContractError("crop: image shape mismatch");
  const Eigen::Index h = crop.rows - 2 * crop.row_trim, w = crop.cols - 2 * crop.col_trim;
  const Plane<T> inner = img.block(crop.row_trim, crop.col_trim, h, w);
  // Counter-clockwise: out(r, c) = in(c, w - 1 - r).
  Plane<T> out(w, h);
  for (Eigen::Index r = 0; r < w; ++r)
    for (Eigen::Index c = 0; c < h; ++c) out(r, c) = inner(c, w - 1 - r);
  return out;
}

template <typename T>
Plane<T> uncrop_rotate(const Plane<T>& img, const StereoCrop& crop, T fill = T{}) {
  const Eigen::Index h = crop.rows - 2 * crop.row_trim, w = crop.cols - 2 * crop.col_trim;
  if (img.rows() != w || img.cols() != h) throw ContractError("uncrop: image shape mismatch");
  Plane<T> out = Plane<T>::Constant(crop.rows, crop.cols, fill);
  for (Eigen::Index r = 0; r < w; ++r)
    for (Eigen::Index c = 0; c < h; ++c) out(crop.row_trim + c, crop.col_trim + w - 1 - r) = img(r, c);
  return out;
}

template <typename T>
struct CroppedForStereo {
  Plane<T> image;
  Mask valid;
  StereoCrop crop;
};

template <typename T>
CroppedForStereo<T> crop_and_rotate_for_stereo(const Plane<T>& img, const Mask& valid) {
  const StereoCrop crop = compute_stereo_crop(valid);
  return {crop_rotate(img, crop), crop_rotate(valid, crop), crop};
}

// Cube faces in storage order; the cross layout is 4 faces wide and 3 tall.
enum class CubeFace : int { pos_x = 0, neg_x, pos_y, neg_y, pos_z, neg_z };

struct CubeFaceBasis {
  Eigen::Vector3d forward, right, down;
  int cell_row, cell_col;
};

const CubeFaceBasis& cube_face_basis(CubeFace face);

template <typename T>
Plane<T> cubemap_assemble(const std::array<Plane<T>, 6>& faces, T fill = T{}) {
  const Eigen::Index f = faces[0].rows();
  for (const auto& face : faces)
    if (face.rows() != f || face.cols() != f) throw ContractError("cubemap: faces must be equal squares");
  Plane<T> cross = Plane<T>::Constant(3 * f, 4 * f, fill);
  for (int i = 0; i < 6; ++i) {
    const auto& b = cube_face_basis(static_cast<CubeFace>(i));
    cross.block(b.cell_row * f, b.cell_col * f, f, f) = faces[i];
  }
  return cross;
}

template <typename T>
std::array<Plane<T>, 6> cubemap_split(const Plane<T>& cross) {
  if (cross.cols() % 4 != 0 || cross.rows() * 4 != cross.cols() * 3)
    throw ContractError("cubemap: cross layout must be 4F x 3F");
  const Eigen::Index f = cross.cols() / 4;
  std::array<Plane<T>, 6> faces;
  for (int i = 0; i < 6; ++i) {
    const auto& b = cube_face_basis(static_cast<CubeFace>(i));
    faces[i] = cross.block(b.cell_row * f, b.cell_col * f, f, f);
  }
  return faces;
}

}  // namespace wfov
