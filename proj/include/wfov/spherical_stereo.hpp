#pragma once

// Depth <-> disparity conversion for vertical stereo pairs in equirectangular
// projection.
//
// Geometry: the reference camera A sees a point P at latitude L (angle from the
// v = 0 pole). The second camera C sits at distance B on the opposite (v = H) pole.
// In triangle A-C-P the angle at A is beta = pi - L, the parallax angle at P is
// rho = disp * pi / H, and the angle at C is gamma = pi - rho - beta = L - rho.
// The law of sines gives |AP| = B * sin(gamma) / sin(rho).

#include <cmath>
#include <numbers>
#include <optional>

#include "wfov/common.hpp"

namespace wfov {

/// Validity floor for disparities, in pixels.
inline constexpr double kMinDisparityPx = 1e-4;

/// Image height (rows spanning latitude 0..pi) and baseline length in meters.
struct SphericalGeometry {
  int height{0};
  double baseline_m{0};
};

template <typename Scalar>
struct BasicDepthMap {
  Plane<Scalar> values;  // Euclidean range from the camera center, meters; 0 where invalid
  Mask valid;
  SphericalGeometry geometry{};
};

template <typename Scalar>
struct BasicDisparityMap {
  Plane<Scalar> values;  // pixels along the epipolar column; 0 where invalid
  Mask valid;
  SphericalGeometry geometry{};
};

using DepthMap = BasicDepthMap<float>;
using DisparityMap = BasicDisparityMap<float>;

template <typename Scalar>
Scalar row_latitude(Scalar v, int height) {
  return (v + Scalar(0.5)) / Scalar(height) * std::numbers::pi_v<Scalar>;
}

/// Range of the point seen at `latitude` with disparity `disp_px`; empty when the
/// disparity is below the floor or the triangle degenerates (gamma <= 0).
template <typename Scalar>
std::optional<Scalar> disparity_to_depth(Scalar latitude, Scalar disp_px, int height, Scalar baseline_m) {
  if (!std::isfinite(disp_px) || !(disp_px > Scalar(kMinDisparityPx))) return std::nullopt;
  const Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar rho = disp_px / Scalar(height) * pi;
  const Scalar beta = pi - latitude;
  const Scalar gamma = pi - rho - beta;
  if (!(gamma > Scalar(0))) return std::nullopt;
  return baseline_m * std::sin(gamma) / std::sin(rho);
}

/// Inverse of disparity_to_depth. The two-argument arctangent keeps rho in (0, pi).
template <typename Scalar>
Scalar depth_to_disparity(Scalar latitude, Scalar depth_m, int height, Scalar baseline_m) {
  const Scalar rho = std::atan2(std::sin(latitude), depth_m / baseline_m + std::cos(latitude));
  return Scalar(height) / std::numbers::pi_v<Scalar> * rho;
}

/// Range of the same point measured from the second camera.
template <typename Scalar>
Scalar transfer_range(Scalar latitude, Scalar depth_m, Scalar baseline_m) {
  const Scalar r2 = depth_m * depth_m + baseline_m * baseline_m + Scalar(2) * depth_m * baseline_m * std::cos(latitude);
  return std::sqrt(std::max(r2, Scalar(0)));
}

namespace detail {

template <typename Map>
void check_geometry(const Map& m, const char* what) {
  if (m.geometry.height <= 0 || !(m.geometry.baseline_m > 0))
    throw ContractError(std::string(what) + ": geometry (height, baseline) not populated");
  if (m.values.rows() != m.geometry.height)
    throw ContractError(std::string(what) + ": grid height does not match geometry height");
  if (m.valid.rows() != m.values.rows() || m.valid.cols() != m.values.cols())
    throw ContractError(std::string(what) + ": mask shape mismatch");
}

}  // namespace detail

template <typename Scalar>
BasicDepthMap<Scalar> disparity_to_depth(const BasicDisparityMap<Scalar>& disp) {
  detail::check_geometry(disp, "disparity_to_depth");
  const int h = disp.geometry.height;
  const double b = disp.geometry.baseline_m;
  BasicDepthMap<Scalar> out{Plane<Scalar>::Zero(disp.values.rows(), disp.values.cols()),
                            Mask::Constant(disp.values.rows(), disp.values.cols(), false), disp.geometry};
  parallel_rows(disp.values.rows(), [&](Eigen::Index r) {
    const double lat = row_latitude(double(r), h);
    for (Eigen::Index c = 0; c < disp.values.cols(); ++c) {
      if (!disp.valid(r, c)) continue;
      const auto d = disparity_to_depth(lat, double(disp.values(r, c)), h, b);
      if (!d || !(*d > 0)) continue;
      out.values(r, c) = static_cast<Scalar>(*d);
      out.valid(r, c) = true;
    }
  });
  return out;
}

template <typename Scalar>
BasicDisparityMap<Scalar> depth_to_disparity(const BasicDepthMap<Scalar>& depth) {
  detail::check_geometry(depth, "depth_to_disparity");
  const int h = depth.geometry.height;
  const double b = depth.geometry.baseline_m;
  BasicDisparityMap<Scalar> out{Plane<Scalar>::Zero(depth.values.rows(), depth.values.cols()),
                                Mask::Constant(depth.values.rows(), depth.values.cols(), false), depth.geometry};
  parallel_rows(depth.values.rows(), [&](Eigen::Index r) {
    const double lat = row_latitude(double(r), h);
    for (Eigen::Index c = 0; c < depth.values.cols(); ++c) {
      const double z = depth.values(r, c);
      if (!depth.valid(r, c) || !(z > 0) || !std::isfinite(z)) continue;
      out.values(r, c) = static_cast<Scalar>(depth_to_disparity(lat, z, h, b));
      out.valid(r, c) = true;
    }
  });
  return out;
}

/// Re-expresses a reference-camera range map in the second camera of the same
/// vertical rig. Each pixel moves up its column by its disparity; collisions keep
/// the nearest range.
DepthMap depth_between_frames(const DepthMap& upper, double baseline_m);

}  // namespace wfov
