#pragma once

// Double Sphere fisheye model and the plain pinhole model as pure per-point
// functions. Pixel centers sit at integer coordinates, origin top-left.

#include <cmath>
#include <optional>

#include "wfov/common.hpp"

namespace wfov {

template <typename Scalar>
struct DoubleSphereIntrinsics {
  Scalar fx{1}, fy{1};
  Scalar cx{0}, cy{0};
  Scalar xi{0};     // offset between the two sphere centers
  Scalar alpha{0};  // blend between the second sphere and the pinhole plane
  int width{1}, height{1};

  template <typename Other>
  DoubleSphereIntrinsics<Other> cast() const {
    return {Other(fx), Other(fy), Other(cx), Other(cy), Other(xi), Other(alpha), width, height};
  }
};

template <typename Scalar>
struct PinholeIntrinsics {
  Scalar fx{1}, fy{1};
  Scalar cx{0}, cy{0};
  int width{1}, height{1};

  template <typename Other>
  PinholeIntrinsics<Other> cast() const {
    return {Other(fx), Other(fy), Other(cx), Other(cy), width, height};
  }
};

/// Throws ConfigError when an invariant of the intrinsics is broken.
void validate(const DoubleSphereIntrinsics<double>& K);
void validate(const PinholeIntrinsics<double>& K);

/// Pinhole camera whose horizontal field of view is fov_deg, centered on the image.
PinholeIntrinsics<double> pinhole_from_fov(double fov_deg, int width, int height);

namespace detail {

// Bound on the second-sphere z / d2 below which the generalized pinhole stage is no
// longer injective.
template <typename Scalar>
Scalar ds_domain_w1(Scalar alpha) {
  return alpha <= Scalar(0.5) ? alpha / (Scalar(1) - alpha) : (Scalar(1) - alpha) / alpha;
}

// Bound on z/d1 below which the DS projection is no longer injective.
template <typename Scalar>
Scalar ds_domain_w2(Scalar xi, Scalar alpha) {
  const Scalar w1 = ds_domain_w1(alpha);
  return (w1 + xi) / std::sqrt(Scalar(2) * w1 * xi + xi * xi + Scalar(1));
}

}  // namespace detail

/// Projects a camera-frame point. Empty when the point is outside the model domain.
/// The returned pixel may lie outside the image; callers clip.
template <typename Scalar>
std::optional<Vec2<Scalar>> ds_project(const DoubleSphereIntrinsics<Scalar>& K, const Vec3<Scalar>& p) {
  const Scalar x = p.x(), y = p.y(), z = p.z();
  const Scalar d1 = p.norm();
  if (!(d1 > Scalar(0)) || !std::isfinite(d1)) throw DomainError("ds_project: zero-length or non-finite point");

  const Scalar k = K.xi * d1 + z;
  const Scalar d2 = std::sqrt(x * x + y * y + k * k);
  const Scalar denom = K.alpha * d2 + (Scalar(1) - K.alpha) * k;
  if (!(denom > Scalar(0))) return std::nullopt;
  if (!(z > -detail::ds_domain_w2(K.xi, K.alpha) * d1)) return std::nullopt;
  // The z/d1 bound alone admits a sliver past the fold when xi < 0 and alpha > 0.5;
  // testing the second-sphere point directly keeps the closed-form inverse exact.
  if (!(k > -detail::ds_domain_w1(K.alpha) * d2)) return std::nullopt;

  return Vec2<Scalar>(K.fx * x / denom + K.cx, K.fy * y / denom + K.cy);
}

/// Closed-form inverse of ds_project. Empty outside the unprojectable disc.
template <typename Scalar>
std::optional<Ray<Scalar>> ds_unproject(const DoubleSphereIntrinsics<Scalar>& K, const Vec2<Scalar>& px) {
  const Scalar mx = (px.x() - K.cx) / K.fx;
  const Scalar my = (px.y() - K.cy) / K.fy;
  const Scalar r2 = mx * mx + my * my;
  const Scalar a = K.alpha;

  const Scalar disc = Scalar(1) - (Scalar(2) * a - Scalar(1)) * r2;
  if (disc < Scalar(0)) return std::nullopt;

  const Scalar mz = (Scalar(1) - a * a * r2) / (a * std::sqrt(disc) + Scalar(1) - a);
  const Scalar mz2 = mz * mz;
  const Scalar inner = mz2 + (Scalar(1) - K.xi * K.xi) * r2;
  if (inner < Scalar(0)) return std::nullopt;

  const Scalar scale = (mz * K.xi + std::sqrt(inner)) / (mz2 + r2);
  Ray<Scalar> ray(scale * mx, scale * my, scale * mz - K.xi);
  const Scalar n = ray.norm();
  if (!(n > Scalar(0)) || !std::isfinite(n)) return std::nullopt;
  return Ray<Scalar>(ray / n);
}

template <typename Scalar>
std::optional<Vec2<Scalar>> pinhole_project(const PinholeIntrinsics<Scalar>& K, const Vec3<Scalar>& p) {
  if (!(p.z() > Scalar(0))) return std::nullopt;
  return Vec2<Scalar>(K.fx * p.x() / p.z() + K.cx, K.fy * p.y() / p.z() + K.cy);
}

template <typename Scalar>
Ray<Scalar> pinhole_unproject(const PinholeIntrinsics<Scalar>& K, const Vec2<Scalar>& px) {
  return Vec3<Scalar>((px.x() - K.cx) / K.fx, (px.y() - K.cy) / K.fy, Scalar(1)).normalized();
}

}  // namespace wfov
