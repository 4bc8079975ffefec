#include "wfov/camera_models.hpp"

#include <numbers>

namespace wfov {

void validate(const DoubleSphereIntrinsics<double>& K) {
  if (!(K.fx > 0) || !(K.fy > 0)) throw ConfigError("double sphere: focal lengths must be positive");
  if (!(K.alpha >= 0 && K.alpha <= 1)) throw ConfigError("double sphere: alpha must lie in [0, 1]");
  if (!std::isfinite(K.xi)) throw ConfigError("double sphere: xi must be finite");
  if (K.width <= 0 || K.height <= 0) throw ConfigError("double sphere: image size must be positive");
  if (!(K.cx >= 0 && K.cx < K.width) || !(K.cy >= 0 && K.cy < K.height))
    throw ConfigError("double sphere: principal point outside the image");
}

void validate(const PinholeIntrinsics<double>& K) {
  if (!(K.fx > 0) || !(K.fy > 0)) throw ConfigError("pinhole: focal lengths must be positive");
  if (K.width <= 0 || K.height <= 0) throw ConfigError("pinhole: image size must be positive");
}

PinholeIntrinsics<double> pinhole_from_fov(double fov_deg, int width, int height) {
  if (!(fov_deg > 0 && fov_deg < 180)) throw ConfigError("pinhole: field of view must lie in (0, 180) degrees");
  const double f = 0.5 * width / std::tan(0.5 * fov_deg * std::numbers::pi / 180.0);
  return {f, f, 0.5 * (width - 1), 0.5 * (height - 1), width, height};
}

}  // namespace wfov
