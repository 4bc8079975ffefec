#include "wfov/spherical_stereo.hpp"

#include <limits>

namespace wfov {

DepthMap depth_between_frames(const DepthMap& upper, double baseline_m) {
  detail::check_geometry(upper, "depth_between_frames");
  if (std::abs(upper.geometry.baseline_m - baseline_m) > 1e-12)
    throw ContractError("depth_between_frames: rig baseline differs from the map geometry");
  const Eigen::Index rows = upper.values.rows(), cols = upper.values.cols();
  const int h = upper.geometry.height;

  DepthMap out{Plane<float>::Zero(rows, cols), Mask::Constant(rows, cols, false), upper.geometry};
  // Columns are independent; within a column rows are visited in order.
  tbb::parallel_for(Eigen::Index{0}, cols, [&](Eigen::Index c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double z = upper.values(r, c);
      if (!upper.valid(r, c) || !(z > 0)) continue;
      const double lat = row_latitude(double(r), h);
      const double disp = depth_to_disparity(lat, z, h, baseline_m);
      const Eigen::Index r2 = Eigen::Index(std::floor(double(r) - disp + 0.5));
      if (r2 < 0 || r2 >= rows) continue;
      const float range = static_cast<float>(transfer_range(lat, z, baseline_m));
      if (!out.valid(r2, c) || range < out.values(r2, c)) {
        out.values(r2, c) = range;
        out.valid(r2, c) = true;
      }
    }
  });
  return out;
}

}  // namespace wfov
