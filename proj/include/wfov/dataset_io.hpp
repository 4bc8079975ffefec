#pragma once

// File formats and manifests:
//   depth PNG   16-bit gray, millimeters, 0 = invalid, saturates at 65535
//   PFM         "Pf" single channel float32, little-endian, bottom-up rows,
//               negative = invalid
//   PLY         binary_little_endian vertex clouds (float x y z, uchar red green
//               blue, optional ushort scan_id, optional uchar reflective)
//   JSON        scene manifests, sample indices, evaluation reports, camera specs

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Geometry>
#include <json.hpp>

#include "wfov/cloud_render.hpp"
#include "wfov/metrics.hpp"
#include "wfov/projections.hpp"
#include "wfov/spherical_stereo.hpp"
#include "wfov/virtual_rig.hpp"

namespace wfov {

namespace fs = std::filesystem;

/// Writes through `write(tmp_path)` and renames onto `path`; on any failure the
/// temporary is removed and `path` is left untouched.
void write_atomically(const fs::path& path, const std::function<void(const fs::path&)>& write);

/// Writes bytes atomically.
void write_file_atomically(const fs::path& path, const std::string& bytes);

std::string read_file(const fs::path& path);

// ---- PFM ----

struct PfmImage {
  Plane<float> values;
  Mask valid;
};

/// Invalid pixels are written as -1.
void write_pfm(const fs::path& path, const Plane<float>& values, const Mask& valid);
std::string encode_pfm(const Plane<float>& values, const Mask& valid);

/// Values that are negative or non-finite come back invalid with value 0.
PfmImage read_pfm(const fs::path& path);
PfmImage decode_pfm(const std::string& bytes);

void write_disparity_pfm(const fs::path& path, const DisparityMap& disp);
DisparityMap read_disparity_pfm(const fs::path& path, double baseline_m = 0);
void write_depth_pfm(const fs::path& path, const DepthMap& depth);
DepthMap read_depth_pfm(const fs::path& path, double baseline_m = 0);

// ---- PNG ----

struct PngInfo {
  int width{0}, height{0};
  int bit_depth{0};
  int channels{0};
};

PngInfo probe_png(const fs::path& path);

/// Returns true when some range exceeded 65.535 m and was saturated.
bool write_depth_png(const fs::path& path, const DepthMap& depth);
DepthMap read_depth_png(const fs::path& path, double baseline_m = 0);

/// Millimeter quantization used by the depth PNG.
std::uint16_t depth_to_mm(float range_m, bool& clamped);

void write_rgb_png(const fs::path& path, const RgbImage& rgb);
RgbImage read_rgb_png(const fs::path& path);

void write_mask_png(const fs::path& path, const Mask& mask);
Mask read_mask_png(const fs::path& path);

// ---- PLY ----

/// Incremental reader for large binary clouds.
class PlyReader {
 public:
  explicit PlyReader(const fs::path& path);

  std::size_t vertex_count() const { return count_; }
  std::size_t remaining() const { return count_ - consumed_; }
  bool has_scan_id() const { return scan_id_offset_ >= 0; }
  bool has_reflective() const { return reflective_offset_ >= 0; }

  /// Appends up to max_points vertices to `out`; returns how many were read.
  std::size_t read(PointCloud& out, std::size_t max_points);

  /// Decodes up to max_points vertices into columns [at, at + n) of a pre-sized cloud.
  std::size_t read_into(PointCloud& out, Eigen::Index at, std::size_t max_points);

 private:
  std::ifstream in_;
  fs::path path_;
  std::size_t count_{0}, consumed_{0};
  std::size_t stride_{0};
  std::uint64_t data_offset_{0};
  int xyz_offset_[3]{-1, -1, -1};
  int rgb_offset_[3]{-1, -1, -1};
  int scan_id_offset_{-1};
  int reflective_offset_{-1};
  std::uint32_t next_index_{0};
};

/// Reads a whole cloud in chunks. `default_scan_id` fills files without scan ids.
PointCloud read_ply(const fs::path& path, std::uint16_t default_scan_id = 0);
void write_ply(const fs::path& path, const PointCloud& cloud);

// ---- JSON schemas ----

inline constexpr int kSchemaVersion = 1;

using Json = nlohmann::ordered_json;

Json to_json(const DoubleSphereIntrinsics<double>& K);
DoubleSphereIntrinsics<double> ds_intrinsics_from_json(const Json& j);
Json to_json(const PinholeIntrinsics<double>& K);
PinholeIntrinsics<double> pinhole_intrinsics_from_json(const Json& j);
Json to_json(const ProjectionSpec& spec);
ProjectionSpec projection_from_json(const Json& j);
Json to_json(const Eigen::Isometry3d& pose);
Eigen::Isometry3d pose_from_json(const Json& j);
Json to_json(const BenchmarkGrid& grid);
BenchmarkGrid grid_from_json(const Json& j);

struct ScanEntry {
  std::uint16_t id{0};
  std::string path;  // relative to the manifest directory
};

struct SceneManifest {
  int schema_version{kSchemaVersion};
  std::string scene_id;
  std::vector<ScanEntry> scans;
  std::uint16_t central_scan{0};
  double capture_height_m{1.65};
  std::string lighting{"office"};
  std::optional<std::string> masks;  // world-region annotations, relative path
  VirtualIntrinsicsPolicy camera{};
  Eigen::Isometry3d camera_pose{Eigen::Isometry3d::Identity()};  // rig center, world_from_camera
};

Json to_json(const SceneManifest& m);
SceneManifest scene_manifest_from_json(const Json& j);
SceneManifest read_scene_manifest(const fs::path& path);
void write_scene_manifest(const fs::path& path, const SceneManifest& m);

/// Schema checks plus existence of every referenced file relative to `base_dir`.
void validate(const SceneManifest& m, const fs::path& base_dir);

std::vector<WorldRegion> read_world_regions(const fs::path& path);
void write_world_regions(const fs::path& path, const std::vector<WorldRegion>& regions);

struct SampleRecord {
  std::string scene_id;
  std::string id;  // rig descriptor id
  CameraKind camera{CameraKind::ds_fisheye};
  RigOrientation orientation{RigOrientation::vertical};
  std::string projection{"equirectangular"};
  double baseline_m{0};
  double fov_deg{0};
  int width{0}, height{0};
  bool depth_clamped{false};
  std::string rgb_ref, rgb_sec, depth_ref, disparity_ref;  // relative to the index file
};

struct SampleIndex {
  int schema_version{kSchemaVersion};
  std::vector<SampleRecord> samples;
};

Json to_json(const SampleRecord& r);
SampleRecord sample_record_from_json(const Json& j);
Json to_json(const SampleIndex& idx);
SampleIndex sample_index_from_json(const Json& j);
SampleIndex read_sample_index(const fs::path& path);
void write_sample_index(const fs::path& path, const SampleIndex& idx);

/// All four artifacts exist and their headers match width/height.
void validate(const SampleRecord& r, const fs::path& base_dir);

Json to_json(const EvalReport& report);
EvalReport eval_report_from_json(const Json& j);

/// Stable text form used for every JSON file this library writes.
std::string dump_json(const Json& j);

}  // namespace wfov
