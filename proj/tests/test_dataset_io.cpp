#include <doctest.h>

#include <random>

#include "wfov/dataset_io.hpp"
#include "wfov/synthetic.hpp"

using namespace wfov;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("wfov_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

DepthMap random_depth(std::mt19937_64& rng, int rows, int cols, double lo, double hi) {
  std::uniform_real_distribution<double> v(lo, hi);
  std::bernoulli_distribution keep(0.8);
  DepthMap d{Plane<float>::Zero(rows, cols), Mask::Constant(rows, cols, false), {rows, 0.1}};
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (keep(rng)) {
        d.values(r, c) = float(v(rng));
        d.valid(r, c) = true;
      }
  return d;
}

}  // namespace

TEST_SUITE("dataset_io") {
  TEST_CASE("depth PNG roundtrip stays within half a millimeter") {
    TempDir tmp("png");
    std::mt19937_64 rng(8);
    const DepthMap d = random_depth(rng, 31, 47, 0.001, 65.0);
    CHECK_FALSE(write_depth_png(tmp.path / "d.png", d));
    const DepthMap back = read_depth_png(tmp.path / "d.png", 0.1);
    CHECK((back.valid == d.valid).all());
    for (int r = 0; r < 31; ++r)
      for (int c = 0; c < 47; ++c)
        if (d.valid(r, c)) CHECK(std::abs(double(back.values(r, c)) - double(d.values(r, c))) <= 0.0005 + 1e-7);
    const PngInfo info = probe_png(tmp.path / "d.png");
    CHECK(info.bit_depth == 16);
    CHECK(info.channels == 1);
    CHECK(info.width == 47);
  }

  TEST_CASE("far ranges saturate and report it") {
    TempDir tmp("png_sat");
    DepthMap d{Plane<float>::Constant(2, 2, 70.0f), Mask::Constant(2, 2, true), {2, 0.1}};
    CHECK(write_depth_png(tmp.path / "d.png", d));
    CHECK(read_depth_png(tmp.path / "d.png").values(0, 0) == 65.535f);
    bool clamped = false;
    CHECK(depth_to_mm(1.2344f, clamped) == 1234);
    CHECK(depth_to_mm(0.0f, clamped) == 0);
    CHECK_FALSE(clamped);
  }

  TEST_CASE("PFM roundtrip is bit exact") {
    TempDir tmp("pfm");
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<float> v(0.0f, 300.0f);
    Plane<float> values(17, 29);
    Mask valid = Mask::Constant(17, 29, true);
    for (Eigen::Index i = 0; i < values.size(); ++i) values.data()[i] = v(rng);
    valid(3, 4) = false;
    values(3, 4) = 0;
    write_pfm(tmp.path / "x.pfm", values, valid);
    const PfmImage back = read_pfm(tmp.path / "x.pfm");
    CHECK((back.values == values).all());
    CHECK((back.valid == valid).all());
    // Re-encoding yields identical bytes.
    CHECK(encode_pfm(back.values, back.valid) == read_file(tmp.path / "x.pfm"));
  }

  TEST_CASE("PFM rows are stored bottom-up") {
    Plane<float> values(2, 1);
    values << 1.0f, 2.0f;
    const std::string bytes = encode_pfm(values, Mask::Constant(2, 1, true));
    REQUIRE(bytes.size() == std::string("Pf\n1 2\n-1\n").size() + 8);
    float first;
    std::memcpy(&first, bytes.data() + bytes.size() - 8, 4);
    CHECK(first == 2.0f);
  }

  TEST_CASE("malformed PFM is a data error") {
    CHECK_THROWS_AS(decode_pfm("PF\n1 1\n-1\n0000"), DataError);
    CHECK_THROWS_AS(decode_pfm("Pf\n2 2\n-1\n0000"), DataError);  // truncated
    CHECK_THROWS_AS(decode_pfm("Pf\n1 1\n0\n0000"), DataError);
    CHECK_THROWS_AS(read_pfm("/nonexistent/x.pfm"), DataError);
  }

  TEST_CASE("disparity maps keep their geometry through PFM") {
    TempDir tmp("disp");
    DisparityMap d{Plane<float>::Constant(8, 16, 1.5f), Mask::Constant(8, 16, true), {8, 0.065}};
    write_disparity_pfm(tmp.path / "d.pfm", d);
    const DisparityMap back = read_disparity_pfm(tmp.path / "d.pfm", 0.065);
    CHECK(back.geometry.height == 8);
    CHECK(back.geometry.baseline_m == 0.065);
    CHECK((back.values == d.values).all());
  }

  TEST_CASE("RGB and mask PNG roundtrip") {
    TempDir tmp("rgb");
    RgbImage img(5, 7);
    for (int ch = 0; ch < 3; ++ch)
      for (Eigen::Index i = 0; i < img.channel[ch].size(); ++i)
        img.channel[ch].data()[i] = std::uint8_t((i * 37 + ch * 11) % 256);
    write_rgb_png(tmp.path / "a.png", img);
    const RgbImage back = read_rgb_png(tmp.path / "a.png");
    for (int ch = 0; ch < 3; ++ch) CHECK((back.channel[ch] == img.channel[ch]).all());
    Mask m = Mask::Constant(5, 7, false);
    m(1, 2) = true;
    write_mask_png(tmp.path / "m.png", m);
    CHECK((read_mask_png(tmp.path / "m.png") == m).all());
    CHECK_THROWS_AS(read_depth_png(tmp.path / "a.png"), DataError);
  }

  TEST_CASE("PLY roundtrip and chunked reading") {
    TempDir tmp("ply");
    PointCloud c = textured_rectangle({0, 0, 1}, {1, 0, 0}, {0, 1, 0}, 0.01, 3);
    c.reflective.assign(std::size_t(c.size()), 0);
    c.reflective[5] = 1;
    write_ply(tmp.path / "c.ply", c);
    const PointCloud back = read_ply(tmp.path / "c.ply");
    CHECK(back.size() == c.size());
    CHECK((back.positions.array() == c.positions.array()).all());
    CHECK((back.colors.array() == c.colors.array()).all());
    CHECK(back.scan_id == c.scan_id);
    CHECK(back.reflective == c.reflective);
    CHECK(back.point_index == c.point_index);

    PlyReader reader(tmp.path / "c.ply");
    CHECK(reader.has_scan_id());
    CHECK(reader.has_reflective());
    PointCloud chunks;
    std::size_t reads = 0;
    while (reader.remaining() > 0) {
      reader.read(chunks, 1000);
      ++reads;
    }
    CHECK(reads == (std::size_t(c.size()) + 999) / 1000);
    CHECK((chunks.positions.array() == c.positions.array()).all());
    CHECK(chunks.point_index == c.point_index);
  }

  TEST_CASE("truncated PLY is a data error") {
    TempDir tmp("ply_bad");
    const PointCloud c = textured_rectangle({0, 0, 1}, {0.2, 0, 0}, {0, 0.2, 0}, 0.01);
    write_ply(tmp.path / "c.ply", c);
    std::string bytes = read_file(tmp.path / "c.ply");
    bytes.resize(bytes.size() - 7);
    write_file_atomically(tmp.path / "t.ply", bytes);
    CHECK_THROWS_AS(read_ply(tmp.path / "t.ply"), DataError);
    write_file_atomically(tmp.path / "a.ply", "ply\nformat ascii 1.0\nelement vertex 1\nend_header\n0 0 0\n");
    CHECK_THROWS_AS(read_ply(tmp.path / "a.ply"), DataError);
  }

  TEST_CASE("failed atomic writes leave the target untouched") {
    TempDir tmp("atomic");
    write_file_atomically(tmp.path / "f.txt", "old");
    CHECK_THROWS(write_atomically(tmp.path / "f.txt", [](const fs::path& p) {
      std::ofstream(p) << "partial";
      throw DataError("boom");
    }));
    CHECK(read_file(tmp.path / "f.txt") == "old");
    for (const auto& e : fs::directory_iterator(tmp.path)) CHECK(e.path().filename() == "f.txt");
  }

  TEST_CASE("scene manifest roundtrip is bit exact") {
    TempDir tmp("manifest");
    const auto scene = make_room_scene("room_a", 0.1);
    const fs::path path = write_scene(scene, tmp.path);
    const std::string first = read_file(path);
    const SceneManifest m = read_scene_manifest(path);
    CHECK(m.scene_id == "room_a");
    CHECK(m.scans.size() == 3);
    CHECK(m.camera.reference.xi == -0.2);
    validate(m, tmp.path);
    write_scene_manifest(tmp.path / "again.json", m);
    CHECK(read_file(tmp.path / "again.json") == first);
  }

  TEST_CASE("manifest validation") {
    TempDir tmp("manifest_bad");
    const auto scene = make_room_scene("room_b", 0.1);
    const fs::path path = write_scene(scene, tmp.path);
    SceneManifest m = read_scene_manifest(path);
    SUBCASE("unknown height") {
      m.capture_height_m = 1.2;
      CHECK_THROWS_AS(validate(m, tmp.path), ConfigError);
    }
    SUBCASE("unknown lighting") {
      m.lighting = "disco";
      CHECK_THROWS_AS(validate(m, tmp.path), ConfigError);
    }
    SUBCASE("missing scan file") {
      m.scans[1].path = "scans/none.ply";
      CHECK_THROWS_AS(validate(m, tmp.path), DataError);
    }
    SUBCASE("duplicate scan id") {
      m.scans[2].id = m.scans[1].id;
      CHECK_THROWS_AS(validate(m, tmp.path), ConfigError);
    }
    SUBCASE("wrong schema version") {
      Json j = to_json(m);
      j["schema_version"] = 2;
      CHECK_THROWS_AS(scene_manifest_from_json(j), ConfigError);
    }
    SUBCASE("broken JSON") {
      write_file_atomically(tmp.path / "broken.json", "{\"scene_id\": ");
      CHECK_THROWS_AS(read_scene_manifest(tmp.path / "broken.json"), DataError);
    }
  }

  TEST_CASE("projection, pose and intrinsics JSON roundtrips") {
    const auto cam = reference_ds_camera();
    const auto K = ds_intrinsics_from_json(to_json(cam));
    CHECK(K.fx == cam.fx);
    CHECK(K.alpha == cam.alpha);
    for (const auto& spec :
         {ProjectionSpec::equirectangular(64), ProjectionSpec::cubemap(32), ProjectionSpec::cassini(16),
          ProjectionSpec::ds_camera(cam, 195.0), ProjectionSpec::pinhole_camera(pinhole_from_fov(90, 64, 48))}) {
      const Json j = to_json(spec);
      const ProjectionSpec back = projection_from_json(j);
      CHECK(back.kind == spec.kind);
      CHECK(back.width == spec.width);
      CHECK(back.height == spec.height);
      CHECK(back.lon_span_rad == spec.lon_span_rad);
      CHECK(back.max_fov_deg == spec.max_fov_deg);
      CHECK(dump_json(to_json(back)) == dump_json(j));
    }
    Eigen::Isometry3d pose(Eigen::AngleAxisd(0.4, Eigen::Vector3d::UnitY()));
    pose.translation() << 0.1, -2, 3.5;
    const Eigen::Isometry3d p2 = pose_from_json(to_json(pose));
    CHECK(p2.matrix() == pose.matrix());
  }

  TEST_CASE("sample index and eval report roundtrips") {
    SampleIndex idx;
    SampleRecord r;
    r.scene_id = "s";
    r.id = "ds-vertical-b065-fov195";
    r.baseline_m = 0.065;
    r.fov_deg = 195;
    r.width = 128;
    r.height = 64;
    r.rgb_ref = "s/x/rgb_ref.png";
    idx.samples.push_back(r);
    const Json j = to_json(idx);
    CHECK(dump_json(to_json(sample_index_from_json(j))) == dump_json(j));

    EvalReport rep;
    rep.domain = {"disparity", 195, 0.065, "equirectangular"};
    rep.metrics.push_back({"EPE", 0.123456789012345678, "px", 42});
    const Json rj = to_json(rep);
    const EvalReport back = eval_report_from_json(rj);
    CHECK(back.metrics[0].value == rep.metrics[0].value);
    CHECK(dump_json(to_json(back)) == dump_json(rj));
    EvalReport pinless;
    pinless.domain.kind = "depth";
    CHECK(dump_json(to_json(eval_report_from_json(to_json(pinless)))) == dump_json(to_json(pinless)));
  }

  TEST_CASE("world regions roundtrip") {
    TempDir tmp("regions");
    const std::vector<WorldRegion> regions{{{{0, 0, 1}, {1, 0, 1}, {1, 1, 1}}, MaskMode::clip_to, 2.5}};
    write_world_regions(tmp.path / "r.json", regions);
    const auto back = read_world_regions(tmp.path / "r.json");
    REQUIRE(back.size() == 1);
    CHECK(back[0].mode == MaskMode::clip_to);
    CHECK(back[0].clip_m == 2.5);
    CHECK(back[0].polygon[1] == Eigen::Vector3d(1, 0, 1));
  }
}
