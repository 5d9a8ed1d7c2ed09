// Copyright 2026 The confield Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <fstream>

#include "confield/dataset.hpp"
#include "confield/scene.hpp"

using namespace confield;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

PosedDataset sample_dataset() {
  return generate_dataset(default_desk_scene(), default_desk_intrinsics(16, 16),
                          ring_poses(3, 2.6, 0.9), 16, 42);
}

}  // namespace

TEST_CASE("save/load round trip preserves the dataset", "[dataset]") {
  TempDir tmp("confield_ds_roundtrip");
  const PosedDataset ds = sample_dataset();
  save_dataset(ds, tmp.path);
  const PosedDataset back = load_dataset(tmp.path);
  REQUIRE(back.frames.size() == ds.frames.size());
  REQUIRE(back.intrinsics.width == ds.intrinsics.width);
  REQUIRE(back.intrinsics.fx == ds.intrinsics.fx);
  REQUIRE(back.t_near == ds.t_near);
  REQUIRE(back.t_far == ds.t_far);
  REQUIRE(back.bounds.lo == ds.bounds.lo);
  for (std::size_t f = 0; f < ds.frames.size(); ++f) {
    REQUIRE(back.frames[f].id == ds.frames[f].id);
    REQUIRE(back.frames[f].pose.m == ds.frames[f].pose.m);
  }
  // Images pass through 8-bit PPM quantization once; a second trip is exact.
  TempDir tmp2("confield_ds_roundtrip2");
  save_dataset(back, tmp2.path);
  const PosedDataset back2 = load_dataset(tmp2.path);
  for (std::size_t f = 0; f < ds.frames.size(); ++f)
    REQUIRE(back2.frames[f].image.rgb == back.frames[f].image.rgb);
}

TEST_CASE("ppm writer and reader agree bit for bit after quantization", "[dataset]") {
  TempDir tmp("confield_ppm");
  Image img(5, 4);
  Rng rng(1);
  for (auto& v : img.rgb) v = static_cast<float>(rng.uniform());
  write_ppm(img, tmp.path / "x.ppm");
  const Image back = read_ppm(tmp.path / "x.ppm");
  REQUIRE(back.width == 5);
  REQUIRE(back.height == 4);
  for (std::size_t i = 0; i < img.rgb.size(); ++i)
    REQUIRE(quantize8(back.rgb[i]) == quantize8(img.rgb[i]));
}

TEST_CASE("missing dataset directory is an io error", "[dataset]") {
  try {
    load_dataset("/nonexistent/confield/dataset");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    REQUIRE(e.code() == ParseError::Code::io);
  }
}

// ---------------------------------------------------------------------------
// Blender transforms reader

namespace {

void write_blender_fixture(const fs::path& dir, int frames, double angle_x) {
  fs::create_directories(dir / "train");
  nlohmann::json j;
  j["camera_angle_x"] = angle_x;
  j["frames"] = nlohmann::json::array();
  Image img(16, 16);
  for (int i = 0; i < frames; ++i) {
    // OpenGL-style pose: camera at z=+3 looking toward -z, y up.
    nlohmann::json tm = nlohmann::json::array();
    const double m[4][4] = {{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 3.0}, {0, 0, 0, 1}};
    for (auto& row : m) tm.push_back({row[0], row[1], row[2], row[3]});
    j["frames"].push_back({{"file_path", "./train/r_" + std::to_string(i)},
                           {"transform_matrix", tm}});
    write_ppm(img, dir / "train" / ("r_" + std::to_string(i) + ".ppm"));
  }
  std::ofstream out(dir / "transforms_train.json");
  out << j.dump(2);
}

}  // namespace

TEST_CASE("blender loader applies the focal conversion formula", "[dataset][blender]") {
  TempDir tmp("confield_blender_focal");
  write_blender_fixture(tmp.path, 2, 0.6911112);
  const PosedDataset ds = load_blender_transforms(tmp.path);
  // fx = 0.5 * width / tan(0.5 * camera_angle_x), here with width 16.
  REQUIRE(ds.intrinsics.fx ==
          Catch::Approx(0.5 * 16 / std::tan(0.5 * 0.6911112)).epsilon(1e-12));
  // Published full-scale example: 800-pixel images at the same angle.
  REQUIRE(focal_from_fov_x(0.6911112, 800) == Catch::Approx(1111.1110).margin(0.01));
}

TEST_CASE("blender loader preserves the frame count", "[dataset][blender]") {
  TempDir tmp("confield_blender_count");
  write_blender_fixture(tmp.path, 4, 0.7);
  const PosedDataset ds = load_blender_transforms(tmp.path);
  REQUIRE(ds.frames.size() == 4);
  // Converted poses remain valid rigid camera-to-world transforms.
  for (const auto& f : ds.frames) f.pose.validate_rigid();
}

TEST_CASE("nonexistent blender path is an io error with no partial dataset", "[dataset][blender]") {
  try {
    load_blender_transforms("/nonexistent/blender/scene");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    REQUIRE(e.code() == ParseError::Code::io);
  }
}

TEST_CASE("malformed transforms JSON is a distinct error", "[dataset][blender]") {
  TempDir tmp("confield_blender_bad");
  std::ofstream(tmp.path / "transforms_train.json") << "{ not json";
  try {
    load_blender_transforms(tmp.path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    REQUIRE(e.code() == ParseError::Code::bad_value);
  }
}

TEST_CASE("a missing referenced image is reported by frame", "[dataset][blender]") {
  TempDir tmp("confield_blender_missing");
  write_blender_fixture(tmp.path, 2, 0.7);
  fs::remove(tmp.path / "train" / "r_1.ppm");
  REQUIRE_THROWS_WITH(load_blender_transforms(tmp.path),
                      Catch::Matchers::ContainsSubstring("r_1"));
}
