// Copyright 2026 The confield Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <fstream>

#include "confield/experiment.hpp"

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

nlohmann::json tiny_config_json(const fs::path& out) {
  nlohmann::json j;
  j["mode"] = "central";
  j["seed"] = 21;
  j["out"] = out.string();
  j["scene"] = "default";
  j["views"] = 4;
  j["eval_views"] = 2;
  j["image_size"] = 16;
  j["gt_samples_per_ray"] = 24;
  j["arch"] = {{"width", 16}, {"hidden_layers", 3}, {"skip_after_layer", 2}};
  j["encoding"] = {{"pos_frequencies", 3}, {"dir_frequencies", 2}};
  j["training"] = {{"outer_iterations", 4},
                   {"inner_steps", 2},
                   {"rays_per_batch", 32},
                   {"samples_per_ray", 8}};
  j["eval_samples_per_ray"] = 8;
  return j;
}

std::vector<std::uint8_t> read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void require_identical_trees(const fs::path& a, const fs::path& b) {
  std::vector<fs::path> rel_a;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) rel_a.push_back(fs::relative(e.path(), a));
  std::sort(rel_a.begin(), rel_a.end());
  std::vector<fs::path> rel_b;
  for (const auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file()) rel_b.push_back(fs::relative(e.path(), b));
  std::sort(rel_b.begin(), rel_b.end());
  REQUIRE(rel_a == rel_b);
  for (const auto& rel : rel_a) {
    INFO("file " << rel);
    REQUIRE(read_all(a / rel) == read_all(b / rel));
  }
}

}  // namespace

TEST_CASE("config parse errors name the offending field", "[experiment]") {
  nlohmann::json j = tiny_config_json("x");
  j["training"]["rho"] = "not-a-number";
  REQUIRE_THROWS_WITH(experiment_config_from_json(j),
                      Catch::Matchers::ContainsSubstring("rho"));

  nlohmann::json j2 = tiny_config_json("x");
  j2["mode"] = "federated";
  REQUIRE_THROWS_WITH(experiment_config_from_json(j2),
                      Catch::Matchers::ContainsSubstring("mode"));
}

TEST_CASE("a central run writes the full artifact tree", "[experiment]") {
  TempDir tmp("confield_exp_central");
  const ExperimentConfig cfg = experiment_config_from_json(tiny_config_json(tmp.path / "run"));
  const ExperimentSummary summary = run_experiment(cfg);
  REQUIRE(fs::exists(tmp.path / "run" / "weights_agent_0.nwv1"));
  REQUIRE(fs::exists(tmp.path / "run" / "trace.csv"));
  REQUIRE(fs::exists(tmp.path / "run" / "exchange_log.csv"));
  REQUIRE(fs::exists(tmp.path / "run" / "comm_report.csv"));
  REQUIRE(fs::exists(tmp.path / "run" / "metrics.csv"));
  REQUIRE(fs::exists(tmp.path / "run" / "config.json"));
  REQUIRE(fs::exists(tmp.path / "run" / "renders" / "agent_0"));
  REQUIRE_FALSE(fs::exists(tmp.path / "run.tmp"));
  REQUIRE(summary.mean_psnr.size() == 1);

  // metrics.csv: header + one row per eval view + one mean row.
  const auto metrics = read_csv(tmp.path / "run" / "metrics.csv");
  REQUIRE(metrics.size() == 1 + 2 + 1);
  REQUIRE(metrics[0] == std::vector<std::string>{"agent", "frame", "psnr", "ssim"});
  REQUIRE(metrics.back()[1] == "mean");

  // trace.csv: header plus K rows with the per-layer norm columns.
  const auto trace = read_csv(tmp.path / "run" / "trace.csv");
  REQUIRE(trace.size() == 1 + 4);
  REQUIRE(trace[0].size() == 5 + 3);  // 3 hidden layers in this config
}

TEST_CASE("a multi run produces per-agent weights and a two-neighbor exchange log",
          "[experiment]") {
  TempDir tmp("confield_exp_multi");
  nlohmann::json j = tiny_config_json(tmp.path / "run");
  j["mode"] = "multi";
  j["graph"] = "ring:3";
  j["views"] = 6;
  const ExperimentConfig cfg = experiment_config_from_json(j);
  const ExperimentSummary summary = run_experiment(cfg);
  REQUIRE(summary.mean_psnr.size() == 3);
  for (int a = 0; a < 3; ++a)
    REQUIRE(fs::exists(tmp.path / "run" / ("weights_agent_" + std::to_string(a) + ".nwv1")));

  // Every comm iteration delivers exactly two payloads to each of the three
  // agents.
  const auto log_rows = read_csv(tmp.path / "run" / "exchange_log.csv");
  REQUIRE(log_rows.size() == 1 + 4 * 3 * 2);  // K=4 iterations, freq 1.0
  // Three metric rows (plus mean) per eval image set of two.
  const auto metrics = read_csv(tmp.path / "run" / "metrics.csv");
  REQUIRE(metrics.size() == 1 + 3 * (2 + 1));
}

TEST_CASE("two sequential runs of one config are byte-identical", "[experiment]") {
  TempDir tmp("confield_exp_determinism");
  nlohmann::json j = tiny_config_json(tmp.path / "run_a");
  j["mode"] = "multi";
  j["graph"] = "chain:2";
  const ExperimentConfig cfg_a = experiment_config_from_json(j);
  run_experiment(cfg_a);
  j["out"] = (tmp.path / "run_b").string();
  const ExperimentConfig cfg_b = experiment_config_from_json(j);
  run_experiment(cfg_b);

  // The resolved configs differ only in the out path; exclude them.
  fs::remove(tmp.path / "run_a" / "config.json");
  fs::remove(tmp.path / "run_b" / "config.json");
  require_identical_trees(tmp.path / "run_a", tmp.path / "run_b");
}

TEST_CASE("evaluating a corrupt weight file fails cleanly", "[experiment]") {
  TempDir tmp("confield_exp_badweights");
  std::ofstream(tmp.path / "bad.nwv1", std::ios::binary) << "XXXXgarbage";
  const PosedDataset ds = generate_dataset(default_desk_scene(), default_desk_intrinsics(16, 16),
                                           ring_poses(2, 2.6, 0.9), 8, 1);
  REQUIRE_THROWS_AS(evaluate_weight_files({tmp.path / "bad.nwv1"}, ds, 8, 0, 1,
                                          tmp.path / "metrics.csv"),
                    ParseError);
}

TEST_CASE("weight files with mismatched architectures are rejected", "[experiment]") {
  TempDir tmp("confield_exp_mismatch");
  const EncodingConfig enc{3, 2, true};
  const MlpArchitecture a1 = make_arch(enc, 16, 3, 1);
  const MlpArchitecture a2 = make_arch(enc, 12, 3, 1);
  {
    const auto w = mlp_init<float>(a1, 1);
    const auto bytes = serialize_weights<float>(w, a1);
    std::ofstream(tmp.path / "a.nwv1", std::ios::binary)
        .write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  {
    const auto w = mlp_init<float>(a2, 1);
    const auto bytes = serialize_weights<float>(w, a2);
    std::ofstream(tmp.path / "b.nwv1", std::ios::binary)
        .write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  const PosedDataset ds = generate_dataset(default_desk_scene(), default_desk_intrinsics(16, 16),
                                           ring_poses(2, 2.6, 0.9), 8, 1);
  REQUIRE_THROWS_WITH(evaluate_weight_files({tmp.path / "a.nwv1", tmp.path / "b.nwv1"}, ds, 8, 0,
                                            1, tmp.path / "m.csv"),
                      Catch::Matchers::ContainsSubstring("architecture"));
}

TEST_CASE("encoding is recoverable from architecture dims", "[experiment]") {
  const EncodingConfig enc{6, 4, true};
  const MlpArchitecture a = make_arch(enc, 64, 8, 5);
  const EncodingConfig back = encoding_from_arch(a);
  REQUIRE(back.pos_frequencies == 6);
  REQUIRE(back.dir_frequencies == 4);
  REQUIRE(back.include_identity);

  const EncodingConfig no_id{5, 3, false};
  const EncodingConfig back2 = encoding_from_arch(make_arch(no_id, 32, 4, 2));
  REQUIRE(back2.pos_frequencies == 5);
  REQUIRE_FALSE(back2.include_identity);
}

TEST_CASE("rendering one pixel equals the standalone ray pipeline", "[experiment][render]") {
  // render_image at pixel p must equal generate_ray + stratified_samples +
  // field query + quadrature with the same per-pixel stream.
  const EncodingConfig enc{3, 2, true};
  const MlpArchitecture arch = make_arch(enc, 16, 3, 1);
  const auto w = mlp_init<float>(arch, 9);
  const CameraModel cam{default_desk_intrinsics(12, 12), ring_poses(1, 2.6, 0.9)[0]};
  const RenderContext ctx{Aabb{{-1, -1, -1}, {1, 1, 1}}, 1.0, 4.5, {0.1, 0.2, 0.3}, 16};
  const std::uint64_t seed = 77;
  const Image img = render_image<float>(w, arch, enc, cam, ctx, seed);

  const int u = 7, v = 5, p = v * 12 + u;
  Rng rng = Rng::keyed(seed, {streams::render, static_cast<std::uint64_t>(p)});
  const Ray ray = generate_ray(cam, u, v, ctx.t_near, ctx.t_far);
  const auto ts = stratified_samples(ray, 16, rng);
  MatX<float> tv(1, 16);
  MatX<double> pts(16, 3), dirs(16, 3);
  for (int s = 0; s < 16; ++s) {
    tv(0, s) = static_cast<float>(ts[static_cast<std::size_t>(s)]);
    const Vec3 q = ctx.bounds.normalize(ray.origin + ray.dir * ts[static_cast<std::size_t>(s)]);
    pts(s, 0) = q.x;
    pts(s, 1) = q.y;
    pts(s, 2) = q.z;
    dirs(s, 0) = ray.dir.x;
    dirs(s, 1) = ray.dir.y;
    dirs(s, 2) = ray.dir.z;
  }
  MatX<float> inputs(16, arch.pos_enc_dim + arch.dir_enc_dim);
  inputs.leftCols(arch.pos_enc_dim) =
      encode_batch<float>(pts.cast<float>(), enc.pos_frequencies, enc.include_identity);
  inputs.rightCols(arch.dir_enc_dim) =
      encode_batch<float>(dirs.cast<float>(), enc.dir_frequencies, enc.include_identity);
  const auto fb = field_forward<float>(w, arch, std::move(inputs));
  Eigen::Map<const MatX<float>> sig(fb.sigma.data(), 1, 16);
  const VecX<float> tf = VecX<float>::Constant(1, static_cast<float>(ctx.t_far));
  const auto rb = render_rays<float>(sig, fb.color, tv, tf, ctx.background);

  const Vec3 px = img.get(u, v);
  REQUIRE(px.x == Catch::Approx(rb.color(0, 0)).margin(1e-7));
  REQUIRE(px.y == Catch::Approx(rb.color(0, 1)).margin(1e-7));
  REQUIRE(px.z == Catch::Approx(rb.color(0, 2)).margin(1e-7));
}

TEST_CASE("threaded rendering matches single-threaded bit for bit", "[experiment][render]") {
  const EncodingConfig enc{3, 2, true};
  const MlpArchitecture arch = make_arch(enc, 16, 3, 1);
  const auto w = mlp_init<float>(arch, 15);
  const CameraModel cam{default_desk_intrinsics(32, 32), ring_poses(1, 2.6, 0.9)[0]};
  const RenderContext ctx{Aabb{{-1, -1, -1}, {1, 1, 1}}, 1.0, 4.5, {0, 0, 0}, 8};
  const Image one = render_image<float>(w, arch, enc, cam, ctx, 3, 1);
  const Image two = render_image<float>(w, arch, enc, cam, ctx, 3, 2);
  REQUIRE(one.rgb == two.rgb);
}

TEST_CASE("rendered channels stay inside [0,1]", "[experiment][render]") {
  const EncodingConfig enc{3, 2, true};
  const MlpArchitecture arch = make_arch(enc, 16, 3, 1);
  Rng rng(2);
  std::vector<float> w(param_count(arch));
  for (auto& v : w) v = static_cast<float>(rng.uniform(-1.5, 1.5));
  const CameraModel cam{default_desk_intrinsics(64, 64), ring_poses(1, 2.6, 0.9)[0]};
  const RenderContext ctx{Aabb{{-1, -1, -1}, {1, 1, 1}}, 1.0, 4.5, {0.5, 0.5, 0.5}, 16};
  const Image img = render_image<float>(w, arch, enc, cam, ctx, 1);
  for (float v : img.rgb) {
    REQUIRE(v >= 0.f);
    REQUIRE(v <= 1.f);
  }
}

TEST_CASE("a zero-density field renders pure background", "[experiment][render]") {
  const EncodingConfig enc{3, 2, true};
  MlpArchitecture arch = make_arch(enc, 16, 3, 1);
  const std::vector<float> zeros(param_count(arch), 0.f);  // relu head: sigma 0
  const CameraModel cam{default_desk_intrinsics(16, 16), ring_poses(1, 2.6, 0.9)[0]};
  const RenderContext ctx{Aabb{{-1, -1, -1}, {1, 1, 1}}, 1.0, 4.5, {0.9, 0.1, 0.4}, 8};
  const Image img = render_image<float>(zeros, arch, enc, cam, ctx, 5);
  for (int u = 0; u < 16; u += 5)
    for (int v = 0; v < 16; v += 5) {
      const Vec3 c = img.get(u, v);
      REQUIRE(c.x == Catch::Approx(0.9).margin(1e-6));
      REQUIRE(c.y == Catch::Approx(0.1).margin(1e-6));
      REQUIRE(c.z == Catch::Approx(0.4).margin(1e-6));
    }
}
