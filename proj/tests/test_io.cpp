// Copyright (c) 2026 relufield authors
// SPDX-License-Identifier: Apache-2.0

#include "relufield/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "doctest.h"
#include "relufield/png_io.hpp"
#include "relufield/radiance.hpp"
#include "relufield/rng.hpp"

using namespace rf;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("grid file round trip is bit identical") {
    TempDir dir("relufield_io_grid");
    FieldGrid g = init_uniform(3, {5, 4, 3}, 7, {{-1, -2, 0}, {1, 2, 3}}, -2.0, 2.0, 99);
    const std::string path = (dir.path / "g.rluf").string();
    save_grid(path, g);
    FieldGrid loaded = load_grid(path);
    CHECK(loaded.rank == g.rank);
    CHECK(loaded.dims == g.dims);
    CHECK(loaded.channels == g.channels);
    CHECK(loaded.aabb.lo.y == g.aabb.lo.y);
    CHECK(loaded.aabb.hi.z == g.aabb.hi.z);
    CHECK(loaded.values == g.values);

    // Header arithmetic: 4 magic + 2 version + 2 rank + 4*rank dims +
    // 4 channels + 16*rank aabb, then 4 bytes per value.
    const auto size = fs::file_size(path);
    CHECK(size == 4 + 2 + 2 + 12 + 4 + 48 + 4 * g.values.size());

    SUBCASE("2D grids round trip too") {
        FieldGrid img = init_uniform(2, {6, 3, 1}, 3, {{0, 0, 0}, {6, 3, 1}}, 0.0, 1.0, 5);
        const std::string p2 = (dir.path / "g2.rluf").string();
        save_grid(p2, img);
        FieldGrid l2 = load_grid(p2);
        CHECK(l2.rank == 2);
        CHECK(l2.values == img.values);
    }
}

TEST_CASE("grid loader rejects corrupt files") {
    TempDir dir("relufield_io_bad");
    FieldGrid g = init_uniform(3, {4, 4, 4}, 2, {{0, 0, 0}, {1, 1, 1}}, -1, 1, 3);
    const std::string path = (dir.path / "g.rluf").string();
    save_grid(path, g);

    // Truncation.
    {
        std::ifstream in(path, std::ios::binary);
        std::vector<char> bytes((std::istreambuf_iterator<char>(in)), {});
        std::ofstream out((dir.path / "trunc.rluf").string(), std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    }
    CHECK_THROWS_AS(load_grid((dir.path / "trunc.rluf").string()), std::runtime_error);

    // Bad magic.
    {
        std::ofstream out((dir.path / "magic.rluf").string(), std::ios::binary);
        out << "NOPE" << std::string(64, '\0');
    }
    CHECK_THROWS_AS(load_grid((dir.path / "magic.rluf").string()), std::runtime_error);

    CHECK_THROWS_AS(load_grid((dir.path / "missing.rluf").string()), std::runtime_error);
}

TEST_CASE("png round trips and alpha compositing") {
    TempDir dir("relufield_io_png");
    RasterImage img = RasterImage::create(9, 5, 3);
    Rng rng(8);
    for (double& v : img.values) v = static_cast<double>(rng.uniform_index(256)) / 255.0;

    const std::string path = (dir.path / "img.png").string();
    write_png_rgb8(path, img);
    RasterImage back = read_png_image(path);
    REQUIRE(back.width == 9);
    REQUIRE(back.height == 5);
    CHECK(back.values == img.values);  // 8-bit-exact values survive unchanged

    // Alpha: a half-transparent pixel blends with the configured background.
    std::vector<double> alpha(9 * 5, 1.0);
    alpha[0] = 0.0;
    alpha[1] = 102.0 / 255.0;
    const std::string rgba_path = (dir.path / "rgba.png").string();
    write_png_rgba8(rgba_path, img, alpha);
    const Vec3 bg{1.0, 0.5, 0.0};
    RasterImage comp = read_png_image(rgba_path, bg);
    CHECK(comp.values[0] == doctest::Approx(1.0));
    CHECK(comp.values[1] == doctest::Approx(0.5));
    CHECK(comp.values[2] == doctest::Approx(0.0));
    const double a = 102.0 / 255.0;
    for (int c = 0; c < 3; ++c)
        CHECK(comp.values[3 + c] ==
              doctest::Approx(img.values[3 + c] * a + bg[c] * (1.0 - a)).epsilon(1e-12));

    // 16-bit depth image: reread through the 8-bit reader keeps the high byte.
    std::vector<std::uint16_t> depth(4 * 3, 0);
    depth[5] = 65535;
    depth[6] = 32768;
    const std::string dpath = (dir.path / "depth.png").string();
    write_png_gray16(dpath, 4, 3, depth);
    Png8 raw = read_png8(dpath);
    CHECK(raw.width == 4);
    CHECK(raw.data[5 * raw.channels] == 255);
    CHECK(raw.data[6 * raw.channels] == 128);
}

TEST_CASE("focal length from the manifest field of view") {
    CHECK(focal_from_angle_x(0.6911112, 800) == doctest::Approx(1111.111).epsilon(1e-4));
}

TEST_CASE("nerf dataset round trip through the on-disk layout") {
    TempDir dir("relufield_io_ds");

    FieldGrid scene = make_box_scene_grid(16);
    RenderSettings s;
    s.samples_per_ray = 32;
    auto poses = orbit_poses(3, 3.0, 24, 20, 30.0);
    Dataset ds = render_synthetic_dataset(scene, poses, s, "train");
    save_nerf_dataset(dir.str(), "train", ds.camera_angle_x, ds.frames);

    Dataset loaded = load_nerf_dataset(dir.str(), "train", {1, 1, 1});
    REQUIRE(loaded.frames.size() == 3);
    CHECK(loaded.width == 24);
    CHECK(loaded.height == 20);
    CHECK(loaded.focal == doctest::Approx(30.0).epsilon(1e-9));
    CHECK(loaded.aabb.lo.x == -1.5);  // default box unless overridden

    Aabb override_box{{-2, -2, -2}, {2, 2, 2}};
    Dataset with_box = load_nerf_dataset(dir.str(), "train", {1, 1, 1}, override_box);
    CHECK(with_box.aabb.hi.x == 2.0);

    for (int i = 0; i < 3; ++i) {
        CHECK(rotation_error(loaded.frames[i].pose.R) < 1e-6);
        CHECK(norm(loaded.frames[i].pose.T - poses[i].T) < 1e-12);
        // Images pass through 8-bit quantization once.
        double max_err = 0.0;
        for (std::size_t k = 0; k < ds.frames[i].image.values.size(); ++k)
            max_err = std::max(max_err, std::abs(loaded.frames[i].image.values[k] -
                                                 ds.frames[i].image.values[k]));
        CHECK(max_err <= 0.5 / 255.0 + 1e-12);
    }

    CHECK_THROWS_AS(load_nerf_dataset(dir.str(), "test", {1, 1, 1}), std::runtime_error);
}

TEST_CASE("nerf dataset loader: identity pose, field validation") {
    TempDir dir("relufield_io_ds2");
    fs::create_directories(dir.path / "train");
    write_png_rgb8((dir.path / "train" / "r_0.png").string(), RasterImage::create(8, 8, 3, 0.5));

    auto write_manifest = [&](const std::string& body) {
        std::ofstream out(dir.path / "transforms_train.json");
        out << body;
    };

    write_manifest(R"({"camera_angle_x": 0.6911112,
      "frames": [{"file_path": "./train/r_0",
                  "transform_matrix": [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]}]})");
    Dataset ds = load_nerf_dataset(dir.str(), "train");
    CHECK(rotation_error(ds.frames[0].pose.R) == 0.0);
    CHECK(norm(ds.frames[0].pose.T) == 0.0);

    write_manifest(R"({"camera_angle_x": 0.69, "frames": []})");
    CHECK_THROWS_WITH_AS(load_nerf_dataset(dir.str(), "train"),
                         doctest::Contains("empty frames"), std::runtime_error);

    write_manifest(R"({"frames": [{"file_path": "./train/r_0",
      "transform_matrix": [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]}]})");
    CHECK_THROWS_WITH_AS(load_nerf_dataset(dir.str(), "train"),
                         doctest::Contains("camera_angle_x"), std::runtime_error);

    write_manifest(R"({"camera_angle_x": 0.69,
      "frames": [{"file_path": "./train/r_0",
                  "transform_matrix": [[2,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]}]})");
    CHECK_THROWS_AS(load_nerf_dataset(dir.str(), "train"), std::invalid_argument);
}

TEST_CASE("metrics csv formatting") {
    TempDir dir("relufield_io_csv");
    const std::string path = (dir.path / "metrics.csv").string();
    {
        MetricsCsv csv(path);
        MetricsRow row;
        row.run_id = "r1";
        row.scene = "boxes";
        row.mode = "relu";
        row.grid_dims = {64, 64, 64};
        row.stage = 2;
        row.iteration = 1500;
        row.loss = 0.125;
        row.wall_seconds = 3.25;
        csv.append(row);
        row.iteration = 2000;
        row.loss = std::numeric_limits<double>::quiet_NaN();
        row.psnr_db = 31.5;
        row.wall_seconds = 0.0;
        csv.append(row);
    }
    std::ifstream in(path);
    std::string header, l1, l2;
    std::getline(in, header);
    std::getline(in, l1);
    std::getline(in, l2);
    CHECK(header == "run_id,scene,mode,grid_dims,stage,iteration,loss,psnr_db,wall_seconds");
    CHECK(l1 == "r1,boxes,relu,64x64x64,2,1500,0.125,,3.250");
    CHECK(l2 == "r1,boxes,relu,64x64x64,2,2000,,31.5,0.000");
}
