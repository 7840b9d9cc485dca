// Copyright (c) 2026 relufield authors
// SPDX-License-Identifier: Apache-2.0
//
// relufield: one binary, subcommand per pipeline. See README for usage.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "relufield/config.hpp"
#include "relufield/image.hpp"
#include "relufield/io.hpp"
#include "relufield/occupancy.hpp"
#include "relufield/png_io.hpp"
#include "relufield/radiance.hpp"
#include "relufield/render.hpp"
#include "relufield/schedule.hpp"
#include "selfcheck.hpp"

namespace fs = std::filesystem;
using namespace rf;

namespace {

struct CommonOpts {
    std::vector<int> dims;
    std::string mode = "relu";
    bool no_progressive = false;
    int stage_iters = 2000;
    double lr = 0.03;
    int samples_per_ray = 256;
    int batch_rays = 4096;
    int batch_points = 32768;
    std::vector<double> aabb;
    std::uint64_t seed = 0;
    int threads = hardware_threads();
    std::vector<double> background = {1.0, 1.0, 1.0};
    bool force = false;
    bool no_timing = false;
    std::string out;
    std::string run_id = "run";
    std::string scene;
};

void add_common_options(CLI::App* cmd, CommonOpts& o, bool needs_out) {
    cmd->add_option("--dims", o.dims, "Grid vertices per axis (1 value, or one per axis)")
        ->expected(1, 3);
    cmd->add_option("--mode", o.mode, "Interpolation nonlinearity: relu field or plain grid")
        ->check(CLI::IsMember({"relu", "none"}))
        ->capture_default_str();
    cmd->add_flag("--no-progressive", o.no_progressive,
                  "Single-stage training at the final resolution");
    cmd->add_option("--stage-iters", o.stage_iters, "Iterations per resolution stage")
        ->capture_default_str();
    cmd->add_option("--lr", o.lr, "Adam learning rate")->capture_default_str();
    cmd->add_option("--samples-per-ray", o.samples_per_ray,
                    "Raymarch samples per ray at the final resolution")
        ->capture_default_str();
    cmd->add_option("--batch-rays", o.batch_rays, "Rays per optimization iteration")
        ->capture_default_str();
    cmd->add_option("--batch-points", o.batch_points,
                    "Occupancy supervision points per iteration")
        ->capture_default_str();
    cmd->add_option("--aabb", o.aabb, "Scene box: x0 y0 z0 x1 y1 z1")->expected(6);
    cmd->add_option("--seed", o.seed, "RNG seed")->capture_default_str();
    cmd->add_option("--threads", o.threads, "Worker threads")->capture_default_str();
    cmd->add_option("--background", o.background, "Background color r g b")->expected(3);
    cmd->add_flag("--force", o.force, "Allow writing into a non-empty output directory");
    cmd->add_flag("--no-timing", o.no_timing,
                  "Write wall_seconds as 0 so repeated runs are byte-identical");
    if (needs_out) {
        cmd->add_option("--out", o.out, "Run output directory")->required();
        cmd->add_option("--run-id", o.run_id, "Run identifier for metrics rows")
            ->capture_default_str();
        cmd->add_option("--scene", o.scene, "Scene label for metrics rows");
    }
}

TrainConfig make_config(const CommonOpts& o, std::array<int, 3> default_dims) {
    TrainConfig cfg;
    cfg.run_id = o.run_id;
    cfg.scene = o.scene;
    cfg.mode = o.mode;
    cfg.seed = o.seed;
    cfg.threads = o.threads;
    cfg.lr = o.lr;
    cfg.stage_iters = o.stage_iters;
    cfg.start_shrink_exponent = o.no_progressive ? 0 : 4;
    cfg.dims = default_dims;
    if (o.dims.size() == 1) cfg.dims = {o.dims[0], o.dims[0], o.dims[0]};
    else if (o.dims.size() == 2) cfg.dims = {o.dims[0], o.dims[1], 1};
    else if (o.dims.size() == 3) cfg.dims = {o.dims[0], o.dims[1], o.dims[2]};
    cfg.samples_per_ray = o.samples_per_ray;
    cfg.batch_rays = o.batch_rays;
    cfg.batch_points = o.batch_points;
    if (!o.aabb.empty())
        cfg.aabb = {{o.aabb[0], o.aabb[1], o.aabb[2]}, {o.aabb[3], o.aabb[4], o.aabb[5]}};
    cfg.background = {o.background[0], o.background[1], o.background[2]};
    cfg.timing = !o.no_timing;
    return cfg;
}

fs::path prepare_run_dir(const CommonOpts& o) {
    const fs::path dir(o.out);
    if (fs::exists(dir) && !fs::is_empty(dir) && !o.force)
        throw std::invalid_argument("output directory '" + o.out +
                                    "' already has contents; pass --force to reuse it");
    fs::create_directories(dir);
    return dir;
}

std::string dims_label(const std::array<int, 3>& d) {
    return std::to_string(d[0]) + "x" + std::to_string(d[1]) + "x" + std::to_string(d[2]);
}

double elapsed_or_zero(const std::chrono::steady_clock::time_point& t0, bool timing) {
    if (!timing) return 0.0;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Shared per-iteration CSV cadence: first, every 50th, and the stage's last.
bool log_iteration(const StageInfo& info, int iters_per_stage) {
    return info.iter_in_stage == 0 || (info.iter_in_stage + 1) % 50 == 0 ||
           info.iter_in_stage + 1 == iters_per_stage;
}

int cmd_fit_image(const CommonOpts& o, const std::string& input) {
    const fs::path dir = prepare_run_dir(o);
    TrainConfig cfg = make_config(o, {64, 64, 1});
    save_config((dir / "config.txt").string(), cfg);

    const RasterImage target = read_png_image(input, cfg.background);
    const std::array<int, 2> final_dims = {cfg.dims[0], cfg.dims[1] > 1 ? cfg.dims[1] : cfg.dims[0]};
    const FetchMode mode = cfg.mode == "none" ? FetchMode::None : FetchMode::ReluClamp01;

    MetricsCsv csv((dir / "metrics.csv").string());
    const auto t0 = std::chrono::steady_clock::now();

    RunHooks hooks;
    hooks.on_iteration = [&](const IterationEvent& e) {
        if (!log_iteration(e.info, cfg.stage_iters)) return;
        csv.append({cfg.run_id, cfg.scene, cfg.mode, e.info.stage_dims, e.info.stage,
                    e.info.global_iter, e.loss, std::nan(""), 0.0});
    };
    hooks.on_stage_end = [&](const StageEvent& e) {
        save_grid((dir / ("stage_" + dims_label(e.stage_dims) + ".rluf")).string(), *e.grid);
        const RasterImage recon =
            render_field_image(*e.grid, mode, target.width, target.height, cfg.threads);
        csv.append({cfg.run_id, cfg.scene, cfg.mode, e.stage_dims, e.stage,
                    static_cast<long long>(e.stage + 1) * cfg.stage_iters - 1, std::nan(""),
                    psnr(recon, target), e.stage_seconds});
    };

    const FieldGrid grid = fit_image(target, final_dims, cfg, hooks);
    save_grid((dir / "final.rluf").string(), grid);

    const RasterImage recon =
        render_field_image(grid, mode, target.width, target.height, cfg.threads);
    write_png_rgb8((dir / "reconstruction.png").string(), recon);
    const double db = psnr(recon, target);
    const double seconds = elapsed_or_zero(t0, cfg.timing);
    std::printf("grid_dims,mode,psnr_db,seconds\n%dx%d,%s,%.4f,%.3f\n", final_dims[0],
                final_dims[1], cfg.mode.c_str(), db, seconds);
    return 0;
}

int cmd_fit_occupancy(const CommonOpts& o, const std::string& mesh_path, long long mc_samples) {
    const fs::path dir = prepare_run_dir(o);
    TrainConfig cfg = make_config(o, {64, 64, 64});
    save_config((dir / "config.txt").string(), cfg);

    TriangleMesh mesh = load_obj(mesh_path);
    MetricsCsv csv((dir / "metrics.csv").string());

    RunHooks hooks;
    hooks.on_iteration = [&](const IterationEvent& e) {
        if (!log_iteration(e.info, cfg.stage_iters)) return;
        csv.append({cfg.run_id, cfg.scene, cfg.mode, e.info.stage_dims, e.info.stage,
                    e.info.global_iter, e.loss, std::nan(""), 0.0});
    };
    hooks.on_stage_end = [&](const StageEvent& e) {
        save_grid((dir / ("stage_" + dims_label(e.stage_dims) + ".rluf")).string(), *e.grid);
        csv.append({cfg.run_id, cfg.scene, cfg.mode, e.stage_dims, e.stage,
                    static_cast<long long>(e.stage + 1) * cfg.stage_iters - 1, std::nan(""),
                    std::nan(""), e.stage_seconds});
    };

    const FieldGrid grid = fit_occupancy(mesh, cfg, hooks);
    save_grid((dir / "final.rluf").string(), grid);

    // Volumetric IoU against the mesh itself over the dilated box.
    TriangleMesh validated = mesh;
    validate_mesh(validated);
    const TriangleBvh bvh(validated);
    auto mesh_pred = OccupancyPredicate(
        [&bvh](const Vec3& p) { return point_in_mesh(bvh, p, 1234) == 1; });
    const double iou =
        volumetric_iou(field_predicate(grid, occupancy_fetch_mode(cfg.mode)), mesh_pred,
                       grid.aabb.dilated(0.05), mc_samples, cfg.seed + 1);
    std::printf("grid_dims,mode,volumetric_iou\n%s,%s,%.5f\n", dims_label(cfg.dims).c_str(),
                cfg.mode.c_str(), iou);
    return 0;
}

int cmd_fit_radiance(const CommonOpts& o, const std::string& dataset_root) {
    const fs::path dir = prepare_run_dir(o);
    TrainConfig cfg = make_config(o, {128, 128, 128});

    std::optional<Aabb> box;
    if (!o.aabb.empty()) box = cfg.aabb;
    const Dataset train = load_nerf_dataset(dataset_root, "train", cfg.background, box);
    cfg.aabb = train.aabb;
    save_config((dir / "config.txt").string(), cfg);

    std::optional<Dataset> val;
    try {
        val = load_nerf_dataset(dataset_root, "val", cfg.background, box);
    } catch (const std::exception&) {
        // No validation split; stage PSNR rows are skipped.
    }

    MetricsCsv csv((dir / "metrics.csv").string());
    RunHooks hooks;
    hooks.on_iteration = [&](const IterationEvent& e) {
        if (!log_iteration(e.info, cfg.stage_iters)) return;
        csv.append({cfg.run_id, cfg.scene, cfg.mode, e.info.stage_dims, e.info.stage,
                    e.info.global_iter, e.loss, std::nan(""), 0.0});
    };
    hooks.on_stage_end = [&](const StageEvent& e) {
        save_grid((dir / ("stage_" + dims_label(e.stage_dims) + ".rluf")).string(), *e.grid);
        double db = std::nan("");
        if (val.has_value()) {
            const RenderSettings s = render_settings_for(cfg, e.stage_dims, cfg.dims, false);
            db = dataset_psnr(*e.grid, *val, s, cfg.threads);
        }
        csv.append({cfg.run_id, cfg.scene, cfg.mode, e.stage_dims, e.stage,
                    static_cast<long long>(e.stage + 1) * cfg.stage_iters - 1, std::nan(""), db,
                    e.stage_seconds});
    };

    const FieldGrid grid = fit_radiance(train, cfg, hooks);
    save_grid((dir / "final.rluf").string(), grid);

    // Held-out renders: prefer an explicit test split, else val.
    for (const char* split : {"test", "val"}) {
        std::optional<Dataset> held;
        try {
            held = load_nerf_dataset(dataset_root, split, cfg.background, box);
        } catch (const std::exception&) {
            continue;
        }
        const fs::path rdir = dir / "renders";
        fs::create_directories(rdir);
        const RenderSettings s = render_settings_for(cfg, cfg.dims, cfg.dims, false);
        double total = 0.0;
        for (const DatasetFrame& frame : held->frames) {
            const RenderedImage img = render_image(grid, frame.pose, s, cfg.threads);
            const fs::path name = fs::path(frame.name).filename();
            write_png_rgb8((rdir / (name.string() + ".png")).string(), img.rgb);
            total += psnr(img.rgb, frame.image);
        }
        std::printf("split,frames,avg_psnr_db\n%s,%zu,%.4f\n", split, held->frames.size(),
                    total / held->frames.size());
        break;
    }
    return 0;
}

int cmd_render(const std::string& grid_path, const std::string& dataset_root,
               const std::string& split, const CommonOpts& o, int orbit, double orbit_radius,
               int orbit_size) {
    const fs::path dir = prepare_run_dir(o);
    const FieldGrid grid = load_grid(grid_path);

    std::vector<CameraPose> poses;
    std::vector<std::string> names;
    if (!dataset_root.empty()) {
        const Dataset ds = load_nerf_dataset(
            dataset_root, split, {o.background[0], o.background[1], o.background[2]});
        for (const DatasetFrame& f : ds.frames) {
            poses.push_back(f.pose);
            names.push_back(fs::path(f.name).filename().string());
        }
    } else {
        const double focal = focal_from_angle_x(0.9, orbit_size);
        poses = orbit_poses(orbit, orbit_radius, orbit_size, orbit_size, focal);
        for (int i = 0; i < orbit; ++i) names.push_back("orbit_" + std::to_string(i));
    }

    if (grid.channels == kRadianceChannels) {
        RenderSettings s;
        s.samples_per_ray = o.samples_per_ray;
        s.background = {o.background[0], o.background[1], o.background[2]};
        for (std::size_t i = 0; i < poses.size(); ++i) {
            const RenderedImage img = render_image(grid, poses[i], s, o.threads);
            write_png_rgb8((dir / (names[i] + ".png")).string(), img.rgb);
        }
    } else if (grid.channels == 1) {
        const FetchMode mode = occupancy_fetch_mode(o.mode);
        for (std::size_t i = 0; i < poses.size(); ++i) {
            const DepthImage d =
                render_occupancy_depth(grid, mode, poses[i], o.samples_per_ray, o.threads);
            // [t_lo, t_hi] -> [1, 65535]; 0 encodes a miss.
            std::vector<std::uint16_t> pixels(d.depth.size(), 0);
            const double span = std::max(d.t_hi - d.t_lo, 1e-12);
            for (std::size_t p = 0; p < d.depth.size(); ++p) {
                if (d.hit[p] == 0) continue;
                const double unit = (d.depth[p] - d.t_lo) / span;
                pixels[p] = static_cast<std::uint16_t>(1 + std::llround(unit * 65534.0));
            }
            write_png_gray16((dir / (names[i] + ".png")).string(), d.width, d.height, pixels);
        }
    } else {
        throw std::invalid_argument("render: grid has neither radiance nor occupancy layout");
    }
    std::printf("wrote %zu renders to %s\n", poses.size(), dir.string().c_str());
    return 0;
}

int cmd_eval(const std::string& grid_path, const std::string& dataset_root,
             const std::string& split, const std::string& mesh_path, const CommonOpts& o,
             long long mc_samples) {
    const FieldGrid grid = load_grid(grid_path);

    if (!mesh_path.empty()) {
        TriangleMesh mesh = load_obj(mesh_path);
        validate_mesh(mesh);
        const TriangleBvh bvh(mesh);
        auto mesh_pred = OccupancyPredicate(
            [&bvh](const Vec3& p) { return point_in_mesh(bvh, p, 1234) == 1; });
        const double iou =
            volumetric_iou(field_predicate(grid, occupancy_fetch_mode(o.mode)), mesh_pred,
                           grid.aabb.dilated(0.05), mc_samples, o.seed + 1);
        std::printf("metric,value\nvolumetric_iou,%.5f\n", iou);
        return 0;
    }

    const Dataset ds = load_nerf_dataset(dataset_root, split,
                                         {o.background[0], o.background[1], o.background[2]});
    RenderSettings s;
    s.samples_per_ray = o.samples_per_ray;
    s.background = {o.background[0], o.background[1], o.background[2]};
    std::printf("frame,psnr_db\n");
    double total = 0.0;
    for (const DatasetFrame& frame : ds.frames) {
        const RenderedImage img = render_image(grid, frame.pose, s, o.threads);
        const double db = psnr(img.rgb, frame.image);
        total += db;
        std::printf("%s,%.4f\n", frame.name.c_str(), db);
    }
    std::printf("average,%.4f\n", total / ds.frames.size());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"relufield: dense grids with a post-interpolation ReLU, fitted by "
                 "analytic-gradient optimization"};
    app.require_subcommand(1);

    CommonOpts o;
    std::string input_image, mesh_path, dataset_root, grid_path;
    std::string split = "test";
    long long mc_samples = 1000000;
    int orbit = 0, orbit_size = 400;
    double orbit_radius = 3.2;
    bool perturb_sh = false;

    CLI::App* fit_image_cmd = app.add_subcommand("fit-image", "Fit a PNG into a 2D field");
    fit_image_cmd->add_option("--input", input_image, "Source PNG")->required();
    add_common_options(fit_image_cmd, o, true);

    CLI::App* fit_occ_cmd =
        app.add_subcommand("fit-occupancy", "Fit a watertight OBJ mesh as an occupancy field");
    fit_occ_cmd->add_option("--mesh", mesh_path, "Watertight ASCII OBJ")->required();
    fit_occ_cmd->add_option("--mc-samples", mc_samples, "IoU Monte-Carlo samples")
        ->capture_default_str();
    add_common_options(fit_occ_cmd, o, true);

    CLI::App* fit_rad_cmd = app.add_subcommand(
        "fit-radiance", "Reconstruct a radiance field from a posed-image dataset");
    fit_rad_cmd->add_option("--dataset", dataset_root, "Dataset root with transforms_*.json")
        ->required();
    add_common_options(fit_rad_cmd, o, true);

    CLI::App* render_cmd = app.add_subcommand("render", "Render a grid checkpoint");
    render_cmd->add_option("--grid", grid_path, "Grid checkpoint (.rluf)")->required();
    render_cmd->add_option("--dataset", dataset_root, "Dataset root for poses");
    render_cmd->add_option("--split", split, "Dataset split for poses")->capture_default_str();
    render_cmd->add_option("--orbit", orbit, "Render N orbit poses instead of a dataset");
    render_cmd->add_option("--orbit-radius", orbit_radius, "Orbit camera distance")
        ->capture_default_str();
    render_cmd->add_option("--orbit-size", orbit_size, "Orbit image size in pixels")
        ->capture_default_str();
    add_common_options(render_cmd, o, true);

    CLI::App* eval_cmd =
        app.add_subcommand("eval", "PSNR against a dataset split, or IoU against a mesh");
    eval_cmd->add_option("--grid", grid_path, "Grid checkpoint (.rluf)")->required();
    eval_cmd->add_option("--dataset", dataset_root, "Dataset root");
    eval_cmd->add_option("--split", split, "Dataset split")->capture_default_str();
    eval_cmd->add_option("--mesh", mesh_path, "Reference mesh for occupancy IoU");
    eval_cmd->add_option("--mc-samples", mc_samples, "IoU Monte-Carlo samples")
        ->capture_default_str();
    add_common_options(eval_cmd, o, false);

    CLI::App* selfcheck_cmd =
        app.add_subcommand("selfcheck", "Run the embedded oracle suite and print a table");
    selfcheck_cmd->add_flag("--perturb-sh", perturb_sh)->group("");  // negative-control hook

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (fit_image_cmd->parsed()) return cmd_fit_image(o, input_image);
        if (fit_occ_cmd->parsed()) return cmd_fit_occupancy(o, mesh_path, mc_samples);
        if (fit_rad_cmd->parsed()) return cmd_fit_radiance(o, dataset_root);
        if (render_cmd->parsed()) {
            if (dataset_root.empty() && orbit <= 0)
                throw std::invalid_argument("render: pass --dataset or --orbit N");
            return cmd_render(grid_path, dataset_root, split, o, orbit, orbit_radius, orbit_size);
        }
        if (eval_cmd->parsed()) {
            if (dataset_root.empty() && mesh_path.empty())
                throw std::invalid_argument("eval: pass --dataset or --mesh");
            return cmd_eval(grid_path, dataset_root, split, mesh_path, o, mc_samples);
        }
        if (selfcheck_cmd->parsed()) return run_selfcheck(perturb_sh);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
