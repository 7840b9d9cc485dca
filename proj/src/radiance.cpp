// Copyright (c) 2026 relufield authors
// SPDX-License-Identifier: Apache-2.0

#include "relufield/radiance.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "relufield/rng.hpp"
#include "relufield/threading.hpp"

namespace rf {

int scaled_samples(int samples_final, const std::array<int, 3>& stage_dims,
                   const std::array<int, 3>& final_dims) {
    const int stage_res = *std::max_element(stage_dims.begin(), stage_dims.end());
    const int final_res = *std::max_element(final_dims.begin(), final_dims.end());
    if (stage_res >= final_res) return samples_final;
    const double scaled = static_cast<double>(samples_final) * stage_res / final_res;
    return std::max(16, static_cast<int>(std::llround(scaled)));
}

RenderSettings render_settings_for(const TrainConfig& cfg, const std::array<int, 3>& stage_dims,
                                   const std::array<int, 3>& final_dims, bool training) {
    RenderSettings s;
    s.samples_per_ray = scaled_samples(cfg.samples_per_ray, stage_dims, final_dims);
    s.background = cfg.background;
    s.stratified_jitter = training && cfg.jitter;
    s.seed = cfg.seed;
    s.density_relu = cfg.mode != "none";
    return s;
}

FieldGrid fit_radiance(const Dataset& train, const TrainConfig& cfg, const RunHooks& hooks) {
    if (train.frames.empty()) throw std::invalid_argument("fit_radiance: empty dataset");

    ProgressiveSchedule sched;
    sched.rank = 3;
    sched.start_shrink_exponent = cfg.start_shrink_exponent;
    sched.iters_per_stage = cfg.stage_iters;
    sched.final_dims = cfg.dims;

    const int threads = std::max(1, cfg.threads);
    const int batch = cfg.batch_rays;
    const std::size_t pixels_per_frame =
        static_cast<std::size_t>(train.width) * static_cast<std::size_t>(train.height);
    const std::size_t total_pixels = pixels_per_frame * train.frames.size();

    struct RaySlot {
        int frame;
        int px, py;
    };

    FitTask task = [&, threads, batch](FieldGrid& g, GradSink& sink,
                                       const StageInfo& info) -> double {
        const RenderSettings settings =
            render_settings_for(cfg, info.stage_dims, sched.final_dims, true);
        const double inv = 1.0 / (static_cast<double>(batch) * 3.0);

        // The batch is drawn single-threaded so it does not depend on the
        // worker count.
        Rng batch_rng(mix64(cfg.seed, 0xba7c, static_cast<std::uint64_t>(info.global_iter)));
        std::vector<RaySlot> slots(static_cast<std::size_t>(batch));
        for (auto& slot : slots) {
            const std::size_t flat = batch_rng.uniform_index(total_pixels);
            slot.frame = static_cast<int>(flat / pixels_per_frame);
            const std::size_t within = flat % pixels_per_frame;
            slot.px = static_cast<int>(within % train.width);
            slot.py = static_cast<int>(within / train.width);
        }

        std::vector<double> partial_loss(static_cast<std::size_t>(threads), 0.0);
        std::vector<GradSink> partial(threads > 1 ? static_cast<std::size_t>(threads) - 1 : 0);

        parallel_chunks(slots.size(), threads,
                        [&](std::size_t worker, std::size_t begin, std::size_t end) {
                            GradSink* local_sink = &sink;
                            if (worker > 0) {
                                partial[worker - 1] = GradSink::like(g);
                                local_sink = &partial[worker - 1];
                            }
                            RayWorkspace ws;
                            double acc = 0.0;
                            for (std::size_t i = begin; i < end; ++i) {
                                const RaySlot& slot = slots[i];
                                const DatasetFrame& frame = train.frames[slot.frame];
                                const Vec3 target{frame.image.at(slot.px, slot.py, 0),
                                                  frame.image.at(slot.px, slot.py, 1),
                                                  frame.image.at(slot.px, slot.py, 2)};
                                const Ray ray = generate_ray(frame.pose, slot.px, slot.py, g.aabb);
                                if (!ray.hit) {
                                    const Vec3 d = settings.background - target;
                                    acc += dot(d, d);
                                    continue;
                                }
                                const std::uint64_t stream =
                                    mix64(static_cast<std::uint64_t>(info.global_iter), i);
                                const Vec3 rendered =
                                    render_ray(g, ray, settings, stream, ws, nullptr, nullptr);
                                const Vec3 d = rendered - target;
                                acc += dot(d, d);
                                const Vec3 upstream = d * (2.0 * inv);
                                render_ray_backward(upstream, ws, settings, *local_sink);
                            }
                            partial_loss[worker] = acc;
                        });

        for (const GradSink& s : partial)
            if (!s.values.empty()) sink.accumulate(s);
        double loss = 0.0;
        for (double l : partial_loss) loss += l;
        return loss * inv;
    };

    RunHooks run_hooks = hooks;
    if (cfg.mode == "none") {
        auto user_post = hooks.post_step;
        run_hooks.post_step = [user_post](FieldGrid& g) {
            for (std::size_t v = 0; v < g.vertex_count(); ++v) {
                double& d = g.values[v * kRadianceChannels + kDensityChannel];
                if (d < 0.0) d = 0.0;
            }
            if (user_post) user_post(g);
        };
    }

    return run_progressive(task, sched, cfg, kRadianceChannels, run_hooks);
}

double dataset_psnr(const FieldGrid& grid, const Dataset& ds, const RenderSettings& settings,
                    int threads) {
    if (ds.frames.empty()) throw std::invalid_argument("dataset_psnr: empty dataset");
    RenderSettings eval = settings;
    eval.stratified_jitter = false;
    double total = 0.0;
    for (const DatasetFrame& frame : ds.frames) {
        const RenderedImage img = render_image(grid, frame.pose, eval, threads);
        total += psnr(img.rgb, frame.image);
    }
    return total / static_cast<double>(ds.frames.size());
}

FieldGrid make_box_scene_grid(int res) {
    constexpr double kY00 = 0.28209479177387814;
    struct Box {
        Aabb box;
        Vec3 color;
    };
    const Box boxes[3] = {
        {{{-0.85, -0.85, -0.75}, {-0.15, -0.15, -0.05}}, {0.9, 0.15, 0.1}},
        {{{0.15, -0.7, -0.45}, {0.85, 0.0, 0.25}}, {0.1, 0.8, 0.2}},
        {{{-0.35, 0.1, -0.1}, {0.35, 0.8, 0.6}}, {0.15, 0.25, 0.9}},
    };

    FieldGrid g;
    g.rank = 3;
    g.dims = {res, res, res};
    g.channels = kRadianceChannels;
    g.aabb = {{-1.2, -1.2, -1.2}, {1.2, 1.2, 1.2}};
    g.values.assign(g.value_count(), 0.0);

    for (int iz = 0; iz < res; ++iz)
        for (int iy = 0; iy < res; ++iy)
            for (int ix = 0; ix < res; ++ix) {
                Vec3 w;
                const int idx[3] = {ix, iy, iz};
                for (int a = 0; a < 3; ++a)
                    w[a] = g.aabb.lo[a] +
                           (g.aabb.hi[a] - g.aabb.lo[a]) * idx[a] / static_cast<double>(res - 1);
                double* p = g.vertex(ix, iy, iz);
                p[kDensityChannel] = -12.0;
                for (const Box& b : boxes) {
                    if (!b.box.contains(w)) continue;
                    p[kDensityChannel] = 45.0;
                    for (int ch = 0; ch < 3; ++ch) p[1 + ch * kShBasisSize] = b.color[ch] / kY00;
                    break;
                }
            }
    return g;
}

std::vector<CameraPose> orbit_poses(int count, double radius, int width, int height, double focal,
                                    double phase) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    std::vector<CameraPose> poses;
    poses.reserve(count);
    for (int i = 0; i < count; ++i) {
        const double azimuth = phase + i * golden;
        const double elevation = (0.05 + 0.55 * std::fmod(0.381966 * i + 0.21, 1.0));
        const Vec3 eye{radius * std::cos(elevation) * std::sin(azimuth),
                       radius * std::sin(elevation),
                       radius * std::cos(elevation) * std::cos(azimuth)};
        poses.push_back(look_at(eye, {0, 0, 0}, {0, 1, 0}, width, height, focal));
    }
    return poses;
}

Dataset render_synthetic_dataset(const FieldGrid& grid, const std::vector<CameraPose>& poses,
                                 const RenderSettings& settings, const std::string& split,
                                 int threads) {
    if (poses.empty()) throw std::invalid_argument("render_synthetic_dataset: no poses");
    RenderSettings s = settings;
    s.stratified_jitter = false;

    Dataset ds;
    ds.split = split;
    ds.aabb = grid.aabb;
    ds.width = poses[0].W;
    ds.height = poses[0].H;
    ds.focal = poses[0].F;
    ds.camera_angle_x = 2.0 * std::atan(0.5 * ds.width / ds.focal);
    int index = 0;
    for (const CameraPose& pose : poses) {
        DatasetFrame frame;
        frame.name = "r_" + std::to_string(index++);
        frame.pose = pose;
        frame.image = render_image(grid, pose, s, threads).rgb;
        ds.frames.push_back(std::move(frame));
    }
    return ds;
}

}  // namespace rf
