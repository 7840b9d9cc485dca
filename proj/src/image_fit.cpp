// Copyright (c) 2026 relufield authors
// SPDX-License-Identifier: Apache-2.0

#include "relufield/image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "relufield/threading.hpp"

namespace rf {

double psnr(const RasterImage& a, const RasterImage& b) {
    if (a.width != b.width || a.height != b.height || a.channels != b.channels)
        throw std::invalid_argument("psnr: dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const double d = a.values[i] - b.values[i];
        acc += d * d;
    }
    const double mse = acc / static_cast<double>(a.values.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

RasterImage render_field_image(const FieldGrid& grid, FetchMode mode, int width, int height,
                               int threads) {
    if (grid.rank != 2) throw std::invalid_argument("render_field_image: grid must be 2D");
    RasterImage img = RasterImage::create(width, height, grid.channels);
    const std::size_t npix = static_cast<std::size_t>(width) * height;
    parallel_chunks(npix, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
        std::vector<double> pred(grid.channels);
        for (std::size_t p = begin; p < end; ++p) {
            const int px = static_cast<int>(p % width);
            const int py = static_cast<int>(p / width);
            const Vec3 gp = world_to_grid(grid, {px + 0.5, py + 0.5, 0.0});
            fetch(grid, mode, gp, pred);
            for (int c = 0; c < grid.channels; ++c)
                img.values[p * grid.channels + c] = std::clamp(pred[c], 0.0, 1.0);
        }
    });
    return img;
}

FieldGrid fit_image(const RasterImage& target, std::array<int, 2> final_dims,
                    const TrainConfig& cfg, const RunHooks& hooks) {
    if (final_dims[0] > target.width || final_dims[1] > target.height)
        throw std::invalid_argument("fit_image: grid dims exceed the image; the point is compression");
    if (target.channels != 1 && target.channels != 3)
        throw std::invalid_argument("fit_image: image must have 1 or 3 channels");

    const bool relu_mode = cfg.mode != "none";
    const FetchMode mode = relu_mode ? FetchMode::ReluClamp01 : FetchMode::None;

    TrainConfig local = cfg;
    local.aabb = {{0.0, 0.0, 0.0},
                  {static_cast<double>(target.width), static_cast<double>(target.height), 1.0}};

    ProgressiveSchedule sched;
    sched.rank = 2;
    sched.start_shrink_exponent = cfg.start_shrink_exponent;
    sched.iters_per_stage = cfg.stage_iters;
    sched.final_dims = {final_dims[0], final_dims[1], 1};

    const int ch = target.channels;
    const std::size_t npix = static_cast<std::size_t>(target.width) * target.height;
    const double inv_count = 1.0 / static_cast<double>(npix * static_cast<std::size_t>(ch));
    const int threads = std::max(1, cfg.threads);

    FitTask task = [&, mode, ch, npix, inv_count, threads](FieldGrid& g, GradSink& sink,
                                                           const StageInfo&) -> double {
        std::vector<double> partial_loss(static_cast<std::size_t>(threads), 0.0);
        std::vector<GradSink> partial(threads > 1 ? static_cast<std::size_t>(threads) - 1 : 0);

        parallel_chunks(npix, threads, [&](std::size_t worker, std::size_t begin, std::size_t end) {
            GradSink* local_sink = &sink;
            if (worker > 0) {
                partial[worker - 1] = GradSink::like(g);
                local_sink = &partial[worker - 1];
            }
            std::vector<double> pred(ch), up(ch);
            double acc = 0.0;
            for (std::size_t p = begin; p < end; ++p) {
                const int px = static_cast<int>(p % target.width);
                const int py = static_cast<int>(p / target.width);
                const Vec3 gp = world_to_grid(g, {px + 0.5, py + 0.5, 0.0});
                fetch(g, mode, gp, pred);
                for (int c = 0; c < ch; ++c) {
                    const double d = pred[c] - target.values[p * ch + c];
                    acc += d * d;
                    up[c] = 2.0 * d * inv_count;
                }
                fetch_backward(g, mode, gp, up, *local_sink);
            }
            partial_loss[worker] = acc;
        });

        for (const GradSink& s : partial)
            if (!s.values.empty()) sink.accumulate(s);
        double loss = 0.0;
        for (double l : partial_loss) loss += l;
        return loss * inv_count;
    };

    RunHooks run_hooks = hooks;
    if (!relu_mode) {
        // Plain-grid baseline: vertex values are the signal itself, so keep
        // them inside the image range after every step.
        auto user_post = hooks.post_step;
        run_hooks.post_step = [user_post](FieldGrid& g) {
            for (double& v : g.values) v = std::clamp(v, 0.0, 1.0);
            if (user_post) user_post(g);
        };
    }

    return run_progressive(task, sched, local, ch, run_hooks);
}

}  // namespace rf
