// Copyright (c) 2026 relufield authors
// SPDX-License-Identifier: Apache-2.0

#include "relufield/schedule.hpp"

#include <chrono>
#include <stdexcept>

namespace rf {

std::vector<std::array<int, 3>> plan_stage_dims(const ProgressiveSchedule& s) {
    if (s.start_shrink_exponent < 0)
        throw std::invalid_argument("schedule: negative start_shrink_exponent");
    if (s.iters_per_stage <= 0) throw std::invalid_argument("schedule: iters_per_stage must be positive");
    const int shrink = 1 << s.start_shrink_exponent;
    std::array<int, 3> start = {1, 1, 1};
    for (int a = 0; a < s.rank; ++a) {
        if (s.final_dims[a] <= 0) throw std::invalid_argument("schedule: non-positive final dims");
        if (s.final_dims[a] % shrink != 0)
            throw std::invalid_argument("schedule: final dims not divisible by 2^start_shrink_exponent");
        start[a] = s.final_dims[a] / shrink;
        if (start[a] < 2) throw std::invalid_argument("schedule: start resolution below 2 per axis");
    }
    std::vector<std::array<int, 3>> stages;
    std::array<int, 3> d = start;
    for (int e = 0; e <= s.start_shrink_exponent; ++e) {
        stages.push_back(d);
        for (int a = 0; a < s.rank; ++a) d[a] *= 2;
    }
    return stages;
}

FieldGrid run_progressive(const FitTask& task, const ProgressiveSchedule& schedule,
                          const TrainConfig& cfg, int channels, const RunHooks& hooks) {
    const auto stages = plan_stage_dims(schedule);
    const int n_stages = static_cast<int>(stages.size());

    FieldGrid grid = init_uniform(schedule.rank, stages[0], channels, cfg.aabb, cfg.init_lo,
                                  cfg.init_hi, cfg.seed);

    long long global_iter = 0;
    for (int s = 0; s < n_stages; ++s) {
        if (s > 0) grid = upsample2x(grid, cfg.threads);

        // Moment buffers restart at each resolution: shapes change and the
        // coarse-stage statistics do not transfer.
        AdamState state = AdamState::like(grid, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
        GradSink sink = GradSink::like(grid);

        const auto t0 = std::chrono::steady_clock::now();
        for (int it = 0; it < schedule.iters_per_stage; ++it) {
            StageInfo info{s, n_stages, stages[s], it, global_iter};
            sink.zero();
            const double loss = task(grid, sink, info);
            adam_step(grid, sink, state);
            if (hooks.post_step) hooks.post_step(grid);
            if (hooks.on_iteration) hooks.on_iteration({info, loss});
            ++global_iter;
        }

        if (hooks.on_stage_end) {
            double seconds = 0.0;
            if (cfg.timing) {
                seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            }
            hooks.on_stage_end({s, n_stages, stages[s], &grid, seconds});
        }
    }
    return grid;
}

}  // namespace rf
