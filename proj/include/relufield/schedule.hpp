// Copyright (c) 2026 relufield authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <functional>
#include <vector>

#include "relufield/adam.hpp"
#include "relufield/config.hpp"
#include "relufield/grid.hpp"

namespace rf {

// Coarse-to-fine plan: start at final_dims / 2^start_shrink_exponent, run
// iters_per_stage iterations, double the resolution, repeat until final_dims.
// Exponent 0 means a single stage at the final resolution.
struct ProgressiveSchedule {
    int start_shrink_exponent = 4;
    int iters_per_stage = 2000;
    std::array<int, 3> final_dims = {128, 128, 128};
    int rank = 3;
};

// Validates divisibility and the >=2 start-resolution requirement; throws
// std::invalid_argument otherwise.
std::vector<std::array<int, 3>> plan_stage_dims(const ProgressiveSchedule& schedule);

struct StageInfo {
    int stage = 0;
    int n_stages = 1;
    std::array<int, 3> stage_dims = {1, 1, 1};
    int iter_in_stage = 0;
    long long global_iter = 0;
};

// Evaluates the loss at the grid's current resolution and accumulates
// gradients into the (pre-zeroed) sink.
using FitTask = std::function<double(FieldGrid&, GradSink&, const StageInfo&)>;

struct IterationEvent {
    StageInfo info;
    double loss = 0.0;
};

struct StageEvent {
    int stage = 0;
    int n_stages = 1;
    std::array<int, 3> stage_dims = {1, 1, 1};
    const FieldGrid* grid = nullptr;
    double stage_seconds = 0.0;  // 0 when cfg.timing is off
};

struct RunHooks {
    std::function<void(const IterationEvent&)> on_iteration;
    std::function<void(const StageEvent&)> on_stage_end;
    // Applied after every optimizer step; used by plain-grid baselines to
    // project vertex values back into their physical range.
    std::function<void(FieldGrid&)> post_step;
};

// Runs the progressive fit: fresh Adam state per stage, trilinear 2x
// upsampling between stages, iters_per_stage iterations at every stage
// including the last. The grid is initialized uniformly from
// cfg.init_lo/init_hi with cfg.seed.
FieldGrid run_progressive(const FitTask& task, const ProgressiveSchedule& schedule,
                          const TrainConfig& cfg, int channels, const RunHooks& hooks = {});

}  // namespace rf
