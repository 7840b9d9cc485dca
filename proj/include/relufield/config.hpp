// Copyright (c) 2026 relufield authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "relufield/threading.hpp"
#include "relufield/vec.hpp"

namespace rf {

// Every knob a run needs; serialized as one `key = value` per line so a run
// directory fully describes how to reproduce it.
struct TrainConfig {
    std::string run_id = "run";
    std::string scene;
    std::string mode = "relu";  // relu | none
    std::uint64_t seed = 0;
    int threads = hardware_threads();

    double lr = 0.03;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    int stage_iters = 2000;
    int start_shrink_exponent = 4;  // 0 disables progressive growing
    std::array<int, 3> dims = {128, 128, 128};

    int samples_per_ray = 256;
    int batch_rays = 4096;
    int batch_points = 32768;

    Aabb aabb = {{-1.5, -1.5, -1.5}, {1.5, 1.5, 1.5}};
    Vec3 background = {1.0, 1.0, 1.0};
    bool jitter = true;

    double init_lo = -0.1;
    double init_hi = 0.1;

    // When false, the wall_seconds column of metrics files is written as 0
    // so repeated runs produce byte-identical outputs.
    bool timing = true;

    long long mc_samples = 1000000;
};

std::string serialize_config(const TrainConfig& cfg);
TrainConfig parse_config(const std::string& text);  // throws on unknown/malformed keys
void save_config(const std::string& path, const TrainConfig& cfg);
TrainConfig load_config(const std::string& path);

}  // namespace rf
