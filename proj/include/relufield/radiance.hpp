// Copyright (c) 2026 relufield authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "relufield/config.hpp"
#include "relufield/io.hpp"
#include "relufield/render.hpp"
#include "relufield/schedule.hpp"

namespace rf {

// Per-stage sample count: proportional to the stage resolution, floored at
// 16, exactly samples_final at the final resolution.
int scaled_samples(int samples_final, const std::array<int, 3>& stage_dims,
                   const std::array<int, 3>& final_dims);

// Progressive photometric fit of a 28-channel radiance grid against posed
// images. Uses cfg.aabb as the scene box (callers usually copy it from the
// dataset), cfg.batch_rays rays per iteration drawn uniformly over all
// training pixels, and stratified jitter when cfg.jitter is set. Mode "none"
// trains the plain-grid baseline: no density ReLU gate and vertex densities
// projected to >= 0 after every step.
FieldGrid fit_radiance(const Dataset& train, const TrainConfig& cfg, const RunHooks& hooks = {});

// Render settings matching a config at a given stage resolution.
RenderSettings render_settings_for(const TrainConfig& cfg, const std::array<int, 3>& stage_dims,
                                   const std::array<int, 3>& final_dims, bool training);

// Mean per-image PSNR of grid renders against the dataset images
// (deterministic: jitter off).
double dataset_psnr(const FieldGrid& grid, const Dataset& ds, const RenderSettings& settings,
                    int threads = 1);

// Synthetic ground truth: a grid holding a few colored axis-aligned boxes,
// rendered by this renderer itself to make train/val splits.
FieldGrid make_box_scene_grid(int res);
std::vector<CameraPose> orbit_poses(int count, double radius, int width, int height, double focal,
                                    double phase = 0.0);
Dataset render_synthetic_dataset(const FieldGrid& grid, const std::vector<CameraPose>& poses,
                                 const RenderSettings& settings, const std::string& split,
                                 int threads = 1);

}  // namespace rf
