// Copyright (c) 2026 relufield authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "relufield/camera.hpp"
#include "relufield/grid.hpp"
#include "relufield/image.hpp"
#include "relufield/sh.hpp"

namespace rf {

// Radiance grids store 28 channels: pre-ReLU density in channel 0 and 9
// degree-2 SH coefficients per color (R, then G, then B). The ReLU applies
// to density only.
inline constexpr int kRadianceChannels = 28;
inline constexpr int kDensityChannel = 0;

struct RenderSettings {
    int samples_per_ray = 256;
    Vec3 background = {1.0, 1.0, 1.0};
    bool stratified_jitter = false;
    std::uint64_t seed = 0;
    // The plain-grid baseline stores physical densities (projected >= 0 after
    // every optimizer step) and trains with projected gradients, so the ReLU
    // gate on the density channel is disabled for it.
    bool density_relu = true;
};

// Ordered sample depths and per-sample step sizes. The deltas partition
// [t_near, t_far]: their plain left-to-right sum reproduces t_far - t_near
// exactly by construction.
struct RaySamples {
    std::vector<double> t;
    std::vector<double> delta;
};

// Equal bins over [t_near, t_far]; bin midpoints, or uniformly jittered
// positions within each bin when stratified_jitter is set. stream
// distinguishes rays so jitter is stateless and thread-independent.
// Throws std::invalid_argument on a missed ray or samples_per_ray < 2.
RaySamples sample_ray(const Ray& ray, const RenderSettings& settings, std::uint64_t stream = 0);

struct CompositeResult {
    Vec3 color;
    double depth = 0.0;
    double opacity = 0.0;
};

// Emission-absorption front-to-back compositing:
//   alpha_i = 1 - exp(-sigma_i * delta_i), T_i = prod_{j<i} (1 - alpha_j)
//   color   = sum T_i alpha_i c_i + T_final * background
//   depth   = sum T_i alpha_i t_i + T_final * t_far
// Throws std::invalid_argument on negative sigma or delta.
CompositeResult composite_ea(std::span<const double> sigma, std::span<const Vec3> color,
                             std::span<const double> delta, std::span<const double> t,
                             double t_far, const Vec3& background);

// Per-ray state captured by a forward pass; one instance per worker, reused
// across rays.
struct RayWorkspace {
    std::vector<CellRef> cells;
    std::vector<double> sigma_pre;  // channel 0 before the ReLU
    std::vector<double> alpha;
    std::vector<double> trans;      // trans[i] = T_i, plus trailing T_final
    std::vector<double> t, delta;
    std::vector<Vec3> color;        // clamped sample colors
    std::vector<Vec3> raw_color;    // pre-clamp, for the clamp gate
    double basis[kShBasisSize] = {};
    std::vector<double> feat;       // fetch scratch, kRadianceChannels wide
    int count = 0;
};

// Forward render of one ray; requires ray.hit and a 28-channel grid.
Vec3 render_ray(const FieldGrid& grid, const Ray& ray, const RenderSettings& settings,
                std::uint64_t stream, RayWorkspace& ws, double* depth = nullptr,
                double* opacity = nullptr);

// Exact adjoint of render_ray through compositing, the SH dot products, the
// color clamp, the density ReLU and the interpolation. ws must come from a
// matching forward call on the same grid.
void render_ray_backward(const Vec3& upstream, const RayWorkspace& ws,
                         const RenderSettings& settings, GradSink& sink);

struct RenderedImage {
    RasterImage rgb;
    std::vector<double> depth;    // expected termination depth per pixel
    std::vector<std::uint8_t> hit;
};

// Whole-frame render; missed rays output the background color.
// Throws std::invalid_argument unless grid.channels == 28 and rank == 3.
RenderedImage render_image(const FieldGrid& grid, const CameraPose& pose,
                           const RenderSettings& settings, int threads = 1);

// Accumulates d(sum upstream . pixel)/d(grid values) into sink, with the
// same sampling configuration as the forward render.
void render_backward(const FieldGrid& grid, const CameraPose& pose,
                     const RenderSettings& settings, const RasterImage& upstream,
                     GradSink& sink, int threads = 1);

struct PhotometricLoss {
    double mse = 0.0;
    RasterImage grad;  // 2*(rendered-target)/count
};

PhotometricLoss photometric_loss(const RasterImage& rendered, const RasterImage& target);

}  // namespace rf
