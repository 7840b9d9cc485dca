// Copyright (c) 2026 relufield authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "relufield/config.hpp"
#include "relufield/grid.hpp"
#include "relufield/schedule.hpp"

namespace rf {

// Raster image with values in [0,1], row-major, channel fastest.
struct RasterImage {
    int width = 0;
    int height = 0;
    int channels = 1;  // 1 or 3
    std::vector<double> values;

    static RasterImage create(int w, int h, int ch, double fill = 0.0) {
        RasterImage img;
        img.width = w;
        img.height = h;
        img.channels = ch;
        img.values.assign(static_cast<std::size_t>(w) * h * ch, fill);
        return img;
    }

    std::size_t offset(int x, int y, int c = 0) const {
        return (static_cast<std::size_t>(y) * width + x) * channels + c;
    }
    double& at(int x, int y, int c = 0) { return values[offset(x, y, c)]; }
    double at(int x, int y, int c = 0) const { return values[offset(x, y, c)]; }
};

// 10*log10(1/MSE) with peak 1; +infinity for identical images.
// Throws std::invalid_argument on dimension mismatch.
double psnr(const RasterImage& a, const RasterImage& b);

// Evaluates a 2D field at every pixel center of a width x height raster.
// Output values are clamped to [0,1] to satisfy the RasterImage contract.
RasterImage render_field_image(const FieldGrid& grid, FetchMode mode, int width, int height,
                               int threads = 1);

// Fits target into a 2D grid of final_dims vertices with a progressive
// schedule. Mode "relu" uses ReluClamp01; mode "none" trains a plain
// bilinear grid whose vertex values are projected into [0,1] after every
// step. Throws std::invalid_argument when final_dims exceeds the image
// size per axis.
FieldGrid fit_image(const RasterImage& target, std::array<int, 2> final_dims,
                    const TrainConfig& cfg, const RunHooks& hooks = {});

}  // namespace rf
