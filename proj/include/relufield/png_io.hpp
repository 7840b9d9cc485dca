// Copyright (c) 2026 relufield authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "relufield/image.hpp"
#include "relufield/vec.hpp"

namespace rf {

// 8-bit PNG load. Gray/palette images expand to RGB; 16-bit depth is
// reduced. Returns 3 or 4 channels; alpha is preserved when present.
struct Png8 {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> data;
};

Png8 read_png8(const std::string& path);

// 8-bit values mapped linearly to [0,1]; any alpha channel is composited
// over `background` at load time.
RasterImage read_png_image(const std::string& path, const Vec3& background = {0, 0, 0});

void write_png_rgb8(const std::string& path, const RasterImage& image);

// RGBA variant for synthetic fixtures with transparency.
void write_png_rgba8(const std::string& path, const RasterImage& rgb,
                     const std::vector<double>& alpha);

// 16-bit grayscale, used for depth maps.
void write_png_gray16(const std::string& path, int width, int height,
                      const std::vector<std::uint16_t>& data);

}  // namespace rf
