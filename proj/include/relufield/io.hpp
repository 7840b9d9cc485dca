// Copyright (c) 2026 relufield authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "relufield/camera.hpp"
#include "relufield/grid.hpp"
#include "relufield/image.hpp"

namespace rf {

// Binary grid checkpoint. Little-endian: magic "RLUF", u16 version, u16 m,
// u32 dims[m], u32 channels, f64 aabb (lo per axis, then hi per axis), then
// channels * prod(dims) f32 values.
inline constexpr std::uint16_t kGridFormatVersion = 1;

void save_grid(const std::string& path, const FieldGrid& grid);
FieldGrid load_grid(const std::string& path);  // throws std::runtime_error on format errors

struct DatasetFrame {
    std::string name;        // file_path stem from the manifest
    CameraPose pose;
    RasterImage image;
};

struct Dataset {
    std::string split;
    std::vector<DatasetFrame> frames;
    Aabb aabb;
    int width = 0, height = 0;
    double focal = 0.0;
    double camera_angle_x = 0.0;
};

// Reads <root>/transforms_<split>.json plus the referenced PNGs.
// F = 0.5*W / tan(0.5*camera_angle_x); alpha is composited over background.
// Missing or malformed fields raise std::runtime_error naming the field; a
// non-rotation upper-left 3x3 (tolerance 1e-4) raises std::invalid_argument.
Dataset load_nerf_dataset(const std::string& root, const std::string& split,
                          const Vec3& background = {1, 1, 1},
                          const std::optional<Aabb>& aabb_override = std::nullopt);

// Writes the same layout this loader reads; used for synthetic scenes.
void save_nerf_dataset(const std::string& root, const std::string& split,
                       double camera_angle_x, const std::vector<DatasetFrame>& frames);

struct MetricsRow {
    std::string run_id, scene, mode;
    std::array<int, 3> grid_dims = {0, 0, 0};
    int stage = 0;
    long long iteration = 0;
    double loss = std::numeric_limits<double>::quiet_NaN();     // NaN -> empty cell
    double psnr_db = std::numeric_limits<double>::quiet_NaN();  // NaN -> empty cell
    double wall_seconds = 0.0;
};

// Append-oriented CSV writer with the fixed column set
// run_id,scene,mode,grid_dims,stage,iteration,loss,psnr_db,wall_seconds.
class MetricsCsv {
public:
    explicit MetricsCsv(const std::string& path);
    void append(const MetricsRow& row);

private:
    std::ofstream out_;
};

}  // namespace rf
