// Copyright (c) 2026 relufield authors
// SPDX-License-Identifier: Apache-2.0

#include "relufield/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "json.hpp"
#include "relufield/png_io.hpp"

namespace rf {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void put_bytes(std::ofstream& out, const void* p, std::size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void put_u16(std::ofstream& out, std::uint16_t v) {
    const std::uint8_t b[2] = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8)};
    put_bytes(out, b, 2);
}

void put_u32(std::ofstream& out, std::uint32_t v) {
    std::uint8_t b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
    put_bytes(out, b, 4);
}

void put_f64(std::ofstream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    std::uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(bits >> (8 * i));
    put_bytes(out, b, 8);
}

struct Reader {
    std::ifstream in;
    std::string path;

    void get_bytes(void* p, std::size_t n) {
        in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (in.gcount() != static_cast<std::streamsize>(n))
            throw std::runtime_error("load_grid: truncated file '" + path + "'");
    }
    std::uint16_t get_u16() {
        std::uint8_t b[2];
        get_bytes(b, 2);
        return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
    }
    std::uint32_t get_u32() {
        std::uint8_t b[4];
        get_bytes(b, 4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
        return v;
    }
    float get_f32() {
        const std::uint32_t bits = get_u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    double get_f64() {
        std::uint8_t b[8];
        get_bytes(b, 8);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
};

}  // namespace

void save_grid(const std::string& path, const FieldGrid& grid) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_grid: cannot open '" + path + "'");
    put_bytes(out, "RLUF", 4);
    put_u16(out, kGridFormatVersion);
    put_u16(out, static_cast<std::uint16_t>(grid.rank));
    for (int a = 0; a < grid.rank; ++a) put_u32(out, static_cast<std::uint32_t>(grid.dims[a]));
    put_u32(out, static_cast<std::uint32_t>(grid.channels));
    for (int a = 0; a < grid.rank; ++a) put_f64(out, grid.aabb.lo[a]);
    for (int a = 0; a < grid.rank; ++a) put_f64(out, grid.aabb.hi[a]);

    // Buffered f32 conversion; grids can run to gigabytes. Bulk writes are
    // host-order, which the format requires to be little-endian.
    static_assert(std::endian::native == std::endian::little);
    std::vector<float> buf;
    buf.reserve(1 << 16);
    for (std::size_t i = 0; i < grid.values.size(); ++i) {
        buf.push_back(static_cast<float>(grid.values[i]));
        if (buf.size() == (1 << 16)) {
            put_bytes(out, buf.data(), buf.size() * 4);
            buf.clear();
        }
    }
    if (!buf.empty()) put_bytes(out, buf.data(), buf.size() * 4);
    if (!out) throw std::runtime_error("save_grid: write failed for '" + path + "'");
}

FieldGrid load_grid(const std::string& path) {
    Reader r;
    r.path = path;
    r.in.open(path, std::ios::binary);
    if (!r.in) throw std::runtime_error("load_grid: cannot open '" + path + "'");

    char magic[4];
    r.get_bytes(magic, 4);
    if (std::memcmp(magic, "RLUF", 4) != 0)
        throw std::runtime_error("load_grid: bad magic in '" + path + "'");
    const std::uint16_t version = r.get_u16();
    if (version != kGridFormatVersion)
        throw std::runtime_error("load_grid: unsupported version in '" + path + "'");

    FieldGrid g;
    g.rank = r.get_u16();
    if (g.rank != 2 && g.rank != 3)
        throw std::runtime_error("load_grid: invalid rank in '" + path + "'");
    g.dims = {1, 1, 1};
    for (int a = 0; a < g.rank; ++a) {
        g.dims[a] = static_cast<int>(r.get_u32());
        if (g.dims[a] <= 0) throw std::runtime_error("load_grid: invalid dims in '" + path + "'");
    }
    g.channels = static_cast<int>(r.get_u32());
    if (g.channels <= 0) throw std::runtime_error("load_grid: invalid channels in '" + path + "'");
    for (int a = 0; a < g.rank; ++a) g.aabb.lo[a] = r.get_f64();
    for (int a = 0; a < g.rank; ++a) g.aabb.hi[a] = r.get_f64();
    if (g.rank == 2) {
        g.aabb.lo.z = 0.0;
        g.aabb.hi.z = 1.0;
    }

    const std::size_t count = g.value_count();
    g.values.resize(count);
    static_assert(std::endian::native == std::endian::little);
    std::vector<float> buf(1 << 16);
    std::size_t done = 0;
    while (done < count) {
        const std::size_t chunk = std::min(buf.size(), count - done);
        r.get_bytes(buf.data(), chunk * 4);
        for (std::size_t i = 0; i < chunk; ++i) g.values[done + i] = static_cast<double>(buf[i]);
        done += chunk;
    }
    // Reject trailing bytes: a well-formed file is exactly header + payload.
    char extra;
    r.in.read(&extra, 1);
    if (r.in.gcount() != 0)
        throw std::runtime_error("load_grid: trailing bytes in '" + path + "'");
    return g;
}

namespace {

std::string frame_image_path(const std::string& root, std::string file_path) {
    // Manifest convention: "./train/r_0", extension usually omitted.
    if (file_path.rfind("./", 0) == 0) file_path = file_path.substr(2);
    fs::path p = fs::path(root) / file_path;
    if (!p.has_extension()) p += ".png";
    return p.string();
}

Mat3 orthonormalized(const Mat3& r) {
    Vec3 x = r.column(0);
    Vec3 y = r.column(1);
    x = normalized(x);
    y = normalized(y - x * dot(x, y));
    const Vec3 z = cross(x, y);
    return Mat3::from_columns(x, y, z);
}

}  // namespace

Dataset load_nerf_dataset(const std::string& root, const std::string& split,
                          const Vec3& background, const std::optional<Aabb>& aabb_override) {
    const fs::path manifest_path = fs::path(root) / ("transforms_" + split + ".json");
    std::ifstream in(manifest_path);
    if (!in)
        throw std::runtime_error("load_nerf_dataset: missing manifest '" + manifest_path.string() +
                                 "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw std::runtime_error("load_nerf_dataset: malformed JSON in '" +
                                 manifest_path.string() + "': " + e.what());
    }

    if (!doc.contains("camera_angle_x") || !doc["camera_angle_x"].is_number())
        throw std::runtime_error("load_nerf_dataset: missing field 'camera_angle_x'");
    if (!doc.contains("frames") || !doc["frames"].is_array())
        throw std::runtime_error("load_nerf_dataset: missing field 'frames'");
    if (doc["frames"].empty()) throw std::runtime_error("load_nerf_dataset: empty frames list");

    Dataset ds;
    ds.split = split;
    ds.camera_angle_x = doc["camera_angle_x"].get<double>();
    ds.aabb = aabb_override.value_or(Aabb{{-1.5, -1.5, -1.5}, {1.5, 1.5, 1.5}});

    for (const auto& frame : doc["frames"]) {
        if (!frame.contains("file_path") || !frame["file_path"].is_string())
            throw std::runtime_error("load_nerf_dataset: missing field 'file_path'");
        if (!frame.contains("transform_matrix"))
            throw std::runtime_error("load_nerf_dataset: missing field 'transform_matrix'");
        const auto& m = frame["transform_matrix"];
        if (!m.is_array() || m.size() != 4)
            throw std::runtime_error("load_nerf_dataset: transform_matrix must be 4x4");

        Mat3 rot;
        Vec3 trans;
        for (int i = 0; i < 3; ++i) {
            if (!m[i].is_array() || m[i].size() != 4)
                throw std::runtime_error("load_nerf_dataset: transform_matrix must be 4x4");
            for (int j = 0; j < 3; ++j) rot.m[i][j] = m[i][j].get<double>();
            trans[i] = m[i][3].get<double>();
        }
        if (rotation_error(rot) > 1e-4 || rot.det() <= 0.0)
            throw std::invalid_argument(
                "load_nerf_dataset: transform_matrix rotation block is not a rotation");

        DatasetFrame df;
        df.name = frame["file_path"].get<std::string>();
        df.image = read_png_image(frame_image_path(root, df.name), background);

        if (ds.width == 0) {
            ds.width = df.image.width;
            ds.height = df.image.height;
            ds.focal = focal_from_angle_x(ds.camera_angle_x, ds.width);
        } else if (df.image.width != ds.width || df.image.height != ds.height) {
            throw std::runtime_error("load_nerf_dataset: image size mismatch for '" + df.name +
                                     "'");
        }

        df.pose.R = orthonormalized(rot);
        df.pose.T = trans;
        df.pose.W = ds.width;
        df.pose.H = ds.height;
        df.pose.F = ds.focal;
        df.pose.validate();
        ds.frames.push_back(std::move(df));
    }
    return ds;
}

void save_nerf_dataset(const std::string& root, const std::string& split,
                       double camera_angle_x, const std::vector<DatasetFrame>& frames) {
    const fs::path dir = fs::path(root) / split;
    fs::create_directories(dir);

    json doc;
    doc["camera_angle_x"] = camera_angle_x;
    doc["frames"] = json::array();
    int index = 0;
    for (const DatasetFrame& f : frames) {
        const std::string name = f.name.empty() ? ("r_" + std::to_string(index)) : f.name;
        json jf;
        jf["file_path"] = "./" + split + "/" + name;
        json rows = json::array();
        for (int i = 0; i < 3; ++i)
            rows.push_back({f.pose.R.m[i][0], f.pose.R.m[i][1], f.pose.R.m[i][2], f.pose.T[i]});
        rows.push_back({0.0, 0.0, 0.0, 1.0});
        jf["transform_matrix"] = rows;
        doc["frames"].push_back(jf);
        write_png_rgb8((dir / (name + ".png")).string(), f.image);
        ++index;
    }
    std::ofstream out(fs::path(root) / ("transforms_" + split + ".json"));
    out << doc.dump(2) << "\n";
}

MetricsCsv::MetricsCsv(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("MetricsCsv: cannot open '" + path + "'");
    out_ << "run_id,scene,mode,grid_dims,stage,iteration,loss,psnr_db,wall_seconds\n";
}

void MetricsCsv::append(const MetricsRow& row) {
    char num[64];
    out_ << row.run_id << ',' << row.scene << ',' << row.mode << ',' << row.grid_dims[0] << 'x'
         << row.grid_dims[1] << 'x' << row.grid_dims[2] << ',' << row.stage << ','
         << row.iteration << ',';
    if (!std::isnan(row.loss)) {
        std::snprintf(num, sizeof(num), "%.17g", row.loss);
        out_ << num;
    }
    out_ << ',';
    if (!std::isnan(row.psnr_db)) {
        std::snprintf(num, sizeof(num), "%.17g", row.psnr_db);
        out_ << num;
    }
    std::snprintf(num, sizeof(num), "%.3f", row.wall_seconds);
    out_ << ',' << num << '\n';
    out_.flush();
}

}  // namespace rf
