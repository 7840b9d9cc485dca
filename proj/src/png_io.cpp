// Copyright (c) 2026 relufield authors
// SPDX-License-Identifier: Apache-2.0

#include "relufield/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace rf {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f != nullptr) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

Png8 read_png8(const std::string& path) {
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) throw std::runtime_error("read_png8: cannot open '" + path + "'");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png == nullptr) throw std::runtime_error("read_png8: png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("read_png8: png_create_info_struct failed");
    }

    Png8 out;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("read_png8: failed to decode '" + path + "'");
    }

    png_init_io(png, file.get());
    png_read_info(png, info);

    const png_byte color_type = png_get_color_type(png, info);
    const png_byte bit_depth = png_get_bit_depth(png, info);

    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    png_read_update_info(png, info);

    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.channels = static_cast<int>(png_get_channels(png, info));
    if (out.channels != 3 && out.channels != 4) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("read_png8: unsupported channel layout in '" + path + "'");
    }

    out.data.resize(static_cast<std::size_t>(out.width) * out.height * out.channels);
    rows.resize(out.height);
    for (int y = 0; y < out.height; ++y)
        rows[y] = out.data.data() + static_cast<std::size_t>(y) * out.width * out.channels;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

RasterImage read_png_image(const std::string& path, const Vec3& background) {
    const Png8 raw = read_png8(path);
    RasterImage img = RasterImage::create(raw.width, raw.height, 3);
    const std::size_t npix = static_cast<std::size_t>(raw.width) * raw.height;
    for (std::size_t p = 0; p < npix; ++p) {
        const std::uint8_t* src = raw.data.data() + p * raw.channels;
        double rgb[3] = {src[0] / 255.0, src[1] / 255.0, src[2] / 255.0};
        if (raw.channels == 4) {
            const double a = src[3] / 255.0;
            for (int c = 0; c < 3; ++c) rgb[c] = rgb[c] * a + background[c] * (1.0 - a);
        }
        for (int c = 0; c < 3; ++c) img.values[p * 3 + c] = rgb[c];
    }
    return img;
}

namespace {

void write_png(const std::string& path, int width, int height, int bit_depth, int color_type,
               const std::vector<png_bytep>& rows) {
    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) throw std::runtime_error("write_png: cannot open '" + path + "'");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png == nullptr) throw std::runtime_error("write_png: png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("write_png: png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("write_png: failed to encode '" + path + "'");
    }

    png_init_io(png, file.get());
    png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    if (bit_depth == 16) png_set_swap(png);  // rows are host little-endian
    png_write_image(png, const_cast<png_bytepp>(rows.data()));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

void write_png_rgb8(const std::string& path, const RasterImage& image) {
    if (image.channels != 1 && image.channels != 3)
        throw std::invalid_argument("write_png_rgb8: image must have 1 or 3 channels");
    const int w = image.width, h = image.height;
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(w) * h * 3);
    for (std::size_t p = 0; p < static_cast<std::size_t>(w) * h; ++p) {
        for (int c = 0; c < 3; ++c) {
            const double v = image.channels == 3 ? image.values[p * 3 + c] : image.values[p];
            bytes[p * 3 + c] =
                static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
        }
    }
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y) rows[y] = bytes.data() + static_cast<std::size_t>(y) * w * 3;
    write_png(path, w, h, 8, PNG_COLOR_TYPE_RGB, rows);
}

void write_png_rgba8(const std::string& path, const RasterImage& rgb,
                     const std::vector<double>& alpha) {
    if (rgb.channels != 3) throw std::invalid_argument("write_png_rgba8: image must be RGB");
    const int w = rgb.width, h = rgb.height;
    if (alpha.size() != static_cast<std::size_t>(w) * h)
        throw std::invalid_argument("write_png_rgba8: alpha size mismatch");
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(w) * h * 4);
    for (std::size_t p = 0; p < static_cast<std::size_t>(w) * h; ++p) {
        for (int c = 0; c < 3; ++c)
            bytes[p * 4 + c] = static_cast<std::uint8_t>(
                std::lround(std::clamp(rgb.values[p * 3 + c], 0.0, 1.0) * 255.0));
        bytes[p * 4 + 3] =
            static_cast<std::uint8_t>(std::lround(std::clamp(alpha[p], 0.0, 1.0) * 255.0));
    }
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y) rows[y] = bytes.data() + static_cast<std::size_t>(y) * w * 4;
    write_png(path, w, h, 8, PNG_COLOR_TYPE_RGBA, rows);
}

void write_png_gray16(const std::string& path, int width, int height,
                      const std::vector<std::uint16_t>& data) {
    if (data.size() != static_cast<std::size_t>(width) * height)
        throw std::invalid_argument("write_png_gray16: data size mismatch");
    std::vector<png_bytep> rows(height);
    auto* bytes = reinterpret_cast<png_bytep>(const_cast<std::uint16_t*>(data.data()));
    for (int y = 0; y < height; ++y)
        rows[y] = bytes + static_cast<std::size_t>(y) * width * 2;
    write_png(path, width, height, 16, PNG_COLOR_TYPE_GRAY, rows);
}

}  // namespace rf
