// Copyright (c) 2026 relufield authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "relufield/vec.hpp"

namespace rf {

// Nonlinearity applied to a fetch. The grid itself always stores unbounded
// values; the mode decides how an interpolated value becomes a signal value.
//   None         - plain multilinear interpolation (baseline grids)
//   Relu         - max(0, interp)
//   ReluClamp01  - min(1, max(0, interp)), for [0,1] image signals
//   TanhThenRelu - interpolate tanh(vertex values), then max(0, .)
enum class FetchMode { None, Relu, ReluClamp01, TanhThenRelu };

// Dense regular vertex grid over an axis-aligned box. Axis 0 varies fastest
// in memory after the channel index (channel-fastest layout, so one vertex's
// channels are contiguous). rank is 2 or 3; for rank 2 the z components of
// coordinates and aabb are ignored.
struct FieldGrid {
    int rank = 3;
    std::array<int, 3> dims = {1, 1, 1};
    int channels = 1;
    Aabb aabb;
    std::vector<double> values;

    std::size_t vertex_count() const {
        std::size_t n = 1;
        for (int a = 0; a < rank; ++a) n *= static_cast<std::size_t>(dims[a]);
        return n;
    }
    std::size_t value_count() const { return vertex_count() * static_cast<std::size_t>(channels); }

    std::size_t vertex_offset(int ix, int iy, int iz = 0) const {
        std::size_t v = static_cast<std::size_t>(ix);
        if (rank >= 2) v += static_cast<std::size_t>(iy) * dims[0];
        if (rank >= 3) v += static_cast<std::size_t>(iz) * dims[0] * static_cast<std::size_t>(dims[1]);
        return v * static_cast<std::size_t>(channels);
    }
    double* vertex(int ix, int iy, int iz = 0) { return values.data() + vertex_offset(ix, iy, iz); }
    const double* vertex(int ix, int iy, int iz = 0) const {
        return values.data() + vertex_offset(ix, iy, iz);
    }
};

// Gradient accumulator mirroring a FieldGrid's value layout.
struct GradSink {
    int rank = 3;
    std::array<int, 3> dims = {1, 1, 1};
    int channels = 1;
    std::vector<double> values;

    static GradSink like(const FieldGrid& g) {
        GradSink s;
        s.rank = g.rank;
        s.dims = g.dims;
        s.channels = g.channels;
        s.values.assign(g.value_count(), 0.0);
        return s;
    }

    bool shape_matches(const FieldGrid& g) const {
        return rank == g.rank && dims == g.dims && channels == g.channels &&
               values.size() == g.value_count();
    }

    void zero() { std::fill(values.begin(), values.end(), 0.0); }

    // Merge another sink by summation (thread-local sinks, fixed order).
    void accumulate(const GradSink& other);
};

// One resolved interpolation cell: the 2^rank vertex offsets that surround a
// query point and their multilinear weights. Offsets index into
// FieldGrid::values (and equally into a matching GradSink).
struct CellRef {
    std::array<std::size_t, 8> offset;
    std::array<double, 8> weight;  // multilinear product weights (backward)
    std::array<double, 3> frac;    // per-axis fractions (factored forward)
    int ncorners = 0;
};

// Affine map from world space to continuous grid coordinates:
// aabb.lo -> 0 and aabb.hi -> dims-1 per axis. Points outside the box are
// allowed and produce out-of-range coordinates.
Vec3 world_to_grid(const FieldGrid& grid, const Vec3& world);

// Resolves the cell containing grid_pos; coordinates are clamped to
// [0, dims-1] per axis first. Precondition (unchecked): grid_pos finite.
CellRef resolve_cell(const FieldGrid& grid, const Vec3& grid_pos);

// Interpolated vertex values at a resolved cell, before any nonlinearity.
void cell_gather(const FieldGrid& grid, const CellRef& cell, double* out);

// sink[corner] += weight * g for every corner of the cell.
void cell_scatter(const CellRef& cell, GradSink& sink, const double* g);

// Multilinear interpolation followed by the mode's nonlinearity.
// Throws std::invalid_argument on non-finite coordinates or if out.size()
// != channels.
void fetch(const FieldGrid& grid, FetchMode mode, const Vec3& grid_pos, std::span<double> out);
std::vector<double> fetch(const FieldGrid& grid, FetchMode mode, const Vec3& grid_pos);

// Accumulates d(upstream . fetch)/d(vertex values) into sink. The ReLU
// subgradient at 0 is 0; the clamp gradient vanishes outside (0, 1).
// Throws std::invalid_argument on shape mismatch or non-finite input.
void fetch_backward(const FieldGrid& grid, FetchMode mode, const Vec3& grid_pos,
                    std::span<const double> upstream, GradSink& sink);

// Doubles the resolution along every axis. Output vertex i reads the source
// at coordinate i*(src_dims-1)/(dst_dims-1), so box corners map to box
// corners and the aabb is preserved exactly.
FieldGrid upsample2x(const FieldGrid& grid, int threads = 1);

// I.i.d. uniform values in [lo, hi], reproducible from seed. Values are
// drawn at f32 precision so a grid round-trips bit-exactly through the
// binary file format. Throws std::invalid_argument for non-positive dims
// or lo > hi.
FieldGrid init_uniform(int rank, std::array<int, 3> dims, int channels, const Aabb& aabb,
                       double lo, double hi, std::uint64_t seed);

}  // namespace rf
