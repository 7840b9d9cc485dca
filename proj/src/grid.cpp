// Copyright (c) 2026 relufield authors
// SPDX-License-Identifier: Apache-2.0

#include "relufield/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "relufield/kernels.hpp"
#include "relufield/rng.hpp"
#include "relufield/threading.hpp"

namespace rf {

void GradSink::accumulate(const GradSink& other) {
    if (other.values.size() != values.size())
        throw std::invalid_argument("GradSink::accumulate: shape mismatch");
    kernels::active_table().add_inplace(values.data(), other.values.data(), values.size());
}

Vec3 world_to_grid(const FieldGrid& grid, const Vec3& world) {
    Vec3 g;
    for (int a = 0; a < grid.rank; ++a) {
        const double lo = grid.aabb.lo[a];
        const double hi = grid.aabb.hi[a];
        g[a] = (world[a] - lo) / (hi - lo) * static_cast<double>(grid.dims[a] - 1);
    }
    return g;
}

CellRef resolve_cell(const FieldGrid& grid, const Vec3& grid_pos) {
    int base[3] = {0, 0, 0};
    CellRef cell;
    cell.frac = {0.0, 0.0, 0.0};
    for (int a = 0; a < grid.rank; ++a) {
        const int d = grid.dims[a];
        double c = std::clamp(grid_pos[a], 0.0, static_cast<double>(d - 1));
        // floor keeps integer coordinates at frac 0, so vertices reproduce
        // bit-for-bit; the hi corner is clamped below with zero weight.
        int i0 = static_cast<int>(std::floor(c));
        base[a] = i0;
        cell.frac[a] = c - static_cast<double>(i0);
    }

    cell.ncorners = 1 << grid.rank;
    for (int k = 0; k < cell.ncorners; ++k) {
        int ix = std::min(base[0] + (k & 1), grid.dims[0] - 1);
        int iy = grid.rank >= 2 ? std::min(base[1] + ((k >> 1) & 1), grid.dims[1] - 1) : 0;
        int iz = grid.rank >= 3 ? std::min(base[2] + ((k >> 2) & 1), grid.dims[2] - 1) : 0;
        cell.offset[k] = grid.vertex_offset(ix, iy, iz);
        double w = (k & 1) ? cell.frac[0] : 1.0 - cell.frac[0];
        if (grid.rank >= 2) w *= ((k >> 1) & 1) ? cell.frac[1] : 1.0 - cell.frac[1];
        if (grid.rank >= 3) w *= ((k >> 2) & 1) ? cell.frac[2] : 1.0 - cell.frac[2];
        cell.weight[k] = w;
    }
    return cell;
}

void cell_gather(const FieldGrid& grid, const CellRef& cell, double* out) {
    const double* corners[8];
    const double* base = grid.values.data();
    for (int k = 0; k < cell.ncorners; ++k) corners[k] = base + cell.offset[k];
    kernels::active_table().interp_gather(out, corners, cell.frac.data(), grid.rank,
                                          grid.channels);
}

void cell_scatter(const CellRef& cell, GradSink& sink, const double* g) {
    double* sinks[8];
    double* base = sink.values.data();
    for (int k = 0; k < cell.ncorners; ++k) sinks[k] = base + cell.offset[k];
    kernels::active_table().interp_scatter(sinks, cell.weight.data(), cell.ncorners, g,
                                           sink.channels);
}

namespace {

void check_finite(const FieldGrid& grid, const Vec3& p, const char* who) {
    for (int a = 0; a < grid.rank; ++a)
        if (!std::isfinite(p[a])) throw std::invalid_argument(std::string(who) + ": non-finite coordinate");
}

// Interpolation of tanh-transformed vertex values; used by the occupancy
// representation. Returns pre-ReLU values in out.
void gather_tanh(const FieldGrid& grid, const CellRef& cell, double* out) {
    const int ch = grid.channels;
    const double* base = grid.values.data();
    double transformed[8 * 8];  // enough for channels <= 8; larger falls back
    std::vector<double> big;
    double* buf = transformed;
    if (ch > 8) {
        big.resize(static_cast<std::size_t>(cell.ncorners) * ch);
        buf = big.data();
    }
    const double* corners[8];
    for (int k = 0; k < cell.ncorners; ++k) {
        double* dst = buf + static_cast<std::size_t>(k) * ch;
        const double* src = base + cell.offset[k];
        for (int c = 0; c < ch; ++c) dst[c] = std::tanh(src[c]);
        corners[k] = dst;
    }
    kernels::active_table().interp_gather(out, corners, cell.frac.data(), grid.rank, ch);
}

}  // namespace

void fetch(const FieldGrid& grid, FetchMode mode, const Vec3& grid_pos, std::span<double> out) {
    check_finite(grid, grid_pos, "fetch");
    if (out.size() != static_cast<std::size_t>(grid.channels))
        throw std::invalid_argument("fetch: output span size != channels");

    const CellRef cell = resolve_cell(grid, grid_pos);
    if (mode == FetchMode::TanhThenRelu)
        gather_tanh(grid, cell, out.data());
    else
        cell_gather(grid, cell, out.data());

    switch (mode) {
        case FetchMode::None:
            break;
        case FetchMode::Relu:
        case FetchMode::TanhThenRelu:
            for (double& v : out) v = std::max(0.0, v);
            break;
        case FetchMode::ReluClamp01:
            for (double& v : out) v = std::clamp(v, 0.0, 1.0);
            break;
    }
}

std::vector<double> fetch(const FieldGrid& grid, FetchMode mode, const Vec3& grid_pos) {
    std::vector<double> out(static_cast<std::size_t>(grid.channels));
    fetch(grid, mode, grid_pos, out);
    return out;
}

void fetch_backward(const FieldGrid& grid, FetchMode mode, const Vec3& grid_pos,
                    std::span<const double> upstream, GradSink& sink) {
    check_finite(grid, grid_pos, "fetch_backward");
    if (upstream.size() != static_cast<std::size_t>(grid.channels))
        throw std::invalid_argument("fetch_backward: upstream size != channels");
    if (!sink.shape_matches(grid))
        throw std::invalid_argument("fetch_backward: sink shape does not match grid");

    const CellRef cell = resolve_cell(grid, grid_pos);
    const int ch = grid.channels;
    std::vector<double> pre(static_cast<std::size_t>(ch));

    if (mode == FetchMode::TanhThenRelu) {
        gather_tanh(grid, cell, pre.data());
        // Chain rule through the per-vertex tanh; gate on the post-ReLU side.
        const double* base = grid.values.data();
        for (int k = 0; k < cell.ncorners; ++k) {
            const double wk = cell.weight[k];
            const double* src = base + cell.offset[k];
            double* dst = sink.values.data() + cell.offset[k];
            for (int c = 0; c < ch; ++c) {
                if (pre[c] <= 0.0) continue;
                const double t = std::tanh(src[c]);
                dst[c] += wk * (1.0 - t * t) * upstream[c];
            }
        }
        return;
    }

    cell_gather(grid, cell, pre.data());
    std::vector<double> gated(static_cast<std::size_t>(ch));
    for (int c = 0; c < ch; ++c) {
        double gate;
        switch (mode) {
            case FetchMode::None: gate = 1.0; break;
            case FetchMode::Relu: gate = pre[c] > 0.0 ? 1.0 : 0.0; break;
            case FetchMode::ReluClamp01: gate = (pre[c] > 0.0 && pre[c] < 1.0) ? 1.0 : 0.0; break;
            default: gate = 0.0; break;
        }
        gated[c] = gate * upstream[c];
    }
    cell_scatter(cell, sink, gated.data());
}

FieldGrid upsample2x(const FieldGrid& grid, int threads) {
    FieldGrid out;
    out.rank = grid.rank;
    out.channels = grid.channels;
    out.aabb = grid.aabb;
    for (int a = 0; a < grid.rank; ++a) out.dims[a] = grid.dims[a] * 2;
    out.values.resize(out.value_count());

    std::array<double, 3> scale = {0.0, 0.0, 0.0};
    for (int a = 0; a < grid.rank; ++a)
        scale[a] = static_cast<double>(grid.dims[a] - 1) / static_cast<double>(out.dims[a] - 1);

    const int nx = out.dims[0];
    const int ny = grid.rank >= 2 ? out.dims[1] : 1;
    const int nz = grid.rank >= 3 ? out.dims[2] : 1;

    parallel_chunks(static_cast<std::size_t>(nz), threads, [&](std::size_t, std::size_t z0, std::size_t z1) {
        for (std::size_t iz = z0; iz < z1; ++iz) {
            for (int iy = 0; iy < ny; ++iy) {
                for (int ix = 0; ix < nx; ++ix) {
                    Vec3 src{static_cast<double>(ix) * scale[0],
                             static_cast<double>(iy) * scale[1],
                             static_cast<double>(iz) * scale[2]};
                    const CellRef cell = resolve_cell(grid, src);
                    cell_gather(grid, cell, out.vertex(ix, iy, static_cast<int>(iz)));
                }
            }
        }
    });
    return out;
}

FieldGrid init_uniform(int rank, std::array<int, 3> dims, int channels, const Aabb& aabb,
                       double lo, double hi, std::uint64_t seed) {
    if (rank != 2 && rank != 3) throw std::invalid_argument("init_uniform: rank must be 2 or 3");
    for (int a = 0; a < rank; ++a)
        if (dims[a] <= 0) throw std::invalid_argument("init_uniform: non-positive dims");
    if (channels <= 0) throw std::invalid_argument("init_uniform: non-positive channels");
    if (lo > hi) throw std::invalid_argument("init_uniform: lo > hi");

    FieldGrid g;
    g.rank = rank;
    g.dims = dims;
    if (rank == 2) g.dims[2] = 1;
    g.channels = channels;
    g.aabb = aabb;
    g.values.resize(g.value_count());

    Rng rng(seed);
    for (double& v : g.values) {
        // f32 precision keeps save/load round trips bit-exact.
        v = static_cast<double>(static_cast<float>(rng.uniform(lo, hi)));
    }
    return g;
}

}  // namespace rf
