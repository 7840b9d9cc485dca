// Copyright (c) 2026 relufield authors
// SPDX-License-Identifier: Apache-2.0

#include "relufield/render.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "relufield/rng.hpp"
#include "relufield/threading.hpp"

namespace rf {

namespace {

// Bin prefix construction: consecutive prefixes stay within a factor of two,
// so the deltas are exact differences and their running sum walks the
// prefixes exactly back to t_far - t_near.
void fill_samples(const Ray& ray, const RenderSettings& settings, std::uint64_t stream,
                  std::vector<double>& t, std::vector<double>& delta) {
    if (!ray.hit) throw std::invalid_argument("sample_ray: ray misses the volume");
    const int n = settings.samples_per_ray;
    if (n < 2) throw std::invalid_argument("sample_ray: samples_per_ray must be >= 2");

    const double span = ray.t_far - ray.t_near;
    t.resize(n);
    delta.resize(n);
    double prev = 0.0;
    for (int i = 0; i < n; ++i) {
        const double next =
            (i + 1 == n) ? span : span * (static_cast<double>(i + 1) / static_cast<double>(n));
        const double width = next - prev;
        const double u =
            settings.stratified_jitter ? stateless_uniform(settings.seed, stream, i) : 0.5;
        delta[i] = width;
        t[i] = ray.t_near + (prev + u * width);
        prev = next;
    }
}

}  // namespace

RaySamples sample_ray(const Ray& ray, const RenderSettings& settings, std::uint64_t stream) {
    RaySamples out;
    fill_samples(ray, settings, stream, out.t, out.delta);
    return out;
}

namespace {

// alpha[i] and the transmittance ladder trans[0..n] with trans[n] = T_final.
inline void alpha_transmittance(std::span<const double> sigma, std::span<const double> delta,
                                double* alpha, double* trans) {
    const std::size_t n = sigma.size();
    double T = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = -std::expm1(-sigma[i] * delta[i]);
        alpha[i] = a;
        trans[i] = T;
        T *= 1.0 - a;
    }
    trans[n] = T;
}

}  // namespace

CompositeResult composite_ea(std::span<const double> sigma, std::span<const Vec3> color,
                             std::span<const double> delta, std::span<const double> t,
                             double t_far, const Vec3& background) {
    const std::size_t n = sigma.size();
    if (color.size() != n || delta.size() != n || t.size() != n)
        throw std::invalid_argument("composite_ea: length mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        if (sigma[i] < 0.0) throw std::invalid_argument("composite_ea: negative density");
        if (delta[i] <= 0.0) throw std::invalid_argument("composite_ea: non-positive step size");
    }

    std::vector<double> alpha(n), trans(n + 1);
    alpha_transmittance(sigma, delta, alpha.data(), trans.data());

    CompositeResult out;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = trans[i] * alpha[i];
        out.color += color[i] * w;
        out.depth += t[i] * w;
    }
    out.color += background * trans[n];
    out.depth += t_far * trans[n];
    out.opacity = 1.0 - trans[n];
    return out;
}

namespace {

void ensure_radiance_grid(const FieldGrid& grid) {
    if (grid.rank != 3) throw std::invalid_argument("render: radiance grid must be 3D");
    if (grid.channels != kRadianceChannels)
        throw std::invalid_argument("render: radiance grid must have 28 channels");
}

struct GridRayMap {
    Vec3 origin;  // grid-space origin
    Vec3 step;    // grid-space direction scaled per axis
};

GridRayMap grid_ray_map(const FieldGrid& grid, const Ray& ray) {
    GridRayMap m;
    m.origin = world_to_grid(grid, ray.origin);
    for (int a = 0; a < 3; ++a) {
        const double scale =
            static_cast<double>(grid.dims[a] - 1) / (grid.aabb.hi[a] - grid.aabb.lo[a]);
        m.step[a] = ray.direction[a] * scale;
    }
    return m;
}

}  // namespace

Vec3 render_ray(const FieldGrid& grid, const Ray& ray, const RenderSettings& settings,
                std::uint64_t stream, RayWorkspace& ws, double* depth, double* opacity) {
    fill_samples(ray, settings, stream, ws.t, ws.delta);
    const int n = settings.samples_per_ray;

    ws.count = n;
    ws.cells.resize(n);
    ws.sigma_pre.resize(n);
    ws.alpha.resize(n);
    ws.trans.resize(n + 1);
    ws.color.resize(n);
    ws.raw_color.resize(n);
    ws.feat.resize(kRadianceChannels);

    eval_sh_basis(ray.direction, ws.basis);
    const GridRayMap map = grid_ray_map(grid, ray);

    Vec3 rgb{0, 0, 0};
    double depth_acc = 0.0;
    double T = 1.0;
    for (int i = 0; i < n; ++i) {
        const Vec3 gp = map.origin + ws.t[i] * map.step;
        ws.cells[i] = resolve_cell(grid, gp);
        cell_gather(grid, ws.cells[i], ws.feat.data());

        const double sigma_pre = ws.feat[kDensityChannel];
        ws.sigma_pre[i] = sigma_pre;
        const double sigma = sigma_pre > 0.0 ? sigma_pre : 0.0;

        for (int ch = 0; ch < 3; ++ch) {
            const double* c = ws.feat.data() + 1 + ch * kShBasisSize;
            double v = 0.0;
            for (int j = 0; j < kShBasisSize; ++j) v += c[j] * ws.basis[j];
            ws.raw_color[i][ch] = v;
            ws.color[i][ch] = std::clamp(v, 0.0, 1.0);
        }

        const double a = -std::expm1(-sigma * ws.delta[i]);
        ws.alpha[i] = a;
        ws.trans[i] = T;
        const double w = T * a;
        rgb += ws.color[i] * w;
        depth_acc += ws.t[i] * w;
        T *= 1.0 - a;
    }
    ws.trans[n] = T;

    rgb += settings.background * T;
    if (depth != nullptr) *depth = depth_acc + ray.t_far * T;
    if (opacity != nullptr) *opacity = 1.0 - T;
    return rgb;
}

void render_ray_backward(const Vec3& upstream, const RayWorkspace& ws,
                         const RenderSettings& settings, GradSink& sink) {
    const int n = ws.count;
    double g[kRadianceChannels];

    // suffix = sum_{j>i} T_j alpha_j c_j + T_final * background, built from
    // the tail upward; it is the part of the output a density increase at i
    // would shadow.
    Vec3 suffix = settings.background * ws.trans[n];
    for (int i = n - 1; i >= 0; --i) {
        const double w = ws.trans[i] * ws.alpha[i];

        // Appearance: dC/dcoeff = w * basis, gated by the [0,1] clamp.
        for (int ch = 0; ch < 3; ++ch) {
            const double raw = ws.raw_color[i][ch];
            const double gate = (raw > 0.0 && raw < 1.0) ? 1.0 : 0.0;
            const double dc = upstream[ch] * w * gate;
            double* dst = g + 1 + ch * kShBasisSize;
            for (int j = 0; j < kShBasisSize; ++j) dst[j] = dc * ws.basis[j];
        }

        // Density: dC/dsigma_i = delta_i * (T_{i+1} c_i - suffix).
        const double trans_next = ws.trans[i] * (1.0 - ws.alpha[i]);
        const double dsigma =
            ws.delta[i] * (trans_next * dot(upstream, ws.color[i]) - dot(upstream, suffix));
        const bool pass = !settings.density_relu || ws.sigma_pre[i] > 0.0;
        g[kDensityChannel] = pass ? dsigma : 0.0;

        cell_scatter(ws.cells[i], sink, g);
        suffix += ws.color[i] * w;
    }
}

RenderedImage render_image(const FieldGrid& grid, const CameraPose& pose,
                           const RenderSettings& settings, int threads) {
    ensure_radiance_grid(grid);
    RenderedImage out;
    out.rgb = RasterImage::create(pose.W, pose.H, 3);
    out.depth.assign(static_cast<std::size_t>(pose.W) * pose.H, 0.0);
    out.hit.assign(static_cast<std::size_t>(pose.W) * pose.H, 0);

    const std::size_t npix = out.hit.size();
    parallel_chunks(npix, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
        RayWorkspace ws;
        for (std::size_t p = begin; p < end; ++p) {
            const int px = static_cast<int>(p % pose.W);
            const int py = static_cast<int>(p / pose.W);
            const Ray ray = generate_ray(pose, px, py, grid.aabb);
            Vec3 rgb = settings.background;
            double depth = 0.0;
            if (ray.hit) {
                rgb = render_ray(grid, ray, settings, p, ws, &depth, nullptr);
                out.hit[p] = 1;
            }
            for (int c = 0; c < 3; ++c) out.rgb.values[p * 3 + c] = std::clamp(rgb[c], 0.0, 1.0);
            out.depth[p] = depth;
        }
    });
    return out;
}

void render_backward(const FieldGrid& grid, const CameraPose& pose,
                     const RenderSettings& settings, const RasterImage& upstream,
                     GradSink& sink, int threads) {
    ensure_radiance_grid(grid);
    if (!sink.shape_matches(grid))
        throw std::invalid_argument("render_backward: sink shape does not match grid");
    if (upstream.width != pose.W || upstream.height != pose.H || upstream.channels != 3)
        throw std::invalid_argument("render_backward: upstream image shape mismatch");

    const std::size_t npix = static_cast<std::size_t>(pose.W) * pose.H;
    std::vector<GradSink> partial(static_cast<std::size_t>(std::max(threads, 1)) - 1);

    parallel_chunks(npix, threads, [&](std::size_t worker, std::size_t begin, std::size_t end) {
        GradSink* local = &sink;
        if (worker > 0) {
            partial[worker - 1] = GradSink::like(grid);
            local = &partial[worker - 1];
        }
        RayWorkspace ws;
        for (std::size_t p = begin; p < end; ++p) {
            const int px = static_cast<int>(p % pose.W);
            const int py = static_cast<int>(p / pose.W);
            const Vec3 up{upstream.values[p * 3], upstream.values[p * 3 + 1],
                          upstream.values[p * 3 + 2]};
            if (up.x == 0.0 && up.y == 0.0 && up.z == 0.0) continue;
            const Ray ray = generate_ray(pose, px, py, grid.aabb);
            if (!ray.hit) continue;  // miss renders the constant background
            render_ray(grid, ray, settings, p, ws, nullptr, nullptr);
            render_ray_backward(up, ws, settings, *local);
        }
    });
    for (const GradSink& s : partial)
        if (!s.values.empty()) sink.accumulate(s);
}

PhotometricLoss photometric_loss(const RasterImage& rendered, const RasterImage& target) {
    if (rendered.width != target.width || rendered.height != target.height ||
        rendered.channels != target.channels)
        throw std::invalid_argument("photometric_loss: dimension mismatch");

    PhotometricLoss out;
    out.grad = RasterImage::create(rendered.width, rendered.height, rendered.channels);
    const std::size_t n = rendered.values.size();
    const double inv = 1.0 / static_cast<double>(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = rendered.values[i] - target.values[i];
        acc += d * d;
        out.grad.values[i] = 2.0 * d * inv;
    }
    out.mse = acc * inv;
    return out;
}

}  // namespace rf
