// Copyright (c) 2026 relufield authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "relufield/camera.hpp"
#include "relufield/render.hpp"
#include "relufield/rng.hpp"
#include "relufield/sh.hpp"

using namespace rf;

namespace {

constexpr double kY00 = 0.28209479177387814;

// Radiance test grid with all pre-activation values safely away from the
// ReLU and clamp kinks, so finite differences are valid.
FieldGrid smooth_radiance_grid(std::array<int, 3> dims, std::uint64_t seed) {
    FieldGrid g;
    g.rank = 3;
    g.dims = dims;
    g.channels = kRadianceChannels;
    g.aabb = {{-1, -1, -1}, {1, 1, 1}};
    g.values.resize(g.value_count());
    Rng rng(seed);
    for (std::size_t v = 0; v < g.vertex_count(); ++v) {
        double* p = g.values.data() + v * kRadianceChannels;
        p[kDensityChannel] = rng.uniform(0.5, 1.5);
        for (int ch = 0; ch < 3; ++ch) {
            double* c = p + 1 + ch * kShBasisSize;
            c[0] = rng.uniform(1.0, 2.5);  // raw color ~ [0.28, 0.7]
            for (int j = 1; j < kShBasisSize; ++j) c[j] = rng.uniform(-0.08, 0.08);
        }
    }
    return g;
}

CameraPose simple_camera(int w, int h, double dist = 3.0) {
    return look_at({0.2, -0.1, dist}, {0, 0, 0}, {0, 1, 0}, w, h, 0.9 * w);
}

}  // namespace

TEST_CASE("generate_ray: principal axis, corner pixel, miss flag") {
    CameraPose pose;
    pose.R = Mat3::identity();
    pose.T = {0, 0, 0};
    pose.W = pose.H = 3;
    pose.F = 1.0;
    Aabb box{{-10, -10, -10}, {10, 10, 10}};

    Ray center = generate_ray(pose, 1, 1, box);
    CHECK(center.direction.x == doctest::Approx(0.0));
    CHECK(center.direction.y == doctest::Approx(0.0));
    CHECK(center.direction.z == doctest::Approx(-1.0));
    CHECK(std::abs(norm(center.direction) - 1.0) < 1e-9);

    // W = H = 2F puts the (0,0) corner at 0.75 of forward per axis before
    // normalization; compare against the pinhole formula evaluated directly.
    pose.W = pose.H = 4;
    pose.F = 2.0;
    Ray corner = generate_ray(pose, 0, 0, box);
    const double ux = (0 + 0.5 - 2.0) / 2.0;  // -0.75
    const double uy = -(0 + 0.5 - 2.0) / 2.0;
    const double len = std::sqrt(ux * ux + uy * uy + 1.0);
    CHECK(std::abs(corner.direction.x - ux / len) < 1e-12);
    CHECK(std::abs(corner.direction.y - uy / len) < 1e-12);
    CHECK(std::abs(corner.direction.z - (-1.0) / len) < 1e-12);
    CHECK(std::abs(std::abs(ux) - 0.75) < 1e-12);

    double tn, tf;
    CHECK_FALSE(intersect_aabb({0, 0, 0}, {1, 0, 0}, {{1, 1, 1}, {2, 2, 2}}, tn, tf));
    CHECK(intersect_aabb({0, 0, 0}, {1, 0, 0}, {{1, -1, -1}, {2, 2, 2}}, tn, tf));
    CHECK(tn == doctest::Approx(1.0));
    CHECK(tf == doctest::Approx(2.0));
}

TEST_CASE("camera validation") {
    CameraPose pose;
    pose.W = pose.H = 8;
    pose.F = 10.0;
    CHECK_NOTHROW(pose.validate());
    pose.R.m[0][0] = 1.5;
    CHECK_THROWS_AS(pose.validate(), std::invalid_argument);
}

TEST_CASE("sample_ray: midpoints, exact partition, jitter bins") {
    Ray ray;
    ray.origin = {0, 0, 0};
    ray.direction = {0, 0, -1};
    ray.t_near = 0.0;
    ray.t_far = 1.0;
    ray.hit = true;

    RenderSettings s;
    s.samples_per_ray = 4;
    s.stratified_jitter = false;
    RaySamples out = sample_ray(ray, s);
    CHECK(out.t == std::vector<double>{0.125, 0.375, 0.625, 0.875});
    for (double d : out.delta) CHECK(d == 0.25);

    // Exact partition for arbitrary ranges and counts.
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        ray.t_near = rng.uniform(0.0, 5.0);
        ray.t_far = ray.t_near + rng.uniform(1e-6, 10.0);
        s.samples_per_ray = 2 + static_cast<int>(rng.uniform_index(97));
        s.stratified_jitter = (trial % 2) != 0;
        s.seed = trial;
        out = sample_ray(ray, s, trial);
        double sum = 0.0;
        for (double d : out.delta) sum += d;
        CHECK(sum == ray.t_far - ray.t_near);
        // Each depth stays inside its own bin.
        double edge = 0.0;
        const double span = ray.t_far - ray.t_near;
        for (int i = 0; i < s.samples_per_ray; ++i) {
            const double next = edge + out.delta[i];
            CHECK(out.t[i] >= ray.t_near + edge - 1e-12);
            CHECK(out.t[i] <= ray.t_near + next + 1e-12);
            edge = next;
        }
        CHECK(edge == span);
    }

    // Reproducibility with jitter on.
    s.stratified_jitter = true;
    s.seed = 99;
    s.samples_per_ray = 16;
    RaySamples a = sample_ray(ray, s, 7);
    RaySamples b = sample_ray(ray, s, 7);
    CHECK(a.t == b.t);
    RaySamples c = sample_ray(ray, s, 8);
    CHECK(a.t != c.t);

    ray.hit = false;
    CHECK_THROWS_AS(sample_ray(ray, s), std::invalid_argument);
    ray.hit = true;
    s.samples_per_ray = 1;
    CHECK_THROWS_AS(sample_ray(ray, s), std::invalid_argument);
}

TEST_CASE("spherical harmonics: constant term, parity, orthonormality") {
    Rng rng(123);

    SUBCASE("l=0 coefficient alone is direction independent") {
        double coeffs[27] = {};
        coeffs[0] = 2.0;  // red channel
        for (int i = 0; i < 50; ++i) {
            Vec3 d = normalized({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
            ShColor c = eval_sh_color_raw(coeffs, d);
            CHECK(c.raw.x == doctest::Approx(2.0 * kY00).epsilon(1e-12));
            CHECK(c.rgb.y == 0.0);
            CHECK(c.rgb.z == 0.0);
        }
    }

    SUBCASE("all-zero coefficients give black") {
        double coeffs[27] = {};
        Vec3 c = eval_sh_color(coeffs, {0, 0, 1});
        CHECK(c.x == 0.0);
        CHECK(c.y == 0.0);
        CHECK(c.z == 0.0);
    }

    SUBCASE("even-degree terms are antipodally symmetric") {
        for (int trial = 0; trial < 20; ++trial) {
            double coeffs[27] = {};
            for (int ch = 0; ch < 3; ++ch) {
                double* c = coeffs + ch * 9;
                c[0] = rng.uniform(-1, 1);
                for (int j = 4; j < 9; ++j) c[j] = rng.uniform(-1, 1);  // l = 2 block
            }
            Vec3 d = normalized({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
            ShColor a = eval_sh_color_raw(coeffs, d);
            ShColor b = eval_sh_color_raw(coeffs, d * -1.0);
            for (int ch = 0; ch < 3; ++ch) CHECK(a.raw[ch] == doctest::Approx(b.raw[ch]).epsilon(1e-12));
        }
    }

    SUBCASE("Monte-Carlo orthonormality over 1e6 sphere samples") {
        const int n = 1000000;
        double gram[9][9] = {};
        for (int i = 0; i < n; ++i) {
            const double z = 1.0 - 2.0 * rng.uniform();
            const double phi = 2.0 * std::numbers::pi * rng.uniform();
            const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            Vec3 d{r * std::cos(phi), r * std::sin(phi), z};
            double y[9];
            eval_sh_basis(d, y);
            for (int a = 0; a < 9; ++a)
                for (int b = a; b < 9; ++b) gram[a][b] += y[a] * y[b];
        }
        const double scale = 4.0 * std::numbers::pi / n;
        for (int a = 0; a < 9; ++a)
            for (int b = a; b < 9; ++b) {
                const double target = a == b ? 1.0 : 0.0;
                CHECK(std::abs(gram[a][b] * scale - target) < 5e-3);
            }
    }
}

TEST_CASE("composite_ea: empty space, single sample, opaque front") {
    Vec3 bg{0.3, 0.6, 0.9};
    std::vector<double> t{0.25, 0.75};
    std::vector<double> delta{0.5, 0.5};
    std::vector<Vec3> color{{1, 0, 0}, {0, 1, 0}};

    std::vector<double> sigma{0.0, 0.0};
    CompositeResult r = composite_ea(sigma, color, delta, t, 1.0, bg);
    CHECK(r.color.x == doctest::Approx(bg.x));
    CHECK(r.color.y == doctest::Approx(bg.y));
    CHECK(r.color.z == doctest::Approx(bg.z));
    CHECK(r.opacity == 0.0);

    std::vector<double> one_sigma{1.0};
    std::vector<Vec3> one_color{{1, 1, 1}};
    std::vector<double> one_delta{1.0};
    std::vector<double> one_t{0.5};
    r = composite_ea(one_sigma, one_color, one_delta, one_t, 1.0, {0, 0, 0});
    const double expect_alpha = 1.0 - std::exp(-1.0);
    CHECK(std::abs(r.opacity - expect_alpha) < 1e-15);
    CHECK(std::abs(r.color.x - expect_alpha) < 1e-15);

    std::vector<double> heavy{1e6, 1.0};
    r = composite_ea(heavy, color, delta, t, 1.0, bg);
    CHECK(std::abs(r.color.x - 1.0) < 1e-6);
    CHECK(std::abs(r.color.y - 0.0) < 1e-6);
    CHECK(std::abs(r.opacity - 1.0) < 1e-6);

    std::vector<double> bad{-0.5, 1.0};
    CHECK_THROWS_AS(composite_ea(bad, color, delta, t, 1.0, bg), std::invalid_argument);
}

TEST_CASE("composite_ea conserves weight: sum T_i alpha_i + T_final = 1") {
    // With unit colors and unit background the output is exactly the weight
    // total, so the public API exposes the conservation identity.
    Rng rng(2024);
    for (int trial = 0; trial < 2000; ++trial) {
        const int n = 1 + static_cast<int>(rng.uniform_index(64));
        std::vector<double> sigma(n), delta(n), t(n);
        std::vector<Vec3> color(n, Vec3{1, 1, 1});
        double depth = 0.0;
        for (int i = 0; i < n; ++i) {
            sigma[i] = rng.uniform(0.0, 50.0);
            delta[i] = rng.uniform(1e-4, 0.2);
            t[i] = depth + 0.5 * delta[i];
            depth += delta[i];
        }
        CompositeResult r = composite_ea(sigma, color, delta, t, depth, {1, 1, 1});
        CHECK(std::abs(r.color.x - 1.0) <= 1e-12);
    }
}

TEST_CASE("composite_ea: order sensitivity and opacity monotonicity") {
    std::vector<double> sigma{5.0, 0.5, 2.0};
    std::vector<double> delta{0.3, 0.3, 0.3};
    std::vector<double> t{0.15, 0.45, 0.75};
    std::vector<Vec3> color{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    Vec3 bg{0, 0, 0};

    CompositeResult fwd = composite_ea(sigma, color, delta, t, 0.9, bg);
    std::vector<double> sigma_rev{2.0, 0.5, 5.0};
    std::vector<Vec3> color_rev{{0, 0, 1}, {0, 1, 0}, {1, 0, 0}};
    CompositeResult rev = composite_ea(sigma_rev, color_rev, delta, t, 0.9, bg);
    CHECK(std::abs(fwd.color.x - rev.color.x) > 1e-3);  // front-to-back matters

    std::vector<double> empty{0.0, 0.0, 0.0};
    CompositeResult e1 = composite_ea(empty, color, delta, t, 0.9, bg);
    CompositeResult e2 = composite_ea(empty, color_rev, delta, t, 0.9, bg);
    CHECK(e1.color.x == e2.color.x);  // permuting zero-density samples is inert

    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> s(3);
        for (double& v : s) v = rng.uniform(0.0, 3.0);
        CompositeResult base = composite_ea(s, color, delta, t, 0.9, bg);
        const int k = static_cast<int>(rng.uniform_index(3));
        s[k] += rng.uniform(0.0, 2.0);
        CompositeResult more = composite_ea(s, color, delta, t, 0.9, bg);
        CHECK(more.opacity >= base.opacity - 1e-12);
    }
}

TEST_CASE("render_image: clipped density gives pure background; determinism") {
    FieldGrid g = smooth_radiance_grid({4, 4, 4}, 3);
    for (std::size_t v = 0; v < g.vertex_count(); ++v)
        g.values[v * kRadianceChannels + kDensityChannel] = -50.0;

    CameraPose pose = simple_camera(16, 16);
    RenderSettings s;
    s.samples_per_ray = 32;
    s.background = {0.2, 0.4, 0.6};
    RenderedImage img = render_image(g, pose, s);
    for (int p = 0; p < 16 * 16; ++p) {
        CHECK(img.rgb.values[p * 3 + 0] == 0.2);
        CHECK(img.rgb.values[p * 3 + 1] == 0.4);
        CHECK(img.rgb.values[p * 3 + 2] == 0.6);
    }

    FieldGrid g2 = smooth_radiance_grid({4, 4, 4}, 4);
    RenderedImage a = render_image(g2, pose, s);
    RenderedImage b = render_image(g2, pose, s);
    CHECK(a.rgb.values == b.rgb.values);

    FieldGrid wrong;
    wrong.rank = 3;
    wrong.dims = {2, 2, 2};
    wrong.channels = 5;
    wrong.values.assign(wrong.value_count(), 0.0);
    CHECK_THROWS_AS(render_image(wrong, pose, s), std::invalid_argument);
}

TEST_CASE("render_image: centered opaque red block") {
    FieldGrid g;
    g.rank = 3;
    g.dims = {32, 32, 32};
    g.channels = kRadianceChannels;
    g.aabb = {{-1, -1, -1}, {1, 1, 1}};
    g.values.assign(g.value_count(), 0.0);
    for (int iz = 0; iz < 32; ++iz)
        for (int iy = 0; iy < 32; ++iy)
            for (int ix = 0; ix < 32; ++ix) {
                double* p = g.vertex(ix, iy, iz);
                auto world = [&](int idx) { return -1.0 + 2.0 * idx / 31.0; };
                const bool inside = std::abs(world(ix)) < 0.35 && std::abs(world(iy)) < 0.35 &&
                                    std::abs(world(iz)) < 0.35;
                p[kDensityChannel] = inside ? 400.0 : -50.0;
                p[1] = 1.0 / kY00;  // constant red appearance; geometry from density
            }

    CameraPose pose = look_at({0, 0, 3.2}, {0, 0, 0}, {0, 1, 0}, 33, 33, 40.0);
    RenderSettings s;
    s.samples_per_ray = 256;
    s.background = {1, 1, 1};
    RenderedImage img = render_image(g, pose, s);

    const int c = 16;
    CHECK(std::abs(img.rgb.at(c, c, 0) - 1.0) < 1e-3);
    CHECK(std::abs(img.rgb.at(c, c, 1) - 0.0) < 1e-3);
    CHECK(std::abs(img.rgb.at(c, c, 2) - 0.0) < 1e-3);
    CHECK(img.rgb.at(0, 0, 0) == 1.0);
    CHECK(img.rgb.at(0, 0, 1) == 1.0);
    CHECK(img.rgb.at(32, 32, 2) == 1.0);
}

TEST_CASE("render_backward: zero upstream, finite differences, occlusion") {
    SUBCASE("zero upstream leaves the sink untouched") {
        FieldGrid g = smooth_radiance_grid({3, 3, 3}, 9);
        CameraPose pose = simple_camera(4, 4);
        RenderSettings s;
        s.samples_per_ray = 8;
        GradSink sink = GradSink::like(g);
        RasterImage up = RasterImage::create(4, 4, 3, 0.0);
        render_backward(g, pose, s, up, sink);
        for (double v : sink.values) CHECK(v == 0.0);
    }

    SUBCASE("gradient matches central finite differences") {
        FieldGrid g = smooth_radiance_grid({4, 4, 4}, 31337);
        CameraPose pose = simple_camera(8, 8);
        RenderSettings s;
        s.samples_per_ray = 16;
        s.background = {1, 1, 1};

        RasterImage up = RasterImage::create(8, 8, 3);
        Rng rng(17);
        for (double& v : up.values) v = rng.uniform(-1, 1);

        GradSink sink = GradSink::like(g);
        render_backward(g, pose, s, up, sink);

        auto objective = [&]() {
            RenderedImage img = render_image(g, pose, s);
            double acc = 0.0;
            for (std::size_t i = 0; i < img.rgb.values.size(); ++i)
                acc += up.values[i] * img.rgb.values[i];
            return acc;
        };

        const double h = 1e-3;
        Rng pick(99);
        int bad = 0;
        for (int trial = 0; trial < 300; ++trial) {
            const std::size_t idx = pick.uniform_index(g.values.size());
            const double saved = g.values[idx];
            g.values[idx] = saved + h;
            const double fp = objective();
            g.values[idx] = saved - h;
            const double fm = objective();
            g.values[idx] = saved;
            const double fd = (fp - fm) / (2.0 * h);
            const double an = sink.values[idx];
            if (std::abs(fd - an) > 1e-3 * std::max({std::abs(fd), std::abs(an), 1e-3})) ++bad;
        }
        CHECK(bad == 0);
    }

    SUBCASE("fully occluded samples contribute < 1e-9 density gradient") {
        // Opaque wall on the camera side; vertices on the far side only see
        // samples with vanishing transmittance.
        FieldGrid g = smooth_radiance_grid({9, 9, 9}, 5);
        for (int iz = 0; iz < 9; ++iz)
            for (int iy = 0; iy < 9; ++iy)
                for (int ix = 0; ix < 9; ++ix)
                    g.vertex(ix, iy, iz)[kDensityChannel] = iz >= 6 ? 4000.0 : 1.0;

        CameraPose pose = look_at({0, 0, 3}, {0, 0, 0}, {0, 1, 0}, 8, 8, 10.0);
        RenderSettings s;
        s.samples_per_ray = 128;
        GradSink sink = GradSink::like(g);
        RasterImage up = RasterImage::create(8, 8, 3, 1.0);
        render_backward(g, pose, s, up, sink);
        for (int iz = 0; iz <= 2; ++iz)
            for (int iy = 0; iy < 9; ++iy)
                for (int ix = 0; ix < 9; ++ix) {
                    const std::size_t off = g.vertex_offset(ix, iy, iz) + kDensityChannel;
                    CHECK(std::abs(sink.values[off]) < 1e-9);
                }
    }

    SUBCASE("worker count changes results only within summation tolerance") {
        FieldGrid g = smooth_radiance_grid({4, 4, 4}, 77);
        CameraPose pose = simple_camera(8, 8);
        RenderSettings s;
        s.samples_per_ray = 16;
        RasterImage up = RasterImage::create(8, 8, 3, 0.5);
        GradSink one = GradSink::like(g), two = GradSink::like(g);
        render_backward(g, pose, s, up, one, 1);
        render_backward(g, pose, s, up, two, 2);
        for (std::size_t i = 0; i < one.values.size(); ++i) {
            const double scale = std::max({std::abs(one.values[i]), std::abs(two.values[i]), 1e-9});
            CHECK(std::abs(one.values[i] - two.values[i]) / scale < 1e-6);
        }
    }
}

TEST_CASE("photometric_loss: values and gradient") {
    RasterImage a = RasterImage::create(4, 3, 3, 0.5);
    RasterImage b = a;
    PhotometricLoss pl = photometric_loss(a, b);
    CHECK(pl.mse == 0.0);

    for (double& v : b.values) v -= 0.1;
    pl = photometric_loss(a, b);
    CHECK(pl.mse == doctest::Approx(0.01).epsilon(1e-12));

    Rng rng(3);
    RasterImage r = RasterImage::create(5, 7, 3);
    RasterImage t = RasterImage::create(5, 7, 3);
    for (double& v : r.values) v = rng.uniform(0, 1);
    for (double& v : t.values) v = rng.uniform(0, 1);
    pl = photometric_loss(r, t);
    double acc = 0.0;  // independent two-pass accumulation
    for (std::size_t i = 0; i < r.values.size(); ++i)
        acc += (r.values[i] - t.values[i]) * (r.values[i] - t.values[i]);
    CHECK(std::abs(pl.mse - acc / r.values.size()) < 1e-12);
    const double inv = 1.0 / static_cast<double>(r.values.size());
    for (std::size_t i = 0; i < r.values.size(); ++i)
        CHECK(pl.grad.values[i] == doctest::Approx(2.0 * (r.values[i] - t.values[i]) * inv));

    RasterImage wrong = RasterImage::create(4, 4, 3);
    CHECK_THROWS_AS(photometric_loss(r, wrong), std::invalid_argument);
}
