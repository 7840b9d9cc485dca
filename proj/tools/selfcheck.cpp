// Copyright (c) 2026 relufield authors
// SPDX-License-Identifier: Apache-2.0
//
// Embedded oracle suite behind `relufield selfcheck`: quick numerical
// ground-truth checks runnable on any install, independent of the unit
// tests. Each check prints one PASS/FAIL row.

#include "selfcheck.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "relufield/adam.hpp"
#include "relufield/camera.hpp"
#include "relufield/config.hpp"
#include "relufield/grid.hpp"
#include "relufield/io.hpp"
#include "relufield/kernels.hpp"
#include "relufield/occupancy.hpp"
#include "relufield/radiance.hpp"
#include "relufield/render.hpp"
#include "relufield/rng.hpp"
#include "relufield/schedule.hpp"
#include "relufield/sh.hpp"

namespace rf {

namespace {

struct Check {
    std::string name;
    std::function<bool()> run;
};

FieldGrid random_grid3(std::array<int, 3> dims, int channels, std::uint64_t seed) {
    return init_uniform(3, dims, channels, {{0, 0, 0}, {1, 1, 1}}, -1.0, 1.0, seed);
}

bool check_partition_of_unity() {
    FieldGrid g = random_grid3({5, 4, 3}, 2, 1);
    g.values.assign(g.values.size(), 1.0);
    Rng rng(2);
    for (int i = 0; i < 200; ++i) {
        auto out = fetch(g, FetchMode::None,
                         {rng.uniform(-1, 5), rng.uniform(-1, 5), rng.uniform(-1, 5)});
        if (out[0] != 1.0 || out[1] != 1.0) return false;
    }
    return true;
}

bool check_vertex_exactness() {
    FieldGrid g = random_grid3({4, 4, 4}, 3, 7);
    for (int iz = 0; iz < 4; ++iz)
        for (int iy = 0; iy < 4; ++iy)
            for (int ix = 0; ix < 4; ++ix) {
                auto out = fetch(g, FetchMode::None, {double(ix), double(iy), double(iz)});
                for (int c = 0; c < 3; ++c)
                    if (out[c] != g.vertex(ix, iy, iz)[c]) return false;
            }
    return true;
}

bool check_bilinear_oracle() {
    FieldGrid g = init_uniform(2, {2, 2, 1}, 1, {{0, 0, 0}, {1, 1, 1}}, -1, 1, 3);
    Rng rng(4);
    for (int i = 0; i < 200; ++i) {
        const double fx = rng.uniform(), fy = rng.uniform();
        const double expect = g.vertex(0, 0)[0] * (1 - fx) * (1 - fy) +
                              g.vertex(1, 0)[0] * fx * (1 - fy) +
                              g.vertex(0, 1)[0] * (1 - fx) * fy + g.vertex(1, 1)[0] * fx * fy;
        if (std::abs(fetch(g, FetchMode::None, {fx, fy, 0})[0] - expect) > 1e-12) return false;
    }
    return true;
}

bool check_fetch_gradient() {
    Rng rng(5);
    const double h = 1e-4;
    for (int trial = 0; trial < 200; ++trial) {
        FieldGrid g = random_grid3({3, 3, 3}, 1, rng.next_u64());
        Vec3 p{rng.uniform(0, 2), rng.uniform(0, 2), rng.uniform(0, 2)};
        const auto pre = fetch(g, FetchMode::None, p);
        if (std::abs(pre[0]) < 1e-3) continue;
        GradSink sink = GradSink::like(g);
        const double up = 1.0;
        fetch_backward(g, FetchMode::Relu, p, {&up, 1}, sink);
        const CellRef cell = resolve_cell(g, p);
        for (int k = 0; k < cell.ncorners; ++k) {
            const std::size_t idx = cell.offset[k];
            const double saved = g.values[idx];
            g.values[idx] = saved + h;
            const double fp = fetch(g, FetchMode::Relu, p)[0];
            g.values[idx] = saved - h;
            const double fm = fetch(g, FetchMode::Relu, p)[0];
            g.values[idx] = saved;
            const double fd = (fp - fm) / (2 * h);
            if (std::abs(fd - sink.values[idx]) >
                1e-5 * std::max({std::abs(fd), std::abs(sink.values[idx]), 1e-3}))
                return false;
        }
    }
    return true;
}

bool check_upsample_consistency() {
    FieldGrid g = random_grid3({4, 4, 4}, 2, 11);
    FieldGrid up = upsample2x(g);
    Rng rng(12);
    for (int i = 0; i < 200; ++i) {
        const int ix = static_cast<int>(rng.uniform_index(8));
        const int iy = static_cast<int>(rng.uniform_index(8));
        const int iz = static_cast<int>(rng.uniform_index(8));
        Vec3 src{ix * 3.0 / 7.0, iy * 3.0 / 7.0, iz * 3.0 / 7.0};
        auto expect = fetch(g, FetchMode::None, src);
        for (int c = 0; c < 2; ++c)
            if (std::abs(up.vertex(ix, iy, iz)[c] - expect[c]) > 1e-12) return false;
    }
    return true;
}

bool check_adam_reference() {
    FieldGrid g = random_grid3({4, 1, 1}, 1, 13);
    std::vector<double> p(g.values.begin(), g.values.end());
    std::vector<double> m1(p.size(), 0.0), m2(p.size(), 0.0);
    AdamState state = AdamState::like(g, 0.03);
    GradSink grads = GradSink::like(g);
    Rng rng(14);
    for (int step = 1; step <= 500; ++step) {
        for (double& v : grads.values) v = rng.uniform(-1, 1);
        adam_step(g, grads, state);
        for (std::size_t i = 0; i < p.size(); ++i) {
            m1[i] = 0.9 * m1[i] + 0.1 * grads.values[i];
            m2[i] = 0.999 * m2[i] + 0.001 * grads.values[i] * grads.values[i];
            const double mh = m1[i] / (1 - std::pow(0.9, step));
            const double vh = m2[i] / (1 - std::pow(0.999, step));
            p[i] -= 0.03 * mh / (std::sqrt(vh) + 1e-8);
        }
    }
    for (std::size_t i = 0; i < p.size(); ++i)
        if (std::abs(p[i] - g.values[i]) > 1e-10) return false;
    return true;
}

bool check_schedule_arithmetic() {
    ProgressiveSchedule s;
    s.start_shrink_exponent = 4;
    s.final_dims = {128, 128, 128};
    const auto stages = plan_stage_dims(s);
    return stages.size() == 5 && stages[0][0] == 8 && stages[4][2] == 128;
}

bool check_pinhole_oracle() {
    CameraPose pose;
    pose.W = pose.H = 4;
    pose.F = 2.0;
    const Ray r = generate_ray(pose, 0, 0, {{-9, -9, -9}, {9, 9, 9}});
    const double ux = -0.75, uy = 0.75;
    const double len = std::sqrt(ux * ux + uy * uy + 1.0);
    return std::abs(r.direction.x - ux / len) < 1e-12 &&
           std::abs(r.direction.y - uy / len) < 1e-12;
}

bool check_sample_partition() {
    Ray ray;
    ray.hit = true;
    ray.direction = {0, 0, -1};
    Rng rng(15);
    for (int i = 0; i < 100; ++i) {
        ray.t_near = rng.uniform(0, 4);
        ray.t_far = ray.t_near + rng.uniform(0.1, 5.0);
        RenderSettings s;
        s.samples_per_ray = 2 + static_cast<int>(rng.uniform_index(61));
        const RaySamples out = sample_ray(ray, s, i);
        double sum = 0.0;
        for (double d : out.delta) sum += d;
        if (sum != ray.t_far - ray.t_near) return false;
    }
    return true;
}

bool check_sh_orthonormality(double constant_perturbation) {
    Rng rng(16);
    const int n = 200000;
    double gram[9][9] = {};
    for (int i = 0; i < n; ++i) {
        const double z = 1 - 2 * rng.uniform();
        const double phi = 2 * std::numbers::pi * rng.uniform();
        const double r = std::sqrt(std::max(0.0, 1 - z * z));
        double y[9];
        eval_sh_basis({r * std::cos(phi), r * std::sin(phi), z}, y);
        y[0] += constant_perturbation;  // negative-control hook
        for (int a = 0; a < 9; ++a)
            for (int b = a; b < 9; ++b) gram[a][b] += y[a] * y[b];
    }
    const double scale = 4 * std::numbers::pi / n;
    for (int a = 0; a < 9; ++a)
        for (int b = a; b < 9; ++b)
            if (std::abs(gram[a][b] * scale - (a == b ? 1.0 : 0.0)) > 1e-2) return false;
    return true;
}

bool check_sh_constant() {
    double coeffs[27] = {};
    coeffs[9] = 3.0;  // green
    const ShColor c = eval_sh_color_raw(coeffs, {0, 0, 1});
    return std::abs(c.raw.y - 3.0 * 0.28209479177387814) < 1e-14;
}

bool check_compositing_conservation() {
    Rng rng(17);
    for (int trial = 0; trial < 500; ++trial) {
        const int n = 1 + static_cast<int>(rng.uniform_index(32));
        std::vector<double> sigma(n), delta(n), t(n);
        std::vector<Vec3> color(n, Vec3{1, 1, 1});
        double depth = 0;
        for (int i = 0; i < n; ++i) {
            sigma[i] = rng.uniform(0, 40);
            delta[i] = rng.uniform(1e-4, 0.2);
            t[i] = depth + 0.5 * delta[i];
            depth += delta[i];
        }
        const CompositeResult r = composite_ea(sigma, color, delta, t, depth, {1, 1, 1});
        if (std::abs(r.color.x - 1.0) > 1e-12) return false;
    }
    return true;
}

bool check_compositing_opaque_front() {
    std::vector<double> sigma{1e6, 2.0};
    std::vector<Vec3> color{{1, 0, 0}, {0, 1, 0}};
    std::vector<double> delta{0.5, 0.5};
    std::vector<double> t{0.25, 0.75};
    const CompositeResult r = composite_ea(sigma, color, delta, t, 1.0, {0, 0, 1});
    return std::abs(r.color.x - 1.0) < 1e-6 && std::abs(r.opacity - 1.0) < 1e-6;
}

bool check_render_gradient() {
    FieldGrid g;
    g.rank = 3;
    g.dims = {3, 3, 3};
    g.channels = kRadianceChannels;
    g.aabb = {{-1, -1, -1}, {1, 1, 1}};
    g.values.resize(g.value_count());
    Rng rng(18);
    for (std::size_t v = 0; v < g.vertex_count(); ++v) {
        double* p = g.values.data() + v * kRadianceChannels;
        p[0] = rng.uniform(0.5, 1.5);
        for (int ch = 0; ch < 3; ++ch) {
            p[1 + ch * 9] = rng.uniform(1.0, 2.0);
            for (int j = 1; j < 9; ++j) p[1 + ch * 9 + j] = rng.uniform(-0.05, 0.05);
        }
    }
    const CameraPose pose = look_at({0.3, 0.2, 2.8}, {0, 0, 0}, {0, 1, 0}, 4, 4, 4.0);
    RenderSettings s;
    s.samples_per_ray = 8;
    RasterImage up = RasterImage::create(4, 4, 3);
    for (double& v : up.values) v = rng.uniform(-1, 1);
    GradSink sink = GradSink::like(g);
    render_backward(g, pose, s, up, sink);

    auto objective = [&]() {
        const RenderedImage img = render_image(g, pose, s);
        double acc = 0;
        for (std::size_t i = 0; i < img.rgb.values.size(); ++i)
            acc += up.values[i] * img.rgb.values[i];
        return acc;
    };
    const double h = 1e-3;
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t idx = rng.uniform_index(g.values.size());
        const double saved = g.values[idx];
        g.values[idx] = saved + h;
        const double fp = objective();
        g.values[idx] = saved - h;
        const double fm = objective();
        g.values[idx] = saved;
        const double fd = (fp - fm) / (2 * h);
        if (std::abs(fd - sink.values[idx]) >
            1e-3 * std::max({std::abs(fd), std::abs(sink.values[idx]), 1e-3}))
            return false;
    }
    return true;
}

bool check_bce() {
    if (std::abs(bce_loss(0.5, 1).loss - std::log(2.0)) > 1e-12) return false;
    if (bce_loss(0.3, 0).dloss_dp <= 0) return false;
    if (bce_loss(0.3, 1).dloss_dp >= 0) return false;
    const double h = 1e-6;
    const double fd = (bce_loss(0.4 + h, 1).loss - bce_loss(0.4 - h, 1).loss) / (2 * h);
    return std::abs(fd - bce_loss(0.4, 1).dloss_dp) < 1e-6;
}

bool check_parity_cube() {
    TriangleMesh cube = make_box_mesh({{0, 0, 0}, {1, 1, 1}});
    validate_mesh(cube);
    const TriangleBvh bvh(cube);
    return point_in_mesh(bvh, {0.5, 0.5, 0.5}) == 1 && point_in_mesh(bvh, {1.4, 0.5, 0.5}) == 0;
}

bool check_iou_nested() {
    auto outer = OccupancyPredicate([](const Vec3& p) {
        return p.x > 0.2 && p.x < 0.8 && p.y > 0.2 && p.y < 0.8 && p.z > 0.2 && p.z < 0.8;
    });
    auto inner = OccupancyPredicate([](const Vec3& p) {
        return p.x > 0.35 && p.x < 0.65 && p.y > 0.35 && p.y < 0.65 && p.z > 0.35 && p.z < 0.65;
    });
    const double iou = volumetric_iou(outer, inner, {{0, 0, 0}, {1, 1, 1}}, 200000, 19);
    return std::abs(iou - 0.125) < 0.01;
}

bool check_grid_roundtrip() {
    namespace fs = std::filesystem;
    const fs::path path = fs::temp_directory_path() / "relufield_selfcheck_grid.rluf";
    FieldGrid g = random_grid3({4, 3, 5}, 6, 20);
    save_grid(path.string(), g);
    const FieldGrid back = load_grid(path.string());
    fs::remove(path);
    return back.values == g.values && back.dims == g.dims;
}

bool check_config_roundtrip() {
    TrainConfig c;
    c.run_id = "selfcheck";
    c.lr = 0.0321;
    c.dims = {32, 16, 8};
    const TrainConfig d = parse_config(serialize_config(c));
    return serialize_config(d) == serialize_config(c);
}

bool check_kernel_equivalence() {
    const auto* simd = kernels::avx2_table();
    if (simd == nullptr) return true;  // nothing to compare on this machine
    const auto& ref = kernels::scalar_table();
    Rng rng(21);
    std::vector<double> a(1003), b(1003);
    for (double& v : a) v = rng.uniform(-1, 1);
    for (double& v : b) v = rng.uniform(-1, 1);
    const double ra = ref.sum_sq_diff(a.data(), b.data(), a.size());
    const double rb = simd->sum_sq_diff(a.data(), b.data(), a.size());
    return std::abs(ra - rb) <= 1e-12 * std::max(1.0, std::abs(ra));
}

}  // namespace

int run_selfcheck(bool perturb_sh) {
    const std::vector<Check> checks = {
        {"grid/partition-of-unity", check_partition_of_unity},
        {"grid/vertex-exactness", check_vertex_exactness},
        {"grid/bilinear-oracle", check_bilinear_oracle},
        {"grid/fetch-gradient-fd", check_fetch_gradient},
        {"grid/upsample-consistency", check_upsample_consistency},
        {"optim/adam-reference", check_adam_reference},
        {"optim/schedule-arithmetic", check_schedule_arithmetic},
        {"render/pinhole-oracle", check_pinhole_oracle},
        {"render/sample-partition", check_sample_partition},
        {"render/sh-orthonormality",
         [perturb_sh] { return check_sh_orthonormality(perturb_sh ? 0.05 : 0.0); }},
        {"render/sh-constant-term", check_sh_constant},
        {"render/compositing-conservation", check_compositing_conservation},
        {"render/compositing-opaque-front", check_compositing_opaque_front},
        {"render/render-gradient-fd", check_render_gradient},
        {"occupancy/bce-loss", check_bce},
        {"occupancy/parity-cube", check_parity_cube},
        {"occupancy/iou-nested-boxes", check_iou_nested},
        {"io/grid-roundtrip", check_grid_roundtrip},
        {"io/config-roundtrip", check_config_roundtrip},
        {"kernels/scalar-vs-simd", check_kernel_equivalence},
    };

    int failures = 0;
    std::printf("%-36s %s\n", "check", "result");
    for (const Check& c : checks) {
        bool ok = false;
        try {
            ok = c.run();
        } catch (const std::exception& e) {
            std::printf("%-36s FAIL (%s)\n", c.name.c_str(), e.what());
            ++failures;
            continue;
        }
        std::printf("%-36s %s\n", c.name.c_str(), ok ? "PASS" : "FAIL");
        if (!ok) ++failures;
    }
    std::printf("%d/%zu checks passed\n", static_cast<int>(checks.size()) - failures,
                checks.size());
    return failures == 0 ? 0 : 2;
}

}  // namespace rf
