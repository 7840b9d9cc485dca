// Copyright (c) 2026 relufield authors
// SPDX-License-Identifier: Apache-2.0

#include "relufield/occupancy.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "relufield/render.hpp"
#include "relufield/rng.hpp"
#include "relufield/threading.hpp"

namespace rf {

Aabb TriangleMesh::bounds() const {
    Aabb box{{1e300, 1e300, 1e300}, {-1e300, -1e300, -1e300}};
    for (const Vec3& v : vertices) box.expand(v);
    return box;
}

TriangleMesh load_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_obj: cannot open '" + path + "'");
    TriangleMesh mesh;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag)) continue;
        if (tag == "v") {
            Vec3 v;
            if (!(ls >> v.x >> v.y >> v.z))
                throw std::runtime_error("load_obj: malformed vertex on line " + std::to_string(lineno));
            mesh.vertices.push_back(v);
        } else if (tag == "f") {
            std::vector<int> face;
            std::string item;
            while (ls >> item) {
                // "i", "i/t", "i/t/n", "i//n" all start with the vertex index.
                const int idx = std::stoi(item.substr(0, item.find('/')));
                const int resolved = idx > 0 ? idx - 1 : static_cast<int>(mesh.vertices.size()) + idx;
                if (resolved < 0 || resolved >= static_cast<int>(mesh.vertices.size()))
                    throw std::runtime_error("load_obj: face index out of range on line " +
                                             std::to_string(lineno));
                face.push_back(resolved);
            }
            if (face.size() < 3)
                throw std::runtime_error("load_obj: face with < 3 vertices on line " +
                                         std::to_string(lineno));
            for (std::size_t k = 2; k < face.size(); ++k)
                mesh.triangles.push_back({face[0], face[k - 1], face[k]});
        }
        // Everything else (vn, vt, usemtl, comments) is ignored.
    }
    return mesh;
}

void save_obj(const std::string& path, const TriangleMesh& mesh) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_obj: cannot open '" + path + "'");
    char buf[128];
    for (const Vec3& v : mesh.vertices) {
        std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n", v.x, v.y, v.z);
        out << buf;
    }
    for (const auto& t : mesh.triangles)
        out << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
}

void validate_mesh(TriangleMesh& mesh) {
    const Aabb box = mesh.bounds();
    const double scale = norm(box.extent());
    const double area_eps = 1e-14 * scale * scale;

    std::vector<std::array<int, 3>> kept;
    kept.reserve(mesh.triangles.size());
    for (const auto& t : mesh.triangles) {
        const Vec3 e1 = mesh.vertices[t[1]] - mesh.vertices[t[0]];
        const Vec3 e2 = mesh.vertices[t[2]] - mesh.vertices[t[0]];
        if (norm(cross(e1, e2)) * 0.5 > area_eps) kept.push_back(t);
    }
    mesh.triangles = std::move(kept);
    if (mesh.triangles.empty()) throw std::invalid_argument("validate_mesh: no usable triangles");

    std::map<std::pair<int, int>, int> directed;
    for (const auto& t : mesh.triangles)
        for (int k = 0; k < 3; ++k) {
            const int a = t[k], b = t[(k + 1) % 3];
            if (a == b) throw std::invalid_argument("validate_mesh: degenerate edge");
            directed[{a, b}] += 1;
        }
    for (const auto& [edge, count] : directed) {
        if (count != 1)
            throw std::invalid_argument("validate_mesh: inconsistently oriented or non-manifold edge");
        auto rev = directed.find({edge.second, edge.first});
        if (rev == directed.end())
            throw std::invalid_argument("validate_mesh: open boundary edge; mesh is not watertight");
    }
}

namespace {

constexpr double kParityEps = 1e-9;

// Moller-Trumbore crossing test along an unbounded ray (t > 0).
// Returns 1 on a clean crossing, 0 on a clean miss; sets ambiguous when the
// answer depends on an edge/vertex graze or an in-plane ray.
int triangle_crossing(const Vec3& o, const Vec3& d, const Vec3& v0, const Vec3& v1,
                      const Vec3& v2, bool& ambiguous) {
    const Vec3 e1 = v1 - v0;
    const Vec3 e2 = v2 - v0;
    const Vec3 pvec = cross(d, e2);
    const double det = dot(e1, pvec);
    if (std::abs(det) < 1e-14) {
        // Parallel; only degenerate if the ray lies in the triangle plane
        // near the triangle.
        const Vec3 n = cross(e1, e2);
        const double dist = dot(n, o - v0);
        if (std::abs(dist) < kParityEps * norm(n)) ambiguous = true;
        return 0;
    }
    const double inv = 1.0 / det;
    const Vec3 tvec = o - v0;
    const double u = dot(tvec, pvec) * inv;
    const Vec3 qvec = cross(tvec, e1);
    const double v = dot(d, qvec) * inv;
    const double w = 1.0 - u - v;
    const double t = dot(e2, qvec) * inv;

    const bool inside = u > 0.0 && v > 0.0 && w > 0.0 && t > 0.0;
    const bool near_edge = std::abs(u) < kParityEps || std::abs(v) < kParityEps ||
                           std::abs(w) < kParityEps || std::abs(t) < kParityEps;
    if (near_edge && (inside || (u > -kParityEps && v > -kParityEps && w > -kParityEps &&
                                 t > -kParityEps))) {
        ambiguous = true;
        return 0;
    }
    return inside ? 1 : 0;
}

bool ray_box(const Vec3& o, const Vec3& d, const Aabb& box) {
    double tn = -std::numeric_limits<double>::infinity();
    double tf = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        if (std::abs(d[a]) < 1e-300) {
            if (o[a] < box.lo[a] || o[a] > box.hi[a]) return false;
            continue;
        }
        double t0 = (box.lo[a] - o[a]) / d[a];
        double t1 = (box.hi[a] - o[a]) / d[a];
        if (t0 > t1) std::swap(t0, t1);
        tn = std::max(tn, t0);
        tf = std::min(tf, t1);
        if (tn > tf) return false;
    }
    return tf >= 0.0;
}

Vec3 unit_from_bits(std::uint64_t bits) {
    const double z = 1.0 - 2.0 * to_unit_double(mix64(bits, 0x5eed));
    const double phi = 2.0 * std::numbers::pi * to_unit_double(mix64(bits, 0xa2f1));
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {r * std::cos(phi), r * std::sin(phi), z};
}

std::uint64_t vec_bits(const Vec3& v) {
    std::uint64_t x, y, z;
    static_assert(sizeof(double) == sizeof(std::uint64_t));
    std::memcpy(&x, &v.x, 8);
    std::memcpy(&y, &v.y, 8);
    std::memcpy(&z, &v.z, 8);
    return mix64(x, y, z);
}

}  // namespace

TriangleBvh::TriangleBvh(const TriangleMesh& mesh) : mesh_(mesh) {
    if (mesh.triangles.empty()) throw std::invalid_argument("TriangleBvh: empty mesh");
    order_.resize(mesh.triangles.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<int>(i);
    nodes_.reserve(2 * order_.size());
    build(order_, 0, static_cast<int>(order_.size()), 0);
    bounds_ = nodes_[0].box;
}

int TriangleBvh::build(std::vector<int>& items, int begin, int end, int depth) {
    Node node;
    node.box = {{1e300, 1e300, 1e300}, {-1e300, -1e300, -1e300}};
    for (int i = begin; i < end; ++i)
        for (int k = 0; k < 3; ++k) node.box.expand(mesh_.vertices[mesh_.triangles[items[i]][k]]);

    const int index = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    if (end - begin <= 4 || depth > 48) {
        nodes_[index].first = begin;
        nodes_[index].count = end - begin;
        return index;
    }

    const Vec3 ext = node.box.extent();
    int axis = 0;
    if (ext.y > ext.x) axis = 1;
    if (ext.z > ext[axis]) axis = 2;
    const int mid = (begin + end) / 2;
    std::nth_element(items.begin() + begin, items.begin() + mid, items.begin() + end,
                     [&](int a, int b) {
                         const auto& ta = mesh_.triangles[a];
                         const auto& tb = mesh_.triangles[b];
                         double ca = 0.0, cb = 0.0;
                         for (int k = 0; k < 3; ++k) {
                             ca += mesh_.vertices[ta[k]][axis];
                             cb += mesh_.vertices[tb[k]][axis];
                         }
                         return ca < cb;
                     });
    const int left = build(items, begin, mid, depth + 1);
    const int right = build(items, mid, end, depth + 1);
    nodes_[index].left = left;
    nodes_[index].right = right;
    nodes_[index].count = 0;
    return index;
}

int TriangleBvh::count_crossings(const Vec3& origin, const Vec3& dir, bool& ambiguous) const {
    ambiguous = false;
    int count = 0;
    int stack[64];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
        const Node& node = nodes_[stack[--top]];
        if (!ray_box(origin, dir, node.box)) continue;
        if (node.count > 0) {
            for (int i = node.first; i < node.first + node.count; ++i) {
                const auto& t = mesh_.triangles[order_[i]];
                count += triangle_crossing(origin, dir, mesh_.vertices[t[0]], mesh_.vertices[t[1]],
                                           mesh_.vertices[t[2]], ambiguous);
                if (ambiguous) return 0;
            }
        } else {
            stack[top++] = node.left;
            stack[top++] = node.right;
        }
    }
    return count;
}

bool parity_inside(const TriangleBvh& bvh, const Vec3& x, const Vec3& dir, bool& ambiguous) {
    const int crossings = bvh.count_crossings(x, dir, ambiguous);
    return !ambiguous && (crossings % 2 == 1);
}

int point_in_mesh(const TriangleBvh& bvh, const Vec3& x, std::uint64_t seed) {
    if (!bvh.bounds().contains(x)) return 0;
    for (int attempt = 0; attempt < 8; ++attempt) {
        const Vec3 dir = unit_from_bits(mix64(seed, vec_bits(x), static_cast<std::uint64_t>(attempt)));
        bool ambiguous = false;
        const bool inside = parity_inside(bvh, x, dir, ambiguous);
        if (!ambiguous) return inside ? 1 : 0;
    }
    throw std::runtime_error("point_in_mesh: degenerate parity casts exhausted retries");
}

std::vector<OccupancySample> sample_training_points(const TriangleBvh& bvh, int count,
                                                    std::uint64_t seed, double dilation,
                                                    int threads) {
    if (count <= 0) throw std::invalid_argument("sample_training_points: count must be positive");
    const Aabb box = bvh.bounds().dilated(dilation);

    std::vector<OccupancySample> out(static_cast<std::size_t>(count));
    Rng rng(seed);
    for (auto& s : out) {
        s.position = {rng.uniform(box.lo.x, box.hi.x), rng.uniform(box.lo.y, box.hi.y),
                      rng.uniform(box.lo.z, box.hi.z)};
    }
    // Labels are pure functions of (seed, position): thread-count invariant.
    parallel_chunks(out.size(), threads, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
            out[i].label = point_in_mesh(bvh, out[i].position, seed);
    });
    return out;
}

BceResult bce_loss(double p, int label) {
    constexpr double kEps = 1e-7;
    const double q = std::clamp(p, kEps, 1.0 - kEps);
    BceResult r;
    if (label == 1) {
        r.loss = -std::log(q);
        r.dloss_dp = -1.0 / q;
    } else {
        r.loss = -std::log(1.0 - q);
        r.dloss_dp = 1.0 / (1.0 - q);
    }
    return r;
}

FetchMode occupancy_fetch_mode(const std::string& mode) {
    return mode == "none" ? FetchMode::None : FetchMode::TanhThenRelu;
}

FieldGrid fit_occupancy(const TriangleMesh& mesh, const TrainConfig& cfg, const RunHooks& hooks) {
    TriangleMesh validated = mesh;
    validate_mesh(validated);
    const TriangleBvh bvh(validated);

    TrainConfig local = cfg;
    local.aabb = bvh.bounds();  // tight fit around the mesh

    ProgressiveSchedule sched;
    sched.rank = 3;
    sched.start_shrink_exponent = cfg.start_shrink_exponent;
    sched.iters_per_stage = cfg.stage_iters;
    sched.final_dims = cfg.dims;

    const FetchMode mode = occupancy_fetch_mode(cfg.mode);
    const int threads = std::max(1, cfg.threads);
    const int batch = cfg.batch_points;

    FitTask task = [&, mode, threads, batch](FieldGrid& g, GradSink& sink,
                                             const StageInfo& info) -> double {
        const std::uint64_t batch_seed = mix64(cfg.seed, 0x0cc7, info.global_iter);
        const auto samples = sample_training_points(bvh, batch, batch_seed, 0.10, threads);
        const double inv = 1.0 / static_cast<double>(batch);

        std::vector<double> partial_loss(static_cast<std::size_t>(threads), 0.0);
        std::vector<GradSink> partial(threads > 1 ? static_cast<std::size_t>(threads) - 1 : 0);
        parallel_chunks(samples.size(), threads,
                        [&](std::size_t worker, std::size_t begin, std::size_t end) {
                            GradSink* local_sink = &sink;
                            if (worker > 0) {
                                partial[worker - 1] = GradSink::like(g);
                                local_sink = &partial[worker - 1];
                            }
                            double acc = 0.0;
                            double pred;
                            double up;
                            for (std::size_t i = begin; i < end; ++i) {
                                const Vec3 gp = world_to_grid(g, samples[i].position);
                                fetch(g, mode, gp, {&pred, 1});
                                // tanh-interp-ReLU stays in [0,1); clamp is a
                                // safety net for the plain baseline.
                                const double q = std::min(pred, 1.0);
                                const BceResult bce = bce_loss(q, samples[i].label);
                                acc += bce.loss;
                                up = bce.dloss_dp * inv;
                                fetch_backward(g, mode, gp, {&up, 1}, *local_sink);
                            }
                            partial_loss[worker] = acc;
                        });
        for (const GradSink& s : partial)
            if (!s.values.empty()) sink.accumulate(s);
        double loss = 0.0;
        for (double l : partial_loss) loss += l;
        return loss * inv;
    };

    RunHooks run_hooks = hooks;
    if (mode == FetchMode::None) {
        auto user_post = hooks.post_step;
        run_hooks.post_step = [user_post](FieldGrid& g) {
            for (double& v : g.values) v = std::clamp(v, 0.0, 1.0);
            if (user_post) user_post(g);
        };
    }

    return run_progressive(task, sched, local, 1, run_hooks);
}

OccupancyPredicate field_predicate(const FieldGrid& grid, FetchMode mode, double threshold) {
    return [&grid, mode, threshold](const Vec3& world) {
        double v;
        fetch(grid, mode, world_to_grid(grid, world), {&v, 1});
        return v >= threshold;
    };
}

double volumetric_iou(const OccupancyPredicate& a, const OccupancyPredicate& b, const Aabb& box,
                      long long mc_samples, std::uint64_t seed) {
    Rng rng(seed);
    long long inter = 0, uni = 0;
    for (long long i = 0; i < mc_samples; ++i) {
        const Vec3 p{rng.uniform(box.lo.x, box.hi.x), rng.uniform(box.lo.y, box.hi.y),
                     rng.uniform(box.lo.z, box.hi.z)};
        const bool in_a = a(p);
        const bool in_b = b(p);
        inter += (in_a && in_b) ? 1 : 0;
        uni += (in_a || in_b) ? 1 : 0;
    }
    if (uni == 0) throw std::runtime_error("volumetric_iou: union has measure zero");
    return static_cast<double>(inter) / static_cast<double>(uni);
}

DepthImage render_occupancy_depth(const FieldGrid& grid, FetchMode mode, const CameraPose& pose,
                                  int samples_per_ray, int threads) {
    if (grid.rank != 3 || grid.channels != 1)
        throw std::invalid_argument("render_occupancy_depth: expected a 1-channel 3D grid");

    DepthImage out;
    out.width = pose.W;
    out.height = pose.H;
    const std::size_t npix = static_cast<std::size_t>(pose.W) * pose.H;
    out.depth.assign(npix, 0.0);
    out.hit.assign(npix, 0);
    out.t_lo = std::numeric_limits<double>::infinity();
    out.t_hi = 0.0;

    RenderSettings s;
    s.samples_per_ray = samples_per_ray;
    s.stratified_jitter = false;

    std::vector<double> range_lo(static_cast<std::size_t>(std::max(threads, 1)),
                                 std::numeric_limits<double>::infinity());
    std::vector<double> range_hi(static_cast<std::size_t>(std::max(threads, 1)), 0.0);

    parallel_chunks(npix, threads, [&](std::size_t worker, std::size_t begin, std::size_t end) {
        double value;
        for (std::size_t p = begin; p < end; ++p) {
            const int px = static_cast<int>(p % pose.W);
            const int py = static_cast<int>(p / pose.W);
            const Ray ray = generate_ray(pose, px, py, grid.aabb);
            if (!ray.hit) continue;
            range_lo[worker] = std::min(range_lo[worker], ray.t_near);
            range_hi[worker] = std::max(range_hi[worker], ray.t_far);
            const RaySamples samples = sample_ray(ray, s, p);
            for (int i = 0; i < samples_per_ray; ++i) {
                const Vec3 world = ray.origin + samples.t[i] * ray.direction;
                fetch(grid, mode, world_to_grid(grid, world), {&value, 1});
                if (value >= 0.5) {
                    out.depth[p] = samples.t[i];
                    out.hit[p] = 1;
                    break;
                }
            }
        }
    });
    for (double v : range_lo) out.t_lo = std::min(out.t_lo, v);
    for (double v : range_hi) out.t_hi = std::max(out.t_hi, v);
    if (!std::isfinite(out.t_lo)) out.t_lo = 0.0;
    return out;
}

TriangleMesh make_icosphere(double radius, int subdivisions, const Vec3& center) {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> verts = {
        {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
        {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
        {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
    std::vector<std::array<int, 3>> faces = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
        {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
        {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};

    for (Vec3& v : verts) v = normalized(v);
    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            const int idx = static_cast<int>(verts.size());
            verts.push_back(normalized((verts[a] + verts[b]) * 0.5));
            midpoint[key] = idx;
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(faces.size() * 4);
        for (const auto& f : faces) {
            const int ab = mid(f[0], f[1]);
            const int bc = mid(f[1], f[2]);
            const int ca = mid(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        faces = std::move(next);
    }

    TriangleMesh mesh;
    mesh.vertices.reserve(verts.size());
    for (const Vec3& v : verts) mesh.vertices.push_back(center + v * radius);
    mesh.triangles = std::move(faces);
    return mesh;
}

TriangleMesh make_box_mesh(const Aabb& box) {
    TriangleMesh mesh;
    for (int k = 0; k < 8; ++k)
        mesh.vertices.push_back({(k & 1) ? box.hi.x : box.lo.x, (k & 2) ? box.hi.y : box.lo.y,
                                 (k & 4) ? box.hi.z : box.lo.z});
    // Outward-facing, consistently wound quads split into triangles.
    const int quads[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4},
                             {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
    for (const auto& q : quads) {
        mesh.triangles.push_back({q[0], q[1], q[2]});
        mesh.triangles.push_back({q[0], q[2], q[3]});
    }
    return mesh;
}

}  // namespace rf
