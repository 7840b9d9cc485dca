// Copyright (c) 2026 relufield authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "relufield/camera.hpp"
#include "relufield/config.hpp"
#include "relufield/grid.hpp"
#include "relufield/schedule.hpp"

namespace rf {

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;

    Aabb bounds() const;
};

// ASCII OBJ with v/f records; 1-based indices, polygons fan-triangulated.
TriangleMesh load_obj(const std::string& path);
void save_obj(const std::string& path, const TriangleMesh& mesh);

// Drops zero-area triangles, then requires every directed edge to appear
// exactly once with its reverse present (watertight, consistent
// orientation). Throws std::invalid_argument otherwise.
void validate_mesh(TriangleMesh& mesh);

// Axis-aligned BVH over triangles for parity ray casts.
class TriangleBvh {
public:
    explicit TriangleBvh(const TriangleMesh& mesh);

    const Aabb& bounds() const { return bounds_; }

    // Counts triangle crossings along origin + t*dir for t > 0; sets
    // ambiguous when a hit grazes an edge/vertex or runs parallel in-plane,
    // in which case the count is unusable and the caller should re-cast.
    int count_crossings(const Vec3& origin, const Vec3& dir, bool& ambiguous) const;

private:
    struct Node {
        Aabb box;
        int left = -1, right = -1;  // internal children, or
        int first = 0, count = 0;   // leaf triangle range
    };
    int build(std::vector<int>& items, int begin, int end, int depth);

    const TriangleMesh& mesh_;
    std::vector<Node> nodes_;
    std::vector<int> order_;
    Aabb bounds_;
};

// Parity along one explicit direction; false return with ambiguous set means
// the cast was unusable.
bool parity_inside(const TriangleBvh& bvh, const Vec3& x, const Vec3& dir, bool& ambiguous);

// Ray-parity inside/outside test with AABB rejection and up to 8 re-casts on
// numerically ambiguous hits. Throws std::runtime_error when every cast is
// degenerate. Returns 1 inside, 0 outside.
int point_in_mesh(const TriangleBvh& bvh, const Vec3& x, std::uint64_t seed = 0);

struct OccupancySample {
    Vec3 position;
    int label = 0;
};

// Uniform samples over the mesh AABB dilated by `dilation` per side, labeled
// with point_in_mesh; reproducible from seed. Throws std::invalid_argument
// when count <= 0.
std::vector<OccupancySample> sample_training_points(const TriangleBvh& bvh, int count,
                                                    std::uint64_t seed, double dilation = 0.10,
                                                    int threads = 1);

struct BceResult {
    double loss = 0.0;
    double dloss_dp = 0.0;
};

// Binary cross entropy with the probability clamped to [1e-7, 1 - 1e-7]
// before the logs; the gradient uses the clamped value.
BceResult bce_loss(double p, int label);

// Fits the mesh as a volumetric occupancy probability. Mode "relu" stores
// unbounded values fetched through tanh-interpolate-ReLU; mode "none" trains
// a plain grid projected into [0,1] after every step. The grid AABB is the
// tight mesh bounding box.
FieldGrid fit_occupancy(const TriangleMesh& mesh, const TrainConfig& cfg,
                        const RunHooks& hooks = {});

// Occupancy fetch mode for a config mode string.
FetchMode occupancy_fetch_mode(const std::string& mode);

using OccupancyPredicate = std::function<bool(const Vec3&)>;

OccupancyPredicate field_predicate(const FieldGrid& grid, FetchMode mode, double threshold = 0.5);

// Monte-Carlo |A and B| / |A or B| over box. Throws std::runtime_error when
// the sampled union is empty.
double volumetric_iou(const OccupancyPredicate& a, const OccupancyPredicate& b, const Aabb& box,
                      long long mc_samples, std::uint64_t seed);

struct DepthImage {
    int width = 0, height = 0;
    std::vector<double> depth;        // world-space t of the first occupied sample
    std::vector<std::uint8_t> hit;    // 0 = sentinel / miss
    double t_lo = 0.0, t_hi = 0.0;    // image-wide depth range for encoding
};

// Marches each camera ray and records the depth of the first sample with
// occupancy >= 0.5; rays that never cross the threshold (or miss the box)
// are sentinels.
DepthImage render_occupancy_depth(const FieldGrid& grid, FetchMode mode, const CameraPose& pose,
                                  int samples_per_ray, int threads = 1);

// Test geometry.
TriangleMesh make_icosphere(double radius, int subdivisions, const Vec3& center = {0, 0, 0});
TriangleMesh make_box_mesh(const Aabb& box);

}  // namespace rf
