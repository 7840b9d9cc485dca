// Copyright (c) 2026 relufield authors
// SPDX-License-Identifier: Apache-2.0

#include "relufield/camera.hpp"

#include <cmath>
#include <stdexcept>

namespace rf {

void CameraPose::validate() const {
    if (H <= 0 || W <= 0) throw std::invalid_argument("CameraPose: non-positive image size");
    if (!(F > 0.0)) throw std::invalid_argument("CameraPose: non-positive focal length");
    if (rotation_error(R) >= 1e-6 || R.det() <= 0.0)
        throw std::invalid_argument("CameraPose: R is not a proper rotation");
}

bool intersect_aabb(const Vec3& origin, const Vec3& direction, const Aabb& box,
                    double& t_near, double& t_far) {
    double tn = -std::numeric_limits<double>::infinity();
    double tf = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        const double o = origin[a];
        const double d = direction[a];
        if (std::abs(d) < 1e-15) {
            if (o < box.lo[a] || o > box.hi[a]) return false;
            continue;
        }
        double t0 = (box.lo[a] - o) / d;
        double t1 = (box.hi[a] - o) / d;
        if (t0 > t1) std::swap(t0, t1);
        tn = std::max(tn, t0);
        tf = std::min(tf, t1);
        if (tn > tf) return false;
    }
    if (tf < 0.0) return false;
    t_near = std::max(tn, 0.0);
    t_far = tf;
    return true;
}

Ray generate_ray(const CameraPose& pose, int px, int py, const Aabb& box) {
    const double cx = (static_cast<double>(px) + 0.5 - 0.5 * pose.W) / pose.F;
    const double cy = -(static_cast<double>(py) + 0.5 - 0.5 * pose.H) / pose.F;
    const Vec3 cam_dir{cx, cy, -1.0};

    Ray ray;
    ray.origin = pose.T;
    ray.direction = normalized(pose.R * cam_dir);
    ray.hit = intersect_aabb(ray.origin, ray.direction, box, ray.t_near, ray.t_far);
    return ray;
}

double focal_from_angle_x(double camera_angle_x, int width) {
    return 0.5 * static_cast<double>(width) / std::tan(0.5 * camera_angle_x);
}

CameraPose look_at(const Vec3& eye, const Vec3& target, const Vec3& up, int width, int height,
                   double focal) {
    const Vec3 backward = normalized(eye - target);  // camera +z
    const Vec3 right = normalized(cross(up, backward));
    const Vec3 true_up = cross(backward, right);

    CameraPose pose;
    pose.R = Mat3::from_columns(right, true_up, backward);
    pose.T = eye;
    pose.W = width;
    pose.H = height;
    pose.F = focal;
    return pose;
}

}  // namespace rf
