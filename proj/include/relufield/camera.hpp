// Copyright (c) 2026 relufield authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "relufield/vec.hpp"

namespace rf {

// Pinhole camera: R rotates camera space to world space, T is the camera
// position, F is the focal length in pixels. Camera space looks down -z
// with x right and y up; pixel centers sit at +0.5.
struct CameraPose {
    Mat3 R;
    Vec3 T;
    int H = 0;
    int W = 0;
    double F = 0.0;

    // Throws std::invalid_argument when R is not a proper rotation
    // (tolerance 1e-6) or H/W/F are non-positive.
    void validate() const;
};

struct Ray {
    Vec3 origin;
    Vec3 direction;       // unit length
    double t_near = 0.0;  // entry distance against the grid aabb
    double t_far = 0.0;   // exit distance
    bool hit = false;
};

// Camera ray through pixel (px, py) with slab intersection against box.
// t_near is clamped to 0 for origins inside the box; hit is false when the
// ray misses.
Ray generate_ray(const CameraPose& pose, int px, int py, const Aabb& box);

// Slab test against an axis-aligned box; returns false on miss.
bool intersect_aabb(const Vec3& origin, const Vec3& direction, const Aabb& box,
                    double& t_near, double& t_far);

// Blender-style horizontal field of view to focal length in pixels.
double focal_from_angle_x(double camera_angle_x, int width);

// Convenience for synthetic datasets: camera at `eye` looking at `target`
// with +y-ish up vector, in the look-down--z convention.
CameraPose look_at(const Vec3& eye, const Vec3& target, const Vec3& up, int width, int height,
                   double focal);

}  // namespace rf
