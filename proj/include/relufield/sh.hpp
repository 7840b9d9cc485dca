// Copyright (c) 2026 relufield authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "relufield/vec.hpp"

namespace rf {

// Real spherical harmonics truncated at degree 2: 9 basis functions,
// orthonormal over the unit sphere.
inline constexpr int kShBasisSize = 9;

void eval_sh_basis(const Vec3& unit_dir, double out[kShBasisSize]);

struct ShColor {
    Vec3 rgb;  // clamped to [0,1]
    Vec3 raw;  // pre-clamp values, needed for the clamp gradient gate
};

// coeffs holds 27 values: 9 per color channel, R first. unit_dir must be
// normalized.
ShColor eval_sh_color_raw(const double* coeffs, const Vec3& unit_dir);
Vec3 eval_sh_color(const double* coeffs, const Vec3& unit_dir);

}  // namespace rf
