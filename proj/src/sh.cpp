// Copyright (c) 2026 relufield authors
// SPDX-License-Identifier: Apache-2.0

#include "relufield/sh.hpp"

#include <algorithm>

namespace rf {

namespace {
// Orthonormal real-SH constants.
constexpr double kC0 = 0.28209479177387814;  // 1/(2 sqrt(pi))
constexpr double kC1 = 0.4886025119029199;   // sqrt(3/(4 pi))
constexpr double kC2a = 1.0925484305920792;  // sqrt(15/(4 pi))
constexpr double kC2b = 0.31539156525252005; // sqrt(5/(16 pi))
constexpr double kC2c = 0.5462742152960396;  // sqrt(15/(16 pi))
}  // namespace

void eval_sh_basis(const Vec3& d, double out[kShBasisSize]) {
    out[0] = kC0;
    out[1] = kC1 * d.y;
    out[2] = kC1 * d.z;
    out[3] = kC1 * d.x;
    out[4] = kC2a * d.x * d.y;
    out[5] = kC2a * d.y * d.z;
    out[6] = kC2b * (3.0 * d.z * d.z - 1.0);
    out[7] = kC2a * d.x * d.z;
    out[8] = kC2c * (d.x * d.x - d.y * d.y);
}

ShColor eval_sh_color_raw(const double* coeffs, const Vec3& unit_dir) {
    double basis[kShBasisSize];
    eval_sh_basis(unit_dir, basis);

    ShColor out;
    for (int ch = 0; ch < 3; ++ch) {
        const double* c = coeffs + ch * kShBasisSize;
        double v = 0.0;
        for (int j = 0; j < kShBasisSize; ++j) v += c[j] * basis[j];
        out.raw[ch] = v;
        out.rgb[ch] = std::clamp(v, 0.0, 1.0);
    }
    return out;
}

Vec3 eval_sh_color(const double* coeffs, const Vec3& unit_dir) {
    return eval_sh_color_raw(coeffs, unit_dir).rgb;
}

}  // namespace rf
