// Copyright (c) 2026 relufield authors
// SPDX-License-Identifier: Apache-2.0
//
// Reference kernels. Kept deliberately plain: these definitions are the
// semantics the SIMD variants are tested against.

#include "relufield/kernels.hpp"

#include <cmath>

namespace rf::kernels {

namespace {

void add_inplace_scalar(double* dst, const double* src, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] += src[i];
}

inline double lerp(double a, double b, double f) { return a + f * (b - a); }

void interp_gather_scalar(double* out, const double* const* corners, const double* frac,
                          int rank, int channels) {
    const double fx = frac[0];
    if (rank == 2) {
        const double fy = frac[1];
        for (int c = 0; c < channels; ++c) {
            const double y0 = lerp(corners[0][c], corners[1][c], fx);
            const double y1 = lerp(corners[2][c], corners[3][c], fx);
            out[c] = lerp(y0, y1, fy);
        }
        return;
    }
    const double fy = frac[1];
    const double fz = frac[2];
    for (int c = 0; c < channels; ++c) {
        const double y00 = lerp(corners[0][c], corners[1][c], fx);
        const double y10 = lerp(corners[2][c], corners[3][c], fx);
        const double y01 = lerp(corners[4][c], corners[5][c], fx);
        const double y11 = lerp(corners[6][c], corners[7][c], fx);
        const double y0 = lerp(y00, y10, fy);
        const double y1 = lerp(y01, y11, fy);
        out[c] = lerp(y0, y1, fz);
    }
}

void interp_scatter_scalar(double* const* sinks, const double* w, int ncorners,
                           const double* g, int channels) {
    for (int k = 0; k < ncorners; ++k) {
        const double wk = w[k];
        double* dst = sinks[k];
        for (int c = 0; c < channels; ++c) dst[c] += wk * g[c];
    }
}

void adam_update_scalar(double* p, double* m1, double* m2, const double* g, std::size_t n,
                        double lr, double b1, double b2, double eps, double bc1, double bc2) {
    const double c1 = 1.0 - b1;
    const double c2 = 1.0 - b2;
    for (std::size_t i = 0; i < n; ++i) {
        const double gi = g[i];
        const double a = b1 * m1[i] + c1 * gi;
        const double b = b2 * m2[i] + c2 * gi * gi;
        m1[i] = a;
        m2[i] = b;
        p[i] -= lr * (a * bc1) / (std::sqrt(b * bc2) + eps);
    }
}

double sum_sq_diff_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table{
        "scalar",
        add_inplace_scalar,
        interp_gather_scalar,
        interp_scatter_scalar,
        adam_update_scalar,
        sum_sq_diff_scalar,
    };
    return table;
}

}  // namespace rf::kernels
