// Copyright (c) 2026 relufield authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>

namespace rf::kernels {

// Hot inner loops, dispatched once at startup. Every entry has a scalar
// reference implementation and (on x86-64 with AVX2+FMA) a vectorized
// variant; the two are equivalence-tested against each other.
struct KernelTable {
    const char* name;

    // dst[i] += src[i]
    void (*add_inplace)(double* dst, const double* src, std::size_t n);

    // Multilinear gather as a factored lerp chain a + f*(b-a), axis 0 first.
    // corners are ordered with axis a on bit a of the corner index; rank is 2
    // (4 corners, frac[0..1]) or 3 (8 corners, frac[0..2]). The factored form
    // reproduces constant fields and vertex values exactly.
    void (*interp_gather)(double* out, const double* const* corners, const double* frac,
                          int rank, int channels);

    // sinks[k][c] += w[k] * g[c]            (adjoint of the gather)
    void (*interp_scatter)(double* const* sinks, const double* w, int ncorners,
                           const double* g, int channels);

    // Adam with precomputed bias corrections bc1 = 1/(1-b1^t), bc2 = 1/(1-b2^t):
    //   m1 = b1*m1 + (1-b1)*g
    //   m2 = b2*m2 + (1-b2)*g^2
    //   p -= lr * (m1*bc1) / (sqrt(m2*bc2) + eps)
    void (*adam_update)(double* p, double* m1, double* m2, const double* g, std::size_t n,
                        double lr, double b1, double b2, double eps, double bc1, double bc2);

    // sum((a[i]-b[i])^2)
    double (*sum_sq_diff)(const double* a, const double* b, std::size_t n);
};

const KernelTable& scalar_table();

// Null when the binary or CPU lacks AVX2/FMA support.
const KernelTable* avx2_table();

// Best table for this machine. Overridable with RELUFIELD_KERNELS=scalar|avx2
// (checked once); the choice is fixed for the lifetime of the process.
const KernelTable& active_table();

}  // namespace rf::kernels
