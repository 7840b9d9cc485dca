// Copyright (c) 2026 relufield authors
// SPDX-License-Identifier: Apache-2.0
//
// AVX2+FMA variants of the inner loops, 4 doubles per lane. This file is the
// only translation unit compiled with -mavx2 -mfma; callers must go through
// avx2_table() so the code never runs on CPUs without these extensions.

#include "relufield/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cmath>

namespace rf::kernels {

namespace {

void add_inplace_avx2(double* dst, const double* src, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d d = _mm256_loadu_pd(dst + i);
        __m256d s = _mm256_loadu_pd(src + i);
        _mm256_storeu_pd(dst + i, _mm256_add_pd(d, s));
    }
    for (; i < n; ++i) dst[i] += src[i];
}

inline double lerp1(double a, double b, double f) { return a + f * (b - a); }

// a + f*(b-a)
inline __m256d lerp4(__m256d a, __m256d b, __m256d f) {
    return _mm256_fmadd_pd(f, _mm256_sub_pd(b, a), a);
}

void interp_gather_avx2(double* out, const double* const* corners, const double* frac,
                        int rank, int channels) {
    const __m256d fx = _mm256_set1_pd(frac[0]);
    const __m256d fy = _mm256_set1_pd(frac[1]);
    int c = 0;
    if (rank == 2) {
        for (; c + 4 <= channels; c += 4) {
            __m256d y0 = lerp4(_mm256_loadu_pd(corners[0] + c), _mm256_loadu_pd(corners[1] + c), fx);
            __m256d y1 = lerp4(_mm256_loadu_pd(corners[2] + c), _mm256_loadu_pd(corners[3] + c), fx);
            _mm256_storeu_pd(out + c, lerp4(y0, y1, fy));
        }
        for (; c < channels; ++c) {
            double y0 = lerp1(corners[0][c], corners[1][c], frac[0]);
            double y1 = lerp1(corners[2][c], corners[3][c], frac[0]);
            out[c] = lerp1(y0, y1, frac[1]);
        }
        return;
    }
    const __m256d fz = _mm256_set1_pd(frac[2]);
    for (; c + 4 <= channels; c += 4) {
        __m256d y00 = lerp4(_mm256_loadu_pd(corners[0] + c), _mm256_loadu_pd(corners[1] + c), fx);
        __m256d y10 = lerp4(_mm256_loadu_pd(corners[2] + c), _mm256_loadu_pd(corners[3] + c), fx);
        __m256d y01 = lerp4(_mm256_loadu_pd(corners[4] + c), _mm256_loadu_pd(corners[5] + c), fx);
        __m256d y11 = lerp4(_mm256_loadu_pd(corners[6] + c), _mm256_loadu_pd(corners[7] + c), fx);
        __m256d y0 = lerp4(y00, y10, fy);
        __m256d y1 = lerp4(y01, y11, fy);
        _mm256_storeu_pd(out + c, lerp4(y0, y1, fz));
    }
    for (; c < channels; ++c) {
        double y00 = lerp1(corners[0][c], corners[1][c], frac[0]);
        double y10 = lerp1(corners[2][c], corners[3][c], frac[0]);
        double y01 = lerp1(corners[4][c], corners[5][c], frac[0]);
        double y11 = lerp1(corners[6][c], corners[7][c], frac[0]);
        double y0 = lerp1(y00, y10, frac[1]);
        double y1 = lerp1(y01, y11, frac[1]);
        out[c] = lerp1(y0, y1, frac[2]);
    }
}

void interp_scatter_avx2(double* const* sinks, const double* w, int ncorners,
                         const double* g, int channels) {
    for (int k = 0; k < ncorners; ++k) {
        double* dst = sinks[k];
        __m256d wk = _mm256_set1_pd(w[k]);
        int c = 0;
        for (; c + 4 <= channels; c += 4) {
            __m256d d = _mm256_loadu_pd(dst + c);
            __m256d gv = _mm256_loadu_pd(g + c);
            _mm256_storeu_pd(dst + c, _mm256_fmadd_pd(wk, gv, d));
        }
        for (; c < channels; ++c) dst[c] += w[k] * g[c];
    }
}

void adam_update_avx2(double* p, double* m1, double* m2, const double* g, std::size_t n,
                      double lr, double b1, double b2, double eps, double bc1, double bc2) {
    const __m256d vb1 = _mm256_set1_pd(b1);
    const __m256d vb2 = _mm256_set1_pd(b2);
    const __m256d vc1 = _mm256_set1_pd(1.0 - b1);
    const __m256d vc2 = _mm256_set1_pd(1.0 - b2);
    const __m256d vlr = _mm256_set1_pd(lr);
    const __m256d veps = _mm256_set1_pd(eps);
    const __m256d vbc1 = _mm256_set1_pd(bc1);
    const __m256d vbc2 = _mm256_set1_pd(bc2);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d gi = _mm256_loadu_pd(g + i);
        __m256d a = _mm256_fmadd_pd(vb1, _mm256_loadu_pd(m1 + i), _mm256_mul_pd(vc1, gi));
        __m256d b = _mm256_fmadd_pd(vb2, _mm256_loadu_pd(m2 + i),
                                    _mm256_mul_pd(vc2, _mm256_mul_pd(gi, gi)));
        _mm256_storeu_pd(m1 + i, a);
        _mm256_storeu_pd(m2 + i, b);
        __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(_mm256_mul_pd(b, vbc2)), veps);
        __m256d step = _mm256_div_pd(_mm256_mul_pd(vlr, _mm256_mul_pd(a, vbc1)), denom);
        _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), step));
    }
    for (; i < n; ++i) {
        const double gi = g[i];
        const double a = b1 * m1[i] + (1.0 - b1) * gi;
        const double b = b2 * m2[i] + (1.0 - b2) * gi * gi;
        m1[i] = a;
        m2[i] = b;
        p[i] -= lr * (a * bc1) / (std::sqrt(b * bc2) + eps);
    }
}

double sum_sq_diff_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double lanes[4];
    _mm256_storeu_pd(lanes, acc);
    double total = lanes[0] + lanes[1] + lanes[2] + lanes[3];
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        total += d * d;
    }
    return total;
}

}  // namespace

const KernelTable* avx2_table() {
    static const KernelTable table{
        "avx2",
        add_inplace_avx2,
        interp_gather_avx2,
        interp_scatter_avx2,
        adam_update_avx2,
        sum_sq_diff_avx2,
    };
    return &table;
}

}  // namespace rf::kernels

#else

namespace rf::kernels {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace rf::kernels

#endif
