// Copyright (c) 2026 relufield authors
// SPDX-License-Identifier: Apache-2.0

#include "relufield/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace rf::kernels {

namespace {

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable& pick_table() {
    const char* forced = std::getenv("RELUFIELD_KERNELS");
    if (forced != nullptr) {
        if (std::strcmp(forced, "scalar") == 0) return scalar_table();
        if (std::strcmp(forced, "avx2") == 0 && avx2_table() != nullptr && cpu_has_avx2_fma())
            return *avx2_table();
        // Unknown or unusable request falls back to autodetection.
    }
    if (avx2_table() != nullptr && cpu_has_avx2_fma()) return *avx2_table();
    return scalar_table();
}

}  // namespace

const KernelTable& active_table() {
    static const KernelTable& table = pick_table();
    return table;
}

}  // namespace rf::kernels
