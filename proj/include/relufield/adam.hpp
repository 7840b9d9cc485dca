// Copyright (c) 2026 relufield authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "relufield/grid.hpp"

namespace rf {

// First/second moment buffers mirroring a FieldGrid's value layout.
struct AdamState {
    std::vector<double> m1, m2;
    long long step_count = 0;
    double lr = 0.03;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState like(const FieldGrid& grid, double lr_ = 0.03, double beta1_ = 0.9,
                          double beta2_ = 0.999, double eps_ = 1e-8) {
        AdamState s;
        s.m1.assign(grid.value_count(), 0.0);
        s.m2.assign(grid.value_count(), 0.0);
        s.lr = lr_;
        s.beta1 = beta1_;
        s.beta2 = beta2_;
        s.eps = eps_;
        return s;
    }
};

// In-place Adam update with bias correction; increments step_count and
// leaves grads untouched. Throws std::invalid_argument on shape mismatch.
void adam_step(FieldGrid& grid, const GradSink& grads, AdamState& state);

}  // namespace rf
