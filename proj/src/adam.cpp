// Copyright (c) 2026 relufield authors
// SPDX-License-Identifier: Apache-2.0

#include "relufield/adam.hpp"

#include <cmath>
#include <stdexcept>

#include "relufield/kernels.hpp"

namespace rf {

void adam_step(FieldGrid& grid, const GradSink& grads, AdamState& state) {
    if (!grads.shape_matches(grid))
        throw std::invalid_argument("adam_step: gradient shape does not match grid");
    if (state.m1.size() != grid.value_count() || state.m2.size() != grid.value_count())
        throw std::invalid_argument("adam_step: state shape does not match grid");
    if (state.step_count < 0) throw std::invalid_argument("adam_step: negative step count");

    state.step_count += 1;
    const double t = static_cast<double>(state.step_count);
    const double bc1 = 1.0 / (1.0 - std::pow(state.beta1, t));
    const double bc2 = 1.0 / (1.0 - std::pow(state.beta2, t));
    kernels::active_table().adam_update(grid.values.data(), state.m1.data(), state.m2.data(),
                                        grads.values.data(), grid.value_count(), state.lr,
                                        state.beta1, state.beta2, state.eps, bc1, bc2);
}

}  // namespace rf
