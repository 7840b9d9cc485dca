// Copyright (c) 2026 relufield authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace rf {

// Runs the embedded oracle suite, printing one PASS/FAIL line per check.
// Returns 0 when every check passes, 2 otherwise. perturb_sh injects a
// deliberate error into the SH orthonormality check (negative control).
int run_selfcheck(bool perturb_sh);

}  // namespace rf
