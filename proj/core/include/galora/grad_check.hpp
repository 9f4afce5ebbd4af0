// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "galora/autodiff.hpp"

namespace galora::num {

struct GradCheckOptions {
    double epsilon = 1e-5;
    double tolerance = 1e-4;
    /// Tensors with more scalars than this are checked on a deterministic subsample of this size.
    std::size_t samples_per_tensor = 64;
    /// Denominator floor: |a - n| / max(|a|, |n|, floor). Keeps near-zero gradients from
    /// turning finite-difference round-off into large relative errors.
    double abs_floor = 1e-6;
    std::uint64_t seed = 0;
};

struct ParamGradCheck {
    std::string name;
    std::size_t checked = 0;
    double max_rel_error = 0.0;
    double max_abs_analytic = 0.0;
    bool passed = true;
};

struct GradCheckReport {
    std::vector<ParamGradCheck> params;
    double max_rel_error = 0.0;

    bool passed() const;
    const ParamGradCheck* find(const std::string& name) const;
};

/// Builds a scalar loss on the given tape from the current parameter values.
using LossBuilder = std::function<Var(Tape&)>;

/**
 * Compares reverse-mode gradients with central differences
 * (L(theta + eps) - L(theta - eps)) / 2 eps for every non-frozen parameter in `params`.
 * Frozen parameters are skipped and do not appear in the report.
 */
GradCheckReport grad_check(const ParamList& params, const LossBuilder& loss, const GradCheckOptions& options = {});

}  // namespace galora::num
