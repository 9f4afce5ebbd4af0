// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "galora/autodiff.hpp"

namespace galora::num {

struct AdamWOptions {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-2;
};

/// First and second moment buffers for one parameter.
struct AdamWMoments {
    Tensor m;
    Tensor v;
};

/**
 * One AdamW update at step t (1-based) with decoupled weight decay:
 * theta <- theta * (1 - lr * wd), then theta <- theta - lr * m_hat / (sqrt(v_hat) + eps).
 * Frozen parameters are skipped. A non-finite gradient throws NonFiniteError naming the parameter.
 */
void adamw_step(Parameter& p, AdamWMoments& moments, const AdamWOptions& opt, std::size_t t);

/// AdamW over a fixed parameter list.
class AdamW {
public:
    AdamW(ParamList params, AdamWOptions options);

    void step();
    void zero_grad();

    std::size_t steps() const noexcept { return t_; }
    const AdamWOptions& options() const noexcept { return options_; }
    const ParamList& params() const noexcept { return params_; }

private:
    ParamList params_;
    std::vector<AdamWMoments> moments_;
    AdamWOptions options_;
    std::size_t t_ = 0;
};

}  // namespace galora::num
