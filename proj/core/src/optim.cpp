// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#include "galora/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace galora::num {

void adamw_step(Parameter& p, AdamWMoments& mo, const AdamWOptions& opt, std::size_t t) {
    if (p.frozen) return;
    if (t == 0) throw std::invalid_argument("adamw_step: step counter is 1-based");
    if (!p.grad.same_shape(p.value)) {
        throw ShapeError("adamw_step: gradient of '" + p.name + "' has shape " + shape_string(p.grad.shape()));
    }
    if (!p.grad.all_finite()) throw NonFiniteError("adamw_step: non-finite gradient in '" + p.name + "'");
    if (mo.m.empty()) {
        mo.m = Tensor(p.value.shape(), 0.0);
        mo.v = Tensor(p.value.shape(), 0.0);
    }
    const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(t));
    const double decay = 1.0 - opt.lr * opt.weight_decay;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
        const double g = p.grad[i];
        mo.m[i] = opt.beta1 * mo.m[i] + (1.0 - opt.beta1) * g;
        mo.v[i] = opt.beta2 * mo.v[i] + (1.0 - opt.beta2) * g * g;
        const double m_hat = mo.m[i] / bc1;
        const double v_hat = mo.v[i] / bc2;
        p.value[i] *= decay;
        p.value[i] -= opt.lr * m_hat / (std::sqrt(v_hat) + opt.eps);
    }
}

AdamW::AdamW(ParamList params, AdamWOptions options)
    : params_(std::move(params)), moments_(params_.size()), options_(options) {}

void AdamW::step() {
    ++t_;
    for (std::size_t i = 0; i < params_.size(); ++i) adamw_step(*params_[i], moments_[i], options_, t_);
}

void AdamW::zero_grad() { zero_grads(params_); }

}  // namespace galora::num
