// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#include "galora/autodiff.hpp"

#include <numeric>
#include <stdexcept>

namespace galora::num {

Parameter::Parameter(std::string n, Tensor v, bool f)
    : name(std::move(n)), value(std::move(v)), grad(value.shape(), 0.0), frozen(f) {}

void Parameter::zero_grad() { grad.fill(0.0); }

ParamPtr make_param(std::string name, Tensor value, bool frozen) {
    return std::make_shared<Parameter>(std::move(name), std::move(value), frozen);
}

std::size_t count_scalars(std::span<const ParamPtr> params) {
    return std::accumulate(params.begin(), params.end(), std::size_t{0},
                           [](std::size_t acc, const ParamPtr& p) { return acc + p->value.size(); });
}

void set_frozen(std::span<const ParamPtr> params, bool frozen) {
    for (const auto& p : params) p->frozen = frozen;
}

void zero_grads(std::span<const ParamPtr> params) {
    for (const auto& p : params) p->zero_grad();
}

const Tensor& Var::value() const {
    if (!tape) throw std::logic_error("Var: value() on an unbound handle");
    return tape->value(*this);
}

bool Var::requires_grad() const { return tape && tape->requires_grad(*this); }

Var Tape::constant(Tensor value) {
    if (!value.all_finite()) throw NonFiniteError("constant: non-finite input");
    nodes_.push_back(Node{std::move(value), {}, false, {}, nullptr});
    return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::param(const ParamPtr& p) {
    if (auto it = param_leaves_.find(p.get()); it != param_leaves_.end()) {
        return Var{this, it->second};
    }
    if (!p->value.all_finite()) throw NonFiniteError("parameter '" + p->name + "' holds non-finite values");
    const bool rg = record_ && !p->frozen;
    nodes_.push_back(Node{Tensor{}, {}, rg, {}, p.get()});
    const auto id = static_cast<std::uint32_t>(nodes_.size() - 1);
    param_leaves_.emplace(p.get(), id);
    return Var{this, id};
}

Var Tape::push(std::string_view op, Tensor value, std::initializer_list<Var> inputs, Backward fn) {
    return push(op, std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(fn));
}

Var Tape::push(std::string_view op, Tensor value, std::span<const Var> inputs, Backward fn) {
    if (!value.all_finite()) throw NonFiniteError(std::string(op) + ": produced a non-finite value");
    bool rg = false;
    for (const Var& in : inputs) {
        if (in.tape != this) throw std::logic_error(std::string(op) + ": input recorded on a different tape");
        rg = rg || nodes_[in.id].requires_grad;
    }
    rg = rg && record_;
    nodes_.push_back(Node{std::move(value), {}, rg, rg ? std::move(fn) : Backward{}, nullptr});
    return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Tensor& Tape::grad(Var v) {
    Node& n = nodes_[v.id];
    if (n.grad.empty()) n.grad = Tensor(value(v).shape(), 0.0);
    return n.grad;
}

void Tape::backward(Var loss) {
    if (loss.tape != this || nodes_.empty()) {
        throw std::logic_error("backward: no recorded forward pass for this loss");
    }
    const Tensor& lv = value(loss);
    if (lv.size() != 1) throw ShapeError("backward: loss must be a scalar, got " + shape_string(lv.shape()));
    if (!nodes_[loss.id].requires_grad) return;  // nothing trainable upstream

    grad(loss)[0] = 1.0;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.requires_grad || n.grad.empty()) continue;
        if (n.backward) {
            n.backward(*this, n.grad);
        } else if (n.param) {
            Tensor& pg = n.param->grad;
            if (pg.empty() || !pg.same_shape(n.param->value)) pg = Tensor(n.param->value.shape(), 0.0);
            for (std::size_t j = 0; j < pg.size(); ++j) pg[j] += n.grad[j];
        }
    }
}

}  // namespace galora::num
