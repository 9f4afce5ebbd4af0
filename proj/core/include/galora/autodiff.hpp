// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "galora/tensor.hpp"

namespace galora::num {

/// A named tensor that optimizers may update. Frozen parameters never receive gradient.
struct Parameter {
    Parameter(std::string name, Tensor value, bool frozen = false);

    std::string name;
    Tensor value;
    Tensor grad;
    bool frozen = false;

    void zero_grad();
};

using ParamPtr = std::shared_ptr<Parameter>;
using ParamList = std::vector<ParamPtr>;

ParamPtr make_param(std::string name, Tensor value, bool frozen = false);
std::size_t count_scalars(std::span<const ParamPtr> params);
void set_frozen(std::span<const ParamPtr> params, bool frozen);
void zero_grads(std::span<const ParamPtr> params);

class Tape;

/// Handle to a value recorded on a Tape.
struct Var {
    Tape* tape = nullptr;
    std::uint32_t id = 0;

    bool valid() const noexcept { return tape != nullptr; }
    const Tensor& value() const;
    bool requires_grad() const;
};

/**
 * Reverse-mode recording of a forward computation.
 *
 * A node requires grad when any of its inputs does; leaves built from
 * non-frozen parameters are the only sources. Nodes that do not require grad
 * keep no backward closure, so frozen sub-graphs cost nothing in backward().
 * A tape constructed with `record = false` never requires grad.
 */
class Tape {
public:
    using Backward = std::function<void(Tape&, const Tensor& out_grad)>;

    explicit Tape(bool record = true) : record_(record) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool recording() const noexcept { return record_; }

    Var constant(Tensor value);
    /// Leaf for a parameter. Repeated calls for the same parameter return the same leaf.
    Var param(const ParamPtr& p);

    /// Records an op result. `fn` is dropped unless some input requires grad.
    Var push(std::string_view op, Tensor value, std::initializer_list<Var> inputs, Backward fn);
    Var push(std::string_view op, Tensor value, std::span<const Var> inputs, Backward fn);

    const Tensor& value(Var v) const {
        const Node& n = nodes_[v.id];
        return n.param ? n.param->value : n.value;
    }
    bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
    /// Gradient buffer of `v`, zero-initialised on first access. Only valid inside backward().
    Tensor& grad(Var v);

    /// Seeds d(loss)/d(loss) = 1 and propagates to every parameter leaf.
    void backward(Var loss);

    std::size_t size() const noexcept { return nodes_.size(); }

private:
    // Parameter leaves read the parameter's tensor in place instead of copying it.
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        Backward backward;
        Parameter* param = nullptr;
    };

    bool record_;
    std::deque<Node> nodes_;
    std::unordered_map<const Parameter*, std::uint32_t> param_leaves_;
};

}  // namespace galora::num
