// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#include "galora/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "galora/rng.hpp"

namespace galora::num {

bool GradCheckReport::passed() const {
    return std::all_of(params.begin(), params.end(), [](const ParamGradCheck& p) { return p.passed; });
}

const ParamGradCheck* GradCheckReport::find(const std::string& name) const {
    for (const auto& p : params) {
        if (p.name == name) return &p;
    }
    return nullptr;
}

namespace {

double evaluate(const LossBuilder& loss) {
    Tape tape(false);
    return loss(tape).value()[0];
}

std::vector<std::size_t> sample_indices(std::size_t size, std::size_t budget, Rng& rng) {
    std::vector<std::size_t> idx(size);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (size <= budget) return idx;
    rng.shuffle(idx);
    idx.resize(budget);
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace

GradCheckReport grad_check(const ParamList& params, const LossBuilder& loss, const GradCheckOptions& opt) {
    zero_grads(params);
    {
        Tape tape(true);
        Var l = loss(tape);
        tape.backward(l);
    }

    GradCheckReport report;
    Rng rng = Rng::stream(opt.seed, 0x6772616463686bULL);
    for (const auto& p : params) {
        if (p->frozen) continue;
        ParamGradCheck entry;
        entry.name = p->name;
        for (std::size_t i : sample_indices(p->value.size(), std::max<std::size_t>(opt.samples_per_tensor, 1), rng)) {
            const double original = p->value[i];
            p->value[i] = original + opt.epsilon;
            const double up = evaluate(loss);
            p->value[i] = original - opt.epsilon;
            const double down = evaluate(loss);
            p->value[i] = original;

            const double numeric = (up - down) / (2.0 * opt.epsilon);
            const double analytic = p->grad[i];
            const double denom = std::max({std::abs(analytic), std::abs(numeric), opt.abs_floor});
            const double rel = std::abs(analytic - numeric) / denom;
            entry.max_rel_error = std::max(entry.max_rel_error, rel);
            entry.max_abs_analytic = std::max(entry.max_abs_analytic, std::abs(analytic));
            ++entry.checked;
        }
        entry.passed = entry.max_rel_error < opt.tolerance;
        report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
        report.params.push_back(std::move(entry));
    }
    return report;
}

}  // namespace galora::num
