// SPDX-FileCopyrightText: © 2026 The galora authors
//
// SPDX-License-Identifier: Apache-2.0

#include "galora/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "galora/kernels.hpp"
#include "galora/rng.hpp"

namespace galora::num {

namespace {

Tape& tape_of(Var a) {
    if (!a.tape) throw std::logic_error("op on an unbound Var");
    return *a.tape;
}

[[noreturn]] void shape_fail(std::string_view op, const Tensor& a, const Tensor& b) {
    throw ShapeError(std::string(op) + ": incompatible shapes " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()));
}

void require_rank2(std::string_view op, const Tensor& t) {
    if (t.rank() != 2) throw ShapeError(std::string(op) + ": expected a matrix, got " + shape_string(t.shape()));
}

void add_into(Tensor& dst, const Tensor& src) {
    double* d = dst.data();
    const double* s = src.data();
    for (std::size_t i = 0; i < dst.size(); ++i) d[i] += s[i];
}

}  // namespace

Var matmul(Var a, Var b) {
    Tape& t = tape_of(a);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    require_rank2("matmul", av);
    require_rank2("matmul", bv);
    if (av.cols() != bv.rows()) shape_fail("matmul", av, bv);
    const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
    Tensor out(m, n);
    kernels::gemm_nn_acc(m, k, n, av.data(), bv.data(), out.data());
    return t.push("matmul", std::move(out), {a, b}, [a, b, m, k, n](Tape& tp, const Tensor& g) {
        if (tp.requires_grad(a)) kernels::gemm_nt_acc(m, n, k, g.data(), tp.value(b).data(), tp.grad(a).data());
        if (tp.requires_grad(b)) kernels::gemm_tn_acc(m, k, n, tp.value(a).data(), g.data(), tp.grad(b).data());
    });
}

Var linear(Var x, Var w, std::optional<Var> bias) {
    Tape& t = tape_of(x);
    const Tensor& xv = x.value();
    const Tensor& wv = w.value();
    require_rank2("linear", xv);
    require_rank2("linear", wv);
    if (xv.cols() != wv.cols()) shape_fail("linear", xv, wv);
    const std::size_t m = xv.rows(), in = xv.cols(), out_dim = wv.rows();
    Tensor out(m, out_dim);
    if (bias) {
        const Tensor& bv = bias->value();
        if (bv.rows() != 1 || bv.cols() != out_dim) shape_fail("linear(bias)", wv, bv);
        for (std::size_t i = 0; i < m; ++i) std::copy(bv.data(), bv.data() + out_dim, out.data() + i * out_dim);
    }
    kernels::gemm_nt_acc(m, in, out_dim, xv.data(), wv.data(), out.data());
    std::vector<Var> inputs{x, w};
    if (bias) inputs.push_back(*bias);
    const std::optional<Var> b = bias;
    return t.push("linear", std::move(out), inputs, [x, w, b, m, in, out_dim](Tape& tp, const Tensor& g) {
        if (tp.requires_grad(x)) kernels::gemm_nn_acc(m, out_dim, in, g.data(), tp.value(w).data(), tp.grad(x).data());
        if (tp.requires_grad(w)) kernels::gemm_tn_acc(m, out_dim, in, g.data(), tp.value(x).data(), tp.grad(w).data());
        if (b && tp.requires_grad(*b)) {
            double* gb = tp.grad(*b).data();
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < out_dim; ++j) gb[j] += g(i, j);
            }
        }
    });
}

Var add(Var a, Var b) {
    Tape& t = tape_of(a);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (!av.same_shape(bv)) shape_fail("add", av, bv);
    Tensor out = av;
    add_into(out, bv);
    return t.push("add", std::move(out), {a, b}, [a, b](Tape& tp, const Tensor& g) {
        if (tp.requires_grad(a)) add_into(tp.grad(a), g);
        if (tp.requires_grad(b)) add_into(tp.grad(b), g);
    });
}

Var add_row(Var x, Var row) {
    Tape& t = tape_of(x);
    const Tensor& xv = x.value();
    const Tensor& rv = row.value();
    if (rv.rows() != 1 || rv.cols() != xv.cols()) shape_fail("add_row", xv, rv);
    Tensor out = xv;
    const std::size_t n = xv.cols();
    for (std::size_t i = 0; i < xv.rows(); ++i) {
        for (std::size_t j = 0; j < n; ++j) out(i, j) += rv[j];
    }
    return t.push("add_row", std::move(out), {x, row}, [x, row, n](Tape& tp, const Tensor& g) {
        if (tp.requires_grad(x)) add_into(tp.grad(x), g);
        if (tp.requires_grad(row)) {
            double* gr = tp.grad(row).data();
            for (std::size_t i = 0; i < g.rows(); ++i) {
                for (std::size_t j = 0; j < n; ++j) gr[j] += g(i, j);
            }
        }
    });
}

Var scale(Var x, double s) {
    Tape& t = tape_of(x);
    Tensor out = x.value();
    for (auto& v : out.values()) v *= s;
    return t.push("scale", std::move(out), {x}, [x, s](Tape& tp, const Tensor& g) {
        Tensor& gx = tp.grad(x);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += s * g[i];
    });
}

Var scale_by(Var x, Var s) {
    Tape& t = tape_of(x);
    const Tensor& sv = s.value();
    if (sv.size() != 1) shape_fail("scale_by", x.value(), sv);
    const double sc = sv[0];
    Tensor out = x.value();
    for (auto& v : out.values()) v *= sc;
    return t.push("scale_by", std::move(out), {x, s}, [x, s](Tape& tp, const Tensor& g) {
        const double sc = tp.value(s)[0];
        if (tp.requires_grad(x)) {
            Tensor& gx = tp.grad(x);
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += sc * g[i];
        }
        if (tp.requires_grad(s)) {
            const Tensor& xv = tp.value(x);
            double acc = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * xv[i];
            tp.grad(s)[0] += acc;
        }
    });
}

Var sigmoid(Var x) {
    Tape& t = tape_of(x);
    Tensor out = x.value();
    for (auto& v : out.values()) {
        v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    }
    Tensor y = out;
    return t.push("sigmoid", std::move(out), {x}, [x, y = std::move(y)](Tape& tp, const Tensor& g) {
        Tensor& gx = tp.grad(x);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
    });
}

Var one_minus(Var x) {
    Tape& t = tape_of(x);
    Tensor out = x.value();
    for (auto& v : out.values()) v = 1.0 - v;
    return t.push("one_minus", std::move(out), {x}, [x](Tape& tp, const Tensor& g) {
        Tensor& gx = tp.grad(x);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] -= g[i];
    });
}

Var relu(Var x) {
    Tape& t = tape_of(x);
    Tensor out = x.value();
    for (auto& v : out.values()) v = v > 0.0 ? v : 0.0;
    return t.push("relu", std::move(out), {x}, [x](Tape& tp, const Tensor& g) {
        const Tensor& xv = tp.value(x);
        Tensor& gx = tp.grad(x);
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (xv[i] > 0.0) gx[i] += g[i];
        }
    });
}

Var gelu(Var x) {
    Tape& t = tape_of(x);
    constexpr double c = 0.7978845608028654;  // sqrt(2/pi)
    constexpr double a = 0.044715;
    Tensor out = x.value();
    for (auto& v : out.values()) v = 0.5 * v * (1.0 + std::tanh(c * (v + a * v * v * v)));
    return t.push("gelu", std::move(out), {x}, [x](Tape& tp, const Tensor& g) {
        const Tensor& xv = tp.value(x);
        Tensor& gx = tp.grad(x);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double v = xv[i];
            const double th = std::tanh(c * (v + a * v * v * v));
            const double dinner = c * (1.0 + 3.0 * a * v * v);
            gx[i] += g[i] * (0.5 * (1.0 + th) + 0.5 * v * (1.0 - th * th) * dinner);
        }
    });
}

Var layernorm(Var x, Var gamma, Var beta, double eps) {
    Tape& t = tape_of(x);
    const Tensor& xv = x.value();
    const Tensor& gv = gamma.value();
    const Tensor& bv = beta.value();
    const std::size_t m = xv.rows(), n = xv.cols();
    if (gv.rows() != 1 || gv.cols() != n) shape_fail("layernorm(gamma)", xv, gv);
    if (bv.rows() != 1 || bv.cols() != n) shape_fail("layernorm(beta)", xv, bv);

    Tensor xhat(m, n);
    std::vector<double> inv_std(m);
    Tensor out(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < n; ++j) mean += xv(i, j);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double d = xv(i, j) - mean;
            var += d * d;
        }
        var /= static_cast<double>(n);
        const double is = 1.0 / std::sqrt(var + eps);
        inv_std[i] = is;
        for (std::size_t j = 0; j < n; ++j) {
            const double h = (xv(i, j) - mean) * is;
            xhat(i, j) = h;
            out(i, j) = gv[j] * h + bv[j];
        }
    }
    return t.push("layernorm", std::move(out), {x, gamma, beta},
                  [x, gamma, beta, m, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& tp,
                                                                                              const Tensor& g) {
                      const Tensor& gv = tp.value(gamma);
                      if (tp.requires_grad(gamma)) {
                          double* gg = tp.grad(gamma).data();
                          for (std::size_t i = 0; i < m; ++i) {
                              for (std::size_t j = 0; j < n; ++j) gg[j] += g(i, j) * xhat(i, j);
                          }
                      }
                      if (tp.requires_grad(beta)) {
                          double* gb = tp.grad(beta).data();
                          for (std::size_t i = 0; i < m; ++i) {
                              for (std::size_t j = 0; j < n; ++j) gb[j] += g(i, j);
                          }
                      }
                      if (tp.requires_grad(x)) {
                          Tensor& gx = tp.grad(x);
                          const double inv_n = 1.0 / static_cast<double>(n);
                          for (std::size_t i = 0; i < m; ++i) {
                              double mean_d = 0.0, mean_dx = 0.0;
                              for (std::size_t j = 0; j < n; ++j) {
                                  const double d = g(i, j) * gv[j];
                                  mean_d += d;
                                  mean_dx += d * xhat(i, j);
                              }
                              mean_d *= inv_n;
                              mean_dx *= inv_n;
                              for (std::size_t j = 0; j < n; ++j) {
                                  const double d = g(i, j) * gv[j];
                                  gx(i, j) += inv_std[i] * (d - mean_d - xhat(i, j) * mean_dx);
                              }
                          }
                      }
                  });
}

Tensor softmax_rows(const Tensor& x) {
    Tensor out = x;
    const std::size_t n = x.cols();
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, out(i, j));
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            out(i, j) = std::exp(out(i, j) - mx);
            s += out(i, j);
        }
        for (std::size_t j = 0; j < n; ++j) out(i, j) /= s;
    }
    return out;
}

Var softmax(Var x) {
    Tape& t = tape_of(x);
    Tensor out = softmax_rows(x.value());
    Tensor y = out;
    return t.push("softmax", std::move(out), {x}, [x, y = std::move(y)](Tape& tp, const Tensor& g) {
        Tensor& gx = tp.grad(x);
        const std::size_t n = y.cols();
        for (std::size_t i = 0; i < y.rows(); ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < n; ++j) dot += g(i, j) * y(i, j);
            for (std::size_t j = 0; j < n; ++j) gx(i, j) += y(i, j) * (g(i, j) - dot);
        }
    });
}

namespace {

// One attention head on strided views into row-major buffers.
struct HeadView {
    const double* q;
    const double* k;
    const double* v;
    std::size_t q_stride, k_stride, v_stride;
};

// probs: rows x keys, filled; out rows written at out_stride.
void head_forward(const HeadView& h, std::size_t rows, std::size_t keys, std::size_t dk, std::size_t dv,
                  std::span<const std::uint8_t> mask, double* probs, double* out, std::size_t out_stride) {
    const double inv = 1.0 / std::sqrt(static_cast<double>(dk));
    for (std::size_t i = 0; i < rows; ++i) {
        double* p = probs + i * keys;
        double mx = -std::numeric_limits<double>::infinity();
        const double* qi = h.q + i * h.q_stride;
        for (std::size_t j = 0; j < keys; ++j) {
            if (!mask[j]) {
                p[j] = 0.0;
                continue;
            }
            const double* kj = h.k + j * h.k_stride;
            double s = 0.0;
            for (std::size_t c = 0; c < dk; ++c) s += qi[c] * kj[c];
            p[j] = s * inv;
            mx = std::max(mx, p[j]);
        }
        double total = 0.0;
        for (std::size_t j = 0; j < keys; ++j) {
            if (!mask[j]) continue;
            p[j] = std::exp(p[j] - mx);
            total += p[j];
        }
        double* oi = out + i * out_stride;
        for (std::size_t c = 0; c < dv; ++c) oi[c] = 0.0;
        if (total == 0.0) continue;
        for (std::size_t j = 0; j < keys; ++j) {
            if (!mask[j]) continue;
            p[j] /= total;
            const double* vj = h.v + j * h.v_stride;
            for (std::size_t c = 0; c < dv; ++c) oi[c] += p[j] * vj[c];
        }
    }
}

struct HeadGrads {
    double* q;
    double* k;
    double* v;
    std::size_t q_stride, k_stride, v_stride;
};

void head_backward(const HeadView& h, const HeadGrads& gr, std::size_t rows, std::size_t keys, std::size_t dk,
                   std::size_t dv, const double* probs, const double* gout, std::size_t gout_stride) {
    const double inv = 1.0 / std::sqrt(static_cast<double>(dk));
    std::vector<double> dp(keys);
    for (std::size_t i = 0; i < rows; ++i) {
        const double* p = probs + i * keys;
        const double* go = gout + i * gout_stride;
        double dot = 0.0;
        for (std::size_t j = 0; j < keys; ++j) {
            if (p[j] == 0.0) {
                dp[j] = 0.0;
                continue;
            }
            const double* vj = h.v + j * h.v_stride;
            double s = 0.0;
            for (std::size_t c = 0; c < dv; ++c) s += go[c] * vj[c];
            dp[j] = s;
            dot += s * p[j];
            if (gr.v) {
                double* gvj = gr.v + j * gr.v_stride;
                for (std::size_t c = 0; c < dv; ++c) gvj[c] += p[j] * go[c];
            }
        }
        const double* qi = h.q + i * h.q_stride;
        for (std::size_t j = 0; j < keys; ++j) {
            if (p[j] == 0.0) continue;
            const double ds = p[j] * (dp[j] - dot) * inv;
            const double* kj = h.k + j * h.k_stride;
            if (gr.q) {
                double* gqi = gr.q + i * gr.q_stride;
                for (std::size_t c = 0; c < dk; ++c) gqi[c] += ds * kj[c];
            }
            if (gr.k) {
                double* gkj = gr.k + j * gr.k_stride;
                for (std::size_t c = 0; c < dk; ++c) gkj[c] += ds * qi[c];
            }
        }
    }
}

}  // namespace

Var attention(Var q, Var k, Var v, std::span<const std::uint8_t> key_mask) {
    Tape& t = tape_of(q);
    const Tensor& qv = q.value();
    const Tensor& kv = k.value();
    const Tensor& vv = v.value();
    if (qv.cols() != kv.cols()) shape_fail("attention(q,k)", qv, kv);
    if (kv.rows() != vv.rows()) shape_fail("attention(k,v)", kv, vv);
    if (key_mask.size() != kv.rows()) {
        throw ShapeError("attention: mask length " + std::to_string(key_mask.size()) + " vs " +
                         std::to_string(kv.rows()) + " keys");
    }
    const std::size_t rows = qv.rows(), keys = kv.rows(), dk = qv.cols(), dv = vv.cols();
    Tensor probs(rows, keys);
    Tensor out(rows, dv);
    const HeadView hv{qv.data(), kv.data(), vv.data(), dk, dk, dv};
    head_forward(hv, rows, keys, dk, dv, key_mask, probs.data(), out.data(), dv);
    return t.push("attention", std::move(out), {q, k, v},
                  [q, k, v, rows, keys, dk, dv, probs = std::move(probs)](Tape& tp, const Tensor& g) {
                      const HeadView hv{tp.value(q).data(), tp.value(k).data(), tp.value(v).data(), dk, dk, dv};
                      const HeadGrads gr{tp.requires_grad(q) ? tp.grad(q).data() : nullptr,
                                         tp.requires_grad(k) ? tp.grad(k).data() : nullptr,
                                         tp.requires_grad(v) ? tp.grad(v).data() : nullptr, dk, dk, dv};
                      head_backward(hv, gr, rows, keys, dk, dv, probs.data(), g.data(), dv);
                  });
}

Var multi_head_attention(Var qkv, std::size_t heads, std::span<const std::uint8_t> key_mask) {
    Tape& t = tape_of(qkv);
    const Tensor& xv = qkv.value();
    const std::size_t rows = xv.rows();
    if (heads == 0 || xv.cols() % (3 * heads) != 0) {
        throw ShapeError("multi_head_attention: width " + std::to_string(xv.cols()) + " not divisible into 3 x " +
                         std::to_string(heads) + " heads");
    }
    if (key_mask.size() != rows) {
        throw ShapeError("multi_head_attention: mask length " + std::to_string(key_mask.size()) + " vs " +
                         std::to_string(rows) + " tokens");
    }
    const std::size_t d = xv.cols() / 3, dh = d / heads, stride = xv.cols();
    Tensor probs(heads, rows * rows);
    Tensor out(rows, d);
    for (std::size_t h = 0; h < heads; ++h) {
        const HeadView hv{xv.data() + h * dh, xv.data() + d + h * dh, xv.data() + 2 * d + h * dh, stride, stride,
                          stride};
        head_forward(hv, rows, rows, dh, dh, key_mask, probs.data() + h * rows * rows, out.data() + h * dh, d);
    }
    return t.push("multi_head_attention", std::move(out), {qkv},
                  [qkv, heads, rows, d, dh, stride, probs = std::move(probs)](Tape& tp, const Tensor& g) {
                      const double* x = tp.value(qkv).data();
                      double* gx = tp.grad(qkv).data();
                      for (std::size_t h = 0; h < heads; ++h) {
                          const HeadView hv{x + h * dh, x + d + h * dh, x + 2 * d + h * dh, stride, stride, stride};
                          const HeadGrads gr{gx + h * dh, gx + d + h * dh, gx + 2 * d + h * dh, stride, stride,
                                             stride};
                          head_backward(hv, gr, rows, rows, dh, dh, probs.data() + h * rows * rows,
                                        g.data() + h * dh, d);
                      }
                  });
}

Var concat_cols(Var a, Var b) {
    Tape& t = tape_of(a);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.rows() != bv.rows()) shape_fail("concat_cols", av, bv);
    const std::size_t m = av.rows(), na = av.cols(), nb = bv.cols();
    Tensor out(m, na + nb);
    for (std::size_t i = 0; i < m; ++i) {
        std::copy_n(av.data() + i * na, na, out.data() + i * (na + nb));
        std::copy_n(bv.data() + i * nb, nb, out.data() + i * (na + nb) + na);
    }
    return t.push("concat_cols", std::move(out), {a, b}, [a, b, m, na, nb](Tape& tp, const Tensor& g) {
        if (tp.requires_grad(a)) {
            Tensor& ga = tp.grad(a);
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < na; ++j) ga(i, j) += g(i, j);
            }
        }
        if (tp.requires_grad(b)) {
            Tensor& gb = tp.grad(b);
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < nb; ++j) gb(i, j) += g(i, na + j);
            }
        }
    });
}

Var stack_rows(std::span<const Var> parts) {
    if (parts.empty()) throw ShapeError("stack_rows: no inputs");
    Tape& t = tape_of(parts[0]);
    const std::size_t n = parts[0].value().cols();
    std::size_t m = 0;
    for (const Var& p : parts) {
        if (p.value().cols() != n) shape_fail("stack_rows", parts[0].value(), p.value());
        m += p.value().rows();
    }
    Tensor out(m, n);
    std::size_t offset = 0;
    for (const Var& p : parts) {
        std::copy_n(p.value().data(), p.value().size(), out.data() + offset);
        offset += p.value().size();
    }
    std::vector<Var> inputs(parts.begin(), parts.end());
    return t.push("stack_rows", std::move(out), parts, [inputs](Tape& tp, const Tensor& g) {
        std::size_t off = 0;
        for (const Var& p : inputs) {
            const std::size_t len = tp.value(p).size();
            if (tp.requires_grad(p)) {
                double* gp = tp.grad(p).data();
                for (std::size_t i = 0; i < len; ++i) gp[i] += g[off + i];
            }
            off += len;
        }
    });
}

Var slice_cols(Var x, std::size_t begin, std::size_t count) {
    Tape& t = tape_of(x);
    const Tensor& xv = x.value();
    if (count == 0 || begin + count > xv.cols()) {
        throw ShapeError("slice_cols: [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") out of range for " + shape_string(xv.shape()));
    }
    const std::size_t m = xv.rows();
    Tensor out(m, count);
    for (std::size_t i = 0; i < m; ++i) std::copy_n(xv.data() + i * xv.cols() + begin, count, out.data() + i * count);
    return t.push("slice_cols", std::move(out), {x}, [x, begin, count, m](Tape& tp, const Tensor& g) {
        Tensor& gx = tp.grad(x);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < count; ++j) gx(i, begin + j) += g(i, j);
        }
    });
}

Var slice_rows(Var x, std::size_t begin, std::size_t count) {
    Tape& t = tape_of(x);
    const Tensor& xv = x.value();
    if (count == 0 || begin + count > xv.rows()) {
        throw ShapeError("slice_rows: [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") out of range for " + shape_string(xv.shape()));
    }
    const std::size_t n = xv.cols();
    Tensor out(count, n);
    std::copy_n(xv.data() + begin * n, count * n, out.data());
    return t.push("slice_rows", std::move(out), {x}, [x, begin, count, n](Tape& tp, const Tensor& g) {
        Tensor& gx = tp.grad(x);
        for (std::size_t i = 0; i < count * n; ++i) gx[begin * n + i] += g[i];
    });
}

Var gather_rows(Var x, std::span<const std::size_t> rows) {
    Tape& t = tape_of(x);
    const Tensor& xv = x.value();
    if (rows.empty()) throw ShapeError("gather_rows: empty selection");
    const std::size_t n = xv.cols();
    Tensor out(rows.size(), n);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= xv.rows()) {
            throw ShapeError("gather_rows: row " + std::to_string(rows[i]) + " out of range for " +
                             shape_string(xv.shape()));
        }
        std::copy_n(xv.data() + rows[i] * n, n, out.data() + i * n);
    }
    std::vector<std::size_t> idx(rows.begin(), rows.end());
    return t.push("gather_rows", std::move(out), {x}, [x, n, idx = std::move(idx)](Tape& tp, const Tensor& g) {
        Tensor& gx = tp.grad(x);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            for (std::size_t j = 0; j < n; ++j) gx(idx[i], j) += g(i, j);
        }
    });
}

Var broadcast_rows(Var row, std::size_t n) {
    Tape& t = tape_of(row);
    const Tensor& rv = row.value();
    if (rv.rows() != 1 || n == 0) throw ShapeError("broadcast_rows: expected a single row, got " + shape_string(rv.shape()));
    const std::size_t c = rv.cols();
    Tensor out(n, c);
    for (std::size_t i = 0; i < n; ++i) std::copy_n(rv.data(), c, out.data() + i * c);
    return t.push("broadcast_rows", std::move(out), {row}, [row, n, c](Tape& tp, const Tensor& g) {
        double* gr = tp.grad(row).data();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < c; ++j) gr[j] += g(i, j);
        }
    });
}

Var mean_rows(Var x) {
    const std::size_t m = x.value().rows();
    std::vector<std::size_t> all(m);
    for (std::size_t i = 0; i < m; ++i) all[i] = i;
    return mean_rows(x, all);
}

Var mean_rows(Var x, std::span<const std::size_t> rows) {
    Tape& t = tape_of(x);
    const Tensor& xv = x.value();
    const std::size_t n = xv.cols();
    Tensor out(1, n);
    for (std::size_t r : rows) {
        if (r >= xv.rows()) throw ShapeError("mean_rows: row index out of range for " + shape_string(xv.shape()));
        for (std::size_t j = 0; j < n; ++j) out[j] += xv(r, j);
    }
    const double inv = rows.empty() ? 0.0 : 1.0 / static_cast<double>(rows.size());
    for (auto& v : out.values()) v *= inv;
    std::vector<std::size_t> idx(rows.begin(), rows.end());
    return t.push("mean_rows", std::move(out), {x}, [x, n, inv, idx = std::move(idx)](Tape& tp, const Tensor& g) {
        Tensor& gx = tp.grad(x);
        for (std::size_t r : idx) {
            for (std::size_t j = 0; j < n; ++j) gx(r, j) += g[j] * inv;
        }
    });
}

Var masked_mean_rows(Var x, std::span<const std::uint8_t> mask) {
    const Tensor& xv = x.value();
    if (mask.size() != xv.rows()) {
        throw ShapeError("masked_mean_rows: mask length " + std::to_string(mask.size()) + " vs " +
                         shape_string(xv.shape()));
    }
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) rows.push_back(i);
    }
    return mean_rows(x, rows);
}

Var neighbor_mean(Var x, const CsrView& adj) {
    Tape& t = tape_of(x);
    const Tensor& xv = x.value();
    if (adj.num_rows() != xv.rows()) {
        throw ShapeError("neighbor_mean: adjacency has " + std::to_string(adj.num_rows()) + " rows, features " +
                         shape_string(xv.shape()));
    }
    const std::size_t m = xv.rows(), n = xv.cols();
    Tensor out(m, n);
    for (std::size_t v = 0; v < m; ++v) {
        const std::size_t lo = adj.offsets[v], hi = adj.offsets[v + 1];
        if (lo == hi) continue;
        double* o = out.data() + v * n;
        for (std::size_t e = lo; e < hi; ++e) {
            const double* src = xv.data() + adj.indices[e] * n;
            for (std::size_t j = 0; j < n; ++j) o[j] += src[j];
        }
        const double inv = 1.0 / static_cast<double>(hi - lo);
        for (std::size_t j = 0; j < n; ++j) o[j] *= inv;
    }
    return t.push("neighbor_mean", std::move(out), {x}, [x, adj, m, n](Tape& tp, const Tensor& g) {
        Tensor& gx = tp.grad(x);
        for (std::size_t v = 0; v < m; ++v) {
            const std::size_t lo = adj.offsets[v], hi = adj.offsets[v + 1];
            if (lo == hi) continue;
            const double inv = 1.0 / static_cast<double>(hi - lo);
            const double* gv = g.data() + v * n;
            for (std::size_t e = lo; e < hi; ++e) {
                double* dst = gx.data() + adj.indices[e] * n;
                for (std::size_t j = 0; j < n; ++j) dst[j] += gv[j] * inv;
            }
        }
    });
}

double cross_entropy_value(const Tensor& logits, std::span<const std::size_t> labels) {
    if (labels.size() != logits.rows()) {
        throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for logits " +
                         shape_string(logits.shape()));
    }
    const std::size_t c = logits.cols();
    double total = 0.0;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        if (labels[i] >= c) {
            throw std::out_of_range("cross_entropy: label " + std::to_string(labels[i]) + " out of range for " +
                                    std::to_string(c) + " classes");
        }
        std::size_t arg = 0;
        for (std::size_t j = 1; j < c; ++j) arg = logits(i, j) > logits(i, arg) ? j : arg;
        const double mx = logits(i, arg);
        // The max term contributes exactly 1; log1p keeps small losses at full relative precision.
        double rest = 0.0;
        for (std::size_t j = 0; j < c; ++j) rest += j == arg ? 0.0 : std::exp(logits(i, j) - mx);
        total += std::log1p(rest) + (mx - logits(i, labels[i]));
    }
    return total / static_cast<double>(logits.rows());
}

Var cross_entropy(Var logits, std::span<const std::size_t> labels) {
    Tape& t = tape_of(logits);
    const Tensor& lv = logits.value();
    const double loss = cross_entropy_value(lv, labels);
    std::vector<std::size_t> lab(labels.begin(), labels.end());
    return t.push("cross_entropy", Tensor::scalar(loss), {logits},
                  [logits, lab = std::move(lab)](Tape& tp, const Tensor& g) {
                      Tensor p = softmax_rows(tp.value(logits));
                      Tensor& gl = tp.grad(logits);
                      const double scale = g[0] / static_cast<double>(lab.size());
                      for (std::size_t i = 0; i < p.rows(); ++i) {
                          for (std::size_t j = 0; j < p.cols(); ++j) {
                              gl(i, j) += scale * (p(i, j) - (j == lab[i] ? 1.0 : 0.0));
                          }
                      }
                  });
}

Var sum(Var x) {
    Tape& t = tape_of(x);
    double s = 0.0;
    for (double v : x.value().values()) s += v;
    return t.push("sum", Tensor::scalar(s), {x}, [x](Tape& tp, const Tensor& g) {
        Tensor& gx = tp.grad(x);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[0];
    });
}

Var dropout(Var x, double rate, std::uint64_t seed) {
    if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate must be in [0, 1)");
    if (rate == 0.0) return x;
    Tape& t = tape_of(x);
    Rng rng(seed);
    const double keep = 1.0 - rate;
    Tensor mask(x.value().shape(), 0.0);
    for (auto& m : mask.values()) m = rng.uniform() < keep ? 1.0 / keep : 0.0;
    Tensor out = x.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
    return t.push("dropout", std::move(out), {x}, [x, mask = std::move(mask)](Tape& tp, const Tensor& g) {
        Tensor& gx = tp.grad(x);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * mask[i];
    });
}

}  // namespace galora::num
