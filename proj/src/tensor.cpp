#include "wavehax/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "wavehax/io.hpp"

namespace wavehax::ad {

namespace {

std::size_t shape_numel(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw std::invalid_argument("tensor: non-positive dimension");
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

std::shared_ptr<TensorImpl> make_node(std::vector<int> shape, std::vector<double> values,
                                      std::vector<std::shared_ptr<TensorImpl>> parents,
                                      std::function<void(TensorImpl&)> backward_fn) {
    auto node = std::make_shared<TensorImpl>();
    node->shape = std::move(shape);
    node->values = std::move(values);
    node->parents = std::move(parents);
    for (const auto& p : node->parents)
        if (p->requires_grad) node->requires_grad = true;
    if (node->requires_grad) node->backward_fn = std::move(backward_fn);
    return node;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

// Elementwise op with derivative computed from the saved input.
Tensor unary_op(const Tensor& a, const std::function<double(double)>& f,
                const std::function<double(double)>& df) {
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a.values()[i]);
    return Tensor(make_node(a.shape(), std::move(out), {a.impl()}, [df](TensorImpl& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (std::size_t i = 0; i < self.values.size(); ++i)
            p.grad[i] += self.grad[i] * df(p.values[i]);
    }));
}

}  // namespace

Tensor Tensor::zeros(const std::vector<int>& shape, bool requires_grad) {
    auto node = std::make_shared<TensorImpl>();
    node->shape = shape;
    node->values.assign(shape_numel(shape), 0.0);
    node->requires_grad = requires_grad;
    return Tensor(node);
}

Tensor Tensor::from(const std::vector<int>& shape, std::vector<double> values,
                    bool requires_grad) {
    if (shape_numel(shape) != values.size())
        throw std::invalid_argument("Tensor::from: shape/value size mismatch");
    auto node = std::make_shared<TensorImpl>();
    node->shape = shape;
    node->values = std::move(values);
    node->requires_grad = requires_grad;
    return Tensor(node);
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return from({1}, {v}, requires_grad);
}

double Tensor::item() const {
    if (numel() != 1) throw std::invalid_argument("Tensor::item: not a scalar");
    return impl_->values[0];
}

Tensor Tensor::detach() const {
    auto node = std::make_shared<TensorImpl>();
    node->shape = impl_->shape;
    node->values = impl_->values;
    return Tensor(node);
}

void backward(const Tensor& loss) {
    if (loss.numel() != 1) throw std::invalid_argument("backward: loss must be scalar");
    if (!loss.impl()->requires_grad) return;

    // iterative post-order DFS over requires_grad nodes
    std::vector<TensorImpl*> order;
    std::unordered_set<TensorImpl*> visited;
    std::vector<std::pair<TensorImpl*, std::size_t>> stack{{loss.impl().get(), 0}};
    visited.insert(loss.impl().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            TensorImpl* p = node->parents[next++].get();
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.push_back({p, 0});
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    loss.impl()->ensure_grad();
    loss.impl()->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TensorImpl* node = *it;
        node->ensure_grad();
        if (node->backward_fn) node->backward_fn(*node);
    }
}

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
    return Tensor(make_node(a.shape(), std::move(out), {a.impl(), b.impl()},
                            [](TensorImpl& self) {
                                for (auto& p : self.parents) {
                                    if (!p->requires_grad) continue;
                                    p->ensure_grad();
                                    for (std::size_t i = 0; i < self.grad.size(); ++i)
                                        p->grad[i] += self.grad[i];
                                }
                            }));
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] - b.values()[i];
    return Tensor(make_node(a.shape(), std::move(out), {a.impl(), b.impl()},
                            [](TensorImpl& self) {
                                auto& pa = *self.parents[0];
                                auto& pb = *self.parents[1];
                                if (pa.requires_grad) {
                                    pa.ensure_grad();
                                    for (std::size_t i = 0; i < self.grad.size(); ++i)
                                        pa.grad[i] += self.grad[i];
                                }
                                if (pb.requires_grad) {
                                    pb.ensure_grad();
                                    for (std::size_t i = 0; i < self.grad.size(); ++i)
                                        pb.grad[i] -= self.grad[i];
                                }
                            }));
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
    return Tensor(make_node(a.shape(), std::move(out), {a.impl(), b.impl()},
                            [](TensorImpl& self) {
                                auto& pa = *self.parents[0];
                                auto& pb = *self.parents[1];
                                if (pa.requires_grad) {
                                    pa.ensure_grad();
                                    for (std::size_t i = 0; i < self.grad.size(); ++i)
                                        pa.grad[i] += self.grad[i] * pb.values[i];
                                }
                                if (pb.requires_grad) {
                                    pb.ensure_grad();
                                    for (std::size_t i = 0; i < self.grad.size(); ++i)
                                        pb.grad[i] += self.grad[i] * pa.values[i];
                                }
                            }));
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor scale(const Tensor& a, double c) {
    return unary_op(a, [c](double v) { return c * v; }, [c](double) { return c; });
}

Tensor add_scalar(const Tensor& a, double c) {
    return unary_op(a, [c](double v) { return v + c; }, [](double) { return 1.0; });
}

Tensor abs(const Tensor& a) {
    return unary_op(a, [](double v) { return std::abs(v); },
                    [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Tensor log(const Tensor& a) {
    return unary_op(a, [](double v) { return std::log(v); },
                    [](double v) { return 1.0 / v; });
}

Tensor sqrt(const Tensor& a) {
    return unary_op(a, [](double v) { return std::sqrt(v); },
                    [](double v) { return 0.5 / std::sqrt(v); });
}

Tensor square(const Tensor& a) {
    return unary_op(a, [](double v) { return v * v; }, [](double v) { return 2.0 * v; });
}

Tensor relu(const Tensor& a) {
    return unary_op(a, [](double v) { return v > 0.0 ? v : 0.0; },
                    [](double v) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor leaky_relu(const Tensor& a, double slope) {
    return unary_op(a, [slope](double v) { return v > 0.0 ? v : slope * v; },
                    [slope](double v) { return v > 0.0 ? 1.0 : slope; });
}

Tensor gelu(const Tensor& a) {
    constexpr double inv_sqrt2 = std::numbers::sqrt2 / 2.0;
    constexpr double inv_sqrt2pi = 0.3989422804014327;
    return unary_op(a,
                    [](double v) { return 0.5 * v * (1.0 + std::erf(v * inv_sqrt2)); },
                    [](double v) {
                        return 0.5 * (1.0 + std::erf(v * inv_sqrt2)) +
                               v * inv_sqrt2pi * std::exp(-0.5 * v * v);
                    });
}

Tensor tanh(const Tensor& a) {
    return unary_op(a, [](double v) { return std::tanh(v); },
                    [](double v) {
                        const double t = std::tanh(v);
                        return 1.0 - t * t;
                    });
}

Tensor sum(const Tensor& a) {
    double acc = 0.0;
    for (double v : a.values()) acc += v;
    return Tensor(make_node({1}, {acc}, {a.impl()}, [](TensorImpl& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (auto& g : p.grad) g += self.grad[0];
    }));
}

Tensor mean(const Tensor& a) {
    const double n = static_cast<double>(a.numel());
    double acc = 0.0;
    for (double v : a.values()) acc += v;
    return Tensor(make_node({1}, {acc / n}, {a.impl()}, [n](TensorImpl& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (auto& g : p.grad) g += self.grad[0] / n;
    }));
}

Tensor reshape(const Tensor& a, const std::vector<int>& shape) {
    if (shape_numel(shape) != a.numel())
        throw std::invalid_argument("reshape: element count mismatch");
    return Tensor(make_node(shape, a.values(), {a.impl()}, [](TensorImpl& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i];
    }));
}

Tensor transpose_last2(const Tensor& a) {
    const auto& s = a.shape();
    if (s.size() < 2) throw std::invalid_argument("transpose_last2: rank < 2");
    const int M = s[s.size() - 2], N = s[s.size() - 1];
    const std::size_t batch = a.numel() / static_cast<std::size_t>(M * N);
    std::vector<int> out_shape = s;
    std::swap(out_shape[s.size() - 2], out_shape[s.size() - 1]);
    std::vector<double> out(a.numel());
    for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t base = b * static_cast<std::size_t>(M * N);
        for (int m = 0; m < M; ++m)
            for (int n = 0; n < N; ++n)
                out[base + static_cast<std::size_t>(n) * M + m] =
                    a.values()[base + static_cast<std::size_t>(m) * N + n];
    }
    return Tensor(make_node(out_shape, std::move(out), {a.impl()},
                            [M, N, batch](TensorImpl& self) {
                                auto& p = *self.parents[0];
                                if (!p.requires_grad) return;
                                p.ensure_grad();
                                for (std::size_t b = 0; b < batch; ++b) {
                                    const std::size_t base = b * static_cast<std::size_t>(M * N);
                                    for (int m = 0; m < M; ++m)
                                        for (int n = 0; n < N; ++n)
                                            p.grad[base + static_cast<std::size_t>(m) * N + n] +=
                                                self.grad[base + static_cast<std::size_t>(n) * M + m];
                                }
                            }));
}

Tensor slice(const Tensor& a, int axis, int start, int len) {
    const auto& s = a.shape();
    if (axis < 0 || axis >= static_cast<int>(s.size()))
        throw std::invalid_argument("slice: bad axis");
    if (start < 0 || len <= 0 || start + len > s[axis])
        throw std::invalid_argument("slice: bad range");
    std::size_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= static_cast<std::size_t>(s[i]);
    for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= static_cast<std::size_t>(s[i]);
    const std::size_t dim = static_cast<std::size_t>(s[axis]);
    std::vector<int> out_shape = s;
    out_shape[axis] = len;
    std::vector<double> out(outer * static_cast<std::size_t>(len) * inner);
    for (std::size_t o = 0; o < outer; ++o)
        for (int j = 0; j < len; ++j)
            std::copy_n(a.values().begin() + (o * dim + start + j) * inner, inner,
                        out.begin() + (o * len + j) * inner);
    return Tensor(make_node(out_shape, std::move(out), {a.impl()},
                            [outer, inner, dim, start, len](TensorImpl& self) {
                                auto& p = *self.parents[0];
                                if (!p.requires_grad) return;
                                p.ensure_grad();
                                for (std::size_t o = 0; o < outer; ++o)
                                    for (int j = 0; j < len; ++j) {
                                        const std::size_t src = (o * len + j) * inner;
                                        const std::size_t dst = (o * dim + start + j) * inner;
                                        for (std::size_t i = 0; i < inner; ++i)
                                            p.grad[dst + i] += self.grad[src + i];
                                    }
                            }));
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
    if (parts.empty()) throw std::invalid_argument("concat: no inputs");
    const auto& s0 = parts[0].shape();
    if (axis < 0 || axis >= static_cast<int>(s0.size()))
        throw std::invalid_argument("concat: bad axis");
    int total = 0;
    for (const auto& p : parts) {
        const auto& s = p.shape();
        if (s.size() != s0.size()) throw std::invalid_argument("concat: rank mismatch");
        for (std::size_t i = 0; i < s.size(); ++i)
            if (static_cast<int>(i) != axis && s[i] != s0[i])
                throw std::invalid_argument("concat: shape mismatch");
        total += s[axis];
    }
    std::size_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= static_cast<std::size_t>(s0[i]);
    for (std::size_t i = axis + 1; i < s0.size(); ++i) inner *= static_cast<std::size_t>(s0[i]);
    std::vector<int> out_shape = s0;
    out_shape[axis] = total;
    std::vector<double> out(outer * static_cast<std::size_t>(total) * inner);
    std::vector<int> dims;
    std::vector<std::shared_ptr<TensorImpl>> parents;
    int offset = 0;
    for (const auto& part : parts) {
        const int d = part.shape()[axis];
        for (std::size_t o = 0; o < outer; ++o)
            std::copy_n(part.values().begin() + o * d * inner, d * inner,
                        out.begin() + (o * total + offset) * inner);
        dims.push_back(d);
        parents.push_back(part.impl());
        offset += d;
    }
    return Tensor(make_node(out_shape, std::move(out), std::move(parents),
                            [outer, inner, total, dims](TensorImpl& self) {
                                int off = 0;
                                for (std::size_t pi = 0; pi < self.parents.size(); ++pi) {
                                    auto& p = *self.parents[pi];
                                    const int d = dims[pi];
                                    if (p.requires_grad) {
                                        p.ensure_grad();
                                        for (std::size_t o = 0; o < outer; ++o) {
                                            const std::size_t src = (o * total + off) * inner;
                                            const std::size_t dst = o * d * inner;
                                            for (std::size_t i = 0; i < static_cast<std::size_t>(d) * inner; ++i)
                                                p.grad[dst + i] += self.grad[src + i];
                                        }
                                    }
                                    off += d;
                                }
                            }));
}

Tensor matmul(const Tensor& lhs, const Tensor& rhs) {
    const auto& ls = lhs.shape();
    const auto& rs = rhs.shape();
    if (ls.size() < 2 || rs.size() != 2)
        throw std::invalid_argument("matmul: need lhs rank >= 2 and rhs rank 2");
    const int M = ls[ls.size() - 2], K = ls[ls.size() - 1];
    if (rs[0] != K) throw std::invalid_argument("matmul: inner dimension mismatch");
    const int N = rs[1];
    const std::size_t batch = lhs.numel() / static_cast<std::size_t>(M * K);
    std::vector<int> out_shape(ls.begin(), ls.end() - 1);
    out_shape.back() = N;  // replaces K slot after dropping last
    out_shape[out_shape.size() - 1] = N;
    std::vector<int> shp(ls.begin(), ls.end());
    shp[shp.size() - 1] = N;
    std::vector<double> out(batch * static_cast<std::size_t>(M * N), 0.0);
    const double* lv = lhs.values().data();
    const double* rv = rhs.values().data();
    for (std::size_t b = 0; b < batch; ++b) {
        const double* L = lv + b * static_cast<std::size_t>(M * K);
        double* O = out.data() + b * static_cast<std::size_t>(M * N);
        for (int m = 0; m < M; ++m)
            for (int k = 0; k < K; ++k) {
                const double l = L[m * K + k];
                if (l == 0.0) continue;
                const double* R = rv + static_cast<std::size_t>(k) * N;
                double* row = O + static_cast<std::size_t>(m) * N;
                for (int n = 0; n < N; ++n) row[n] += l * R[n];
            }
    }
    return Tensor(make_node(shp, std::move(out), {lhs.impl(), rhs.impl()},
                            [M, K, N, batch](TensorImpl& self) {
                                auto& pl = *self.parents[0];
                                auto& pr = *self.parents[1];
                                if (pl.requires_grad) {
                                    pl.ensure_grad();
                                    for (std::size_t b = 0; b < batch; ++b) {
                                        const double* G = self.grad.data() + b * static_cast<std::size_t>(M * N);
                                        double* GL = pl.grad.data() + b * static_cast<std::size_t>(M * K);
                                        for (int m = 0; m < M; ++m)
                                            for (int k = 0; k < K; ++k) {
                                                const double* R = pr.values.data() + static_cast<std::size_t>(k) * N;
                                                double acc = 0.0;
                                                for (int n = 0; n < N; ++n) acc += G[m * N + n] * R[n];
                                                GL[m * K + k] += acc;
                                            }
                                    }
                                }
                                if (pr.requires_grad) {
                                    pr.ensure_grad();
                                    for (std::size_t b = 0; b < batch; ++b) {
                                        const double* G = self.grad.data() + b * static_cast<std::size_t>(M * N);
                                        const double* L = pl.values.data() + b * static_cast<std::size_t>(M * K);
                                        for (int m = 0; m < M; ++m)
                                            for (int k = 0; k < K; ++k) {
                                                const double l = L[m * K + k];
                                                if (l == 0.0) continue;
                                                double* GR = pr.grad.data() + static_cast<std::size_t>(k) * N;
                                                for (int n = 0; n < N; ++n) GR[n] += l * G[m * N + n];
                                            }
                                    }
                                }
                            }));
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    const auto& xs = x.shape();
    const auto& ws = w.shape();
    if (xs.size() != 2 || ws.size() != 2 || xs[1] != ws[1])
        throw std::invalid_argument("linear: shape mismatch");
    const int M = xs[0], K = xs[1], N = ws[0];
    if (b.defined() && (b.shape().size() != 1 || b.shape()[0] != N))
        throw std::invalid_argument("linear: bad bias shape");
    std::vector<double> out(static_cast<std::size_t>(M) * N, 0.0);
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n) {
            double acc = b.defined() ? b.values()[n] : 0.0;
            for (int k = 0; k < K; ++k)
                acc += x.values()[m * K + k] * w.values()[n * K + k];
            out[static_cast<std::size_t>(m) * N + n] = acc;
        }
    std::vector<std::shared_ptr<TensorImpl>> parents{x.impl(), w.impl()};
    if (b.defined()) parents.push_back(b.impl());
    return Tensor(make_node({M, N}, std::move(out), std::move(parents),
                            [M, K, N](TensorImpl& self) {
                                auto& px = *self.parents[0];
                                auto& pw = *self.parents[1];
                                for (int m = 0; m < M; ++m)
                                    for (int n = 0; n < N; ++n) {
                                        const double g = self.grad[static_cast<std::size_t>(m) * N + n];
                                        if (g == 0.0) continue;
                                        if (px.requires_grad) {
                                            px.ensure_grad();
                                            for (int k = 0; k < K; ++k)
                                                px.grad[m * K + k] += g * pw.values[n * K + k];
                                        }
                                        if (pw.requires_grad) {
                                            pw.ensure_grad();
                                            for (int k = 0; k < K; ++k)
                                                pw.grad[n * K + k] += g * px.values[m * K + k];
                                        }
                                        if (self.parents.size() > 2 && self.parents[2]->requires_grad) {
                                            self.parents[2]->ensure_grad();
                                            self.parents[2]->grad[n] += g;
                                        }
                                    }
                            }));
}

Tensor linear_channel(const Tensor& x, const Tensor& w, const Tensor& b) {
    const auto& xs = x.shape();
    const auto& ws = w.shape();
    if (xs.size() < 2 || ws.size() != 2 || xs[1] != ws[1])
        throw std::invalid_argument("linear_channel: channel mismatch");
    const int B = xs[0], C = xs[1], Co = ws[0];
    std::size_t rest = 1;
    for (std::size_t i = 2; i < xs.size(); ++i) rest *= static_cast<std::size_t>(xs[i]);
    if (b.defined() && (b.shape().size() != 1 || b.shape()[0] != Co))
        throw std::invalid_argument("linear_channel: bad bias shape");
    std::vector<int> out_shape = xs;
    out_shape[1] = Co;
    std::vector<double> out(static_cast<std::size_t>(B) * Co * rest, 0.0);
    for (int bb = 0; bb < B; ++bb)
        for (int o = 0; o < Co; ++o) {
            double* dst = out.data() + (static_cast<std::size_t>(bb) * Co + o) * rest;
            if (b.defined())
                for (std::size_t r = 0; r < rest; ++r) dst[r] = b.values()[o];
            for (int c = 0; c < C; ++c) {
                const double wv = w.values()[static_cast<std::size_t>(o) * C + c];
                if (wv == 0.0) continue;
                const double* src =
                    x.values().data() + (static_cast<std::size_t>(bb) * C + c) * rest;
                for (std::size_t r = 0; r < rest; ++r) dst[r] += wv * src[r];
            }
        }
    std::vector<std::shared_ptr<TensorImpl>> parents{x.impl(), w.impl()};
    if (b.defined()) parents.push_back(b.impl());
    return Tensor(make_node(out_shape, std::move(out), std::move(parents),
                            [B, C, Co, rest](TensorImpl& self) {
                                auto& px = *self.parents[0];
                                auto& pw = *self.parents[1];
                                if (px.requires_grad) px.ensure_grad();
                                if (pw.requires_grad) pw.ensure_grad();
                                const bool has_bias = self.parents.size() > 2;
                                if (has_bias && self.parents[2]->requires_grad)
                                    self.parents[2]->ensure_grad();
                                for (int bb = 0; bb < B; ++bb)
                                    for (int o = 0; o < Co; ++o) {
                                        const double* g = self.grad.data() +
                                                          (static_cast<std::size_t>(bb) * Co + o) * rest;
                                        if (has_bias && self.parents[2]->requires_grad) {
                                            double acc = 0.0;
                                            for (std::size_t r = 0; r < rest; ++r) acc += g[r];
                                            self.parents[2]->grad[o] += acc;
                                        }
                                        for (int c = 0; c < C; ++c) {
                                            const std::size_t xoff =
                                                (static_cast<std::size_t>(bb) * C + c) * rest;
                                            if (px.requires_grad) {
                                                const double wv = pw.values[static_cast<std::size_t>(o) * C + c];
                                                for (std::size_t r = 0; r < rest; ++r)
                                                    px.grad[xoff + r] += wv * g[r];
                                            }
                                            if (pw.requires_grad) {
                                                double acc = 0.0;
                                                for (std::size_t r = 0; r < rest; ++r)
                                                    acc += px.values[xoff + r] * g[r];
                                                pw.grad[static_cast<std::size_t>(o) * C + c] += acc;
                                            }
                                        }
                                    }
                            }));
}

Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b) {
    const auto& xs = x.shape();
    const auto& ws = w.shape();
    if (xs.size() != 3 || ws.size() != 3)
        throw std::invalid_argument("conv1d: expect x [B,Ci,T], w [Co,Ci,K]");
    if (xs[1] != ws[1]) throw std::invalid_argument("conv1d: channel mismatch");
    const int B = xs[0], Ci = xs[1], T = xs[2], Co = ws[0], K = ws[2];
    if (K % 2 == 0) throw std::invalid_argument("conv1d: kernel must be odd");
    if (b.defined() && (b.shape().size() != 1 || b.shape()[0] != Co))
        throw std::invalid_argument("conv1d: bad bias shape");
    const int half = K / 2;
    std::vector<double> out(static_cast<std::size_t>(B) * Co * T, 0.0);
    for (int bb = 0; bb < B; ++bb)
        for (int o = 0; o < Co; ++o)
            for (int t = 0; t < T; ++t) {
                double acc = b.defined() ? b.values()[o] : 0.0;
                for (int c = 0; c < Ci; ++c)
                    for (int k = 0; k < K; ++k) {
                        const int src = t + k - half;
                        if (src < 0 || src >= T) continue;
                        acc += x.values()[(static_cast<std::size_t>(bb) * Ci + c) * T + src] *
                               w.values()[(static_cast<std::size_t>(o) * Ci + c) * K + k];
                    }
                out[(static_cast<std::size_t>(bb) * Co + o) * T + t] = acc;
            }
    std::vector<std::shared_ptr<TensorImpl>> parents{x.impl(), w.impl()};
    if (b.defined()) parents.push_back(b.impl());
    return Tensor(make_node({B, Co, T}, std::move(out), std::move(parents),
                            [B, Ci, T, Co, K, half](TensorImpl& self) {
                                auto& px = *self.parents[0];
                                auto& pw = *self.parents[1];
                                if (px.requires_grad) px.ensure_grad();
                                if (pw.requires_grad) pw.ensure_grad();
                                const bool has_bias = self.parents.size() > 2;
                                if (has_bias && self.parents[2]->requires_grad)
                                    self.parents[2]->ensure_grad();
                                for (int bb = 0; bb < B; ++bb)
                                    for (int o = 0; o < Co; ++o)
                                        for (int t = 0; t < T; ++t) {
                                            const double g =
                                                self.grad[(static_cast<std::size_t>(bb) * Co + o) * T + t];
                                            if (g == 0.0) continue;
                                            if (has_bias && self.parents[2]->requires_grad)
                                                self.parents[2]->grad[o] += g;
                                            for (int c = 0; c < Ci; ++c)
                                                for (int k = 0; k < K; ++k) {
                                                    const int src = t + k - half;
                                                    if (src < 0 || src >= T) continue;
                                                    const std::size_t xi =
                                                        (static_cast<std::size_t>(bb) * Ci + c) * T + src;
                                                    const std::size_t wi =
                                                        (static_cast<std::size_t>(o) * Ci + c) * K + k;
                                                    if (px.requires_grad)
                                                        px.grad[xi] += g * pw.values[wi];
                                                    if (pw.requires_grad)
                                                        pw.grad[wi] += g * px.values[xi];
                                                }
                                        }
                            }));
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int groups) {
    const auto& xs = x.shape();
    const auto& ws = w.shape();
    if (xs.size() != 4 || ws.size() != 4)
        throw std::invalid_argument("conv2d: expect x [B,Ci,H,W], w [Co,Ci/g,Kh,Kw]");
    const int B = xs[0], Ci = xs[1], H = xs[2], W = xs[3];
    const int Co = ws[0], Cig = ws[1], Kh = ws[2], Kw = ws[3];
    if (groups <= 0 || Ci % groups != 0 || Co % groups != 0 || Ci / groups != Cig)
        throw std::invalid_argument("conv2d: channels not divisible by groups");
    if (b.defined() && (b.shape().size() != 1 || b.shape()[0] != Co))
        throw std::invalid_argument("conv2d: bad bias shape");
    const int hh = Kh / 2, hw = Kw / 2;
    const int cog = Co / groups;
    std::vector<double> out(static_cast<std::size_t>(B) * Co * H * W, 0.0);
    for (int bb = 0; bb < B; ++bb)
        for (int o = 0; o < Co; ++o) {
            const int g0 = (o / cog) * Cig;  // first input channel of this group
            for (int h = 0; h < H; ++h)
                for (int ww2 = 0; ww2 < W; ++ww2) {
                    double acc = b.defined() ? b.values()[o] : 0.0;
                    for (int c = 0; c < Cig; ++c)
                        for (int kh = 0; kh < Kh; ++kh) {
                            const int sh = h + kh - hh;
                            if (sh < 0 || sh >= H) continue;
                            for (int kw = 0; kw < Kw; ++kw) {
                                const int sw = ww2 + kw - hw;
                                if (sw < 0 || sw >= W) continue;
                                acc += x.values()[((static_cast<std::size_t>(bb) * Ci + g0 + c) * H + sh) * W + sw] *
                                       w.values()[((static_cast<std::size_t>(o) * Cig + c) * Kh + kh) * Kw + kw];
                            }
                        }
                    out[((static_cast<std::size_t>(bb) * Co + o) * H + h) * W + ww2] = acc;
                }
        }
    std::vector<std::shared_ptr<TensorImpl>> parents{x.impl(), w.impl()};
    if (b.defined()) parents.push_back(b.impl());
    return Tensor(make_node({B, Co, H, W}, std::move(out), std::move(parents),
                            [B, Ci, H, W, Co, Cig, Kh, Kw, hh, hw, cog](TensorImpl& self) {
                                auto& px = *self.parents[0];
                                auto& pw = *self.parents[1];
                                if (px.requires_grad) px.ensure_grad();
                                if (pw.requires_grad) pw.ensure_grad();
                                const bool has_bias = self.parents.size() > 2;
                                if (has_bias && self.parents[2]->requires_grad)
                                    self.parents[2]->ensure_grad();
                                for (int bb = 0; bb < B; ++bb)
                                    for (int o = 0; o < Co; ++o) {
                                        const int g0 = (o / cog) * Cig;
                                        for (int h = 0; h < H; ++h)
                                            for (int ww2 = 0; ww2 < W; ++ww2) {
                                                const double g = self.grad[((static_cast<std::size_t>(bb) * Co + o) * H + h) * W + ww2];
                                                if (g == 0.0) continue;
                                                if (has_bias && self.parents[2]->requires_grad)
                                                    self.parents[2]->grad[o] += g;
                                                for (int c = 0; c < Cig; ++c)
                                                    for (int kh = 0; kh < Kh; ++kh) {
                                                        const int sh = h + kh - hh;
                                                        if (sh < 0 || sh >= H) continue;
                                                        for (int kw = 0; kw < Kw; ++kw) {
                                                            const int sw = ww2 + kw - hw;
                                                            if (sw < 0 || sw >= W) continue;
                                                            const std::size_t xi = ((static_cast<std::size_t>(bb) * Ci + g0 + c) * H + sh) * W + sw;
                                                            const std::size_t wi = ((static_cast<std::size_t>(o) * Cig + c) * Kh + kh) * Kw + kw;
                                                            if (px.requires_grad)
                                                                px.grad[xi] += g * pw.values[wi];
                                                            if (pw.requires_grad)
                                                                pw.grad[wi] += g * px.values[xi];
                                                        }
                                                    }
                                            }
                                    }
                            }));
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
    const auto& xs = x.shape();
    if (xs.size() < 2) throw std::invalid_argument("layer_norm: rank < 2");
    const int B = xs[0], C = xs[1];
    if (gamma.shape() != std::vector<int>{C} || beta.shape() != std::vector<int>{C})
        throw std::invalid_argument("layer_norm: scale/shift must be [C]");
    std::size_t rest = 1;
    for (std::size_t i = 2; i < xs.size(); ++i) rest *= static_cast<std::size_t>(xs[i]);
    const std::size_t positions = static_cast<std::size_t>(B) * rest;
    auto mu = std::make_shared<std::vector<double>>(positions);
    auto inv_std = std::make_shared<std::vector<double>>(positions);
    std::vector<double> out(x.numel());
    for (int bb = 0; bb < B; ++bb)
        for (std::size_t r = 0; r < rest; ++r) {
            const std::size_t pos = static_cast<std::size_t>(bb) * rest + r;
            double m = 0.0;
            for (int c = 0; c < C; ++c)
                m += x.values()[(static_cast<std::size_t>(bb) * C + c) * rest + r];
            m /= C;
            double var = 0.0;
            for (int c = 0; c < C; ++c) {
                const double d = x.values()[(static_cast<std::size_t>(bb) * C + c) * rest + r] - m;
                var += d * d;
            }
            var /= C;
            const double is = 1.0 / std::sqrt(var + eps);
            (*mu)[pos] = m;
            (*inv_std)[pos] = is;
            for (int c = 0; c < C; ++c) {
                const std::size_t i = (static_cast<std::size_t>(bb) * C + c) * rest + r;
                out[i] = (x.values()[i] - m) * is * gamma.values()[c] + beta.values()[c];
            }
        }
    return Tensor(make_node(
        xs, std::move(out), {x.impl(), gamma.impl(), beta.impl()},
        [B, C, rest, mu, inv_std](TensorImpl& self) {
            auto& px = *self.parents[0];
            auto& pg = *self.parents[1];
            auto& pb = *self.parents[2];
            if (px.requires_grad) px.ensure_grad();
            if (pg.requires_grad) pg.ensure_grad();
            if (pb.requires_grad) pb.ensure_grad();
            for (int bb = 0; bb < B; ++bb)
                for (std::size_t r = 0; r < rest; ++r) {
                    const std::size_t pos = static_cast<std::size_t>(bb) * rest + r;
                    const double m = (*mu)[pos], is = (*inv_std)[pos];
                    double sum_g = 0.0, sum_gx = 0.0;
                    for (int c = 0; c < C; ++c) {
                        const std::size_t i = (static_cast<std::size_t>(bb) * C + c) * rest + r;
                        const double xhat = (px.values[i] - m) * is;
                        const double gnorm = self.grad[i] * pg.values[c];
                        sum_g += gnorm;
                        sum_gx += gnorm * xhat;
                        if (pg.requires_grad) pg.grad[c] += self.grad[i] * xhat;
                        if (pb.requires_grad) pb.grad[c] += self.grad[i];
                    }
                    if (px.requires_grad) {
                        for (int c = 0; c < C; ++c) {
                            const std::size_t i = (static_cast<std::size_t>(bb) * C + c) * rest + r;
                            const double xhat = (px.values[i] - m) * is;
                            const double gnorm = self.grad[i] * pg.values[c];
                            px.grad[i] += is * (gnorm - sum_g / C - xhat * sum_gx / C);
                        }
                    }
                }
        }));
}

Tensor gather_last(const Tensor& x, const std::vector<int>& idx) {
    const auto& xs = x.shape();
    if (xs.size() != 2) throw std::invalid_argument("gather_last: expect rank-2 input");
    const int B = xs[0], T = xs[1];
    for (int i : idx)
        if (i < 0 || i >= T) throw std::invalid_argument("gather_last: index out of range");
    const int J = static_cast<int>(idx.size());
    std::vector<double> out(static_cast<std::size_t>(B) * J);
    for (int bb = 0; bb < B; ++bb)
        for (int j = 0; j < J; ++j)
            out[static_cast<std::size_t>(bb) * J + j] =
                x.values()[static_cast<std::size_t>(bb) * T + idx[j]];
    auto idx_copy = std::make_shared<std::vector<int>>(idx);
    return Tensor(make_node({B, J}, std::move(out), {x.impl()},
                            [B, T, J, idx_copy](TensorImpl& self) {
                                auto& p = *self.parents[0];
                                if (!p.requires_grad) return;
                                p.ensure_grad();
                                for (int bb = 0; bb < B; ++bb)
                                    for (int j = 0; j < J; ++j)
                                        p.grad[static_cast<std::size_t>(bb) * T + (*idx_copy)[j]] +=
                                            self.grad[static_cast<std::size_t>(bb) * J + j];
                            }));
}

Tensor overlap_add(const Tensor& frames, int hop, int out_len) {
    const auto& fs = frames.shape();
    if (fs.size() != 3) throw std::invalid_argument("overlap_add: expect [B,M,L]");
    const int B = fs[0], M = fs[1], L = fs[2];
    if (hop <= 0 || (M - 1) * hop + L > out_len)
        throw std::invalid_argument("overlap_add: frames overrun output");
    std::vector<double> out(static_cast<std::size_t>(B) * out_len, 0.0);
    for (int bb = 0; bb < B; ++bb)
        for (int m = 0; m < M; ++m)
            for (int i = 0; i < L; ++i)
                out[static_cast<std::size_t>(bb) * out_len + m * hop + i] +=
                    frames.values()[(static_cast<std::size_t>(bb) * M + m) * L + i];
    return Tensor(make_node({B, out_len}, std::move(out), {frames.impl()},
                            [B, M, L, hop, out_len](TensorImpl& self) {
                                auto& p = *self.parents[0];
                                if (!p.requires_grad) return;
                                p.ensure_grad();
                                for (int bb = 0; bb < B; ++bb)
                                    for (int m = 0; m < M; ++m)
                                        for (int i = 0; i < L; ++i)
                                            p.grad[(static_cast<std::size_t>(bb) * M + m) * L + i] +=
                                                self.grad[static_cast<std::size_t>(bb) * out_len + m * hop + i];
                            }));
}

Tensor mul_vec(const Tensor& x, const std::vector<double>& v) {
    const auto& xs = x.shape();
    const int last = xs.back();
    if (static_cast<std::size_t>(last) != v.size())
        throw std::invalid_argument("mul_vec: vector length mismatch");
    const std::size_t rows = x.numel() / static_cast<std::size_t>(last);
    std::vector<double> out(x.numel());
    for (std::size_t r = 0; r < rows; ++r)
        for (int i = 0; i < last; ++i)
            out[r * last + i] = x.values()[r * last + i] * v[i];
    auto vc = std::make_shared<std::vector<double>>(v);
    return Tensor(make_node(xs, std::move(out), {x.impl()},
                            [rows, last, vc](TensorImpl& self) {
                                auto& p = *self.parents[0];
                                if (!p.requires_grad) return;
                                p.ensure_grad();
                                for (std::size_t r = 0; r < rows; ++r)
                                    for (int i = 0; i < last; ++i)
                                        p.grad[r * last + i] += self.grad[r * last + i] * (*vc)[i];
                            }));
}

AdamW::AdamW(std::vector<Tensor> params, AdamWConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
    for (const auto& p : params_) {
        m_.emplace_back(p.numel(), 0.0);
        v_.emplace_back(p.numel(), 0.0);
    }
}

void AdamW::step() { step_with_lr(cfg_.lr); }

void AdamW::step_with_lr(double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t pi = 0; pi < params_.size(); ++pi) {
        auto& p = params_[pi];
        const auto& g = p.grad();
        auto& vals = p.values();
        for (std::size_t i = 0; i < vals.size(); ++i) {
            m_[pi][i] = cfg_.beta1 * m_[pi][i] + (1.0 - cfg_.beta1) * g[i];
            v_[pi][i] = cfg_.beta2 * v_[pi][i] + (1.0 - cfg_.beta2) * g[i] * g[i];
            const double mhat = m_[pi][i] / bc1;
            const double vhat = v_[pi][i] / bc2;
            vals[i] -= lr * (mhat / (std::sqrt(vhat) + cfg_.eps) +
                             cfg_.weight_decay * vals[i]);
        }
    }
}

void AdamW::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

double clip_grad_norm(const std::vector<Tensor>& params, double max_norm) {
    double sq = 0.0;
    for (const auto& p : params)
        for (double g : const_cast<Tensor&>(p).grad()) sq += g * g;
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double s = max_norm / norm;
        for (const auto& p : params)
            for (double& g : const_cast<Tensor&>(p).grad()) g *= s;
    }
    return norm;
}

double cosine_lr(double lr0, std::int64_t step, std::int64_t total_steps) {
    if (total_steps <= 0 || step >= total_steps) return 0.0;
    const double t = static_cast<double>(step) / static_cast<double>(total_steps);
    return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

void save_checkpoint(const std::string& path,
                     const std::map<std::string, Tensor>& params) {
    std::ostringstream out(std::ios::binary);
    out.write("WVHX", 4);
    const std::uint32_t version = 1;
    out.write(reinterpret_cast<const char*>(&version), 4);
    for (const auto& [name, t] : params) {
        const std::uint32_t nlen = static_cast<std::uint32_t>(name.size());
        out.write(reinterpret_cast<const char*>(&nlen), 4);
        out.write(name.data(), nlen);
        const std::uint32_t rank = static_cast<std::uint32_t>(t.shape().size());
        out.write(reinterpret_cast<const char*>(&rank), 4);
        for (int d : t.shape()) {
            const std::uint32_t dim = static_cast<std::uint32_t>(d);
            out.write(reinterpret_cast<const char*>(&dim), 4);
        }
        out.write(reinterpret_cast<const char*>(t.values().data()),
                  static_cast<std::streamsize>(t.numel() * sizeof(double)));
    }
    atomic_write(path, out.str());
}

std::map<std::string, Tensor> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (std::memcmp(magic, "WVHX", 4) != 0)
        throw std::runtime_error("load_checkpoint: bad magic in " + path);
    std::uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), 4);
    if (version != 1) throw std::runtime_error("load_checkpoint: unsupported version");
    std::map<std::string, Tensor> params;
    while (true) {
        std::uint32_t nlen = 0;
        in.read(reinterpret_cast<char*>(&nlen), 4);
        if (!in) break;
        std::string name(nlen, '\0');
        in.read(name.data(), nlen);
        std::uint32_t rank = 0;
        in.read(reinterpret_cast<char*>(&rank), 4);
        std::vector<int> shape(rank);
        std::size_t n = 1;
        for (std::uint32_t i = 0; i < rank; ++i) {
            std::uint32_t d = 0;
            in.read(reinterpret_cast<char*>(&d), 4);
            shape[i] = static_cast<int>(d);
            n *= d;
        }
        std::vector<double> vals(n);
        in.read(reinterpret_cast<char*>(vals.data()),
                static_cast<std::streamsize>(n * sizeof(double)));
        if (!in) throw std::runtime_error("load_checkpoint: truncated record in " + path);
        params.emplace(name, Tensor::from(shape, std::move(vals)));
    }
    return params;
}

}  // namespace wavehax::ad
