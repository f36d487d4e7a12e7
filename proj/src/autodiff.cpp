#include "sslstm/autodiff.hpp"

#include "sslstm/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sslstm::ad {

// --- Parameters ---------------------------------------------------------------

std::size_t ParameterSet::add(std::string name, Tensor init, bool trainable)
{
    if (index_of(name)) throw std::invalid_argument("duplicate parameter name '" + name + "'");
    Parameter p;
    p.grad = Tensor(init.shape());
    p.value = std::move(init);
    p.name = std::move(name);
    p.trainable = trainable;
    params_.push_back(std::move(p));
    return params_.size() - 1;
}

std::optional<std::size_t> ParameterSet::index_of(std::string_view name) const
{
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (params_[i].name == name) return i;
    }
    return std::nullopt;
}

std::size_t ParameterSet::scalar_count() const
{
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
}

void ParameterSet::zero_grad()
{
    for (auto& p : params_) p.zero_grad();
}

double glorot_limit(std::size_t fan_in, std::size_t fan_out)
{
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

// --- Tape ------------------------------------------------------------------------

const Tensor& Var::value() const { return tape->value(id); }

Var Tape::constant(Tensor value)
{
    Node n;
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return Var{this, nodes_.size() - 1};
}

Var Tape::param(Parameter& p)
{
    Node n;
    n.external = &p.value;
    n.requires_grad = grad_enabled_ && p.trainable;
    if (n.requires_grad) n.sink = &p;
    nodes_.push_back(std::move(n));
    return Var{this, nodes_.size() - 1};
}

Var Tape::param(const Parameter& p)
{
    Node n;
    n.external = &p.value;
    nodes_.push_back(std::move(n));
    return Var{this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::initializer_list<Var> parents, BackwardFn fn)
{
    Node n;
    n.value = std::move(value);
    if (grad_enabled_) {
        for (const Var& p : parents) {
            if (p.tape != this) throw std::invalid_argument("operands recorded on different tapes");
            n.requires_grad = n.requires_grad || nodes_[p.id].requires_grad;
        }
        if (n.requires_grad) n.backward = std::move(fn);
    }
    nodes_.push_back(std::move(n));
    return Var{this, nodes_.size() - 1};
}

const Tensor& Tape::value(std::size_t id) const
{
    const Node& n = nodes_.at(id);
    return n.external ? *n.external : n.value;
}

Tensor* Tape::grad(std::size_t id)
{
    Node& n = nodes_.at(id);
    if (!n.requires_grad) return nullptr;
    if (n.grad.empty()) n.grad = Tensor(value(id).shape());
    return &n.grad;
}

const Tensor* Tape::grad_if_present(std::size_t id) const
{
    const Node& n = nodes_.at(id);
    return n.grad.empty() ? nullptr : &n.grad;
}

void Tape::backward(Var loss)
{
    if (loss.tape != this) throw std::invalid_argument("loss belongs to a different tape");
    if (value(loss.id).size() != 1) {
        throw ShapeError("backward needs a scalar loss, got shape " + shape_string(value(loss.id).shape()));
    }
    if (backward_done_) throw std::logic_error("backward already ran on this tape");
    backward_done_ = true;
    if (!nodes_[loss.id].requires_grad) return;
    grad(loss.id)->fill(1.0);
    for (std::size_t i = loss.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (n.grad.empty()) continue;
        if (n.backward) n.backward(*this, i);
    }
    for (Node& n : nodes_) {
        if (n.sink && !n.grad.empty()) n.sink->grad += n.grad;
    }
}

// --- Helpers ------------------------------------------------------------------------

namespace {

struct Dims {
    std::size_t rows;
    std::size_t cols;
};

Dims matrix_dims(const Tensor& t)
{
    if (t.rank() > 2) throw ShapeError("expected a vector or matrix, got " + shape_string(t.shape()));
    return {t.rows(), t.cols()};
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b)
{
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs "
                         + shape_string(b.shape()));
    }
}

template <typename F, typename G>
Var unary(Var a, F forward, G derivative_from_output)
{
    const Tensor& x = a.value();
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = forward(x[i]);
    const std::size_t ai = a.id;
    return a.tape->record(std::move(y), {a}, [ai, derivative_from_output](Tape& tape, std::size_t self) {
        const Tensor& g = *tape.grad(self);
        const Tensor& out = tape.value(self);
        if (Tensor* ga = tape.grad(ai)) {
            for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * derivative_from_output(out[i]);
        }
    });
}

double stable_sigmoid(double x)
{
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

} // namespace

// --- Elementwise ------------------------------------------------------------------------

Var add(Var a, Var b)
{
    require_same_shape("add", a.value(), b.value());
    Tensor y = a.value();
    y += b.value();
    const std::size_t ai = a.id, bi = b.id;
    return a.tape->record(std::move(y), {a, b}, [ai, bi](Tape& tape, std::size_t self) {
        const Tensor& g = *tape.grad(self);
        if (Tensor* ga = tape.grad(ai)) *ga += g;
        if (Tensor* gb = tape.grad(bi)) *gb += g;
    });
}

Var sub(Var a, Var b)
{
    require_same_shape("sub", a.value(), b.value());
    const Tensor& x = a.value();
    const Tensor& z = b.value();
    Tensor y(x.shape());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] - z[i];
    const std::size_t ai = a.id, bi = b.id;
    return a.tape->record(std::move(y), {a, b}, [ai, bi](Tape& tape, std::size_t self) {
        const Tensor& g = *tape.grad(self);
        if (Tensor* ga = tape.grad(ai)) *ga += g;
        if (Tensor* gb = tape.grad(bi)) {
            for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] -= g[i];
        }
    });
}

Var mul(Var a, Var b)
{
    require_same_shape("mul", a.value(), b.value());
    const Tensor& x = a.value();
    const Tensor& z = b.value();
    Tensor y(x.shape());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] * z[i];
    const std::size_t ai = a.id, bi = b.id;
    return a.tape->record(std::move(y), {a, b}, [ai, bi](Tape& tape, std::size_t self) {
        const Tensor& g = *tape.grad(self);
        const Tensor& x = tape.value(ai);
        const Tensor& z = tape.value(bi);
        if (Tensor* ga = tape.grad(ai)) {
            for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * z[i];
        }
        if (Tensor* gb = tape.grad(bi)) {
            for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * x[i];
        }
    });
}

Var scale(Var a, double c)
{
    const Tensor& x = a.value();
    Tensor y(x.shape());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = c * x[i];
    const std::size_t ai = a.id;
    return a.tape->record(std::move(y), {a}, [ai, c](Tape& tape, std::size_t self) {
        const Tensor& g = *tape.grad(self);
        if (Tensor* ga = tape.grad(ai)) {
            for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += c * g[i];
        }
    });
}

Var sigmoid(Var a)
{
    return unary(a, stable_sigmoid, [](double y) { return y * (1.0 - y); });
}

Var tanh(Var a)
{
    return unary(a, [](double x) { return std::tanh(x); }, [](double y) { return 1.0 - y * y; });
}

Var relu(Var a)
{
    return unary(a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double y) { return y > 0.0 ? 1.0 : 0.0; });
}

// --- Linear algebra ------------------------------------------------------------------------

Var add_bias(Var x, Var b)
{
    const Tensor& xv = x.value();
    const Tensor& bv = b.value();
    const Dims d = matrix_dims(xv);
    if (bv.rank() != 1 || bv.size() != d.rows) {
        throw ShapeError("add_bias: bias " + shape_string(bv.shape()) + " does not match " + shape_string(xv.shape()));
    }
    Tensor y = xv;
    for (std::size_t i = 0; i < d.rows; ++i) {
        for (std::size_t j = 0; j < d.cols; ++j) y[i * d.cols + j] += bv[i];
    }
    const std::size_t xi = x.id, bi = b.id;
    return x.tape->record(std::move(y), {x, b}, [xi, bi, d](Tape& tape, std::size_t self) {
        const Tensor& g = *tape.grad(self);
        if (Tensor* gx = tape.grad(xi)) *gx += g;
        if (Tensor* gb = tape.grad(bi)) {
            for (std::size_t i = 0; i < d.rows; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < d.cols; ++j) s += g[i * d.cols + j];
                (*gb)[i] += s;
            }
        }
    });
}

Var matmul(Var a, Var b)
{
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.rank() != 2 || bv.rank() < 1 || bv.rank() > 2 || av.shape()[1] != bv.shape()[0]) {
        throw ShapeError("matmul: cannot multiply " + shape_string(av.shape()) + " by " + shape_string(bv.shape()));
    }
    const std::size_t m = av.shape()[0], k = av.shape()[1], n = bv.cols();
    Tensor y(bv.rank() == 1 ? Shape{m} : Shape{m, n});
    kernels::gemm(kernels::Trans::No, kernels::Trans::No, m, n, k, av.data(), bv.data(), y.data());
    const std::size_t ai = a.id, bi = b.id;
    return a.tape->record(std::move(y), {a, b}, [ai, bi, m, n, k](Tape& tape, std::size_t self) {
        const Tensor& g = *tape.grad(self);
        if (Tensor* ga = tape.grad(ai)) {
            // dA = dC * B^T
            kernels::gemm(kernels::Trans::No, kernels::Trans::Yes, m, k, n, g.data(), tape.value(bi).data(),
                          ga->data(), true);
        }
        if (Tensor* gb = tape.grad(bi)) {
            // dB = A^T * dC
            kernels::gemm(kernels::Trans::Yes, kernels::Trans::No, k, n, m, tape.value(ai).data(), g.data(),
                          gb->data(), true);
        }
    });
}

Var concat_rows(Var a, Var b)
{
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    const Dims da = matrix_dims(av);
    const Dims db = matrix_dims(bv);
    if (da.cols != db.cols || av.rank() != bv.rank()) {
        throw ShapeError("concat_rows: column mismatch " + shape_string(av.shape()) + " vs " + shape_string(bv.shape()));
    }
    Shape shape = av.rank() == 1 ? Shape{da.rows + db.rows} : Shape{da.rows + db.rows, da.cols};
    std::vector<double> data;
    data.reserve(av.size() + bv.size());
    data.insert(data.end(), av.data().begin(), av.data().end());
    data.insert(data.end(), bv.data().begin(), bv.data().end());
    const std::size_t ai = a.id, bi = b.id;
    const std::size_t split = av.size();
    return a.tape->record(Tensor(std::move(shape), std::move(data)), {a, b},
                          [ai, bi, split](Tape& tape, std::size_t self) {
                              const Tensor& g = *tape.grad(self);
                              if (Tensor* ga = tape.grad(ai)) {
                                  for (std::size_t i = 0; i < split; ++i) (*ga)[i] += g[i];
                              }
                              if (Tensor* gb = tape.grad(bi)) {
                                  for (std::size_t i = 0; i < gb->size(); ++i) (*gb)[i] += g[split + i];
                              }
                          });
}

Var slice_rows(Var x, std::size_t begin, std::size_t count)
{
    const Tensor& xv = x.value();
    const Dims d = matrix_dims(xv);
    if (begin + count > d.rows || count == 0) {
        throw ShapeError("slice_rows: rows [" + std::to_string(begin) + ", " + std::to_string(begin + count)
                         + ") out of range for " + shape_string(xv.shape()));
    }
    Shape shape = xv.rank() == 1 ? Shape{count} : Shape{count, d.cols};
    const auto first = xv.data().begin() + static_cast<std::ptrdiff_t>(begin * d.cols);
    std::vector<double> data(first, first + static_cast<std::ptrdiff_t>(count * d.cols));
    const std::size_t xi = x.id;
    const std::size_t offset = begin * d.cols;
    return x.tape->record(Tensor(std::move(shape), std::move(data)), {x}, [xi, offset](Tape& tape, std::size_t self) {
        const Tensor& g = *tape.grad(self);
        if (Tensor* gx = tape.grad(xi)) {
            for (std::size_t i = 0; i < g.size(); ++i) (*gx)[offset + i] += g[i];
        }
    });
}

Var sum(Var x)
{
    double s = 0.0;
    for (double v : x.value().data()) s += v;
    const std::size_t xi = x.id;
    return x.tape->record(Tensor(Shape{}, {s}), {x}, [xi](Tape& tape, std::size_t self) {
        const double g = tape.grad(self)->item();
        if (Tensor* gx = tape.grad(xi)) {
            for (auto& v : gx->data()) v += g;
        }
    });
}

// --- Probabilities ------------------------------------------------------------------------

Var softmax(Var logits)
{
    const Tensor& x = logits.value();
    const Dims d = matrix_dims(x);
    if (d.rows == 0) throw ShapeError("softmax of an empty vector");
    Tensor y(x.shape());
    for (std::size_t j = 0; j < d.cols; ++j) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < d.rows; ++i) mx = std::max(mx, x[i * d.cols + j]);
        double z = 0.0;
        for (std::size_t i = 0; i < d.rows; ++i) {
            const double e = std::exp(x[i * d.cols + j] - mx);
            y[i * d.cols + j] = e;
            z += e;
        }
        for (std::size_t i = 0; i < d.rows; ++i) y[i * d.cols + j] /= z;
    }
    const std::size_t xi = logits.id;
    return logits.tape->record(std::move(y), {logits}, [xi, d](Tape& tape, std::size_t self) {
        const Tensor& g = *tape.grad(self);
        const Tensor& p = tape.value(self);
        Tensor* gx = tape.grad(xi);
        if (!gx) return;
        for (std::size_t j = 0; j < d.cols; ++j) {
            double dot = 0.0;
            for (std::size_t i = 0; i < d.rows; ++i) dot += p[i * d.cols + j] * g[i * d.cols + j];
            for (std::size_t i = 0; i < d.rows; ++i) {
                (*gx)[i * d.cols + j] += p[i * d.cols + j] * (g[i * d.cols + j] - dot);
            }
        }
    });
}

Var cross_entropy(Var probs, std::span<const std::size_t> gold, std::span<const double> weights)
{
    const Tensor& p = probs.value();
    const Dims d = matrix_dims(p);
    if (gold.size() != d.cols) {
        throw ShapeError("cross_entropy: " + std::to_string(gold.size()) + " gold labels for "
                         + shape_string(p.shape()));
    }
    if (!weights.empty() && weights.size() != d.cols) throw ShapeError("cross_entropy: weight count mismatch");
    std::vector<double> w(d.cols, 1.0);
    if (!weights.empty()) w.assign(weights.begin(), weights.end());
    double total_w = 0.0;
    for (double x : w) total_w += x;
    if (!(total_w > 0.0)) throw std::invalid_argument("cross_entropy: weights must sum to a positive value");
    double loss = 0.0;
    for (std::size_t j = 0; j < d.cols; ++j) {
        if (gold[j] >= d.rows) {
            throw std::out_of_range("cross_entropy: gold index " + std::to_string(gold[j]) + " out of range for "
                                    + std::to_string(d.rows) + " classes");
        }
        loss += w[j] * -std::log(std::max(p[gold[j] * d.cols + j], kProbabilityFloor));
    }
    loss /= total_w;
    const std::size_t pi = probs.id;
    std::vector<std::size_t> labels(gold.begin(), gold.end());
    return probs.tape->record(Tensor(Shape{}, {loss}), {probs},
                              [pi, d, labels = std::move(labels), w = std::move(w), total_w](Tape& tape,
                                                                                           std::size_t self) {
                                  const double g = tape.grad(self)->item();
                                  Tensor* gp = tape.grad(pi);
                                  if (!gp) return;
                                  const Tensor& p = tape.value(pi);
                                  for (std::size_t j = 0; j < d.cols; ++j) {
                                      const std::size_t idx = labels[j] * d.cols + j;
                                      if (p[idx] > kProbabilityFloor) (*gp)[idx] -= g * w[j] / (total_w * p[idx]);
                                  }
                              });
}

// --- Convolution and pooling ------------------------------------------------------------------------

Var conv1d(Var input, Var filters)
{
    const Tensor& x = input.value();
    const Tensor& f = filters.value();
    if (x.rank() != 2 || f.rank() != 3 || f.shape()[1] != x.shape()[0] || f.shape()[2] == 0 || x.shape()[1] == 0) {
        throw ShapeError("conv1d: input " + shape_string(x.shape()) + " incompatible with filters "
                         + shape_string(f.shape()));
    }
    const std::size_t c_in = x.shape()[0], length = x.shape()[1];
    const std::size_t c_out = f.shape()[0], width = f.shape()[2];
    Tensor y({c_out, length});
    kernels::conv1d_forward(x.data(), f.data(), y.data(), c_in, c_out, width, length);
    const std::size_t xi = input.id, fi = filters.id;
    return input.tape->record(std::move(y), {input, filters},
                              [xi, fi, c_in, c_out, width, length](Tape& tape, std::size_t self) {
                                  const Tensor& g = *tape.grad(self);
                                  Tensor* gx = tape.grad(xi);
                                  Tensor* gf = tape.grad(fi);
                                  kernels::conv1d_backward(tape.value(xi).data(), tape.value(fi).data(), g.data(),
                                                           gx ? gx->data() : std::span<double>{},
                                                           gf ? gf->data() : std::span<double>{}, c_in, c_out,
                                                           width, length);
                              });
}

Var maxpool_segments(Var x, std::vector<std::pair<std::size_t, std::size_t>> segments)
{
    const Tensor& xv = x.value();
    if (xv.rank() != 2) throw ShapeError("maxpool: expected a matrix, got " + shape_string(xv.shape()));
    const std::size_t c = xv.shape()[0], length = xv.shape()[1];
    const std::size_t s_count = segments.size();
    Tensor y({c, s_count});
    std::vector<std::size_t> argmax(c * s_count);
    for (std::size_t s = 0; s < s_count; ++s) {
        const auto [start, len] = segments[s];
        if (len == 0 || start + len > length) {
            throw ShapeError("maxpool: segment out of range for " + shape_string(xv.shape()));
        }
        for (std::size_t ch = 0; ch < c; ++ch) {
            std::size_t best = start;
            for (std::size_t t = start + 1; t < start + len; ++t) {
                if (xv[ch * length + t] > xv[ch * length + best]) best = t;
            }
            argmax[ch * s_count + s] = best;
            y[ch * s_count + s] = xv[ch * length + best];
        }
    }
    const std::size_t xi = x.id;
    return x.tape->record(std::move(y), {x}, [xi, c, length, argmax = std::move(argmax)](Tape& tape, std::size_t self) {
        const Tensor& g = *tape.grad(self);
        Tensor* gx = tape.grad(xi);
        if (!gx) return;
        const std::size_t s_count = g.size() / c;
        for (std::size_t ch = 0; ch < c; ++ch) {
            for (std::size_t s = 0; s < s_count; ++s) {
                (*gx)[ch * length + argmax[ch * s_count + s]] += g[ch * s_count + s];
            }
        }
    });
}

Var maxpool_time(Var x)
{
    const Tensor& xv = x.value();
    if (xv.rank() != 2 || xv.shape()[1] == 0) {
        throw ShapeError("maxpool_time: expected c x T with T >= 1, got " + shape_string(xv.shape()));
    }
    const std::size_t c = xv.shape()[0], length = xv.shape()[1];
    Tensor y({c});
    std::vector<std::size_t> argmax(c);
    for (std::size_t ch = 0; ch < c; ++ch) {
        std::size_t best = 0;
        for (std::size_t t = 1; t < length; ++t) {
            if (xv[ch * length + t] > xv[ch * length + best]) best = t;
        }
        argmax[ch] = best;
        y[ch] = xv[ch * length + best];
    }
    const std::size_t xi = x.id;
    return x.tape->record(std::move(y), {x}, [xi, length, argmax = std::move(argmax)](Tape& tape, std::size_t self) {
        const Tensor& g = *tape.grad(self);
        Tensor* gx = tape.grad(xi);
        if (!gx) return;
        for (std::size_t ch = 0; ch < argmax.size(); ++ch) (*gx)[ch * length + argmax[ch]] += g[ch];
    });
}

// --- Indexing ------------------------------------------------------------------------

Var embedding_lookup(Var table, std::vector<std::ptrdiff_t> indices)
{
    const Tensor& tv = table.value();
    if (tv.rank() != 2) throw ShapeError("embedding_lookup: table must be V x e, got " + shape_string(tv.shape()));
    const std::size_t vocab = tv.shape()[0], e = tv.shape()[1], n = indices.size();
    Tensor y({e, n});
    for (std::size_t j = 0; j < n; ++j) {
        const auto idx = indices[j];
        if (idx < 0) continue;
        if (static_cast<std::size_t>(idx) >= vocab) {
            throw std::out_of_range("embedding_lookup: index " + std::to_string(idx) + " >= " + std::to_string(vocab));
        }
        for (std::size_t k = 0; k < e; ++k) y[k * n + j] = tv[static_cast<std::size_t>(idx) * e + k];
    }
    const std::size_t ti = table.id;
    return table.tape->record(std::move(y), {table}, [ti, e, n, indices = std::move(indices)](Tape& tape, std::size_t self) {
        const Tensor& g = *tape.grad(self);
        Tensor* gt = tape.grad(ti);
        if (!gt) return;
        for (std::size_t j = 0; j < n; ++j) {
            if (indices[j] < 0) continue;
            const auto row = static_cast<std::size_t>(indices[j]);
            for (std::size_t k = 0; k < e; ++k) (*gt)[row * e + k] += g[k * n + j];
        }
    });
}

Var gather_cols(Var x, std::vector<std::ptrdiff_t> indices)
{
    const Tensor& xv = x.value();
    if (xv.rank() != 2) throw ShapeError("gather_cols: expected a matrix, got " + shape_string(xv.shape()));
    const std::size_t m = xv.shape()[0], n = xv.shape()[1], k = indices.size();
    Tensor y({m, k});
    for (std::size_t j = 0; j < k; ++j) {
        const auto idx = indices[j];
        if (idx < 0) continue;
        if (static_cast<std::size_t>(idx) >= n) {
            throw std::out_of_range("gather_cols: column " + std::to_string(idx) + " >= " + std::to_string(n));
        }
        for (std::size_t i = 0; i < m; ++i) y[i * k + j] = xv[i * n + static_cast<std::size_t>(idx)];
    }
    const std::size_t xi = x.id;
    return x.tape->record(std::move(y), {x}, [xi, m, n, k, indices = std::move(indices)](Tape& tape, std::size_t self) {
        const Tensor& g = *tape.grad(self);
        Tensor* gx = tape.grad(xi);
        if (!gx) return;
        for (std::size_t j = 0; j < k; ++j) {
            if (indices[j] < 0) continue;
            const auto col = static_cast<std::size_t>(indices[j]);
            for (std::size_t i = 0; i < m; ++i) (*gx)[i * n + col] += g[i * k + j];
        }
    });
}

Var where_cols(std::vector<std::uint8_t> take_a, Var a, Var b)
{
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    require_same_shape("where_cols", av, bv);
    const Dims d = matrix_dims(av);
    if (take_a.size() != d.cols) throw ShapeError("where_cols: mask length does not match column count");
    Tensor y(av.shape());
    for (std::size_t i = 0; i < d.rows; ++i) {
        for (std::size_t j = 0; j < d.cols; ++j) {
            y[i * d.cols + j] = take_a[j] ? av[i * d.cols + j] : bv[i * d.cols + j];
        }
    }
    const std::size_t ai = a.id, bi = b.id;
    return a.tape->record(std::move(y), {a, b}, [ai, bi, d, take_a = std::move(take_a)](Tape& tape, std::size_t self) {
        const Tensor& g = *tape.grad(self);
        Tensor* ga = tape.grad(ai);
        Tensor* gb = tape.grad(bi);
        for (std::size_t i = 0; i < d.rows; ++i) {
            for (std::size_t j = 0; j < d.cols; ++j) {
                Tensor* target = take_a[j] ? ga : gb;
                if (target) (*target)[i * d.cols + j] += g[i * d.cols + j];
            }
        }
    });
}

} // namespace sslstm::ad
