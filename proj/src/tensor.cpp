#include "modrec/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "modrec/rng.hpp"

namespace modrec {

namespace {

thread_local bool t_grad_enabled = true;

}  // namespace

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << ", ";
        os << s[i];
    }
    os << "]";
    return os.str();
}

std::int64_t shape_numel(const Shape& s) {
    std::int64_t n = 1;
    for (auto d : s) n *= d;
    return n;
}

void TensorNode::ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
}

void TensorNode::add_grad(const std::vector<double>& g) {
    ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) grad[i] += g[i];
}

NoGradGuard::NoGradGuard() : prev_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = prev_; }

bool grad_enabled() { return t_grad_enabled; }

// ---- Tensor handle ----------------------------------------------------

namespace {

std::shared_ptr<TensorNode> new_leaf(Shape shape, std::vector<double> data, bool requires_grad) {
    auto n = std::make_shared<TensorNode>();
    if (shape_numel(shape) != static_cast<std::int64_t>(data.size()))
        throw DimensionError("tensor data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str(shape));
    n->shape = std::move(shape);
    n->data = std::move(data);
    n->requires_grad = requires_grad;
    return n;
}

// Records the graph edge only when grads are on and some input needs them.
Tensor make_op(Shape shape, std::vector<double> data,
               std::vector<std::shared_ptr<TensorNode>> parents,
               std::function<void(TensorNode&)> backprop) {
    auto n = std::make_shared<TensorNode>();
    n->shape = std::move(shape);
    n->data = std::move(data);
    bool track = t_grad_enabled;
    if (track) {
        track = false;
        for (const auto& p : parents)
            if (p->requires_grad) track = true;
    }
    if (track) {
        n->requires_grad = true;
        n->parents = std::move(parents);
        n->backprop = std::move(backprop);
    }
    return Tensor(std::move(n));
}

void check_2d(const Tensor& t, const char* who) {
    if (t.ndim() != 2)
        throw DimensionError(std::string(who) + " expects a 2-D tensor, got " + shape_str(t.shape()));
}

}  // namespace

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    auto n = shape_numel(shape);
    return Tensor(new_leaf(std::move(shape), std::vector<double>(static_cast<std::size_t>(n), 0.0),
                           requires_grad));
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    auto n = shape_numel(shape);
    return Tensor(new_leaf(std::move(shape), std::vector<double>(static_cast<std::size_t>(n), value),
                           requires_grad));
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
    return Tensor(new_leaf(std::move(shape), std::move(data), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from_data({1}, {value}, requires_grad);
}

const Shape& Tensor::shape() const { return node_->shape; }
std::int64_t Tensor::size() const { return node_->numel(); }
std::vector<double>& Tensor::data() { return node_->data; }
const std::vector<double>& Tensor::data() const { return node_->data; }
bool Tensor::requires_grad() const { return node_->requires_grad; }
bool Tensor::has_grad() const { return defined() && !node_->grad.empty(); }

const std::vector<double>& Tensor::grad() const {
    if (node_->grad.empty())
        throw ContractError("tensor has no gradient; run backward() first");
    return node_->grad;
}

void Tensor::zero_grad() {
    std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

double Tensor::item() const {
    if (size() != 1) throw ContractError("item() on non-scalar tensor " + shape_str(shape()));
    return node_->data[0];
}

double Tensor::at(std::int64_t r, std::int64_t c) const {
    check_2d(*this, "at");
    return node_->data[static_cast<std::size_t>(r * dim(1) + c)];
}

// ---- matmul ------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    check_2d(a, "matmul");
    check_2d(b, "matmul");
    const std::int64_t m = a.dim(0), k = a.dim(1), k2 = b.dim(0), p = b.dim(1);
    if (k != k2)
        throw DimensionError("matmul inner dimensions disagree: " + shape_str(a.shape()) + " x " +
                             shape_str(b.shape()));
    std::vector<double> out(static_cast<std::size_t>(m * p), 0.0);
    const double* A = a.data().data();
    const double* B = b.data().data();
    for (std::int64_t i = 0; i < m; ++i) {
        double* crow = &out[static_cast<std::size_t>(i * p)];
        const double* arow = &A[i * k];
        for (std::int64_t kk = 0; kk < k; ++kk) {
            const double av = arow[kk];
            const double* brow = &B[kk * p];
            for (std::int64_t j = 0; j < p; ++j) crow[static_cast<std::size_t>(j)] += av * brow[j];
        }
    }
    auto an = a.node_ptr();
    auto bn = b.node_ptr();
    return make_op(
        {m, p}, std::move(out), {an, bn},
        [an = an.get(), bn = bn.get(), m, k, p](TensorNode& self) {
            const double* G = self.grad.data();
            if (an->requires_grad) {
                an->ensure_grad();
                const double* B = bn->data.data();
                for (std::int64_t i = 0; i < m; ++i) {
                    const double* grow = &G[i * p];
                    double* darow = &an->grad[static_cast<std::size_t>(i * k)];
                    for (std::int64_t kk = 0; kk < k; ++kk) {
                        const double* brow = &B[kk * p];
                        double acc = 0.0;
                        for (std::int64_t j = 0; j < p; ++j) acc += grow[j] * brow[j];
                        darow[kk] += acc;
                    }
                }
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                const double* A = an->data.data();
                for (std::int64_t i = 0; i < m; ++i) {
                    const double* grow = &G[i * p];
                    const double* arow = &A[i * k];
                    for (std::int64_t kk = 0; kk < k; ++kk) {
                        const double av = arow[kk];
                        double* dbrow = &bn->grad[static_cast<std::size_t>(kk * p)];
                        for (std::int64_t j = 0; j < p; ++j) dbrow[j] += av * grow[j];
                    }
                }
            }
        });
}

Tensor transpose(const Tensor& a) {
    check_2d(a, "transpose");
    const std::int64_t m = a.dim(0), n = a.dim(1);
    std::vector<double> out(static_cast<std::size_t>(m * n));
    const double* A = a.data().data();
    for (std::int64_t i = 0; i < m; ++i)
        for (std::int64_t j = 0; j < n; ++j) out[static_cast<std::size_t>(j * m + i)] = A[i * n + j];
    auto an = a.node_ptr();
    return make_op({n, m}, std::move(out), {an}, [an = an.get(), m, n](TensorNode& self) {
        an->ensure_grad();
        for (std::int64_t i = 0; i < m; ++i)
            for (std::int64_t j = 0; j < n; ++j)
                an->grad[static_cast<std::size_t>(i * n + j)] += self.grad[static_cast<std::size_t>(j * m + i)];
    });
}

// ---- elementwise -------------------------------------------------------

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* who) {
    if (a.shape() != b.shape())
        throw DimensionError(std::string(who) + " shape mismatch: " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    std::vector<double> out(a.data());
    const auto& B = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += B[i];
    auto an = a.node_ptr(), bn = b.node_ptr();
    return make_op(a.shape(), std::move(out), {an, bn}, [an = an.get(), bn = bn.get()](TensorNode& self) {
        if (an->requires_grad) an->add_grad(self.grad);
        if (bn->requires_grad) bn->add_grad(self.grad);
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    std::vector<double> out(a.data());
    const auto& B = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= B[i];
    auto an = a.node_ptr(), bn = b.node_ptr();
    return make_op(a.shape(), std::move(out), {an, bn}, [an = an.get(), bn = bn.get()](TensorNode& self) {
        if (an->requires_grad) an->add_grad(self.grad);
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] -= self.grad[i];
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    std::vector<double> out(a.data());
    const auto& B = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= B[i];
    auto an = a.node_ptr(), bn = b.node_ptr();
    return make_op(a.shape(), std::move(out), {an, bn}, [an = an.get(), bn = bn.get()](TensorNode& self) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i] * bn->data[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] += self.grad[i] * an->data[i];
        }
    });
}

Tensor add_rowvec(const Tensor& a, const Tensor& v) {
    check_2d(a, "add_rowvec");
    if (v.ndim() != 1 || v.dim(0) != a.dim(1))
        throw DimensionError("add_rowvec: matrix " + shape_str(a.shape()) + " vs vector " +
                             shape_str(v.shape()));
    const std::int64_t m = a.dim(0), n = a.dim(1);
    std::vector<double> out(a.data());
    const auto& V = v.data();
    for (std::int64_t i = 0; i < m; ++i)
        for (std::int64_t j = 0; j < n; ++j) out[static_cast<std::size_t>(i * n + j)] += V[static_cast<std::size_t>(j)];
    auto an = a.node_ptr(), vn = v.node_ptr();
    return make_op(a.shape(), std::move(out), {an, vn},
                   [an = an.get(), vn = vn.get(), m, n](TensorNode& self) {
                       if (an->requires_grad) an->add_grad(self.grad);
                       if (vn->requires_grad) {
                           vn->ensure_grad();
                           for (std::int64_t i = 0; i < m; ++i)
                               for (std::int64_t j = 0; j < n; ++j)
                                   vn->grad[static_cast<std::size_t>(j)] += self.grad[static_cast<std::size_t>(i * n + j)];
                       }
                   });
}

Tensor scale(const Tensor& a, double s) {
    std::vector<double> out(a.data());
    for (auto& x : out) x *= s;
    auto an = a.node_ptr();
    return make_op(a.shape(), std::move(out), {an}, [an = an.get(), s](TensorNode& self) {
        an->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += s * self.grad[i];
    });
}

Tensor relu(const Tensor& a) {
    std::vector<double> out(a.data());
    for (auto& x : out) x = x > 0.0 ? x : 0.0;
    auto an = a.node_ptr();
    return make_op(a.shape(), std::move(out), {an}, [an = an.get()](TensorNode& self) {
        an->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i)
            if (an->data[i] > 0.0) an->grad[i] += self.grad[i];
    });
}

// ---- softmax -----------------------------------------------------------

Tensor softmax(const Tensor& a, int axis) {
    const auto& sh = a.shape();
    const int nd = static_cast<int>(sh.size());
    if (axis < 0) axis += nd;
    if (axis < 0 || axis >= nd)
        throw DimensionError("softmax axis " + std::to_string(axis) + " invalid for shape " +
                             shape_str(sh));
    const std::int64_t len = sh[static_cast<std::size_t>(axis)];
    std::int64_t inner = 1;
    for (int i = axis + 1; i < nd; ++i) inner *= sh[static_cast<std::size_t>(i)];
    const std::int64_t lanes = a.size() / len;

    std::vector<double> out(a.data().size());
    const double* X = a.data().data();
    for (std::int64_t lane = 0; lane < lanes; ++lane) {
        const std::int64_t base = (lane / inner) * inner * len + (lane % inner);
        double mx = X[base];
        for (std::int64_t i = 1; i < len; ++i) mx = std::max(mx, X[base + i * inner]);
        double denom = 0.0;
        for (std::int64_t i = 0; i < len; ++i) {
            double e = std::exp(X[base + i * inner] - mx);
            out[static_cast<std::size_t>(base + i * inner)] = e;
            denom += e;
        }
        for (std::int64_t i = 0; i < len; ++i) out[static_cast<std::size_t>(base + i * inner)] /= denom;
    }
    auto an = a.node_ptr();
    return make_op(sh, std::move(out), {an}, [an = an.get(), len, inner, lanes](TensorNode& self) {
        an->ensure_grad();
        const double* Y = self.data.data();
        const double* G = self.grad.data();
        for (std::int64_t lane = 0; lane < lanes; ++lane) {
            const std::int64_t base = (lane / inner) * inner * len + (lane % inner);
            double dot = 0.0;
            for (std::int64_t i = 0; i < len; ++i) dot += G[base + i * inner] * Y[base + i * inner];
            for (std::int64_t i = 0; i < len; ++i) {
                const std::int64_t ix = base + i * inner;
                an->grad[static_cast<std::size_t>(ix)] += Y[ix] * (G[ix] - dot);
            }
        }
    });
}

// ---- layer norm ----------------------------------------------------------

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
    if (eps <= 0.0) throw ConfigError("layer_norm eps must be > 0");
    const auto& sh = x.shape();
    const std::int64_t d = sh.back();
    if (gain.ndim() != 1 || gain.dim(0) != d || bias.ndim() != 1 || bias.dim(0) != d)
        throw DimensionError("layer_norm gain/bias " + shape_str(gain.shape()) + "/" +
                             shape_str(bias.shape()) + " do not match last dim of " + shape_str(sh));
    const std::int64_t rows = x.size() / d;
    std::vector<double> out(x.data().size());
    std::vector<double> xhat(x.data().size());
    std::vector<double> inv_sd(static_cast<std::size_t>(rows));
    const double* X = x.data().data();
    const double* Gn = gain.data().data();
    const double* Bs = bias.data().data();
    for (std::int64_t r = 0; r < rows; ++r) {
        const double* row = &X[r * d];
        double mu = 0.0;
        for (std::int64_t j = 0; j < d; ++j) mu += row[j];
        mu /= static_cast<double>(d);
        double var = 0.0;
        for (std::int64_t j = 0; j < d; ++j) {
            const double c = row[j] - mu;
            var += c * c;
        }
        var /= static_cast<double>(d);
        const double is = 1.0 / std::sqrt(var + eps);
        inv_sd[static_cast<std::size_t>(r)] = is;
        for (std::int64_t j = 0; j < d; ++j) {
            const double xh = (row[j] - mu) * is;
            xhat[static_cast<std::size_t>(r * d + j)] = xh;
            out[static_cast<std::size_t>(r * d + j)] = Gn[j] * xh + Bs[j];
        }
    }
    auto xn = x.node_ptr();
    auto gn = gain.node_ptr();
    auto bn = bias.node_ptr();
    return make_op(sh, std::move(out), {xn, gn, bn},
                   [xn = xn.get(), gn = gn.get(), bn = bn.get(), rows, d,
                    xhat = std::move(xhat), inv_sd = std::move(inv_sd)](TensorNode& self) {
                       const double* G = self.grad.data();
                       for (std::int64_t r = 0; r < rows; ++r) {
                           const double* gr = &G[r * d];
                           const double* xh = &xhat[static_cast<std::size_t>(r * d)];
                           if (bn->requires_grad) {
                               bn->ensure_grad();
                               for (std::int64_t j = 0; j < d; ++j) bn->grad[static_cast<std::size_t>(j)] += gr[j];
                           }
                           if (gn->requires_grad) {
                               gn->ensure_grad();
                               for (std::int64_t j = 0; j < d; ++j)
                                   gn->grad[static_cast<std::size_t>(j)] += gr[j] * xh[j];
                           }
                           if (xn->requires_grad) {
                               xn->ensure_grad();
                               double mean_h = 0.0, mean_hx = 0.0;
                               for (std::int64_t j = 0; j < d; ++j) {
                                   const double h = gr[j] * gn->data[static_cast<std::size_t>(j)];
                                   mean_h += h;
                                   mean_hx += h * xh[j];
                               }
                               mean_h /= static_cast<double>(d);
                               mean_hx /= static_cast<double>(d);
                               const double is = inv_sd[static_cast<std::size_t>(r)];
                               for (std::int64_t j = 0; j < d; ++j) {
                                   const double h = gr[j] * gn->data[static_cast<std::size_t>(j)];
                                   xn->grad[static_cast<std::size_t>(r * d + j)] +=
                                       (h - mean_h - xh[j] * mean_hx) * is;
                               }
                           }
                       }
                   });
}

// ---- conv1d (same padding) ----------------------------------------------

Tensor conv1d_same(const Tensor& x, const Tensor& w, const Tensor& b) {
    Shape xs = x.shape();
    const bool batched = xs.size() == 3;
    if (!batched && xs.size() != 2)
        throw DimensionError("conv1d_same expects [Cin x L] or [B x Cin x L], got " + shape_str(xs));
    if (w.ndim() != 3)
        throw DimensionError("conv1d_same weights must be [Cout x Cin x k], got " + shape_str(w.shape()));
    const std::int64_t B = batched ? xs[0] : 1;
    const std::int64_t cin = batched ? xs[1] : xs[0];
    const std::int64_t L = batched ? xs[2] : xs[1];
    const std::int64_t cout = w.dim(0), wcin = w.dim(1), k = w.dim(2);
    if (wcin != cin)
        throw DimensionError("conv1d_same channel mismatch: input " + shape_str(xs) + " vs weights " +
                             shape_str(w.shape()));
    if (k % 2 == 0) throw ConfigError("conv1d_same kernel size must be odd, got " + std::to_string(k));
    if (b.ndim() != 1 || b.dim(0) != cout)
        throw DimensionError("conv1d_same bias " + shape_str(b.shape()) + " must be [" +
                             std::to_string(cout) + "]");
    const std::int64_t pad = (k - 1) / 2;
    std::vector<double> out(static_cast<std::size_t>(B * cout * L));
    const double* X = x.data().data();
    const double* W = w.data().data();
    const double* Bi = b.data().data();
    for (std::int64_t bi = 0; bi < B; ++bi) {
        const double* xb = &X[bi * cin * L];
        double* yb = &out[static_cast<std::size_t>(bi * cout * L)];
        for (std::int64_t o = 0; o < cout; ++o) {
            double* yrow = &yb[o * L];
            for (std::int64_t t = 0; t < L; ++t) yrow[t] = Bi[o];
            for (std::int64_t c = 0; c < cin; ++c) {
                const double* xrow = &xb[c * L];
                const double* wk = &W[(o * cin + c) * k];
                for (std::int64_t j = 0; j < k; ++j) {
                    const double wv = wk[j];
                    const std::int64_t off = j - pad;
                    const std::int64_t t0 = std::max<std::int64_t>(0, -off);
                    const std::int64_t t1 = std::min<std::int64_t>(L, L - off);
                    for (std::int64_t t = t0; t < t1; ++t) yrow[t] += wv * xrow[t + off];
                }
            }
        }
    }
    Shape osh = batched ? Shape{B, cout, L} : Shape{cout, L};
    auto xn = x.node_ptr();
    auto wn = w.node_ptr();
    auto bn = b.node_ptr();
    return make_op(std::move(osh), std::move(out), {xn, wn, bn},
                   [xn = xn.get(), wn = wn.get(), bn = bn.get(), B, cin, cout, L, k,
                    pad](TensorNode& self) {
                       const double* G = self.grad.data();
                       if (bn->requires_grad) {
                           bn->ensure_grad();
                           for (std::int64_t bi = 0; bi < B; ++bi)
                               for (std::int64_t o = 0; o < cout; ++o) {
                                   const double* grow = &G[(bi * cout + o) * L];
                                   double acc = 0.0;
                                   for (std::int64_t t = 0; t < L; ++t) acc += grow[t];
                                   bn->grad[static_cast<std::size_t>(o)] += acc;
                               }
                       }
                       if (wn->requires_grad) {
                           wn->ensure_grad();
                           for (std::int64_t bi = 0; bi < B; ++bi)
                               for (std::int64_t o = 0; o < cout; ++o) {
                                   const double* grow = &G[(bi * cout + o) * L];
                                   for (std::int64_t c = 0; c < cin; ++c) {
                                       const double* xrow = &xn->data[static_cast<std::size_t>((bi * cin + c) * L)];
                                       double* wg = &wn->grad[static_cast<std::size_t>((o * cin + c) * k)];
                                       for (std::int64_t j = 0; j < k; ++j) {
                                           const std::int64_t off = j - pad;
                                           const std::int64_t t0 = std::max<std::int64_t>(0, -off);
                                           const std::int64_t t1 = std::min<std::int64_t>(L, L - off);
                                           double acc = 0.0;
                                           for (std::int64_t t = t0; t < t1; ++t) acc += grow[t] * xrow[t + off];
                                           wg[j] += acc;
                                       }
                                   }
                               }
                       }
                       if (xn->requires_grad) {
                           xn->ensure_grad();
                           for (std::int64_t bi = 0; bi < B; ++bi)
                               for (std::int64_t o = 0; o < cout; ++o) {
                                   const double* grow = &G[(bi * cout + o) * L];
                                   for (std::int64_t c = 0; c < cin; ++c) {
                                       double* xg = &xn->grad[static_cast<std::size_t>((bi * cin + c) * L)];
                                       const double* wk = &wn->data[static_cast<std::size_t>((o * cin + c) * k)];
                                       for (std::int64_t j = 0; j < k; ++j) {
                                           const double wv = wk[j];
                                           const std::int64_t off = j - pad;
                                           const std::int64_t t0 = std::max<std::int64_t>(0, -off);
                                           const std::int64_t t1 = std::min<std::int64_t>(L, L - off);
                                           for (std::int64_t t = t0; t < t1; ++t) xg[t + off] += wv * grow[t];
                                       }
                                   }
                               }
                       }
                   });
}

// ---- dropout -------------------------------------------------------------

Tensor dropout(const Tensor& x, double p, bool training, Rng& rng) {
    if (p < 0.0 || p >= 1.0)
        throw ConfigError("dropout rate must be in [0, 1), got " + std::to_string(p));
    if (!training) return x;
    const double keep_scale = 1.0 / (1.0 - p);
    std::vector<double> mask(x.data().size());
    for (auto& m : mask) m = rng.uniform() < p ? 0.0 : keep_scale;
    std::vector<double> out(x.data());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
    auto xn = x.node_ptr();
    return make_op(x.shape(), std::move(out), {xn},
                   [xn = xn.get(), mask = std::move(mask)](TensorNode& self) {
                       xn->ensure_grad();
                       for (std::size_t i = 0; i < self.grad.size(); ++i)
                           xn->grad[i] += self.grad[i] * mask[i];
                   });
}

// ---- cross entropy ---------------------------------------------------------

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    check_2d(logits, "cross_entropy");
    const std::int64_t B = logits.dim(0), c = logits.dim(1);
    if (static_cast<std::int64_t>(labels.size()) != B)
        throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for batch " +
                             std::to_string(B));
    for (int lb : labels)
        if (lb < 0 || lb >= c)
            throw DataError("cross_entropy label " + std::to_string(lb) + " outside [0, " +
                            std::to_string(c) + ")");
    const double* Z = logits.data().data();
    std::vector<double> probs(static_cast<std::size_t>(B * c));
    double loss = 0.0;
    for (std::int64_t bi = 0; bi < B; ++bi) {
        const double* row = &Z[bi * c];
        double mx = row[0];
        for (std::int64_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double denom = 0.0;
        for (std::int64_t j = 0; j < c; ++j) {
            double e = std::exp(row[j] - mx);
            probs[static_cast<std::size_t>(bi * c + j)] = e;
            denom += e;
        }
        for (std::int64_t j = 0; j < c; ++j) probs[static_cast<std::size_t>(bi * c + j)] /= denom;
        loss -= std::log(probs[static_cast<std::size_t>(bi * c + labels[static_cast<std::size_t>(bi)])]);
    }
    loss /= static_cast<double>(B);
    auto ln = logits.node_ptr();
    return make_op({1}, {loss}, {ln},
                   [ln = ln.get(), B, c, labels, probs = std::move(probs)](TensorNode& self) {
                       ln->ensure_grad();
                       const double up = self.grad[0] / static_cast<double>(B);
                       for (std::int64_t bi = 0; bi < B; ++bi) {
                           for (std::int64_t j = 0; j < c; ++j) {
                               double g = probs[static_cast<std::size_t>(bi * c + j)];
                               if (j == labels[static_cast<std::size_t>(bi)]) g -= 1.0;
                               ln->grad[static_cast<std::size_t>(bi * c + j)] += up * g;
                           }
                       }
                   });
}

// ---- reductions ------------------------------------------------------------

Tensor sum(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data()) s += v;
    auto an = a.node_ptr();
    return make_op({1}, {s}, {an}, [an = an.get()](TensorNode& self) {
        an->ensure_grad();
        for (auto& g : an->grad) g += self.grad[0];
    });
}

Tensor mean(const Tensor& a) {
    const double inv = 1.0 / static_cast<double>(a.size());
    double s = 0.0;
    for (double v : a.data()) s += v;
    auto an = a.node_ptr();
    return make_op({1}, {s * inv}, {an}, [an = an.get(), inv](TensorNode& self) {
        an->ensure_grad();
        for (auto& g : an->grad) g += self.grad[0] * inv;
    });
}

// ---- slicing / concatenation ------------------------------------------------

Tensor slice_rows(const Tensor& a, std::int64_t r0, std::int64_t nrows) {
    check_2d(a, "slice_rows");
    const std::int64_t m = a.dim(0), n = a.dim(1);
    if (r0 < 0 || nrows < 1 || r0 + nrows > m)
        throw DimensionError("slice_rows [" + std::to_string(r0) + ", " + std::to_string(r0 + nrows) +
                             ") out of range for " + shape_str(a.shape()));
    std::vector<double> out(a.data().begin() + r0 * n, a.data().begin() + (r0 + nrows) * n);
    auto an = a.node_ptr();
    return make_op({nrows, n}, std::move(out), {an}, [an = an.get(), r0, nrows, n](TensorNode& self) {
        an->ensure_grad();
        for (std::int64_t i = 0; i < nrows * n; ++i)
            an->grad[static_cast<std::size_t>(r0 * n + i)] += self.grad[static_cast<std::size_t>(i)];
    });
}

Tensor slice_cols(const Tensor& a, std::int64_t c0, std::int64_t ncols) {
    check_2d(a, "slice_cols");
    const std::int64_t m = a.dim(0), n = a.dim(1);
    if (c0 < 0 || ncols < 1 || c0 + ncols > n)
        throw DimensionError("slice_cols [" + std::to_string(c0) + ", " + std::to_string(c0 + ncols) +
                             ") out of range for " + shape_str(a.shape()));
    std::vector<double> out(static_cast<std::size_t>(m * ncols));
    const double* A = a.data().data();
    for (std::int64_t i = 0; i < m; ++i)
        for (std::int64_t j = 0; j < ncols; ++j)
            out[static_cast<std::size_t>(i * ncols + j)] = A[i * n + c0 + j];
    auto an = a.node_ptr();
    return make_op({m, ncols}, std::move(out), {an}, [an = an.get(), m, n, c0, ncols](TensorNode& self) {
        an->ensure_grad();
        for (std::int64_t i = 0; i < m; ++i)
            for (std::int64_t j = 0; j < ncols; ++j)
                an->grad[static_cast<std::size_t>(i * n + c0 + j)] +=
                    self.grad[static_cast<std::size_t>(i * ncols + j)];
    });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw DimensionError("concat_rows of zero tensors");
    const std::int64_t n = parts[0].dim(1);
    std::int64_t m = 0;
    for (const auto& p : parts) {
        check_2d(p, "concat_rows");
        if (p.dim(1) != n)
            throw DimensionError("concat_rows column mismatch: " + shape_str(p.shape()));
        m += p.dim(0);
    }
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(m * n));
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::vector<std::int64_t> row_off;
    std::int64_t off = 0;
    for (const auto& p : parts) {
        out.insert(out.end(), p.data().begin(), p.data().end());
        parents.push_back(p.node_ptr());
        row_off.push_back(off);
        off += p.dim(0);
    }
    return make_op({m, n}, std::move(out), parents,
                   [parents, row_off, n](TensorNode& self) {
                       for (std::size_t pi = 0; pi < parents.size(); ++pi) {
                           TensorNode* pn = parents[pi].get();
                           if (!pn->requires_grad) continue;
                           pn->ensure_grad();
                           const std::int64_t base = row_off[pi] * n;
                           for (std::size_t i = 0; i < pn->data.size(); ++i)
                               pn->grad[i] += self.grad[static_cast<std::size_t>(base) + i];
                       }
                   });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw DimensionError("concat_cols of zero tensors");
    const std::int64_t m = parts[0].dim(0);
    std::int64_t n = 0;
    for (const auto& p : parts) {
        check_2d(p, "concat_cols");
        if (p.dim(0) != m)
            throw DimensionError("concat_cols row mismatch: " + shape_str(p.shape()));
        n += p.dim(1);
    }
    std::vector<double> out(static_cast<std::size_t>(m * n));
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::vector<std::int64_t> col_off;
    std::int64_t off = 0;
    for (const auto& p : parts) {
        const std::int64_t w = p.dim(1);
        const double* P = p.data().data();
        for (std::int64_t i = 0; i < m; ++i)
            for (std::int64_t j = 0; j < w; ++j)
                out[static_cast<std::size_t>(i * n + off + j)] = P[i * w + j];
        parents.push_back(p.node_ptr());
        col_off.push_back(off);
        off += w;
    }
    return make_op({m, n}, std::move(out), parents,
                   [parents, col_off, m, n](TensorNode& self) {
                       for (std::size_t pi = 0; pi < parents.size(); ++pi) {
                           TensorNode* pn = parents[pi].get();
                           if (!pn->requires_grad) continue;
                           pn->ensure_grad();
                           const std::int64_t w = pn->shape[1];
                           const std::int64_t off = col_off[pi];
                           for (std::int64_t i = 0; i < m; ++i)
                               for (std::int64_t j = 0; j < w; ++j)
                                   pn->grad[static_cast<std::size_t>(i * w + j)] +=
                                       self.grad[static_cast<std::size_t>(i * n + off + j)];
                       }
                   });
}

Tensor reshape(const Tensor& a, Shape shape) {
    if (shape_numel(shape) != a.size())
        throw DimensionError("reshape " + shape_str(a.shape()) + " -> " + shape_str(shape) +
                             " changes element count");
    auto an = a.node_ptr();
    return make_op(std::move(shape), a.data(), {an}, [an = an.get()](TensorNode& self) {
        an->add_grad(self.grad);
    });
}

// ---- backward ---------------------------------------------------------------

void backward(const Tensor& loss, double seed) {
    if (!loss.defined() || loss.size() != 1)
        throw ContractError("backward requires a scalar loss, got " +
                            (loss.defined() ? shape_str(loss.shape()) : std::string("undefined")));
    TensorNode* root = loss.node();
    if (!root->requires_grad)
        throw ContractError("backward on a tensor that was not tracked");
    if (root->backward_ran)
        throw ContractError("backward called twice on the same loss without rebuilding the graph");
    root->backward_ran = true;

    // iterative post-order DFS
    std::vector<TensorNode*> topo;
    std::unordered_set<TensorNode*> visited;
    std::vector<std::pair<TensorNode*, std::size_t>> stack;
    stack.emplace_back(root, 0);
    visited.insert(root);
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            TensorNode* next = node->parents[idx++].get();
            if (next->requires_grad && !visited.count(next)) {
                visited.insert(next);
                stack.emplace_back(next, 0);
            }
        } else {
            topo.push_back(node);
            stack.pop_back();
        }
    }

    root->ensure_grad();
    root->grad[0] += seed;
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        TensorNode* node = *it;
        if (node->backprop) {
            node->ensure_grad();
            node->backprop(*node);
        }
    }
}

}  // namespace modrec
