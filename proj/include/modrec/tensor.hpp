#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "modrec/errors.hpp"

namespace modrec {

class Rng;

using Shape = std::vector<std::int64_t>;

std::string shape_str(const Shape& s);
std::int64_t shape_numel(const Shape& s);

struct TensorNode;

/// Dense row-major tensor of 64-bit floats with reverse-mode differentiation.
///
/// A Tensor is a cheap handle onto a shared node. Data is immutable once an
/// op has consumed it (by convention); the grad buffer is the one mutable
/// piece and accumulates across backward() calls until zero_grad(). Ops
/// record the graph only while grads are enabled (see NoGradGuard) and at
/// least one input requires a gradient.
class Tensor {
  public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor from_data(Shape shape, std::vector<double> data, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const;
    std::int64_t ndim() const { return static_cast<std::int64_t>(shape().size()); }
    std::int64_t size() const;
    std::int64_t dim(int i) const { return shape()[static_cast<std::size_t>(i)]; }

    std::vector<double>& data();
    const std::vector<double>& data() const;

    bool requires_grad() const;
    /// Gradient buffer; throws ContractError if never populated.
    const std::vector<double>& grad() const;
    bool has_grad() const;
    void zero_grad();

    /// Value of a scalar (1-element) tensor.
    double item() const;

    /// Element access for 2-D tensors (tests and IO convenience).
    double at(std::int64_t r, std::int64_t c) const;

    TensorNode* node() const { return node_.get(); }
    std::shared_ptr<TensorNode> node_ptr() const { return node_; }
    explicit Tensor(std::shared_ptr<TensorNode> n) : node_(std::move(n)) {}

  private:
    std::shared_ptr<TensorNode> node_;
};

struct TensorNode {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;  // allocated on demand
    bool requires_grad = false;
    bool backward_ran = false;
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void(TensorNode&)> backprop;

    std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
    void ensure_grad();
    void add_grad(const std::vector<double>& g);
};

/// Disables graph recording for its scope (forward-only evaluation).
class NoGradGuard {
  public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

  private:
    bool prev_;
};

bool grad_enabled();

// ---- ops -------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
/// [m x n] + row vector [n], broadcast over rows.
Tensor add_rowvec(const Tensor& a, const Tensor& v);
Tensor scale(const Tensor& a, double s);
Tensor relu(const Tensor& a);
/// Numerically stabilized softmax along `axis`.
Tensor softmax(const Tensor& a, int axis);
/// Normalizes the last dimension to zero mean / unit variance (population),
/// then applies elementwise gain and bias. eps must be > 0.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps);
/// 1-D convolution with zero same-padding; x is [Cin x L] or [B x Cin x L],
/// w is [Cout x Cin x k] with k odd, b is [Cout].
Tensor conv1d_same(const Tensor& x, const Tensor& w, const Tensor& b);
/// Inverted dropout: keeps units with probability 1-p and scales by 1/(1-p)
/// during training; identity in eval mode. p in [0, 1).
Tensor dropout(const Tensor& x, double p, bool training, Rng& rng);
/// Mean over the batch of -log softmax(logits)[label]; logits is [B x c].
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor slice_rows(const Tensor& a, std::int64_t r0, std::int64_t nrows);
Tensor slice_cols(const Tensor& a, std::int64_t c0, std::int64_t ncols);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor reshape(const Tensor& a, Shape shape);

/// Accumulates gradients of `loss` (scalar) into every reachable tensor that
/// requires one, in reverse topological order. `seed` is the upstream
/// gradient of the loss itself. Running backward twice on the same loss
/// without rebuilding the graph is a contract error.
void backward(const Tensor& loss, double seed = 1.0);

}  // namespace modrec
