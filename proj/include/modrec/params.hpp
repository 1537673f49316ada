#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "modrec/rng.hpp"
#include "modrec/tensor.hpp"

namespace modrec {

/// Named trainable tensors in a stable insertion order. Initialization draws
/// from a single stream seeded at construction, so a (seed, registration
/// order) pair fully determines every weight.
class ParameterStore {
  public:
    explicit ParameterStore(std::uint64_t seed) : seed_(seed), rng_(seed) {}

    /// Registers a zero-initialized parameter (biases, class token, positional table).
    Tensor& add_zeros(const std::string& path, Shape shape);
    /// Registers a constant-initialized parameter (layer-norm gains).
    Tensor& add_full(const std::string& path, Shape shape, double value);
    /// Registers a weight drawn uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)).
    Tensor& add_uniform(const std::string& path, Shape shape, std::int64_t fan_in);

    Tensor& at(const std::string& path);
    const Tensor& at(const std::string& path) const;
    bool contains(const std::string& path) const { return index_.count(path) > 0; }

    const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
    std::size_t count() const { return entries_.size(); }
    std::int64_t total_elements() const;
    std::uint64_t seed() const { return seed_; }

    void zero_grad();

  private:
    Tensor& insert(const std::string& path, Tensor t);

    std::uint64_t seed_;
    Rng rng_;
    std::vector<std::pair<std::string, Tensor>> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam with bias correction. Moment buffers are keyed by parameter position,
/// so the optimizer must be used with a single store.
class Adam {
  public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    /// Applies one update from the gradients currently held by `params`.
    void step(ParameterStore& params);

    std::int64_t t() const { return t_; }
    const AdamConfig& config() const { return cfg_; }
    void set_lr(double lr) { cfg_.lr = lr; }

  private:
    AdamConfig cfg_;
    std::int64_t t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

}  // namespace modrec
