#include "modrec/params.hpp"

#include <cmath>

namespace modrec {

Tensor& ParameterStore::insert(const std::string& path, Tensor t) {
    if (index_.count(path)) throw ConfigError("duplicate parameter path: " + path);
    index_[path] = entries_.size();
    entries_.emplace_back(path, std::move(t));
    return entries_.back().second;
}

Tensor& ParameterStore::add_zeros(const std::string& path, Shape shape) {
    return insert(path, Tensor::zeros(std::move(shape), true));
}

Tensor& ParameterStore::add_full(const std::string& path, Shape shape, double value) {
    return insert(path, Tensor::full(std::move(shape), value, true));
}

Tensor& ParameterStore::add_uniform(const std::string& path, Shape shape, std::int64_t fan_in) {
    if (fan_in < 1) throw ConfigError("fan_in must be >= 1 for parameter " + path);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    const auto n = shape_numel(shape);
    std::vector<double> data(static_cast<std::size_t>(n));
    for (auto& v : data) v = rng_.uniform(-bound, bound);
    return insert(path, Tensor::from_data(std::move(shape), std::move(data), true));
}

Tensor& ParameterStore::at(const std::string& path) {
    auto it = index_.find(path);
    if (it == index_.end()) throw ConfigError("unknown parameter path: " + path);
    return entries_[it->second].second;
}

const Tensor& ParameterStore::at(const std::string& path) const {
    auto it = index_.find(path);
    if (it == index_.end()) throw ConfigError("unknown parameter path: " + path);
    return entries_[it->second].second;
}

std::int64_t ParameterStore::total_elements() const {
    std::int64_t total = 0;
    for (const auto& [_, t] : entries_) total += t.size();
    return total;
}

void ParameterStore::zero_grad() {
    for (auto& [_, t] : entries_) t.zero_grad();
}

void Adam::step(ParameterStore& params) {
    auto& entries = params.entries();
    if (m_.empty()) {
        m_.resize(entries.size());
        v_.resize(entries.size());
        for (std::size_t i = 0; i < entries.size(); ++i) {
            m_[i].assign(entries[i].second.data().size(), 0.0);
            v_[i].assign(entries[i].second.data().size(), 0.0);
        }
    }
    if (m_.size() != entries.size())
        throw ContractError("Adam moment buffers do not match the parameter store");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < entries.size(); ++i) {
        Tensor& p = const_cast<Tensor&>(entries[i].second);
        auto& data = p.data();
        const bool has_grad = p.has_grad();
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < data.size(); ++j) {
            const double g = has_grad ? p.grad()[j] : 0.0;
            m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g;
            v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g * g;
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            data[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

}  // namespace modrec
