#include "stegsage/optim.hpp"

#include <cmath>

namespace stegsage {

Tensor2& ParamStore::add(const std::string& name, Tensor2 init) {
    if (has(name)) throw ValidationError("ParamStore: duplicate parameter " + name);
    index_[name] = static_cast<int>(names.size());
    names.push_back(name);
    m.push_back(Tensor2::zeros_like(init));
    v.push_back(Tensor2::zeros_like(init));
    params.push_back(std::move(init));
    return params.back();
}

int ParamStore::index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ValidationError("ParamStore: unknown parameter " + name);
    return it->second;
}

std::size_t ParamStore::scalar_count() const {
    std::size_t n = 0;
    for (const Tensor2& p : params) n += p.size();
    return n;
}

void GradBundle::accumulate(const std::string& name, const Tensor2& g) {
    auto it = grads.find(name);
    if (it == grads.end()) {
        grads.emplace(name, g);
        return;
    }
    if (!it->second.same_shape(g)) throw ValidationError("GradBundle: shape mismatch for " + name);
    it->second.map() += g.map();
}

Tensor2* GradBundle::find(const std::string& name) {
    auto it = grads.find(name);
    return it == grads.end() ? nullptr : &it->second;
}

const Tensor2* GradBundle::find(const std::string& name) const {
    auto it = grads.find(name);
    return it == grads.end() ? nullptr : &it->second;
}

void GradBundle::scale(double s) {
    for (auto& [name, g] : grads) g.map() *= s;
}

void adam_step(ParamStore& store, const GradBundle& grads, double lr, double beta1, double beta2,
               double eps) {
    // Validate everything first: a rejected step must leave the store untouched.
    for (const auto& [name, g] : grads.grads) {
        int idx = store.index_of(name);
        if (!g.same_shape(store.params[idx]))
            throw ValidationError("adam_step: gradient shape mismatch for " + name);
        if (!g.all_finite()) throw NumericError("adam_step: non-finite gradient for " + name);
    }

    store.t += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(store.t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(store.t));

    for (size_t idx = 0; idx < store.params.size(); ++idx) {
        const Tensor2* g = grads.find(store.names[idx]);
        Tensor2& p = store.params[idx];
        Tensor2& mm = store.m[idx];
        Tensor2& vv = store.v[idx];
        for (size_t k = 0; k < p.data.size(); ++k) {
            const double gk = g ? g->data[k] : 0.0;
            mm.data[k] = beta1 * mm.data[k] + (1.0 - beta1) * gk;
            vv.data[k] = beta2 * vv.data[k] + (1.0 - beta2) * gk * gk;
            const double m_hat = mm.data[k] / bc1;
            const double v_hat = vv.data[k] / bc2;
            p.data[k] -= lr * m_hat / (std::sqrt(v_hat) + eps);
        }
    }
}

}  // namespace stegsage
