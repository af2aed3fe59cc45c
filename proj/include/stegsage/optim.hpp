#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "stegsage/tensor.hpp"

namespace stegsage {

/// Named parameter tensors plus per-parameter Adam moments. The step
/// counter t is shared across all parameters; m and v mirror parameter
/// shapes. Iteration order is insertion order, so checkpoints and
/// updates are deterministic.
struct ParamStore {
    std::vector<std::string> names;
    std::vector<Tensor2> params;
    std::vector<Tensor2> m;
    std::vector<Tensor2> v;
    std::int64_t t = 0;

    Tensor2& add(const std::string& name, Tensor2 init);
    bool has(const std::string& name) const { return index_.count(name) > 0; }
    int index_of(const std::string& name) const;
    Tensor2& at(const std::string& name) { return params[index_of(name)]; }
    const Tensor2& at(const std::string& name) const { return params[index_of(name)]; }
    std::size_t scalar_count() const;

private:
    std::unordered_map<std::string, int> index_;
};

/// Parameter-name -> gradient, accumulated across a minibatch.
struct GradBundle {
    std::unordered_map<std::string, Tensor2> grads;

    // Creates the entry on first use, accumulates afterwards.
    void accumulate(const std::string& name, const Tensor2& g);
    Tensor2* find(const std::string& name);
    const Tensor2* find(const std::string& name) const;
    void scale(double s);
};

// In-place bias-corrected Adam. Increments the shared t, then for every
// parameter with a gradient in `grads` updates moments and applies
//   theta -= lr * m_hat / (sqrt(v_hat) + eps).
// Parameters absent from `grads` take a zero gradient (moments decay);
// gradient names absent from the store are an error. Any non-finite
// gradient aborts the whole step before mutating anything.
void adam_step(ParamStore& store, const GradBundle& grads, double lr = 0.003, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);

}  // namespace stegsage
