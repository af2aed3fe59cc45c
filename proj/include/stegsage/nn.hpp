#pragma once

#include <cstdint>

#include "stegsage/tensor.hpp"

namespace stegsage {

// Dense kernels with hand-derived backward passes. Conventions:
//   y = x * W^T + b   with x: [N x in], W: [out x in], b: [1 x out]
// Backward functions return fresh gradient tensors; callers accumulate.

Tensor2 affine(const Tensor2& x, const Tensor2& W, const Tensor2& b);
void affine_backward(const Tensor2& x, const Tensor2& W, const Tensor2& dy, Tensor2& dx,
                     Tensor2& dW, Tensor2& db);

Tensor2 relu(const Tensor2& x);
// dx = dy where x > 0, else 0. Subgradient at exactly 0 is 0.
Tensor2 relu_backward(const Tensor2& x, const Tensor2& dy);

// Column-wise concatenation [a | b]; row counts must match.
Tensor2 concat(const Tensor2& a, const Tensor2& b);
void concat_backward(const Tensor2& dy, int cols_a, Tensor2& da, Tensor2& db);

/// One LSTM cell: 8 weight matrices and 4 biases, gate order i, f, g, o.
struct LstmParams {
    Tensor2 Wxi, Wxf, Wxg, Wxo;  // [hidden x input]
    Tensor2 Whi, Whf, Whg, Who;  // [hidden x hidden]
    Tensor2 bi, bf, bg, bo;      // [1 x hidden]

    static LstmParams zeros(int input, int hidden);
    int input_dim() const { return Wxi.cols; }
    int hidden_dim() const { return Wxi.rows; }
};

struct LstmGrads {
    Tensor2 Wxi, Wxf, Wxg, Wxo;
    Tensor2 Whi, Whf, Whg, Who;
    Tensor2 bi, bf, bg, bo;

    static LstmGrads zeros(int input, int hidden);
    void add_scaled(const LstmGrads& other, double s);
};

// Everything the backward pass needs from one forward step.
struct LstmCache {
    Tensor2 x, h_prev, c_prev;
    Tensor2 i, f, g, o;  // post-activation gates
    Tensor2 c, tanh_c;
};

// c = f.c_prev + i.g, h = o.tanh(c); gates from sigmoid, candidate from tanh.
void lstm_cell(const Tensor2& x, const Tensor2& h_prev, const Tensor2& c_prev,
               const LstmParams& p, Tensor2& h_out, Tensor2& c_out, LstmCache* cache = nullptr);

// dh/dc_in are gradients flowing into h_out/c_out. Parameter gradients
// accumulate into `grads`; dx/dh_prev/dc_prev are overwritten.
void lstm_cell_backward(const LstmCache& cache, const LstmParams& p, const Tensor2& dh,
                        const Tensor2& dc_in, Tensor2& dx, Tensor2& dh_prev, Tensor2& dc_prev,
                        LstmGrads& grads);

// First step of a sequence: h_prev = c_prev = 0, so c = i.g and the
// recurrent weights and forget gate drop out of both passes exactly.
// The cache leaves h_prev, c_prev and f empty.
void lstm_cell_zero(const Tensor2& x, const LstmParams& p, Tensor2& h_out, Tensor2& c_out,
                    LstmCache* cache = nullptr);

// Backward for lstm_cell_zero. Whf/Whi/Whg/Who and the f-gate tensors in
// `grads` receive no contribution (their true gradient here is zero).
void lstm_cell_zero_backward(const LstmCache& cache, const LstmParams& p, const Tensor2& dh,
                             const Tensor2& dc_in, Tensor2& dx, LstmGrads& grads);

enum class Mode { train, eval };

// Inverted dropout: train mode zeroes entries w.p. p and scales survivors
// by 1/(1-p); eval mode is the identity. Mask (0 or 1/(1-p)) is returned
// via `mask` when non-null so backward can reuse it.
Tensor2 dropout(const Tensor2& x, double p, Mode mode, std::uint64_t seed,
                Tensor2* mask = nullptr);
Tensor2 dropout_backward(const Tensor2& dy, const Tensor2& mask);

// Mean over the batch of -log softmax(logits)[label]; gradient is
// (softmax - onehot)/N. Log-sum-exp stabilized.
double softmax_cross_entropy(const Tensor2& logits, const std::vector<int>& labels,
                             Tensor2* dlogits = nullptr);

// Row-wise softmax probabilities (stabilized).
Tensor2 softmax(const Tensor2& logits);

}  // namespace stegsage
