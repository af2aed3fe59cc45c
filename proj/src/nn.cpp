#include "stegsage/nn.hpp"

#include <cmath>

namespace stegsage {

namespace {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// pre = x*Wx^T + h_prev*Wh^T + b, evaluated as one Eigen expression
Tensor2 gate_pre(const Tensor2& x, const Tensor2& h_prev, const Tensor2& Wx, const Tensor2& Wh,
                 const Tensor2& b) {
    Tensor2 pre(x.rows, Wx.rows);
    pre.map().noalias() = x.map() * Wx.map().transpose();
    pre.map().noalias() += h_prev.map() * Wh.map().transpose();
    pre.map().rowwise() += b.map().row(0);
    return pre;
}

}  // namespace

Tensor2 affine(const Tensor2& x, const Tensor2& W, const Tensor2& b) {
    if (x.cols != W.cols)
        throw ValidationError("affine: x cols " + std::to_string(x.cols) + " != W cols " +
                              std::to_string(W.cols));
    require_shape(b, 1, W.rows, "affine bias");
    Tensor2 y(x.rows, W.rows);
    y.map().noalias() = x.map() * W.map().transpose();
    y.map().rowwise() += b.map().row(0);
    return y;
}

void affine_backward(const Tensor2& x, const Tensor2& W, const Tensor2& dy, Tensor2& dx,
                     Tensor2& dW, Tensor2& db) {
    require_shape(dy, x.rows, W.rows, "affine dy");
    dx = Tensor2(x.rows, x.cols);
    dW = Tensor2(W.rows, W.cols);
    db = Tensor2(1, W.rows);
    dx.map().noalias() = dy.map() * W.map();
    dW.map().noalias() = dy.map().transpose() * x.map();
    db.map().row(0) = dy.map().colwise().sum();
}

Tensor2 relu(const Tensor2& x) {
    Tensor2 y = x;
    for (double& v : y.data) v = v > 0.0 ? v : 0.0;
    return y;
}

Tensor2 relu_backward(const Tensor2& x, const Tensor2& dy) {
    if (!x.same_shape(dy)) throw ValidationError("relu_backward: shape mismatch");
    Tensor2 dx(x.rows, x.cols);
    for (size_t k = 0; k < x.data.size(); ++k) dx.data[k] = x.data[k] > 0.0 ? dy.data[k] : 0.0;
    return dx;
}

Tensor2 concat(const Tensor2& a, const Tensor2& b) {
    if (a.rows != b.rows) throw ValidationError("concat: row counts differ");
    Tensor2 y(a.rows, a.cols + b.cols);
    for (int r = 0; r < a.rows; ++r) {
        for (int c = 0; c < a.cols; ++c) y(r, c) = a(r, c);
        for (int c = 0; c < b.cols; ++c) y(r, a.cols + c) = b(r, c);
    }
    return y;
}

void concat_backward(const Tensor2& dy, int cols_a, Tensor2& da, Tensor2& db) {
    if (cols_a < 0 || cols_a > dy.cols) throw ValidationError("concat_backward: bad split");
    da = Tensor2(dy.rows, cols_a);
    db = Tensor2(dy.rows, dy.cols - cols_a);
    for (int r = 0; r < dy.rows; ++r) {
        for (int c = 0; c < cols_a; ++c) da(r, c) = dy(r, c);
        for (int c = cols_a; c < dy.cols; ++c) db(r, c - cols_a) = dy(r, c);
    }
}

LstmParams LstmParams::zeros(int input, int hidden) {
    LstmParams p;
    p.Wxi = Tensor2(hidden, input);
    p.Wxf = Tensor2(hidden, input);
    p.Wxg = Tensor2(hidden, input);
    p.Wxo = Tensor2(hidden, input);
    p.Whi = Tensor2(hidden, hidden);
    p.Whf = Tensor2(hidden, hidden);
    p.Whg = Tensor2(hidden, hidden);
    p.Who = Tensor2(hidden, hidden);
    p.bi = Tensor2(1, hidden);
    p.bf = Tensor2(1, hidden);
    p.bg = Tensor2(1, hidden);
    p.bo = Tensor2(1, hidden);
    return p;
}

LstmGrads LstmGrads::zeros(int input, int hidden) {
    LstmGrads g;
    g.Wxi = Tensor2(hidden, input);
    g.Wxf = Tensor2(hidden, input);
    g.Wxg = Tensor2(hidden, input);
    g.Wxo = Tensor2(hidden, input);
    g.Whi = Tensor2(hidden, hidden);
    g.Whf = Tensor2(hidden, hidden);
    g.Whg = Tensor2(hidden, hidden);
    g.Who = Tensor2(hidden, hidden);
    g.bi = Tensor2(1, hidden);
    g.bf = Tensor2(1, hidden);
    g.bg = Tensor2(1, hidden);
    g.bo = Tensor2(1, hidden);
    return g;
}

void LstmGrads::add_scaled(const LstmGrads& o, double s) {
    auto add = [s](Tensor2& dst, const Tensor2& src) { dst.map() += s * src.map(); };
    add(Wxi, o.Wxi);
    add(Wxf, o.Wxf);
    add(Wxg, o.Wxg);
    add(Wxo, o.Wxo);
    add(Whi, o.Whi);
    add(Whf, o.Whf);
    add(Whg, o.Whg);
    add(Who, o.Who);
    add(bi, o.bi);
    add(bf, o.bf);
    add(bg, o.bg);
    add(bo, o.bo);
}

void lstm_cell(const Tensor2& x, const Tensor2& h_prev, const Tensor2& c_prev,
               const LstmParams& p, Tensor2& h_out, Tensor2& c_out, LstmCache* cache) {
    const int H = p.hidden_dim();
    if (x.cols != p.input_dim()) throw ValidationError("lstm_cell: x dim mismatch");
    require_shape(h_prev, x.rows, H, "lstm_cell h_prev");
    require_shape(c_prev, x.rows, H, "lstm_cell c_prev");

    Tensor2 ai = gate_pre(x, h_prev, p.Wxi, p.Whi, p.bi);
    Tensor2 af = gate_pre(x, h_prev, p.Wxf, p.Whf, p.bf);
    Tensor2 ag = gate_pre(x, h_prev, p.Wxg, p.Whg, p.bg);
    Tensor2 ao = gate_pre(x, h_prev, p.Wxo, p.Who, p.bo);

    for (double& v : ai.data) v = sigmoid(v);
    for (double& v : af.data) v = sigmoid(v);
    for (double& v : ag.data) v = std::tanh(v);
    for (double& v : ao.data) v = sigmoid(v);

    c_out = Tensor2(x.rows, H);
    h_out = Tensor2(x.rows, H);
    Tensor2 tanh_c(x.rows, H);
    for (size_t k = 0; k < c_out.data.size(); ++k) {
        c_out.data[k] = af.data[k] * c_prev.data[k] + ai.data[k] * ag.data[k];
        tanh_c.data[k] = std::tanh(c_out.data[k]);
        h_out.data[k] = ao.data[k] * tanh_c.data[k];
    }
    if (cache) {
        cache->x = x;
        cache->h_prev = h_prev;
        cache->c_prev = c_prev;
        cache->i = std::move(ai);
        cache->f = std::move(af);
        cache->g = std::move(ag);
        cache->o = std::move(ao);
        cache->c = c_out;
        cache->tanh_c = std::move(tanh_c);
    }
}

void lstm_cell_backward(const LstmCache& cc, const LstmParams& p, const Tensor2& dh,
                        const Tensor2& dc_in, Tensor2& dx, Tensor2& dh_prev, Tensor2& dc_prev,
                        LstmGrads& grads) {
    const int N = cc.x.rows;
    const int H = p.hidden_dim();
    require_shape(dh, N, H, "lstm backward dh");
    require_shape(dc_in, N, H, "lstm backward dc");

    Tensor2 dai(N, H), daf(N, H), dag(N, H), dao(N, H);
    dc_prev = Tensor2(N, H);
    for (size_t k = 0; k < dh.data.size(); ++k) {
        double o = cc.o.data[k], i = cc.i.data[k], f = cc.f.data[k], g = cc.g.data[k];
        double tc = cc.tanh_c.data[k];
        double d_o = dh.data[k] * tc;
        double dc = dc_in.data[k] + dh.data[k] * o * (1.0 - tc * tc);
        double d_f = dc * cc.c_prev.data[k];
        double d_i = dc * g;
        double d_g = dc * i;
        dao.data[k] = d_o * o * (1.0 - o);
        daf.data[k] = d_f * f * (1.0 - f);
        dai.data[k] = d_i * i * (1.0 - i);
        dag.data[k] = d_g * (1.0 - g * g);
        dc_prev.data[k] = dc * f;
    }

    dx = Tensor2(N, p.input_dim());
    dh_prev = Tensor2(N, H);
    dx.map().noalias() = dai.map() * p.Wxi.map();
    dx.map().noalias() += daf.map() * p.Wxf.map();
    dx.map().noalias() += dag.map() * p.Wxg.map();
    dx.map().noalias() += dao.map() * p.Wxo.map();
    dh_prev.map().noalias() = dai.map() * p.Whi.map();
    dh_prev.map().noalias() += daf.map() * p.Whf.map();
    dh_prev.map().noalias() += dag.map() * p.Whg.map();
    dh_prev.map().noalias() += dao.map() * p.Who.map();

    grads.Wxi.map().noalias() += dai.map().transpose() * cc.x.map();
    grads.Wxf.map().noalias() += daf.map().transpose() * cc.x.map();
    grads.Wxg.map().noalias() += dag.map().transpose() * cc.x.map();
    grads.Wxo.map().noalias() += dao.map().transpose() * cc.x.map();
    grads.Whi.map().noalias() += dai.map().transpose() * cc.h_prev.map();
    grads.Whf.map().noalias() += daf.map().transpose() * cc.h_prev.map();
    grads.Whg.map().noalias() += dag.map().transpose() * cc.h_prev.map();
    grads.Who.map().noalias() += dao.map().transpose() * cc.h_prev.map();
    grads.bi.map().row(0) += dai.map().colwise().sum();
    grads.bf.map().row(0) += daf.map().colwise().sum();
    grads.bg.map().row(0) += dag.map().colwise().sum();
    grads.bo.map().row(0) += dao.map().colwise().sum();
}

void lstm_cell_zero(const Tensor2& x, const LstmParams& p, Tensor2& h_out, Tensor2& c_out,
                    LstmCache* cache) {
    const int H = p.hidden_dim();
    if (x.cols != p.input_dim()) throw ValidationError("lstm_cell_zero: x dim mismatch");

    // c_prev = 0 kills the forget-gate term, so f is never evaluated
    auto pre = [&](const Tensor2& Wx, const Tensor2& b) {
        Tensor2 a(x.rows, H);
        a.map().noalias() = x.map() * Wx.map().transpose();
        a.map().rowwise() += b.map().row(0);
        return a;
    };
    Tensor2 ai = pre(p.Wxi, p.bi);
    Tensor2 ag = pre(p.Wxg, p.bg);
    Tensor2 ao = pre(p.Wxo, p.bo);
    for (double& v : ai.data) v = sigmoid(v);
    for (double& v : ag.data) v = std::tanh(v);
    for (double& v : ao.data) v = sigmoid(v);

    c_out = Tensor2(x.rows, H);
    h_out = Tensor2(x.rows, H);
    Tensor2 tanh_c(x.rows, H);
    for (size_t k = 0; k < c_out.data.size(); ++k) {
        c_out.data[k] = ai.data[k] * ag.data[k];
        tanh_c.data[k] = std::tanh(c_out.data[k]);
        h_out.data[k] = ao.data[k] * tanh_c.data[k];
    }
    if (cache) {
        cache->x = x;
        cache->h_prev = Tensor2();
        cache->c_prev = Tensor2();
        cache->i = std::move(ai);
        cache->f = Tensor2();
        cache->g = std::move(ag);
        cache->o = std::move(ao);
        cache->c = c_out;
        cache->tanh_c = std::move(tanh_c);
    }
}

void lstm_cell_zero_backward(const LstmCache& cc, const LstmParams& p, const Tensor2& dh,
                             const Tensor2& dc_in, Tensor2& dx, LstmGrads& grads) {
    const int N = cc.x.rows;
    const int H = p.hidden_dim();
    require_shape(dh, N, H, "lstm zero backward dh");
    require_shape(dc_in, N, H, "lstm zero backward dc");

    Tensor2 dai(N, H), dag(N, H), dao(N, H);
    for (size_t k = 0; k < dh.data.size(); ++k) {
        double o = cc.o.data[k], i = cc.i.data[k], g = cc.g.data[k];
        double tc = cc.tanh_c.data[k];
        double d_o = dh.data[k] * tc;
        double dc = dc_in.data[k] + dh.data[k] * o * (1.0 - tc * tc);
        dao.data[k] = d_o * o * (1.0 - o);
        dai.data[k] = dc * g * i * (1.0 - i);
        dag.data[k] = dc * i * (1.0 - g * g);
    }

    dx = Tensor2(N, p.input_dim());
    dx.map().noalias() = dai.map() * p.Wxi.map();
    dx.map().noalias() += dag.map() * p.Wxg.map();
    dx.map().noalias() += dao.map() * p.Wxo.map();

    grads.Wxi.map().noalias() += dai.map().transpose() * cc.x.map();
    grads.Wxg.map().noalias() += dag.map().transpose() * cc.x.map();
    grads.Wxo.map().noalias() += dao.map().transpose() * cc.x.map();
    grads.bi.map().row(0) += dai.map().colwise().sum();
    grads.bg.map().row(0) += dag.map().colwise().sum();
    grads.bo.map().row(0) += dao.map().colwise().sum();
}

Tensor2 dropout(const Tensor2& x, double p, Mode mode, std::uint64_t seed, Tensor2* mask) {
    if (p < 0.0 || p >= 1.0) throw ValidationError("dropout: p must be in [0, 1)");
    if (mode == Mode::eval || p == 0.0) {
        if (mask) {
            *mask = Tensor2(x.rows, x.cols);
            mask->fill(1.0);
        }
        return x;
    }
    Rng rng(seed);
    const double scale = 1.0 / (1.0 - p);
    Tensor2 y(x.rows, x.cols);
    Tensor2 m(x.rows, x.cols);
    for (size_t k = 0; k < x.data.size(); ++k) {
        double keep = rng.uniform() < p ? 0.0 : scale;
        m.data[k] = keep;
        y.data[k] = x.data[k] * keep;
    }
    if (mask) *mask = std::move(m);
    return y;
}

Tensor2 dropout_backward(const Tensor2& dy, const Tensor2& mask) {
    if (!dy.same_shape(mask)) throw ValidationError("dropout_backward: shape mismatch");
    Tensor2 dx(dy.rows, dy.cols);
    for (size_t k = 0; k < dy.data.size(); ++k) dx.data[k] = dy.data[k] * mask.data[k];
    return dx;
}

Tensor2 softmax(const Tensor2& logits) {
    Tensor2 probs(logits.rows, logits.cols);
    for (int r = 0; r < logits.rows; ++r) {
        double mx = logits(r, 0);
        for (int c = 1; c < logits.cols; ++c) mx = std::max(mx, logits(r, c));
        double sum = 0.0;
        for (int c = 0; c < logits.cols; ++c) {
            double e = std::exp(logits(r, c) - mx);
            probs(r, c) = e;
            sum += e;
        }
        for (int c = 0; c < logits.cols; ++c) probs(r, c) /= sum;
    }
    return probs;
}

double softmax_cross_entropy(const Tensor2& logits, const std::vector<int>& labels,
                             Tensor2* dlogits) {
    const int N = logits.rows;
    const int C = logits.cols;
    if (static_cast<int>(labels.size()) != N)
        throw ValidationError("softmax_cross_entropy: label count mismatch");
    for (int lab : labels)
        if (lab < 0 || lab >= C) throw ValidationError("softmax_cross_entropy: label out of range");

    Tensor2 probs = softmax(logits);
    double loss = 0.0;
    for (int r = 0; r < N; ++r) {
        // -log softmax via log-sum-exp, so saturated logits stay finite
        double mx = logits(r, 0);
        for (int c = 1; c < C; ++c) mx = std::max(mx, logits(r, c));
        double lse = 0.0;
        for (int c = 0; c < C; ++c) lse += std::exp(logits(r, c) - mx);
        loss += (mx + std::log(lse)) - logits(r, labels[r]);
    }
    loss /= N;

    if (dlogits) {
        *dlogits = probs;
        for (int r = 0; r < N; ++r) (*dlogits)(r, labels[r]) -= 1.0;
        for (double& v : dlogits->data) v /= N;
    }
    return loss;
}

}  // namespace stegsage
