#include "stegsage/stream.hpp"

#include <limits>

namespace stegsage {

void CoverSourceConfig::validate() const {
    for (int i = 0; i < 3; ++i) {
        if (!(ar[i] >= 0.0 && ar[i] < 1.0))
            throw ValidationError("cover source: ar coefficient must be in [0, 1)");
        if (!(noise_scale[i] > 0.0))
            throw ValidationError("cover source: noise scale must be positive");
    }
    if (!(anchor_spread > 0.0)) throw ValidationError("cover source: anchor spread must be positive");
}

LatentSequence gen_latent_sequence(const CoverSourceConfig& config, const CodebookSet& codebooks,
                                   int T) {
    config.validate();
    if (T < 1) throw ValidationError("gen_latent_sequence: T must be >= 1");

    Rng rng(config.seed);
    LatentSequence seq;
    for (int i = 0; i < 3; ++i) {
        const Codebook& cb = codebooks.books[i];
        const int anchor = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(cb.size())));
        std::vector<double> mu(cb.dim);
        for (int d = 0; d < cb.dim; ++d)
            mu[d] = cb.vectors(anchor, d) + rng.normal() * config.anchor_spread;

        Tensor2 x(T, cb.dim);
        std::vector<double> prev = mu;
        for (int t = 0; t < T; ++t) {
            for (int d = 0; d < cb.dim; ++d) {
                double v = mu[d] + config.ar[i] * (prev[d] - mu[d]) +
                           rng.normal() * config.noise_scale[i];
                x(t, d) = v;
                prev[d] = v;
            }
        }
        seq.coords[i] = std::move(x);
    }
    return seq;
}

int nearest_index(const Codebook& book, const double* point, const std::vector<int>* subset) {
    double best = std::numeric_limits<double>::infinity();
    int best_idx = -1;
    auto consider = [&](int idx) {
        double d2 = 0.0;
        for (int d = 0; d < book.dim; ++d) {
            const double diff = point[d] - book.vectors(idx, d);
            d2 += diff * diff;
        }
        if (d2 < best) {
            best = d2;
            best_idx = idx;
        }
    };
    if (subset) {
        if (subset->empty()) throw ValidationError("nearest_index: empty candidate set");
        for (int idx : *subset) consider(idx);
    } else {
        for (int idx = 0; idx < book.size(); ++idx) consider(idx);
    }
    return best_idx;
}

QisMatrix quantize_cover(const LatentSequence& latents, const CodebookSet& codebooks) {
    const int T = latents.T();
    std::array<std::uint16_t, 3> sizes{};
    for (int i = 0; i < 3; ++i) {
        if (latents.coords[i].cols != codebooks.books[i].dim)
            throw ValidationError("quantize_cover: latent dim does not match codebook dim");
        if (latents.coords[i].rows != T)
            throw ValidationError("quantize_cover: latent positions disagree on T");
        sizes[i] = static_cast<std::uint16_t>(codebooks.books[i].size());
    }

    QisMatrix q(sizes, T, latents.frame_duration_ms);
    for (int i = 0; i < 3; ++i) {
        const Codebook& cb = codebooks.books[i];
        const Tensor2& x = latents.coords[i];
        for (int t = 0; t < T; ++t)
            q.at(i, t) = static_cast<std::uint16_t>(nearest_index(cb, x.row_ptr(t)));
    }
    return q;
}

}  // namespace stegsage
