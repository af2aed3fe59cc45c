#pragma once

#include <vector>

#include "stegsage/qis.hpp"
#include "stegsage/tensor.hpp"

namespace stegsage {

/// Dependence summary for one (position, position, lag) triple: the
/// empirical joint of (c_i[t], c_k[t+lag]) against the product of its
/// marginals, plus the total-variation distance between the two.
struct PairCorrelation {
    int i = 0;       // first codeword position (0-based)
    int k = 0;       // second codeword position
    int lag = 0;     // frame offset applied to the second position
    int samples = 0; // pairs entering the tables, T - lag
    Tensor2 joint;   // [sizes[i] x sizes[k]]
    Tensor2 product; // outer product of the joint's own marginals
    double tv = 0.0; // 0.5 * sum |joint - product|, in [0, 1]
};

struct CorrelationReport {
    std::vector<PairCorrelation> pairs;

    const PairCorrelation& find(int i, int k, int lag) const;
};

// For every requested lag and every position pair i <= k, tabulates the
// joint distribution over (c_i[t], c_k[t+lag]) for t in [0, T-lag) and
// compares it with independence. Marginals come from the same sample set
// as the joint, so a deterministic stream scores exactly zero.
CorrelationReport correlation_diagnostic(const QisMatrix& q, const std::vector<int>& lags);

}  // namespace stegsage
