#include "stegsage/correlation.hpp"

#include <cmath>

namespace stegsage {

const PairCorrelation& CorrelationReport::find(int i, int k, int lag) const {
    for (const PairCorrelation& p : pairs)
        if (p.i == i && p.k == k && p.lag == lag) return p;
    throw ValidationError("correlation report has no entry for requested pair/lag");
}

CorrelationReport correlation_diagnostic(const QisMatrix& q, const std::vector<int>& lags) {
    q.validate();
    for (int lag : lags) {
        if (lag < 0) throw ValidationError("correlation_diagnostic: negative lag");
        if (lag >= q.T)
            throw ValidationError("correlation_diagnostic: lag " + std::to_string(lag) +
                                  " needs T > lag, have T=" + std::to_string(q.T));
    }

    CorrelationReport report;
    for (int lag : lags) {
        const int n = q.T - lag;
        for (int i = 0; i < 3; ++i) {
            for (int k = i; k < 3; ++k) {
                PairCorrelation pc;
                pc.i = i;
                pc.k = k;
                pc.lag = lag;
                pc.samples = n;
                // integer counts first, one division at the end, so point
                // masses come out exactly 1.0
                pc.joint = Tensor2(q.sizes[i], q.sizes[k]);
                for (int t = 0; t < n; ++t) pc.joint(q.at(i, t), q.at(k, t + lag)) += 1.0;
                for (double& v : pc.joint.data) v /= n;

                std::vector<double> row(q.sizes[i], 0.0), col(q.sizes[k], 0.0);
                for (int a = 0; a < pc.joint.rows; ++a)
                    for (int b = 0; b < pc.joint.cols; ++b) {
                        row[a] += pc.joint(a, b);
                        col[b] += pc.joint(a, b);
                    }
                pc.product = Tensor2(q.sizes[i], q.sizes[k]);
                double tv = 0.0;
                for (int a = 0; a < pc.joint.rows; ++a)
                    for (int b = 0; b < pc.joint.cols; ++b) {
                        pc.product(a, b) = row[a] * col[b];
                        tv += std::abs(pc.joint(a, b) - pc.product(a, b));
                    }
                pc.tv = 0.5 * tv;
                report.pairs.push_back(std::move(pc));
            }
        }
    }
    return report;
}

}  // namespace stegsage
