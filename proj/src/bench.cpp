#include "stegsage/bench.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "stegsage/common.hpp"
#include "stegsage/graph.hpp"
#include "stegsage/metrics.hpp"
#include "stegsage/stream.hpp"

namespace stegsage {

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const size_t n = x.size();
    if (n != y.size() || n < 2) throw ValidationError("linear_fit needs >= 2 paired points");
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw ValidationError("linear_fit needs >= 2 distinct x values");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0.0, ss_tot = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double e = y[i] - (f.intercept + f.slope * x[i]);
        ss_res += e * e;
        ss_tot += (y[i] - my) * (y[i] - my);
    }
    f.r2 = ss_tot == 0.0 ? (ss_res == 0.0 ? 1.0 : 0.0) : 1.0 - ss_res / ss_tot;
    return f;
}

LatencyReport bench_detection(const ModelState& state, const CodebookSet& codebooks,
                              const std::vector<int>& lengths, int runs, std::uint64_t seed) {
    if (runs < 30) throw ValidationError("bench needs runs >= 30");
    if (lengths.empty()) throw ValidationError("bench needs at least one length");
    for (int T : lengths)
        if (T < 1) throw ValidationError("bench lengths must be >= 1");

    using clock = std::chrono::steady_clock;
    LatencyReport report;
    std::vector<double> xs, ys;
    for (size_t li = 0; li < lengths.size(); ++li) {
        const int T = lengths[li];
        std::vector<QisMatrix> streams;
        streams.reserve(runs);
        for (int r = 0; r < runs; ++r) {
            CoverSourceConfig src;
            src.seed = derive_seed(seed, 0xBE4C, li, r);
            streams.push_back(quantize_cover(gen_latent_sequence(src, codebooks, T), codebooks));
        }

        std::vector<double> secs(runs);
        volatile int sink = 0;  // keeps the decision from being optimized out
        for (int r = 0; r < runs; ++r) {
            const clock::time_point t0 = clock::now();
            StreamGraph g = build_graph(streams[r], Normalization::scaled, false);
            GraphBatch batch = batch_graphs({g});
            ForwardTrace tr = model_forward(batch, state, Mode::eval, 0);
            sink = decide(tr.logits(0, 0), tr.logits(0, 1));
            const clock::time_point t1 = clock::now();
            secs[r] = std::chrono::duration<double>(t1 - t0).count();
            if (secs[r] <= 0.0) report.resolution_warning = true;
        }
        (void)sink;

        double mean = 0.0;
        for (double s : secs) mean += s;
        mean /= runs;
        double var = 0.0;
        for (double s : secs) var += (s - mean) * (s - mean);
        var = runs > 1 ? var / (runs - 1) : 0.0;

        LengthTiming t;
        t.T = T;
        t.length_s = streams[0].sample_length_s();
        t.mean_s = mean;
        t.stddev_s = std::sqrt(var);
        t.runs = runs;
        report.timings.push_back(t);
        xs.push_back(t.length_s);
        ys.push_back(t.mean_s);
    }
    if (xs.size() >= 2) report.fit = linear_fit(xs, ys);
    return report;
}

std::string format_latency(const LatencyReport& r) {
    std::string s = "frames  length_s  mean_ms  stddev_ms  runs\n";
    char buf[128];
    for (const LengthTiming& t : r.timings) {
        std::snprintf(buf, sizeof buf, "%6d  %8.2f  %7.3f  %9.3f  %4d\n", t.T, t.length_s,
                      1e3 * t.mean_s, 1e3 * t.stddev_s, t.runs);
        s += buf;
    }
    std::snprintf(buf, sizeof buf, "fit: DT = %.6f * L_s + %.6f  (R^2 = %.4f)\n", r.fit.slope,
                  r.fit.intercept, r.fit.r2);
    s += buf;
    s += "reference: DT = 0.003 * L_s + 0.0145\n";
    if (r.resolution_warning) s += "warning: some runs measured at or below the clock resolution\n";
    return s;
}

}  // namespace stegsage
