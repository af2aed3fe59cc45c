#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stegsage/codebook.hpp"
#include "stegsage/model.hpp"

namespace stegsage {

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 1.0;
};

// Ordinary least squares of y against x; r2 = 1 - SS_res/SS_tot. Needs
// at least two distinct x values.
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

struct LengthTiming {
    int T = 0;
    double length_s = 0.0;  // sample duration in seconds
    double mean_s = 0.0;    // mean detection time per run
    double stddev_s = 0.0;  // sample standard deviation over runs
    int runs = 0;
};

struct LatencyReport {
    std::vector<LengthTiming> timings;
    LinearFit fit;                    // mean detection time against sample duration
    bool resolution_warning = false;  // some run measured below the clock's resolution
};

// Times one full detection per run: graph construction, forward pass,
// decision. Streams are generated up front and excluded from the clock,
// and everything runs on this thread so the numbers are stable. Requires
// runs >= 30 per length.
LatencyReport bench_detection(const ModelState& state, const CodebookSet& codebooks,
                              const std::vector<int>& lengths, int runs, std::uint64_t seed);

std::string format_latency(const LatencyReport& r);

}  // namespace stegsage
