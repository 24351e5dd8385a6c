#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Micro-benchmarks for the enforcement overhead: each mode is timed with the
// full tagging/verification chain and against a plain compile-and-apply
// baseline with no enforcement stages.

namespace nbac::harness {

enum class BenchMode : std::uint8_t { compile, submit, submit_withdraw };

std::string_view bench_mode_name(BenchMode mode);
std::optional<BenchMode> bench_mode_from_name(std::string_view name);

struct BenchStats {
    double min_s = 0;
    double max_s = 0;
    double mean_s = 0;
    double median_s = 0;
    double stddev_s = 0;
};

BenchStats summarize(std::vector<double> seconds);

struct BenchReport {
    BenchMode mode = BenchMode::compile;
    unsigned runs = 0;
    unsigned intents_per_run = 0;
    std::vector<double> base_seconds;
    std::vector<double> enforced_seconds;
    BenchStats base;
    BenchStats with_enforcement;
    double overhead_mean_pct = 0;
    double overhead_median_pct = 0;

    std::string to_csv() const;
};

BenchReport run_bench(BenchMode mode, unsigned runs, std::uint64_t seed);

}  // namespace nbac::harness
