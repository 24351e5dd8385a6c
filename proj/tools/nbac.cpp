#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "nbac/adversary.hpp"
#include "nbac/bench.hpp"
#include "nbac/scenario.hpp"

// Command-line front end: scenario runs, adversarial campaigns and the
// enforcement-overhead benchmarks.

namespace {

int cmd_run(const std::string& path, std::optional<std::uint64_t> seed,
            const std::string& audit_path) {
    auto report = nbac::harness::run_scenario_file(path, seed);
    if (!audit_path.empty()) {
        std::ofstream out(audit_path);
        if (!out) {
            std::cerr << "cannot write audit trail to " << audit_path << "\n";
            return 2;
        }
        out << report.audit_jsonl;
    }
    std::cout << "scenario: " << report.name << "\n"
              << "events:   " << report.events << "\n"
              << "checks:   " << report.checks << "\n";
    for (const auto& failure : report.failures) std::cout << "FAIL: " << failure << "\n";
    std::cout << (report.passed ? "PASS" : "FAIL") << "\n";
    return report.passed ? 0 : 1;
}

int cmd_adversary(unsigned runs, std::uint64_t seed) {
    nbac::harness::AdversaryConfig config;
    config.runs = runs;
    config.seed = seed;
    auto stats = nbac::harness::adversary_suite(config);
    std::cout << "runs:               " << stats.runs << "\n"
              << "tagged requests:    " << stats.requests << "\n"
              << "tagger drops:       " << stats.tagger_drops << "\n"
              << "batches accepted:   " << stats.batches_accepted << "\n"
              << "batches rejected:   " << stats.batches_rejected << "\n"
              << "nib executions:     " << stats.nib_execs << "\n"
              << "mask violations:    " << stats.violations << "\n";
    return stats.violations == 0 ? 0 : 1;
}

int cmd_bench(const std::string& mode_name, unsigned runs, std::uint64_t seed,
              const std::string& csv_path) {
    auto mode = nbac::harness::bench_mode_from_name(mode_name);
    if (!mode) {
        std::cerr << "unknown bench mode '" << mode_name << "'\n";
        return 2;
    }
    auto report = nbac::harness::run_bench(*mode, runs, seed);
    if (!csv_path.empty()) {
        std::ofstream out(csv_path);
        if (!out) {
            std::cerr << "cannot write csv to " << csv_path << "\n";
            return 2;
        }
        out << report.to_csv();
    }
    auto print = [](std::string_view variant, const nbac::harness::BenchStats& s) {
        std::cout << variant << ": min " << s.min_s << " max " << s.max_s << " mean " << s.mean_s
                  << " median " << s.median_s << " stddev " << s.stddev_s << " (seconds)\n";
    };
    std::cout << "mode: " << nbac::harness::bench_mode_name(*mode) << ", runs: " << report.runs
              << ", intents/run: " << report.intents_per_run << "\n";
    print("baseline", report.base);
    print("enforced", report.with_enforcement);
    std::cout << "overhead: mean " << report.overhead_mean_pct << "%, median "
              << report.overhead_median_pct << "%\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"north-bound access control pipeline"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string audit_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    auto* run = app.add_subcommand("run", "run a scenario file");
    run->add_option("scenario", scenario_path, "scenario json file")->required();
    run->add_option("--seed", seed, "override the scenario seed")->each([&](const std::string&) {
        seed_set = true;
    });
    run->add_option("--audit", audit_path, "write the audit trail (json lines)");

    unsigned adversary_runs = 1000;
    std::uint64_t adversary_seed = 1;
    auto* adversary = app.add_subcommand("adversary", "randomized adversarial campaigns");
    adversary->add_option("--runs", adversary_runs, "number of runs");
    adversary->add_option("--seed", adversary_seed, "master seed");

    std::string bench_mode = "compile";
    unsigned bench_runs = 40;
    std::uint64_t bench_seed = 1;
    std::string csv_path;
    auto* bench = app.add_subcommand("bench", "enforcement overhead micro-benchmarks");
    bench->add_option("--mode", bench_mode, "compile | submit | submit-withdraw")->required();
    bench->add_option("--runs", bench_runs, "runs per arm");
    bench->add_option("--seed", bench_seed, "seed");
    bench->add_option("--csv", csv_path, "write per-run and summary rows as csv");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return cmd_run(scenario_path, seed_set ? std::make_optional(seed) : std::nullopt,
                           audit_path);
        if (adversary->parsed()) return cmd_adversary(adversary_runs, adversary_seed);
        if (bench->parsed()) return cmd_bench(bench_mode, bench_runs, bench_seed, csv_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
