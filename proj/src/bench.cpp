#include "nbac/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>

#include "nbac/pipeline.hpp"

namespace nbac::harness {

namespace {

constexpr std::string_view kModeNames[] = {"compile", "submit", "submit-withdraw"};

constexpr unsigned kIntentsPerRun = 50;

// Bench fabric: a 3x6 grid of switches across two regions with one host per
// far corner. Compilation walks real multi-hop paths here, so the substrate
// cost is in realistic proportion to the per-query enforcement work.
nib::NibSnapshot bench_topology() {
    nib::NibSnapshot snapshot;
    constexpr int kRows = 3;
    constexpr int kCols = 6;
    auto name = [](int r, int c) { return "g" + std::to_string(r) + std::to_string(c); };

    for (int r = 0; r < kRows; ++r) {
        for (int c = 0; c < kCols; ++c) {
            nib::Node node;
            node.id = name(r, c);
            node.jurisdiction = c < kCols / 2 ? "region-A" : "region-B";
            node.placement = (r == 0 || r == kRows - 1) ? "edge" : "core";
            node.ltps = {"n", "s", "e", "w", "h"};
            snapshot.nodes.emplace(node.id, node);
        }
    }
    for (int r = 0; r < kRows; ++r) {
        for (int c = 0; c < kCols; ++c) {
            if (c + 1 < kCols)
                snapshot.links.push_back(nib::Link{{name(r, c), "e"}, {name(r, c + 1), "w"}});
            if (r + 1 < kRows)
                snapshot.links.push_back(nib::Link{{name(r, c), "s"}, {name(r + 1, c), "n"}});
        }
    }
    for (const auto& [host, sw] : std::vector<std::pair<std::string, std::string>>{
             {"ha", name(0, 0)}, {"hb", name(kRows - 1, kCols - 1)}}) {
        nib::Node node;
        node.id = host;
        node.jurisdiction = snapshot.nodes.at(sw).jurisdiction;
        node.placement = "host";
        node.ltps = {"p"};
        snapshot.nodes.emplace(node.id, node);
        snapshot.links.push_back(nib::Link{{host, "p"}, {sw, "h"}});
    }
    return snapshot;
}

policy::DeploymentManifest bench_manifest() {
    policy::DeploymentManifest manifest;
    manifest.app_id = "bench";
    manifest.entries = {
        {"dataplane-topology", {policy::Action::read}},
        {"flow", {policy::Action::read, policy::Action::config_mod}},
        {"stats", {policy::Action::stat}},
    };
    return manifest;
}

ctrl::Intent bench_intent(unsigned i, BenchMode mode) {
    ctrl::Intent intent;
    if (mode == BenchMode::compile && i % 3 == 1) {
        intent.kind = ctrl::Intent::Kind::topology_read;
        return intent;
    }
    if (mode == BenchMode::compile && i % 3 == 2) {
        intent.kind = ctrl::Intent::Kind::node_ltps;
        intent.node_id = "g11";
        return intent;
    }
    intent.kind = ctrl::Intent::Kind::connectivity;
    intent.src_host = i % 2 == 0 ? "ha" : "hb";
    intent.dst_host = i % 2 == 0 ? "hb" : "ha";
    intent.protocol = "UDP";
    intent.src_port = 1000 + static_cast<int>(i);
    intent.dst_port = 2000 + static_cast<int>(i);
    return intent;
}

double timed(const std::function<void()>& work) {
    auto start = std::chrono::steady_clock::now();
    work();
    auto stop = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(stop - start).count();
}

// Baseline arm: the vanilla substrate. Intents run through the same mock
// controller and NIB, but with no tagging, no monitor and no MACs on the
// NIB channel.
double baseline_run(BenchMode mode, std::uint64_t seed) {
    nib::Nib plain_nib(bench_topology(), mano::derive_keys(seed).nib_key, nullptr,
                       /*enforce=*/false);
    ctrl::MockController controller(nullptr);
    auto mask = std::make_shared<const policy::AccessMask>(policy::compute_access_mask(
        {}, bench_manifest(),
        policy::AccessModel::make(policy::AccessModelKind::commons_uncontrolled)));
    auto view = plain_nib.read_view();
    // Result return path: the vanilla substrate also hands results back.
    std::map<std::string, std::vector<nib::ExecResult>> results;

    auto drive = [&](ctrl::Submission submission) {
        const std::string request_id = submission.request_id;
        controller.submit(std::move(submission));
        std::vector<std::string> flow_ids;
        for (auto& batch : controller.pump(view)) {
            if (mode == BenchMode::compile) continue;
            for (auto& q : batch.queries) {
                auto result = plain_nib.execute(nib::SealedQuery{std::move(q), {}, {}});
                if (result.ok && result.value.contains("flow_id"))
                    flow_ids.push_back(result.value.at("flow_id").get<std::string>());
                results[request_id].push_back(std::move(result));
            }
        }
        if (!flow_ids.empty()) controller.note_flows(request_id, std::move(flow_ids));
        controller.on_monitor_verdict(request_id, true);
    };

    return timed([&] {
        unsigned next_request = 1;
        for (unsigned i = 0; i < kIntentsPerRun; ++i) {
            ctrl::Submission submission;
            submission.app_id = "bench";
            submission.request_id = "bench/" + std::to_string(next_request++);
            submission.intent = bench_intent(i, mode);
            submission.mask = mask;
            std::string installed = submission.request_id;
            drive(std::move(submission));

            if (mode == BenchMode::submit_withdraw) {
                ctrl::Submission withdraw;
                withdraw.app_id = "bench";
                withdraw.request_id = "bench/" + std::to_string(next_request++);
                withdraw.withdraw_of = installed;
                drive(std::move(withdraw));
            }
        }
    });
}

// Enforced arm: the full chain through tagger, controller, monitor and NIB.
double enforced_run(BenchMode mode, std::uint64_t seed) {
    PipelineConfig config;
    config.seed = seed;
    config.audit_enabled = false;
    Pipeline pipeline(bench_topology(), config);
    pipeline.mano().enroll_parsed(bench_manifest(),
                                  policy::AccessModel::make(
                                      policy::AccessModelKind::commons_uncontrolled),
                                  {});

    if (mode == BenchMode::compile) {
        // Tagging plus controller compilation, mirroring the compile-only
        // measurement: the delta against baseline is the tagging stage.
        auto view = pipeline.nib().read_view();
        return timed([&] {
            for (unsigned i = 0; i < kIntentsPerRun; ++i) {
                ctrl::Intent intent = bench_intent(i, mode);
                tagger::AppRequest request;
                request.app_id = "bench";
                request.credential = pipeline.mano().credential_for("bench");
                request.intent = intent;
                request.requested_resources = Pipeline::claimed_resources(intent);
                auto tagged = pipeline.tagger().tag_request(request);
                pipeline.controller().submit(std::move(tagged->forward));
                pipeline.controller().pump(view);
            }
        });
    }

    return timed([&] {
        for (unsigned i = 0; i < kIntentsPerRun; ++i) {
            ctrl::Intent intent = bench_intent(i, mode);
            auto request_id = pipeline.submit_request("bench", intent);
            if (mode == BenchMode::submit_withdraw && request_id)
                pipeline.submit_withdraw("bench", *request_id);
        }
    });
}

}  // namespace

std::string_view bench_mode_name(BenchMode mode) {
    return kModeNames[static_cast<std::size_t>(mode)];
}

std::optional<BenchMode> bench_mode_from_name(std::string_view name) {
    for (std::size_t i = 0; i < std::size(kModeNames); ++i)
        if (name == kModeNames[i]) return static_cast<BenchMode>(i);
    if (name == "submit_withdraw") return BenchMode::submit_withdraw;
    return std::nullopt;
}

BenchStats summarize(std::vector<double> seconds) {
    BenchStats stats;
    if (seconds.empty()) return stats;
    std::sort(seconds.begin(), seconds.end());
    stats.min_s = seconds.front();
    stats.max_s = seconds.back();
    double sum = 0;
    for (double s : seconds) sum += s;
    stats.mean_s = sum / static_cast<double>(seconds.size());
    std::size_t mid = seconds.size() / 2;
    stats.median_s =
        seconds.size() % 2 == 1 ? seconds[mid] : (seconds[mid - 1] + seconds[mid]) / 2.0;
    double var = 0;
    for (double s : seconds) var += (s - stats.mean_s) * (s - stats.mean_s);
    stats.stddev_s = seconds.size() > 1 ? std::sqrt(var / static_cast<double>(seconds.size() - 1)) : 0;
    return stats;
}

std::string BenchReport::to_csv() const {
    std::ostringstream os;
    os << "mode,variant,run,seconds\n";
    for (std::size_t i = 0; i < base_seconds.size(); ++i)
        os << bench_mode_name(mode) << ",baseline," << i << "," << base_seconds[i] << "\n";
    for (std::size_t i = 0; i < enforced_seconds.size(); ++i)
        os << bench_mode_name(mode) << ",enforced," << i << "," << enforced_seconds[i] << "\n";
    os << "mode,variant,min,max,mean,median,stddev\n";
    auto row = [&os, this](std::string_view variant, const BenchStats& s) {
        os << bench_mode_name(mode) << "," << variant << "," << s.min_s << "," << s.max_s << ","
           << s.mean_s << "," << s.median_s << "," << s.stddev_s << "\n";
    };
    row("baseline", base);
    row("enforced", with_enforcement);
    os << "mode,overhead_mean_pct,overhead_median_pct\n";
    os << bench_mode_name(mode) << "," << overhead_mean_pct << "," << overhead_median_pct << "\n";
    return os.str();
}

BenchReport run_bench(BenchMode mode, unsigned runs, std::uint64_t seed) {
    BenchReport report;
    report.mode = mode;
    report.runs = runs;
    report.intents_per_run = kIntentsPerRun;

    // Warm-up pass per arm, excluded from the stats.
    baseline_run(mode, seed);
    enforced_run(mode, seed);

    for (unsigned run = 0; run < runs; ++run) {
        report.base_seconds.push_back(baseline_run(mode, seed + run));
        report.enforced_seconds.push_back(enforced_run(mode, seed + run));
    }
    report.base = summarize(report.base_seconds);
    report.with_enforcement = summarize(report.enforced_seconds);
    if (report.base.mean_s > 0)
        report.overhead_mean_pct =
            (report.with_enforcement.mean_s - report.base.mean_s) / report.base.mean_s * 100.0;
    if (report.base.median_s > 0)
        report.overhead_median_pct =
            (report.with_enforcement.median_s - report.base.median_s) / report.base.median_s * 100.0;
    return report;
}

}  // namespace nbac::harness
