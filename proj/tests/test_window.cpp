#include <doctest.h>

#include <random>

#include "monitor_harness.hpp"
#include "oracle_helpers.hpp"

using namespace nbac;
using monitor::WindowCheck;

namespace {

// Window classification against a fixed record table, no monitor involved.
struct PureWindow {
    monitor::WindowState state;
    std::map<std::uint64_t, std::string> records;

    explicit PureWindow(unsigned limit) { state.limit = limit; }

    WindowCheck classify(std::uint64_t counter, const std::string& app) {
        return monitor::window_check(state, counter, app, [this](std::uint64_t c) {
            auto it = records.find(c);
            return it == records.end() ? std::optional<std::string>{}
                                       : std::optional<std::string>{it->second};
        });
    }
};

}  // namespace

TEST_CASE("window classification: in-order, held, stale, overflow") {
    PureWindow w(2);
    w.records = {{1, "a"}, {2, "a"}, {3, "a"}, {4, "a"}, {5, "a"}};

    CHECK(w.classify(1, "a") == WindowCheck::in_order);
    CHECK(w.classify(2, "a") == WindowCheck::held);     // gap of one, same app
    CHECK(w.classify(3, "a") == WindowCheck::held);     // gap of two, same app
    CHECK(w.classify(4, "a") == WindowCheck::invalidate_batch_set);  // gap of three > W
    CHECK(w.classify(0, "a") == WindowCheck::stale);
}

TEST_CASE("window classification: cross-app gaps invalidate") {
    PureWindow w(2);
    w.records = {{1, "a"}, {2, "b"}};
    // b's counter 2 arrives while a's counter 1 is missing.
    CHECK(w.classify(2, "b") == WindowCheck::invalidate_batch_set);

    PureWindow u(2);
    u.records = {{1, "a"}, {2, "a"}};
    // An unknown gap owner is treated as foreign.
    u.records.erase(1);
    CHECK(u.classify(2, "a") == WindowCheck::invalidate_batch_set);
}

TEST_CASE("duplicate held counters classify as stale") {
    PureWindow w(2);
    w.records = {{1, "a"}, {2, "a"}};
    CHECK(w.classify(2, "a") == WindowCheck::held);
    w.state.pending.emplace(2, monitor::HeldBatch{"a", "a/2", {}, {}});
    CHECK(w.classify(2, "a") == WindowCheck::stale);
}

TEST_CASE("same-app reorder within the window is restored in FIFO order") {
    rig::MonitorRig rig(2);
    rig.register_open_app("a");

    // Both requests were tagged in order; the batches arrive n+1 then n.
    rig.monitor.receive_tag_record(rig.record_for("a", 1));
    rig.monitor.receive_tag_record(rig.record_for("a", 2));

    auto held = rig.monitor.verify_batch(rig.topo_batch("a", 2));
    CHECK(held.accepted());
    CHECK(rig.monitor.window().pending.size() == 1);

    auto in_order = rig.monitor.verify_batch(rig.topo_batch("a", 1));
    CHECK(in_order.accepted());
    CHECK(rig.monitor.window().pending.empty());
    CHECK(rig.monitor.window().expected_counter == 3);

    // Both batches reached the NIB, and in counter order.
    auto execs = rig.audit.select("nib", "exec");
    REQUIRE(execs.size() == 2);
    CHECK(execs[0].at("request_id") == "a/1");
    CHECK(execs[1].at("request_id") == "a/2");
}

TEST_CASE("same-app gap beyond the window invalidates the batch set") {
    rig::MonitorRig rig(2);
    rig.register_open_app("a");
    for (std::uint64_t c = 1; c <= 4; ++c) rig.monitor.receive_tag_record(rig.record_for("a", c));

    CHECK(rig.monitor.verify_batch(rig.topo_batch("a", 2)).accepted());
    CHECK(rig.monitor.verify_batch(rig.topo_batch("a", 3)).accepted());
    auto verdict = rig.monitor.verify_batch(rig.topo_batch("a", 4));
    CHECK(verdict.decision == monitor::Decision::reject_window);
    CHECK(rig.monitor.window().pending.empty());
    CHECK(rig.monitor.window().expected_counter == 5);

    // The delayed counter 1 is now stale.
    CHECK(rig.monitor.verify_batch(rig.topo_batch("a", 1)).decision ==
          monitor::Decision::reject_stale);
    // Nothing reached the NIB.
    CHECK(rig.audit.select("nib", "exec").empty());
}

TEST_CASE("cross-app reorder invalidates both requests") {
    rig::MonitorRig rig(2);
    rig.register_open_app("a");
    rig.register_open_app("b");

    // a's counter 1 is delayed; b's counter 2 arrives first.
    rig.monitor.receive_tag_record(rig.record_for("a", 1));
    rig.monitor.receive_tag_record(rig.record_for("b", 2));
    auto b_verdict = rig.monitor.verify_batch(rig.topo_batch("b", 2));
    CHECK(b_verdict.decision == monitor::Decision::reject_window);

    auto a_verdict = rig.monitor.verify_batch(rig.topo_batch("a", 1));
    CHECK(a_verdict.decision == monitor::Decision::reject_stale);
    CHECK(rig.audit.select("nib", "exec").empty());
}

TEST_CASE("window verdicts are a pure function of the arrival sequence") {
    // Randomized arrival orders, replayed twice and against the reference
    // automaton transcription.
    std::mt19937_64 scramble(404);
    for (int trial = 0; trial < 120; ++trial) {
        unsigned limit = 1 + scramble() % 3;
        unsigned count = 4 + scramble() % 5;

        std::vector<std::pair<std::uint64_t, std::string>> tags;
        for (unsigned c = 1; c <= count; ++c)
            tags.emplace_back(c, scramble() % 3 == 0 ? "b" : "a");
        auto arrivals = tags;
        std::shuffle(arrivals.begin(), arrivals.end(), scramble);

        auto run_real = [&]() {
            rig::MonitorRig rig(limit);
            rig.register_open_app("a");
            rig.register_open_app("b");
            for (const auto& [counter, app] : tags)
                rig.monitor.receive_tag_record(rig.record_for(app, counter));
            std::vector<std::string> verdicts;
            for (const auto& [counter, app] : arrivals) {
                rig.monitor.verify_batch(rig.topo_batch(app, counter));
                auto batches = rig.audit.select("monitor", "batch");
                verdicts.push_back(batches.back().at("window").get<std::string>());
            }
            return verdicts;
        };

        auto first = run_real();
        auto second = run_real();
        CHECK(first == second);

        // Reference automaton transcription.
        oracle::WindowRef ref;
        ref.limit = limit;
        std::map<std::uint64_t, std::string> record_apps(tags.begin(), tags.end());
        std::vector<std::string> expected;
        for (const auto& [counter, app] : arrivals) {
            std::string label = ref.arrive(counter, app, record_apps);
            if (label == "invalidate") label = "invalidate_batch_set";
            expected.push_back(label);
        }
        CHECK(first == expected);
    }
}

TEST_CASE("pending never exceeds the window limit") {
    std::mt19937_64 scramble(77);
    for (int trial = 0; trial < 50; ++trial) {
        unsigned limit = 1 + scramble() % 3;
        rig::MonitorRig rig(limit);
        rig.register_open_app("a");
        std::vector<std::uint64_t> counters{1, 2, 3, 4, 5, 6};
        std::shuffle(counters.begin(), counters.end(), scramble);
        for (auto c : counters) {
            rig.arrive("a", c);
            CHECK(rig.monitor.window().pending.size() <= limit);
            for (const auto& [counter, held] : rig.monitor.window().pending)
                CHECK(counter > rig.monitor.window().expected_counter);
        }
    }
}
