#include <doctest.h>

#include <random>

#include "nbac/controller.hpp"
#include "nbac/fixtures.hpp"
#include "oracle_helpers.hpp"

using namespace nbac;

namespace {

policy::AccessMask open_mask(const std::string& app) {
    std::vector<policy::MaskTuple> tuples{
        {"dataplane-topology", {policy::Action::read}, {}},
        {"flow", {policy::Action::read, policy::Action::config_mod}, {}},
        {"stats", {policy::Action::stat}, {}},
    };
    return policy::AccessMask(app, std::move(tuples),
                              policy::AccessModel::make(
                                  policy::AccessModelKind::commons_uncontrolled));
}

ctrl::Intent connectivity(const std::string& src, const std::string& dst) {
    ctrl::Intent intent;
    intent.kind = ctrl::Intent::Kind::connectivity;
    intent.src_host = src;
    intent.dst_host = dst;
    intent.protocol = "UDP";
    intent.src_port = 100;
    intent.dst_port = 200;
    return intent;
}

}  // namespace

TEST_CASE("connectivity on the line fixture installs along the path interior") {
    auto view = fixtures::line3();
    auto mask = open_mask("app");
    auto queries = ctrl::compile(connectivity("h1", "h2"), mask, view, "app", "app/1");

    // Path h1-s1-s2-h2: flow installs on s1 and s2, in path order.
    REQUIRE(queries.size() == 2);
    CHECK(queries[0].op == QueryOp::flow_install);
    CHECK(queries[0].target == "s1");
    CHECK(queries[1].target == "s2");
    CHECK(queries[0].args.at("protocol") == "UDP");
    CHECK(queries[0].app_id == "app");
    CHECK(queries[0].request_id == "app/1");

    auto far = ctrl::compile(connectivity("h1", "h3"), mask, view, "app", "app/2");
    REQUIRE(far.size() == 3);
    CHECK(far[0].target == "s1");
    CHECK(far[1].target == "s2");
    CHECK(far[2].target == "s3");
}

TEST_CASE("compile is a pure function of its inputs") {
    auto view = fixtures::mesh5();
    auto mask = open_mask("app");
    auto intent = connectivity("ha", "hb");
    auto first = ctrl::compile(intent, mask, view, "app", "app/1");
    auto second = ctrl::compile(intent, mask, view, "app", "app/1");
    CHECK(first == second);
}

TEST_CASE("topology_read and node_ltps compile one-to-one") {
    auto view = fixtures::line3();
    auto mask = open_mask("app");

    ctrl::Intent topo;
    topo.kind = ctrl::Intent::Kind::topology_read;
    auto topo_queries = ctrl::compile(topo, mask, view, "app", "app/1");
    REQUIRE(topo_queries.size() == 1);
    CHECK(topo_queries[0].op == QueryOp::topo_read);

    ctrl::Intent ltps;
    ltps.kind = ctrl::Intent::Kind::node_ltps;
    ltps.node_id = "s2";
    auto ltp_queries = ctrl::compile(ltps, mask, view, "app", "app/2");
    REQUIRE(ltp_queries.size() == 1);
    CHECK(ltp_queries[0].op == QueryOp::node_ltps);
    CHECK(ltp_queries[0].target == "s2");
}

TEST_CASE("no path raises a compile error") {
    auto view = fixtures::line3();
    auto mask = open_mask("app");
    CHECK_THROWS_AS(ctrl::compile(connectivity("h1", "nowhere"), mask, view, "app", "app/1"),
                    ctrl::CompileError);

    // Disconnected island: drop all links.
    auto island = view;
    island.links.clear();
    CHECK_THROWS_AS(ctrl::compile(connectivity("h1", "h2"), mask, island, "app", "app/1"),
                    ctrl::CompileError);
}

TEST_CASE("shortest path equals the exhaustive enumeration oracle") {
    auto check_all_pairs = [](const nib::NibSnapshot& view) {
        for (const auto& [from, node_a] : view.nodes) {
            for (const auto& [to, node_b] : view.nodes) {
                if (from == to) continue;
                CHECK(ctrl::shortest_path(view, from, to) ==
                      oracle::least_shortest_path(view, from, to));
            }
        }
    };
    check_all_pairs(fixtures::line3());
    check_all_pairs(fixtures::mesh5());

    // Random graphs: nodes n0..n7 with random edges.
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 60; ++trial) {
        nib::NibSnapshot view;
        unsigned count = 4 + rng() % 5;
        for (unsigned i = 0; i < count; ++i) {
            nib::Node node;
            node.id = "n" + std::to_string(i);
            node.jurisdiction = "region-A";
            node.placement = "core";
            for (unsigned p = 0; p < count; ++p)
                node.ltps.push_back("p" + std::to_string(p));
            view.nodes.emplace(node.id, node);
        }
        for (unsigned i = 0; i < count; ++i)
            for (unsigned j = i + 1; j < count; ++j)
                if (rng() % 3 == 0)
                    view.links.push_back(
                        nib::Link{{"n" + std::to_string(i), "p" + std::to_string(j)},
                                  {"n" + std::to_string(j), "p" + std::to_string(i)}});

        std::string from = "n0";
        std::string to = "n" + std::to_string(count - 1);
        CHECK(ctrl::shortest_path(view, from, to) == oracle::least_shortest_path(view, from, to));
    }
}

TEST_CASE("batch emission order is FIFO without faults") {
    AuditLog audit;
    ctrl::MockController controller(&audit);
    auto view = fixtures::line3();
    auto mask = open_mask("app");

    for (int i = 1; i <= 3; ++i) {
        ctrl::Submission submission;
        submission.app_id = "app";
        submission.request_id = "app/" + std::to_string(i);
        submission.intent = connectivity("h1", "h2");
        submission.mask = std::make_shared<const policy::AccessMask>(mask);
        controller.submit(std::move(submission));
    }
    auto released = controller.pump(view);
    REQUIRE(released.size() == 3);
    CHECK(released[0].request_id == "app/1");
    CHECK(released[1].request_id == "app/2");
    CHECK(released[2].request_id == "app/3");
    CHECK(controller.state_of("app/1") == ctrl::IntentState::ref_monitor);
}

TEST_CASE("faults: delay, reorder, forge, drop and identity swap") {
    auto view = fixtures::line3();
    auto mask = open_mask("app");

    auto submit_n = [&](ctrl::MockController& controller, int n) {
        for (int i = 1; i <= n; ++i) {
            ctrl::Submission submission;
            submission.app_id = "app";
            submission.request_id = "app/" + std::to_string(i);
            submission.intent = connectivity("h1", "h2");
            submission.mask = std::make_shared<const policy::AccessMask>(mask);
            controller.submit(std::move(submission));
        }
    };

    SUBCASE("delay holds one batch back") {
        ctrl::MockController controller(nullptr);
        controller.inject_fault({ctrl::Fault::Mode::delay, 1, {}, {}});
        submit_n(controller, 2);
        auto released = controller.pump(view);
        REQUIRE(released.size() == 2);
        CHECK(released[0].request_id == "app/2");
        CHECK(released[1].request_id == "app/1");
    }

    SUBCASE("reorder applies the permutation") {
        ctrl::MockController controller(nullptr);
        ctrl::Fault fault;
        fault.mode = ctrl::Fault::Mode::reorder;
        fault.permutation = {2, 0, 1};
        controller.inject_fault(fault);
        submit_n(controller, 3);
        auto released = controller.pump(view);
        REQUIRE(released.size() == 3);
        CHECK(released[0].request_id == "app/3");
        CHECK(released[1].request_id == "app/1");
        CHECK(released[2].request_id == "app/2");
    }

    SUBCASE("forge_extra appends a query under the batch identity") {
        ctrl::MockController controller(nullptr);
        ctrl::Fault fault;
        fault.mode = ctrl::Fault::Mode::forge_extra;
        Query forged;
        forged.op = QueryOp::config_mod;
        forged.target = "s1";
        forged.args = {{"key", "mtu"}, {"value", "9000"}};
        fault.forged = forged;
        controller.inject_fault(fault);
        submit_n(controller, 1);
        auto released = controller.pump(view);
        REQUIRE(released.size() == 1);
        REQUIRE(released[0].queries.size() == 3);
        CHECK(released[0].queries.back().op == QueryOp::config_mod);
        CHECK(released[0].queries.back().app_id == "app");
        CHECK(released[0].queries.back().request_id == "app/1");
    }

    SUBCASE("drop_batch swallows the next batch") {
        ctrl::MockController controller(nullptr);
        controller.inject_fault({ctrl::Fault::Mode::drop_batch, 0, {}, {}});
        submit_n(controller, 2);
        auto released = controller.pump(view);
        REQUIRE(released.size() == 1);
        CHECK(released[0].request_id == "app/2");
    }

    SUBCASE("swap_mask relabels the envelope with the previous identity") {
        ctrl::MockController controller(nullptr);
        submit_n(controller, 1);
        auto first = controller.pump(view);
        REQUIRE(first.size() == 1);
        controller.inject_fault({ctrl::Fault::Mode::swap_mask, 0, {}, {}});
        ctrl::Submission submission;
        submission.app_id = "app";
        submission.request_id = "app/2";
        submission.intent = connectivity("h1", "h3");
        submission.mask = std::make_shared<const policy::AccessMask>(mask);
        controller.submit(std::move(submission));
        auto second = controller.pump(view);
        REQUIRE(second.size() == 1);
        CHECK(second[0].request_id == "app/1");  // relabeled envelope
        CHECK(second[0].queries[0].request_id == "app/2");  // queries keep their identity
    }
}

TEST_CASE("flush releases everything still buffered") {
    auto view = fixtures::line3();
    auto mask = open_mask("app");
    ctrl::MockController controller(nullptr);
    controller.inject_fault({ctrl::Fault::Mode::delay, 5, {}, {}});
    ctrl::Submission submission;
    submission.app_id = "app";
    submission.request_id = "app/1";
    submission.intent = connectivity("h1", "h2");
    submission.mask = std::make_shared<const policy::AccessMask>(mask);
    controller.submit(std::move(submission));
    CHECK(controller.pump(view).empty());
    auto flushed = controller.flush();
    REQUIRE(flushed.size() == 1);
    CHECK(flushed[0].request_id == "app/1");
}
