#include <doctest.h>

#include <random>

#include "nbac/fixtures.hpp"
#include "nbac/mano.hpp"
#include "nbac/nib.hpp"

using namespace nbac;

namespace {

struct NibRig {
    mano::KeySet keys = mano::derive_keys(3);
    AuditLog audit;
    nib::Nib nib;
    std::mt19937_64 rng{3};

    explicit NibRig(nib::NibSnapshot topology = fixtures::mesh5())
        : nib(std::move(topology), keys.nib_key, &audit) {}

    nib::SealedQuery seal(Query q) {
        nib::SealedQuery sq;
        sq.query = std::move(q);
        for (auto& b : sq.nonce.value) b = static_cast<std::uint8_t>(rng());
        sq.mac = auth::mac_compute(keys.nib_key, nib::sealed_message(sq.query, sq.nonce));
        return sq;
    }

    Query query(QueryOp op, std::string target, std::map<std::string, std::string> args = {}) {
        Query q;
        q.app_id = "a";
        q.request_id = "a/1";
        q.op = op;
        q.target = std::move(target);
        q.args = std::move(args);
        return q;
    }
};

}  // namespace

TEST_CASE("topology loader validates references") {
    CHECK_THROWS_AS(nib::load_topology_text("{\"nodes\": []}"), nib::TopologyError);
    CHECK_THROWS_AS(
        nib::load_topology_text(
            R"({"nodes": [{"id": "a", "ltps": ["p"]}],
                "links": [[["a", "p"], ["b", "p"]]]})"),
        nib::TopologyError);
    CHECK_THROWS_AS(
        nib::load_topology_text(
            R"({"nodes": [{"id": "a", "ltps": ["p"]}, {"id": "b", "ltps": ["q"]}],
                "links": [[["a", "p"], ["b", "missing"]]]})"),
        nib::TopologyError);

    auto mesh = fixtures::mesh5();
    CHECK(mesh.nodes.size() == 7);
    CHECK(mesh.node("s4")->jurisdiction == "region-B");
}

TEST_CASE("scoped topo_read hides the other region entirely") {
    // 2 region-A nodes + 1 region-B node.
    auto snapshot = nib::load_topology_text(R"({
        "nodes": [
          {"id": "n1", "jurisdiction": "region-A", "placement": "edge", "ltps": ["p1"]},
          {"id": "n2", "jurisdiction": "region-A", "placement": "core", "ltps": ["p1", "p2"]},
          {"id": "n3", "jurisdiction": "region-B", "placement": "edge", "ltps": ["p1"]}
        ],
        "links": [[["n1", "p1"], ["n2", "p1"]], [["n2", "p2"], ["n3", "p1"]]]
    })");
    NibRig rig(snapshot);

    auto q = rig.query(QueryOp::topo_read, "*");
    q.scope[policy::Attribute::jurisdiction] = {"region-A"};
    auto result = rig.nib.execute(rig.seal(q));
    REQUIRE(result.ok);
    REQUIRE(result.value.at("nodes").size() == 2);
    std::set<std::string> ids;
    for (const auto& node : result.value.at("nodes")) ids.insert(node.at("id").get<std::string>());
    CHECK(ids == std::set<std::string>{"n1", "n2"});
    // The cross-region link disappears with its endpoint.
    CHECK(result.value.at("links").size() == 1);

    // Unscoped scan sees everything.
    auto full = rig.nib.execute(rig.seal(rig.query(QueryOp::topo_read, "*")));
    CHECK(full.value.at("nodes").size() == 3);
}

TEST_CASE("scoped results are always a subgraph of the full topology") {
    NibRig rig;
    std::mt19937_64 rng(8);
    auto full = rig.nib.execute(rig.seal(rig.query(QueryOp::topo_read, "*")));
    std::set<std::string> all_ids;
    for (const auto& node : full.value.at("nodes")) all_ids.insert(node.at("id").get<std::string>());

    const std::vector<std::vector<std::string>> scopes{
        {"region-A"}, {"region-B"}, {"region-A", "region-B"}, {"region-C"}};
    for (const auto& scope : scopes) {
        auto q = rig.query(QueryOp::topo_read, "*");
        q.scope[policy::Attribute::jurisdiction] = scope;
        auto result = rig.nib.execute(rig.seal(q));
        REQUIRE(result.ok);
        for (const auto& node : result.value.at("nodes"))
            CHECK(all_ids.contains(node.at("id").get<std::string>()));
    }
}

TEST_CASE("nonce replay and tampered MACs are dropped") {
    NibRig rig;
    auto sealed = rig.seal(rig.query(QueryOp::node_ltps, "s1"));
    CHECK(rig.nib.execute(sealed).ok);
    // Same sealed query again: nonce replay.
    auto replay = rig.nib.execute(sealed);
    CHECK_FALSE(replay.ok);
    CHECK(replay.error == "nonce_replay");

    auto tampered = rig.seal(rig.query(QueryOp::node_ltps, "s2"));
    tampered.mac[0] ^= 0x01;
    auto dropped = rig.nib.execute(tampered);
    CHECK_FALSE(dropped.ok);
    CHECK(dropped.error == "bad_mac");
    // Tampered queries never enter the nonce set.
    CHECK(rig.nib.nonce_count() == 1);

    auto drops = rig.audit.select("nib", "drop");
    CHECK(drops.size() == 2);
}

TEST_CASE("the nonce set grows by exactly one per accepted query") {
    NibRig rig;
    for (int i = 0; i < 10; ++i) {
        auto before = rig.nib.nonce_count();
        auto result = rig.nib.execute(rig.seal(rig.query(QueryOp::topo_read, "*")));
        CHECK(result.ok);
        CHECK(rig.nib.nonce_count() == before + 1);
    }
}

TEST_CASE("flow lifecycle: install, stats at zero, delete") {
    NibRig rig;
    auto install = rig.nib.execute(rig.seal(rig.query(
        QueryOp::flow_install, "s2",
        {{"src_ip", "10.0.0.1"}, {"dst_ip", "10.0.0.2"}, {"protocol", "udp"},
         {"src_port", "100"}, {"dst_port", "200"}})));
    REQUIRE(install.ok);
    std::string flow_id = install.value.at("flow_id").get<std::string>();
    CHECK(flow_id == "f1");
    // Protocol normalizes to upper case.
    CHECK(rig.nib.read_view().flows.at(flow_id).protocol == "UDP");

    auto stats = rig.nib.execute(rig.seal(rig.query(QueryOp::stats_read, flow_id)));
    REQUIRE(stats.ok);
    CHECK(stats.value.at("packets") == 0);
    CHECK(stats.value.at("bytes") == 0);

    auto removed = rig.nib.execute(rig.seal(rig.query(QueryOp::flow_delete, flow_id)));
    CHECK(removed.ok);
    CHECK(rig.nib.read_view().flows.empty());

    auto missing = rig.nib.execute(rig.seal(rig.query(QueryOp::stats_read, flow_id)));
    CHECK_FALSE(missing.ok);
    CHECK(missing.error == "unknown_target");
}

TEST_CASE("flow argument validation fails closed") {
    NibRig rig;
    auto no_fields = rig.nib.execute(rig.seal(rig.query(QueryOp::flow_install, "s1")));
    CHECK_FALSE(no_fields.ok);
    auto bad_port = rig.nib.execute(rig.seal(rig.query(
        QueryOp::flow_install, "s1",
        {{"src_ip", "a"}, {"dst_ip", "b"}, {"protocol", "udp"},
         {"src_port", "99999"}, {"dst_port", "1"}})));
    CHECK_FALSE(bad_port.ok);
    CHECK(bad_port.error == "bad_port");
    auto bad_device = rig.nib.execute(rig.seal(rig.query(
        QueryOp::flow_install, "ghost",
        {{"src_ip", "a"}, {"dst_ip", "b"}, {"protocol", "udp"},
         {"src_port", "1"}, {"dst_port", "1"}})));
    CHECK_FALSE(bad_device.ok);
}

TEST_CASE("config and subscription round trips") {
    NibRig rig;
    auto set = rig.nib.execute(rig.seal(
        rig.query(QueryOp::config_mod, "s1", {{"key", "mtu"}, {"value", "9000"}})));
    CHECK(set.ok);
    auto get = rig.nib.execute(rig.seal(rig.query(QueryOp::config_read, "s1")));
    REQUIRE(get.ok);
    CHECK(get.value.at("mtu") == "9000");

    auto sub = rig.nib.execute(rig.seal(rig.query(QueryOp::subscribe, "flow-events")));
    CHECK(sub.ok);
    CHECK(rig.nib.read_view().subscriptions.contains({"a", "flow-events"}));
}

TEST_CASE("read_view snapshots are value copies") {
    NibRig rig;
    auto before = rig.nib.read_view();
    rig.nib.execute(rig.seal(rig.query(
        QueryOp::flow_install, "s3",
        {{"src_ip", "a"}, {"dst_ip", "b"}, {"protocol", "tcp"},
         {"src_port", "1"}, {"dst_port", "2"}})));
    CHECK(before.flows.empty());
    CHECK(rig.nib.read_view().flows.size() == 1);
}
