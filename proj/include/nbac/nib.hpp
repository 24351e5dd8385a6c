#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "nbac/audit.hpp"
#include "nbac/authcode.hpp"
#include "nbac/query.hpp"

// Network information base: topology graph, flow table and attribute store.
// Executes only MAC-authenticated, nonce-fresh queries; direct mutation of
// the snapshot is structurally impossible from outside.

namespace nbac::nib {

struct TopologyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Node {
    std::string id;
    std::string jurisdiction;
    std::string placement;
    std::vector<std::string> ltps;

    bool operator==(const Node&) const = default;
};

struct LinkEnd {
    std::string node;
    std::string ltp;

    bool operator==(const LinkEnd&) const = default;
};

struct Link {
    LinkEnd a;
    LinkEnd b;

    bool operator==(const Link&) const = default;
};

struct FlowEntry {
    std::string flow_id;
    std::string device;
    std::string src_ip;
    std::string dst_ip;
    std::string protocol;  // normalized upper-case
    int src_port = 0;
    int dst_port = 0;
    std::string action;
    std::string owner_app;
    std::string request_id;
    std::uint64_t packets = 0;
    std::uint64_t bytes = 0;

    bool operator==(const FlowEntry&) const = default;
};

struct NibSnapshot {
    std::map<std::string, Node> nodes;
    std::vector<Link> links;
    std::map<std::string, FlowEntry> flows;
    std::set<std::pair<std::string, std::string>> subscriptions;  // (app, target)
    std::map<std::string, std::map<std::string, std::string>> config;

    bool operator==(const NibSnapshot&) const = default;

    const Node* node(const std::string& id) const;
    // Adjacent node ids, sorted.
    std::vector<std::string> neighbors(const std::string& id) const;
};

// Topology document: {"nodes": [{id, jurisdiction, placement, ltps}],
// "links": [[[node, ltp], [node, ltp]], ...]}.
NibSnapshot load_topology(const nlohmann::json& doc);
NibSnapshot load_topology_text(std::string_view text);
NibSnapshot load_topology_file(const std::string& path);

struct SealedQuery {
    Query query;
    auth::Nonce nonce;
    auth::Mac mac;
};

// MAC input for a sealed query.
auth::Bytes sealed_message(const Query& query, const auth::Nonce& nonce);

struct ExecResult {
    bool ok = false;
    std::string error;
    nlohmann::json value;
};

class Nib {
public:
    // `enforce` disables MAC/nonce verification; that mode exists solely for
    // the no-enforcement baseline arm of the benchmarks.
    Nib(NibSnapshot snapshot, auth::MacKey key, AuditLog* audit, bool enforce = true);

    // Verifies the MAC and nonce freshness, then dispatches. Rejections are
    // dropped and audited; they never touch the snapshot.
    ExecResult execute(const SealedQuery& sq);

    // Immutable copy reflecting all mutations so far. The untrusted
    // controller only ever receives copies; live access would bypass the
    // monitor.
    NibSnapshot read_view() const { return state_; }

    // Borrowed view for the trusted, synchronous monitor resolution path.
    const NibSnapshot& peek() const { return state_; }

    std::size_t nonce_count() const { return seen_nonces_.size(); }

private:
    ExecResult dispatch(const Query& q);

    NibSnapshot state_;
    auth::MacKey key_;
    AuditLog* audit_;
    bool enforce_ = true;
    std::set<auth::Nonce> seen_nonces_;
    std::uint64_t next_flow_ = 1;
};

}  // namespace nbac::nib
