#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "nbac/authcode.hpp"
#include "nbac/policy.hpp"

// Compiled, discrete NIB operations. A query carries the identity of the
// originating application and request; the monitor judges queries, the NIB
// executes them.

namespace nbac {

enum class QueryOp : std::uint8_t {
    topo_read = 0,
    node_ltps = 1,
    flow_install = 2,
    flow_delete = 3,
    stats_read = 4,
    config_read = 5,
    config_mod = 6,
    subscribe = 7,
};

std::string_view query_op_name(QueryOp op);

// Catalogue resource a query op invokes.
policy::ResourceId query_resource(QueryOp op);

// Action the mask must permit for the op.
policy::Action query_action(QueryOp op);

// Whether the op modifies NIB state (the modification-type attribute class).
bool query_mutates(QueryOp op);

struct Query {
    std::string app_id;
    std::string request_id;
    QueryOp op = QueryOp::topo_read;
    std::string target;                       // node id, flow id, or "*" for scans
    std::map<std::string, std::string> args;  // op-specific, e.g. flow 5-tuple
    // Result scope attached by the monitor from the mask's constraints
    // (e.g. jurisdiction -> {region-A}); the NIB filters scan results by it.
    std::map<policy::Attribute, std::vector<std::string>> scope;

    bool operator==(const Query&) const = default;

    // Canonical byte form used as the per-query MAC input.
    auth::Bytes canonical_encoding() const;
    void encode_into(auth::Encoder& enc) const;
};

// One compiled request: the unit the monitor verifies against a tag record.
struct QueryBatch {
    std::string app_id;
    std::string request_id;
    std::vector<Query> queries;
};

}  // namespace nbac
