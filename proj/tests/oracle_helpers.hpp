#pragma once

// Independent brute-force oracles used by the unit and acceptance suites.
// These deliberately re-derive expected results by exhaustive enumeration,
// separate from the implementation paths they check.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "nbac/nib.hpp"
#include "nbac/policy.hpp"
#include "nbac/query.hpp"

namespace oracle {

using namespace nbac;

// --- rule -> entry mapping, by exhaustive scan over rule x entry ----------

struct MappingEdge {
    std::size_t rule_index;
    std::size_t entry_index;

    bool operator==(const MappingEdge&) const = default;
    auto operator<=>(const MappingEdge&) const = default;
};

inline std::vector<MappingEdge> mapping_graph(const policy::OperatorPolicySet& op_set,
                                              const policy::DeploymentManifest& dm) {
    std::vector<MappingEdge> edges;
    for (std::size_t r = 0; r < op_set.rules.size(); ++r)
        for (std::size_t e = 0; e < dm.entries.size(); ++e)
            if (op_set.rules[r].resource == dm.entries[e].resource)
                edges.push_back(MappingEdge{r, e});
    return edges;
}

// Classification by direct image/coimage counting.
inline policy::MappingClass classify_by_enumeration(const policy::OperatorPolicySet& op_set,
                                                    const policy::DeploymentManifest& dm) {
    auto edges = mapping_graph(op_set, dm);
    std::map<std::size_t, int> per_entry;
    for (std::size_t e = 0; e < dm.entries.size(); ++e) per_entry[e] = 0;
    for (const auto& edge : edges) ++per_entry[edge.entry_index];

    bool onto = true;
    bool one_to_one = true;
    for (const auto& [entry, count] : per_entry) {
        if (count == 0) onto = false;
        if (count > 1) one_to_one = false;
    }
    if (onto && one_to_one) return policy::MappingClass::bijective;
    if (onto) return policy::MappingClass::surjective;
    if (one_to_one) return policy::MappingClass::injective;
    return policy::MappingClass::partial;
}

// --- model-compatibility truth table (the published conflict contract) ----

inline bool exclusive_model(policy::AccessModelKind kind) {
    switch (kind) {
        case policy::AccessModelKind::direct_explicit:
        case policy::AccessModelKind::exclusive_longterm:
        case policy::AccessModelKind::exclusive_dynamic:
        case policy::AccessModelKind::commons_private: return true;
        default: return false;
    }
}

// Allowed values per attribute across a tuple's rules (AND semantics).
inline std::map<policy::Attribute, std::set<std::string>> tuple_footprint(
    const policy::MaskTuple& tuple) {
    std::map<policy::Attribute, std::set<std::string>> footprint;
    for (const auto& rule : tuple.rules) {
        for (const auto& constraint : rule.constraints) {
            std::set<std::string> values(constraint.values.begin(), constraint.values.end());
            auto it = footprint.find(constraint.attribute);
            if (it == footprint.end()) {
                footprint.emplace(constraint.attribute, std::move(values));
            } else {
                std::set<std::string> merged;
                for (const auto& v : it->second)
                    if (values.contains(v)) merged.insert(v);
                it->second = std::move(merged);
            }
        }
    }
    return footprint;
}

inline bool footprints_intersect(const policy::MaskTuple& a, const policy::MaskTuple& b) {
    auto fa = tuple_footprint(a);
    auto fb = tuple_footprint(b);
    for (const auto& [attr, va] : fa)
        if (va.empty()) return false;
    for (const auto& [attr, vb] : fb)
        if (vb.empty()) return false;
    for (const auto& [attr, va] : fa) {
        auto it = fb.find(attr);
        if (it == fb.end()) continue;
        bool overlap = false;
        for (const auto& v : va)
            if (it->second.contains(v)) overlap = true;
        if (!overlap) return false;
    }
    return true;
}

// Masks in one delegation tree never conflict; the tree is identified by the
// root holder at the top of the parent chain.
inline bool delegation_chained(const policy::AccessMask& a, const policy::AccessMask& b,
                               const std::map<std::string, policy::AccessMask>& everyone) {
    auto root_of = [&everyone](const policy::AccessMask& mask) {
        std::string root = mask.app_id();
        std::optional<std::string> cursor = mask.parent();
        while (cursor) {
            root = *cursor;
            auto it = everyone.find(*cursor);
            if (it == everyone.end()) break;
            cursor = it->second.parent();
        }
        return root;
    };
    if (!a.parent() && !b.parent()) return false;
    return root_of(a) == root_of(b);
}

// Pairwise clash predicate: shared resource, then exclusivity, then
// attribute-value overlap.
inline bool masks_conflict(const policy::AccessMask& a, const policy::AccessMask& b,
                           const std::map<std::string, policy::AccessMask>& everyone) {
    if (delegation_chained(a, b, everyone)) return false;
    for (const auto& ta : a.tuples()) {
        for (const auto& tb : b.tuples()) {
            if (ta.resource != tb.resource) continue;
            bool ea = exclusive_model(a.model().variant);
            bool eb = exclusive_model(b.model().variant);
            if (!ea && !eb) continue;
            if (ea != eb) return true;
            if (footprints_intersect(ta, tb)) return true;
        }
    }
    return false;
}

// --- delegation reachability, by adjacency-matrix closure -----------------

inline std::set<std::string> reachable_from(
    const std::vector<std::pair<std::string, std::string>>& edges, const std::string& start) {
    std::set<std::string> names{start};
    for (const auto& [from, to] : edges) {
        names.insert(from);
        names.insert(to);
    }
    std::map<std::string, std::map<std::string, bool>> reach;
    for (const auto& [from, to] : edges) reach[from][to] = true;
    for (const auto& k : names)
        for (const auto& i : names)
            for (const auto& j : names)
                if (reach[i][k] && reach[k][j]) reach[i][j] = true;
    std::set<std::string> out;
    for (const auto& n : names)
        if (n != start && reach[start][n]) out.insert(n);
    return out;
}

// --- shortest path by exhaustive simple-path enumeration ------------------

inline void all_paths(const nib::NibSnapshot& view, const std::string& at, const std::string& to,
                      std::vector<std::string>& current, std::vector<std::vector<std::string>>& out) {
    if (at == to) {
        out.push_back(current);
        return;
    }
    for (const auto& next : view.neighbors(at)) {
        if (std::find(current.begin(), current.end(), next) != current.end()) continue;
        current.push_back(next);
        all_paths(view, next, to, current, out);
        current.pop_back();
    }
}

inline std::vector<std::string> least_shortest_path(const nib::NibSnapshot& view,
                                                    const std::string& from, const std::string& to) {
    if (view.node(from) == nullptr || view.node(to) == nullptr) return {};
    std::vector<std::string> current{from};
    std::vector<std::vector<std::string>> paths;
    all_paths(view, from, to, current, paths);
    if (paths.empty()) return {};
    std::size_t best = paths[0].size();
    for (const auto& p : paths) best = std::min(best, p.size());
    std::vector<std::vector<std::string>> shortest;
    for (const auto& p : paths)
        if (p.size() == best) shortest.push_back(p);
    std::sort(shortest.begin(), shortest.end());
    return shortest.front();
}

// --- mask compliance of a single query, straight off the mask tuples ------

// Resolves a target to a node through the topology or a historical
// flow -> device map; returns required attribute values or nullopt.
inline std::optional<std::string> target_attribute(
    const nib::NibSnapshot& topology, const std::map<std::string, std::string>& flow_device,
    const std::string& target, policy::Attribute attribute) {
    std::string node_id = target;
    auto flow = flow_device.find(target);
    if (flow != flow_device.end()) node_id = flow->second;
    const nib::Node* node = topology.node(node_id);
    if (node == nullptr) return std::nullopt;
    if (attribute == policy::Attribute::jurisdiction) return node->jurisdiction;
    if (attribute == policy::Attribute::placement) return node->placement;
    return std::nullopt;
}

// Verdict for (op, target) under a mask; visible_nodes carries a scan's
// returned node set when applicable.
inline bool query_complies(const policy::AccessMask& mask, QueryOp op, const std::string& target,
                           const std::vector<std::string>& visible_nodes,
                           const nib::NibSnapshot& topology,
                           const std::map<std::string, std::string>& flow_device) {
    const policy::MaskTuple* tuple = mask.tuple_for(query_resource(op));
    if (tuple == nullptr) return false;
    if (!tuple->actions.contains(query_action(op))) return false;
    for (const auto& rule : tuple->rules) {
        for (const auto& constraint : rule.constraints) {
            if (!policy::attribute_enforced(constraint.attribute)) continue;
            if (constraint.attribute == policy::Attribute::modification_type) {
                if (!constraint.matches(query_mutates(op) ? "modify" : "read")) return false;
                continue;
            }
            if (op == QueryOp::topo_read) {
                for (const auto& id : visible_nodes) {
                    auto value = target_attribute(topology, flow_device, id, constraint.attribute);
                    if (!value || !constraint.matches(*value)) return false;
                }
                continue;
            }
            auto value = target_attribute(topology, flow_device, target, constraint.attribute);
            if (!value || !constraint.matches(*value)) return false;
        }
    }
    return true;
}

// Audit-trail replay: counts NIB-channel emissions that violate the
// originating app's mask.
inline unsigned replay_violations(const std::vector<nlohmann::json>& events,
                                  const std::map<std::string, policy::AccessMask>& masks,
                                  const nib::NibSnapshot& topology) {
    unsigned violations = 0;
    std::map<std::string, std::string> flow_device;
    for (const auto& event : events) {
        if (event.at("component") != "nib" || event.at("event") != "exec") continue;
        const std::string app = event.at("app_id").get<std::string>();
        const std::string op_name = event.at("op").get<std::string>();
        const std::string target = event.at("target").get<std::string>();

        std::optional<QueryOp> op;
        for (int code = 0; code <= static_cast<int>(QueryOp::subscribe); ++code)
            if (query_op_name(static_cast<QueryOp>(code)) == op_name)
                op = static_cast<QueryOp>(code);
        if (!op) {
            ++violations;
            continue;
        }
        std::vector<std::string> visible;
        for (const auto& id : event.value("visible", nlohmann::json::array()))
            visible.push_back(id.get<std::string>());

        auto mask = masks.find(app);
        if (mask == masks.end() ||
            !query_complies(mask->second, *op, target, visible, topology, flow_device))
            ++violations;

        if (*op == QueryOp::flow_install && event.value("ok", false) && event.contains("flow_id"))
            flow_device[event.at("flow_id").get<std::string>()] = target;
    }
    return violations;
}

// --- window reference automaton (transcription of the invalidation text) --

struct WindowRef {
    std::uint64_t expected = 1;
    unsigned limit = 2;
    std::map<std::uint64_t, std::string> held;  // counter -> app

    // Verdict labels: "in_order", "held", "stale", "invalidate".
    std::string arrive(std::uint64_t counter, const std::string& app,
                       const std::map<std::uint64_t, std::string>& record_apps) {
        if (counter < expected) return "stale";
        if (counter == expected) {
            ++expected;
            while (held.contains(expected)) {
                held.erase(expected);
                ++expected;
            }
            return "in_order";
        }
        if (held.contains(counter)) return "stale";
        bool overflow = counter - expected > limit;
        bool foreign = false;
        for (std::uint64_t g = expected; g < counter; ++g) {
            auto arrived = held.find(g);
            if (arrived != held.end()) {
                if (arrived->second != app) foreign = true;
                continue;
            }
            auto record = record_apps.find(g);
            if (record == record_apps.end() || record->second != app) foreign = true;
        }
        if (overflow || foreign) {
            std::uint64_t ceiling = counter;
            for (const auto& [c, owner] : held) ceiling = std::max(ceiling, c);
            held.clear();
            expected = ceiling + 1;
            return "invalidate";
        }
        held.emplace(counter, app);
        return "held";
    }
};

}  // namespace oracle
