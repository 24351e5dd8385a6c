#include "nbac/nib.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace nbac {

namespace {

constexpr std::string_view kOpNames[] = {"topo_read",  "node_ltps",   "flow_install",
                                         "flow_delete", "stats_read", "config_read",
                                         "config_mod",  "subscribe"};

}  // namespace

std::string_view query_op_name(QueryOp op) { return kOpNames[static_cast<std::size_t>(op)]; }

policy::ResourceId query_resource(QueryOp op) {
    switch (op) {
        case QueryOp::topo_read:
        case QueryOp::node_ltps: return "dataplane-topology";
        case QueryOp::flow_install:
        case QueryOp::flow_delete: return "flow";
        case QueryOp::stats_read: return "stats";
        case QueryOp::config_read:
        case QueryOp::config_mod: return "device-config";
        case QueryOp::subscribe: return "events";
    }
    return "unknown";
}

policy::Action query_action(QueryOp op) {
    switch (op) {
        case QueryOp::topo_read:
        case QueryOp::node_ltps: return policy::Action::read;
        case QueryOp::flow_install:
        case QueryOp::flow_delete: return policy::Action::config_mod;
        case QueryOp::stats_read: return policy::Action::stat;
        case QueryOp::config_read: return policy::Action::config_read;
        case QueryOp::config_mod: return policy::Action::config_mod;
        case QueryOp::subscribe: return policy::Action::subscr;
    }
    return policy::Action::config_mod;  // fail closed: strongest requirement
}

bool query_mutates(QueryOp op) {
    switch (op) {
        case QueryOp::flow_install:
        case QueryOp::flow_delete:
        case QueryOp::config_mod: return true;
        default: return false;
    }
}

void Query::encode_into(auth::Encoder& enc) const {
    enc.string(app_id).string(request_id).u64(static_cast<std::uint64_t>(op)).string(target);
    auto args_mark = enc.begin_nested();
    for (const auto& [key, value] : args) enc.string(key).string(value);
    enc.end_nested(args_mark);
    auto scope_mark = enc.begin_nested();
    for (const auto& [attribute, values] : scope) {
        enc.u64(static_cast<std::uint64_t>(attribute));
        auto sorted = values;
        std::sort(sorted.begin(), sorted.end());
        auto values_mark = enc.begin_nested();
        for (const auto& v : sorted) enc.string(v);
        enc.end_nested(values_mark);
    }
    enc.end_nested(scope_mark);
}

auth::Bytes Query::canonical_encoding() const {
    auth::Encoder enc;
    encode_into(enc);
    return enc.take();
}

}  // namespace nbac

namespace nbac::nib {

const Node* NibSnapshot::node(const std::string& id) const {
    auto it = nodes.find(id);
    return it == nodes.end() ? nullptr : &it->second;
}

std::vector<std::string> NibSnapshot::neighbors(const std::string& id) const {
    std::vector<std::string> out;
    for (const auto& link : links) {
        if (link.a.node == id) out.push_back(link.b.node);
        if (link.b.node == id) out.push_back(link.a.node);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

NibSnapshot load_topology(const nlohmann::json& doc) {
    NibSnapshot snapshot;
    if (!doc.is_object() || !doc.contains("nodes") || !doc.contains("links"))
        throw TopologyError("topology document requires 'nodes' and 'links'");

    for (const auto& n : doc.at("nodes")) {
        Node node;
        node.id = n.at("id").get<std::string>();
        if (node.id.empty()) throw TopologyError("empty node id");
        node.jurisdiction = n.value("jurisdiction", "");
        node.placement = n.value("placement", "");
        for (const auto& ltp : n.value("ltps", nlohmann::json::array()))
            node.ltps.push_back(ltp.get<std::string>());
        if (!snapshot.nodes.emplace(node.id, node).second)
            throw TopologyError("duplicate node id '" + node.id + "'");
    }

    auto read_end = [&snapshot](const nlohmann::json& end) {
        if (!end.is_array() || end.size() != 2)
            throw TopologyError("link endpoint must be [node, ltp]");
        LinkEnd e{end[0].get<std::string>(), end[1].get<std::string>()};
        const Node* node = snapshot.node(e.node);
        if (node == nullptr) throw TopologyError("dangling link reference to node '" + e.node + "'");
        if (std::find(node->ltps.begin(), node->ltps.end(), e.ltp) == node->ltps.end())
            throw TopologyError("dangling link reference to ltp '" + e.node + "/" + e.ltp + "'");
        return e;
    };
    for (const auto& l : doc.at("links")) {
        if (!l.is_array() || l.size() != 2) throw TopologyError("link must be a pair of endpoints");
        snapshot.links.push_back(Link{read_end(l[0]), read_end(l[1])});
    }
    return snapshot;
}

NibSnapshot load_topology_text(std::string_view text) {
    return load_topology(nlohmann::json::parse(text));
}

NibSnapshot load_topology_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw TopologyError("cannot open topology file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_topology_text(buf.str());
}

auth::Bytes sealed_message(const Query& query, const auth::Nonce& nonce) {
    auth::Encoder enc;
    auto mark = enc.begin_nested();
    query.encode_into(enc);
    enc.end_nested(mark);
    enc.bytes(nonce.value);
    return enc.take();
}

Nib::Nib(NibSnapshot snapshot, auth::MacKey key, AuditLog* audit, bool enforce)
    : state_(std::move(snapshot)), key_(std::move(key)), audit_(audit), enforce_(enforce) {}

ExecResult Nib::execute(const SealedQuery& sq) {
    auto base_info = [&sq]() {
        return nlohmann::json{{"app_id", sq.query.app_id},
                              {"request_id", sq.query.request_id},
                              {"op", std::string(query_op_name(sq.query.op))},
                              {"target", sq.query.target}};
    };

    if (enforce_) {
        auto message = sealed_message(sq.query, sq.nonce);
        if (!auth::mac_verify(key_, message, sq.mac)) {
            if (audit_ != nullptr) {
                auto info = base_info();
                info["reason"] = "bad_mac";
                audit_->emit("nib", "drop", info);
            }
            return ExecResult{false, "bad_mac", {}};
        }
        if (!seen_nonces_.insert(sq.nonce).second) {
            if (audit_ != nullptr) {
                auto info = base_info();
                info["reason"] = "nonce_replay";
                audit_->emit("nib", "drop", info);
            }
            return ExecResult{false, "nonce_replay", {}};
        }
    }

    ExecResult result = dispatch(sq.query);
    if (audit_ != nullptr) {
        auto info = base_info();
        info["ok"] = result.ok;
        if (!result.ok) info["error"] = result.error;
        if (result.ok) {
            // Details the audit replay needs: installed flow ids and the
            // nodes a scan actually revealed.
            if (sq.query.op == QueryOp::flow_install) info["flow_id"] = result.value.at("flow_id");
            if (sq.query.op == QueryOp::topo_read) {
                std::vector<std::string> visible;
                for (const auto& node : result.value.at("nodes"))
                    visible.push_back(node.at("id").get<std::string>());
                info["visible"] = visible;
            }
        }
        audit_->emit("nib", "exec", info);
    }
    return result;
}

namespace {

// Scope filter: every scoped attribute must include the node's value.
bool node_in_scope(const Node& node, const Query& q) {
    for (const auto& [attribute, values] : q.scope) {
        const std::string* actual = nullptr;
        if (attribute == policy::Attribute::jurisdiction) actual = &node.jurisdiction;
        else if (attribute == policy::Attribute::placement) actual = &node.placement;
        else continue;
        if (std::find(values.begin(), values.end(), *actual) == values.end()) return false;
    }
    return true;
}

std::optional<int> parse_port(const std::string& s) {
    if (s.empty() || s.size() > 5) return std::nullopt;
    for (char c : s)
        if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    int v = std::stoi(s);
    if (v < 0 || v > 65535) return std::nullopt;
    return v;
}

}  // namespace

ExecResult Nib::dispatch(const Query& q) {
    switch (q.op) {
        case QueryOp::topo_read: {
            nlohmann::json nodes = nlohmann::json::array();
            std::set<std::string> visible;
            for (const auto& [id, node] : state_.nodes) {
                if (!node_in_scope(node, q)) continue;
                visible.insert(id);
                nodes.push_back({{"id", node.id},
                                 {"jurisdiction", node.jurisdiction},
                                 {"placement", node.placement},
                                 {"ltps", node.ltps}});
            }
            nlohmann::json links = nlohmann::json::array();
            for (const auto& link : state_.links) {
                if (!visible.contains(link.a.node) || !visible.contains(link.b.node)) continue;
                links.push_back(nlohmann::json::array(
                    {nlohmann::json::array({link.a.node, link.a.ltp}),
                     nlohmann::json::array({link.b.node, link.b.ltp})}));
            }
            return ExecResult{true, "", nlohmann::json{{"nodes", nodes}, {"links", links}}};
        }
        case QueryOp::node_ltps: {
            const Node* node = state_.node(q.target);
            if (node == nullptr) return ExecResult{false, "unknown_target", {}};
            return ExecResult{true, "", nlohmann::json{{"node", node->id}, {"ltps", node->ltps}}};
        }
        case QueryOp::flow_install: {
            const Node* device = state_.node(q.target);
            if (device == nullptr) return ExecResult{false, "unknown_target", {}};
            FlowEntry flow;
            flow.device = q.target;
            try {
                flow.src_ip = q.args.at("src_ip");
                flow.dst_ip = q.args.at("dst_ip");
                flow.protocol = q.args.at("protocol");
            } catch (const std::out_of_range&) {
                return ExecResult{false, "missing_flow_field", {}};
            }
            std::transform(flow.protocol.begin(), flow.protocol.end(), flow.protocol.begin(),
                           [](unsigned char c) { return std::toupper(c); });
            auto src_port = parse_port(q.args.count("src_port") ? q.args.at("src_port") : "");
            auto dst_port = parse_port(q.args.count("dst_port") ? q.args.at("dst_port") : "");
            if (!src_port || !dst_port) return ExecResult{false, "bad_port", {}};
            flow.src_port = *src_port;
            flow.dst_port = *dst_port;
            flow.action = q.args.count("action") ? q.args.at("action") : "allow";
            flow.owner_app = q.app_id;
            flow.request_id = q.request_id;
            flow.flow_id = "f" + std::to_string(next_flow_++);
            state_.flows.emplace(flow.flow_id, flow);
            return ExecResult{true, "", nlohmann::json{{"flow_id", flow.flow_id}}};
        }
        case QueryOp::flow_delete: {
            auto it = state_.flows.find(q.target);
            if (it == state_.flows.end()) return ExecResult{false, "unknown_target", {}};
            state_.flows.erase(it);
            return ExecResult{true, "", nlohmann::json{{"deleted", q.target}}};
        }
        case QueryOp::stats_read: {
            auto it = state_.flows.find(q.target);
            if (it != state_.flows.end())
                return ExecResult{true, "",
                                  nlohmann::json{{"flow_id", it->first},
                                                 {"packets", it->second.packets},
                                                 {"bytes", it->second.bytes}}};
            const Node* node = state_.node(q.target);
            if (node == nullptr) return ExecResult{false, "unknown_target", {}};
            std::uint64_t count = 0;
            for (const auto& [id, flow] : state_.flows)
                if (flow.device == q.target) ++count;
            return ExecResult{true, "", nlohmann::json{{"node", q.target}, {"flows", count}}};
        }
        case QueryOp::config_read: {
            const Node* node = state_.node(q.target);
            if (node == nullptr) return ExecResult{false, "unknown_target", {}};
            auto it = state_.config.find(q.target);
            nlohmann::json cfg = nlohmann::json::object();
            if (it != state_.config.end())
                for (const auto& [k, v] : it->second) cfg[k] = v;
            return ExecResult{true, "", cfg};
        }
        case QueryOp::config_mod: {
            const Node* node = state_.node(q.target);
            if (node == nullptr) return ExecResult{false, "unknown_target", {}};
            auto key = q.args.find("key");
            auto value = q.args.find("value");
            if (key == q.args.end() || value == q.args.end())
                return ExecResult{false, "missing_config_field", {}};
            state_.config[q.target][key->second] = value->second;
            return ExecResult{true, "", nlohmann::json{{"set", key->second}}};
        }
        case QueryOp::subscribe: {
            state_.subscriptions.emplace(q.app_id, q.target);
            return ExecResult{true, "", nlohmann::json{{"subscribed", q.target}}};
        }
    }
    return ExecResult{false, "unknown_op", {}};
}

}  // namespace nbac::nib
