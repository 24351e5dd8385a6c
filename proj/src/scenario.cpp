#include "nbac/scenario.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nbac/fixtures.hpp"
#include "nbac/manifest_io.hpp"

namespace nbac::harness {

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string resolve(const std::string& base_dir, const std::string& path) {
    std::filesystem::path p(path);
    if (p.is_absolute() || base_dir.empty()) return path;
    return (std::filesystem::path(base_dir) / p).string();
}

nib::NibSnapshot topology_from(const nlohmann::json& doc, const std::string& base_dir) {
    if (doc.is_object()) return nib::load_topology(doc);
    std::string name = doc.get<std::string>();
    if (name == "line3") return fixtures::line3();
    if (name == "mesh5") return fixtures::mesh5();
    return nib::load_topology_text(slurp(resolve(base_dir, name)));
}

struct AppSpec {
    std::string app_id;
    policy::DeploymentManifest manifest;
    policy::AccessModel model;
    std::vector<policy::ResourceAccessRule> rules;
};

policy::AccessModel model_from_json(const nlohmann::json& j) {
    auto kind = policy::access_model_from_name(j.at("variant").get<std::string>());
    if (!kind) throw ScenarioError("unknown access model '" + j.at("variant").get<std::string>() + "'");
    return policy::AccessModel::make(*kind, j.value("priority", 0));
}

AppSpec app_from_json(const nlohmann::json& j, const std::string& base_dir) {
    AppSpec app;
    app.app_id = j.at("app_id").get<std::string>();

    const auto& manifest = j.at("manifest");
    if (manifest.is_object())
        app.manifest = policy::manifest_from_json(manifest);
    else
        app.manifest = policy::parse_manifest(slurp(resolve(base_dir, manifest.get<std::string>())));
    app.manifest.app_id = app.app_id;

    app.model = model_from_json(j.at("model"));

    if (j.contains("rules")) {
        const auto& rules = j.at("rules");
        if (rules.is_object())
            app.rules = policy::rules_from_json(rules);
        else if (rules.is_array())
            app.rules = policy::rules_from_json(nlohmann::json{{"rules", rules}});
        else
            app.rules = policy::parse_rules(slurp(resolve(base_dir, rules.get<std::string>())));
    }
    return app;
}

}  // namespace

ctrl::Intent intent_from_json(const nlohmann::json& j) {
    ctrl::Intent intent;
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "connectivity") {
        intent.kind = ctrl::Intent::Kind::connectivity;
        intent.src_host = j.at("src_host").get<std::string>();
        intent.dst_host = j.at("dst_host").get<std::string>();
        intent.protocol = j.value("protocol", "UDP");
        intent.src_port = j.value("src_port", 1);
        intent.dst_port = j.value("dst_port", 1);
    } else if (kind == "topology_read") {
        intent.kind = ctrl::Intent::Kind::topology_read;
        intent.filter = j.value("filter", "");
    } else if (kind == "node_ltps") {
        intent.kind = ctrl::Intent::Kind::node_ltps;
        intent.node_id = j.at("node").get<std::string>();
    } else if (kind == "flow_install") {
        intent.kind = ctrl::Intent::Kind::flow_install;
        for (const auto& [key, value] : j.at("match_fields").items())
            intent.match_fields[key] = value.get<std::string>();
    } else if (kind == "stats_read") {
        intent.kind = ctrl::Intent::Kind::stats_read;
        intent.resource = j.at("resource").get<std::string>();
    } else {
        throw ScenarioError("unknown intent kind '" + kind + "'");
    }
    intent.priority = j.value("priority", 0);
    return intent;
}

Query query_from_json(const nlohmann::json& j) {
    Query q;
    std::string op = j.at("op").get<std::string>();
    bool found = false;
    for (int code = 0; code <= static_cast<int>(QueryOp::subscribe); ++code) {
        if (query_op_name(static_cast<QueryOp>(code)) == op) {
            q.op = static_cast<QueryOp>(code);
            found = true;
            break;
        }
    }
    if (!found) throw ScenarioError("unknown query op '" + op + "'");
    q.target = j.value("target", "*");
    for (const auto& [key, value] : j.value("args", nlohmann::json::object()).items())
        q.args[key] = value.get<std::string>();
    return q;
}

namespace {

ctrl::Fault fault_from_json(const nlohmann::json& j) {
    ctrl::Fault fault;
    std::string mode = j.at("mode").get<std::string>();
    if (mode == "delay") {
        fault.mode = ctrl::Fault::Mode::delay;
        fault.k = j.value("k", 1u);
    } else if (mode == "reorder") {
        fault.mode = ctrl::Fault::Mode::reorder;
        for (const auto& index : j.at("permutation")) fault.permutation.push_back(index.get<unsigned>());
    } else if (mode == "forge_extra") {
        fault.mode = ctrl::Fault::Mode::forge_extra;
        fault.forged = query_from_json(j.at("query"));
    } else if (mode == "drop_batch") {
        fault.mode = ctrl::Fault::Mode::drop_batch;
    } else if (mode == "swap_mask") {
        fault.mode = ctrl::Fault::Mode::swap_mask;
    } else {
        throw ScenarioError("unknown fault mode '" + mode + "'");
    }
    return fault;
}

class ExpectChecker {
public:
    ExpectChecker(Pipeline& pipeline, ScenarioReport& report) : pipeline_(pipeline), report_(report) {}

    void check(const nlohmann::json& expect) {
        ++report_.checks;
        std::string kind = expect.at("kind").get<std::string>();
        if (kind == "last_verdict") check_last_verdict(expect);
        else if (kind == "verdict_sequence") check_verdict_sequence(expect);
        else if (kind == "nib_exec_count") check_nib_exec_count(expect);
        else if (kind == "flow_count") check_flow_count(expect);
        else if (kind == "topo_nodes") check_topo_nodes(expect);
        else if (kind == "enroll_status") check_enroll_status(expect);
        else if (kind == "last_drop_reason") check_last_drop_reason(expect);
        else if (kind == "intent_state") check_intent_state(expect);
        else fail("unknown expect kind '" + kind + "'");
    }

private:
    void fail(std::string message) {
        report_.passed = false;
        report_.failures.push_back(std::move(message));
    }

    void check_last_verdict(const nlohmann::json& expect) {
        std::string app = expect.at("app").get<std::string>();
        auto events = pipeline_.audit().select("monitor", "batch");
        for (auto it = events.rbegin(); it != events.rend(); ++it) {
            if (it->at("app_id").get<std::string>() != app) continue;
            std::string got = it->at("verdict").get<std::string>();
            std::string want = expect.at("verdict").get<std::string>();
            if (got != want)
                fail("last_verdict for " + app + ": expected " + want + ", got " + got);
            return;
        }
        fail("last_verdict: no batch events for " + app);
    }

    void check_verdict_sequence(const nlohmann::json& expect) {
        std::vector<std::pair<std::string, std::string>> got;
        for (const auto& e : pipeline_.audit().events()) {
            if (e.at("component").get<std::string>() != "monitor") continue;
            std::string event = e.at("event").get<std::string>();
            if (event == "batch")
                got.emplace_back(e.at("window").get<std::string>(),
                                 e.at("verdict").get<std::string>());
            else if (event == "invalidated")
                got.emplace_back("invalidated", e.at("verdict").get<std::string>());
            else if (event == "emit")
                got.emplace_back("emit", "accept");
        }
        std::vector<std::pair<std::string, std::string>> want;
        for (const auto& item : expect.at("sequence"))
            want.emplace_back(item.at(0).get<std::string>(), item.at(1).get<std::string>());
        if (got != want) {
            std::string message = "verdict_sequence mismatch: got [";
            for (const auto& [w, d] : got) message += " (" + w + "," + d + ")";
            message += " ] expected [";
            for (const auto& [w, d] : want) message += " (" + w + "," + d + ")";
            message += " ]";
            fail(message);
        }
    }

    void check_nib_exec_count(const nlohmann::json& expect) {
        std::string app = expect.at("app").get<std::string>();
        std::size_t count = 0;
        for (const auto& e : pipeline_.audit().select("nib", "exec"))
            if (e.at("app_id").get<std::string>() == app) ++count;
        std::size_t want = expect.at("equals").get<std::size_t>();
        if (count != want)
            fail("nib_exec_count for " + app + ": expected " + std::to_string(want) + ", got " +
                 std::to_string(count));
    }

    void check_flow_count(const nlohmann::json& expect) {
        std::size_t got = pipeline_.nib().read_view().flows.size();
        std::size_t want = expect.at("equals").get<std::size_t>();
        if (got != want)
            fail("flow_count: expected " + std::to_string(want) + ", got " + std::to_string(got));
    }

    void check_topo_nodes(const nlohmann::json& expect) {
        std::string app = expect.at("app").get<std::string>();
        std::vector<std::string> want;
        for (const auto& id : expect.at("equals")) want.push_back(id.get<std::string>());
        std::sort(want.begin(), want.end());

        auto events = pipeline_.audit().select("nib", "exec");
        for (auto it = events.rbegin(); it != events.rend(); ++it) {
            if (it->at("app_id").get<std::string>() != app) continue;
            if (it->at("op").get<std::string>() != "topo_read") continue;
            std::vector<std::string> got;
            for (const auto& id : it->value("visible", nlohmann::json::array()))
                got.push_back(id.get<std::string>());
            std::sort(got.begin(), got.end());
            if (got != want) {
                std::string message = "topo_nodes for " + app + ": got {";
                for (const auto& id : got) message += id + " ";
                message += "} expected {";
                for (const auto& id : want) message += id + " ";
                message += "}";
                fail(message);
            }
            return;
        }
        fail("topo_nodes: no topo_read execution for " + app);
    }

    void check_enroll_status(const nlohmann::json& expect) {
        std::string app = expect.at("app").get<std::string>();
        const auto* record = pipeline_.mano().record(app);
        std::string got = record == nullptr ? "unknown"
                                            : std::string(mano::app_status_name(record->status));
        std::string want = expect.at("equals").get<std::string>();
        if (got != want) fail("enroll_status for " + app + ": expected " + want + ", got " + got);
    }

    void check_last_drop_reason(const nlohmann::json& expect) {
        std::string app = expect.at("app").get<std::string>();
        auto events = pipeline_.audit().select("tagger", "drop");
        for (auto it = events.rbegin(); it != events.rend(); ++it) {
            if (it->at("app_id").get<std::string>() != app) continue;
            std::string got = it->at("reason").get<std::string>();
            std::string want = expect.at("reason").get<std::string>();
            if (got != want)
                fail("last_drop_reason for " + app + ": expected " + want + ", got " + got);
            return;
        }
        fail("last_drop_reason: no tagger drops for " + app);
    }

    void check_intent_state(const nlohmann::json& expect) {
        std::string request = expect.at("request").get<std::string>();
        auto state = pipeline_.controller().state_of(request);
        std::string got = state ? std::string(ctrl::intent_state_name(*state)) : "unknown";
        std::string want = expect.at("equals").get<std::string>();
        if (got != want) fail("intent_state for " + request + ": expected " + want + ", got " + got);
    }

    Pipeline& pipeline_;
    ScenarioReport& report_;
};

}  // namespace

ScenarioReport run_scenario(const nlohmann::json& doc, const std::string& base_dir,
                            std::optional<std::uint64_t> seed_override) {
    ScenarioReport report;
    report.name = doc.value("name", "scenario");

    PipelineConfig config;
    config.seed = seed_override ? *seed_override : doc.value("seed", 1ull);
    config.window_limit = doc.value("window_limit", 2u);
    if (doc.contains("catalogue")) {
        config.catalogue.clear();
        for (const auto& r : doc.at("catalogue")) config.catalogue.insert(r.get<std::string>());
    }
    if (doc.contains("keys"))
        config.keys = mano::KeySet{
            auth::MacKey::from_hex(doc.at("keys").at("k").get<std::string>(), "K"),
            auth::MacKey::from_hex(doc.at("keys").at("k_nib").get<std::string>(), "K_NIB")};

    Pipeline pipeline(topology_from(doc.at("topology"), base_dir), config);

    std::map<std::string, AppSpec> apps;
    for (const auto& app_doc : doc.value("apps", nlohmann::json::array())) {
        AppSpec app = app_from_json(app_doc, base_dir);
        apps.emplace(app.app_id, std::move(app));
    }

    ExpectChecker checker(pipeline, report);
    std::uint64_t step = 0;
    for (const auto& event : doc.value("events", nlohmann::json::array())) {
        pipeline.audit().set_step(++step);
        ++report.events;

        if (event.contains("enroll")) {
            const std::string app_id = event.at("enroll").get<std::string>();
            auto it = apps.find(app_id);
            if (it == apps.end()) throw ScenarioError("enroll of undeclared app '" + app_id + "'");
            pipeline.mano().enroll_parsed(it->second.manifest, it->second.model, it->second.rules);
        } else if (event.contains("request")) {
            const auto& r = event.at("request");
            const std::string app_id = r.at("app").get<std::string>();
            if (!apps.contains(app_id)) throw ScenarioError("request from undeclared app '" + app_id + "'");
            std::optional<std::set<policy::ResourceId>> claim;
            if (r.contains("claim")) {
                claim.emplace();
                for (const auto& c : r.at("claim")) claim->insert(c.get<std::string>());
            }
            std::optional<std::string> credential;
            if (r.contains("credential")) credential = r.at("credential").get<std::string>();
            pipeline.submit_request(app_id, intent_from_json(r.at("intent")), claim, credential);
        } else if (event.contains("fault")) {
            pipeline.inject_fault(fault_from_json(event.at("fault")));
        } else if (event.contains("terminate")) {
            pipeline.mano().terminate(event.at("terminate").get<std::string>());
        } else if (event.contains("expect")) {
            checker.check(event.at("expect"));
        } else {
            throw ScenarioError("unknown event: " + event.dump());
        }
    }

    pipeline.audit().set_step(++step);
    pipeline.flush();
    report.audit_jsonl = pipeline.audit().to_jsonl();
    return report;
}

ScenarioReport run_scenario_file(const std::string& path,
                                 std::optional<std::uint64_t> seed_override) {
    auto doc = nlohmann::json::parse(slurp(path));
    return run_scenario(doc, std::filesystem::path(path).parent_path().string(), seed_override);
}

}  // namespace nbac::harness
