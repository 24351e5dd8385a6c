#include "nbac/adversary.hpp"

#include <algorithm>
#include <random>

#include "nbac/fixtures.hpp"
#include "nbac/pipeline.hpp"

namespace nbac::harness {

namespace {

struct RunDriver {
    explicit RunDriver(std::uint64_t seed)
        : rng(seed), topology(fixtures::mesh5()), pipeline(topology, config_for(seed)) {
        pipeline.intercept_records([this](tagger::TagRecord& record) {
            if (tamper_record) {
                corrupt_record(record);
                tamper_record = false;
            }
        });
        pipeline.intercept_batches([this](QueryBatch& batch) {
            if (tamper_batch) {
                corrupt_batch(batch);
                tamper_batch = false;
            }
        });
    }

    static PipelineConfig config_for(std::uint64_t seed) {
        PipelineConfig config;
        config.seed = seed;
        return config;
    }

    std::uint64_t pick(std::uint64_t bound) { return rng() % bound; }

    template <typename T>
    const T& choose(const std::vector<T>& from) {
        return from[pick(from.size())];
    }

    void corrupt_string(std::string& s) {
        if (s.empty()) {
            s = "?";
            return;
        }
        s[pick(s.size())] ^= static_cast<char>(1u << pick(7));
    }

    void corrupt_record(tagger::TagRecord& record) {
        switch (pick(5)) {
            case 0: corrupt_string(record.app_id); break;
            case 1: corrupt_string(record.request_id); break;
            case 2: record.mask_digest[pick(record.mask_digest.size())] ^= 0x01; break;
            case 3: record.counter ^= 1ull << pick(63); break;
            case 4: record.mac[pick(record.mac.size())] ^= 0x01; break;
        }
    }

    void corrupt_batch(QueryBatch& batch) {
        switch (pick(3)) {
            case 0: corrupt_string(batch.app_id); break;
            case 1: corrupt_string(batch.request_id); break;
            case 2:
                if (!batch.queries.empty()) {
                    Query& q = batch.queries[pick(batch.queries.size())];
                    if (pick(2) == 0)
                        corrupt_string(q.target);
                    else
                        q.op = static_cast<QueryOp>(pick(8));
                } else {
                    corrupt_string(batch.request_id);
                }
                break;
        }
    }

    std::vector<std::string> node_ids() const {
        std::vector<std::string> ids;
        for (const auto& [id, node] : topology.nodes) ids.push_back(id);
        return ids;
    }

    void enroll_apps() {
        unsigned count = 2 + static_cast<unsigned>(pick(3));
        for (unsigned i = 0; i < count; ++i) {
            std::string app_id = "app" + std::to_string(i);
            policy::DeploymentManifest manifest;
            manifest.app_id = app_id;

            struct Pool {
                policy::ResourceId resource;
                std::vector<policy::Action> actions;
            };
            const std::vector<Pool> pools{
                {"dataplane-topology", {policy::Action::read}},
                {"flow", {policy::Action::read, policy::Action::config_mod}},
                {"stats", {policy::Action::stat}},
            };
            for (const auto& pool : pools) {
                if (pick(100) < 70) {
                    policy::ManifestEntry entry;
                    entry.resource = pool.resource;
                    for (policy::Action a : pool.actions)
                        if (entry.actions.empty() || pick(2) == 0) entry.actions.insert(a);
                    manifest.entries.push_back(std::move(entry));
                }
            }
            if (manifest.entries.empty())
                manifest.entries.push_back(
                    policy::ManifestEntry{"dataplane-topology", {policy::Action::read}});

            auto model = policy::AccessModel::make(
                static_cast<policy::AccessModelKind>(pick(6)), static_cast<int>(pick(10)));

            std::vector<policy::ResourceAccessRule> rules;
            if (pick(100) < 60) {
                policy::ResourceAccessRule rule;
                rule.rule_id = app_id + "-r1";
                rule.resource = manifest.entries[pick(manifest.entries.size())].resource;
                policy::AttributeConstraint constraint;
                switch (pick(4)) {
                    case 0:
                        constraint.attribute = policy::Attribute::jurisdiction;
                        constraint.values = {pick(2) == 0 ? "region-A" : "region-B"};
                        break;
                    case 1:
                        constraint.attribute = policy::Attribute::placement;
                        constraint.comparator = policy::Comparator::one_of;
                        constraint.values = {"edge", "core"};
                        if (pick(2) == 0) constraint.values.pop_back();
                        break;
                    case 2:
                        constraint.attribute = policy::Attribute::modification_type;
                        constraint.values = {pick(3) == 0 ? "modify" : "read"};
                        break;
                    case 3:
                        constraint.attribute = policy::Attribute::scope;  // carried, unenforced
                        constraint.values = {"domain"};
                        break;
                }
                rule.constraints.push_back(std::move(constraint));
                rules.push_back(std::move(rule));
            }

            auto outcome = pipeline.mano().enroll_parsed(manifest, model, rules);
            if (outcome.installed) {
                installed.push_back(app_id);
                masks.emplace(app_id, pipeline.mano().dictionary().at(app_id));
            }
        }
    }

    ctrl::Intent random_intent(const std::vector<std::string>& nodes) {
        ctrl::Intent intent;
        switch (pick(5)) {
            case 0: {
                intent.kind = ctrl::Intent::Kind::connectivity;
                intent.src_host = choose(nodes);
                do {
                    intent.dst_host = choose(nodes);
                } while (intent.dst_host == intent.src_host);
                intent.protocol = pick(2) == 0 ? "UDP" : "TCP";
                intent.src_port = 1000 + static_cast<int>(pick(100));
                intent.dst_port = 2000 + static_cast<int>(pick(100));
                break;
            }
            case 1: intent.kind = ctrl::Intent::Kind::topology_read; break;
            case 2:
                intent.kind = ctrl::Intent::Kind::node_ltps;
                intent.node_id = choose(nodes);
                break;
            case 3:
                intent.kind = ctrl::Intent::Kind::flow_install;
                intent.match_fields = {{"device", choose(nodes)},
                                       {"src_ip", "10.0.0.1"},
                                       {"dst_ip", "10.0.0.2"},
                                       {"protocol", "udp"},
                                       {"src_port", "1"},
                                       {"dst_port", "2"}};
                break;
            default:
                intent.kind = ctrl::Intent::Kind::stats_read;
                intent.resource = pick(2) == 0 ? "f" + std::to_string(1 + pick(5)) : choose(nodes);
                break;
        }
        return intent;
    }

    ctrl::Fault random_fault(const std::vector<std::string>& nodes) {
        ctrl::Fault fault;
        switch (pick(5)) {
            case 0:
                fault.mode = ctrl::Fault::Mode::delay;
                fault.k = 1 + static_cast<unsigned>(pick(2));
                break;
            case 1: {
                fault.mode = ctrl::Fault::Mode::reorder;
                unsigned n = 2 + static_cast<unsigned>(pick(2));
                for (unsigned i = 0; i < n; ++i) fault.permutation.push_back(n - 1 - i);
                break;
            }
            case 2: {
                fault.mode = ctrl::Fault::Mode::forge_extra;
                Query forged;
                forged.op = static_cast<QueryOp>(pick(8));
                forged.target = choose(nodes);
                if (forged.op == QueryOp::flow_install)
                    forged.args = {{"src_ip", "10.9.9.9"}, {"dst_ip", "10.8.8.8"},
                                   {"protocol", "tcp"},   {"src_port", "7"},
                                   {"dst_port", "8"}};
                if (forged.op == QueryOp::config_mod)
                    forged.args = {{"key", "mtu"}, {"value", "9000"}};
                fault.forged = std::move(forged);
                break;
            }
            case 3: fault.mode = ctrl::Fault::Mode::drop_batch; break;
            default: fault.mode = ctrl::Fault::Mode::swap_mask; break;
        }
        return fault;
    }

    void drive_events() {
        auto nodes = node_ids();
        unsigned count = 18 + static_cast<unsigned>(pick(20));
        for (unsigned i = 0; i < count && !installed.empty(); ++i) {
            pipeline.audit().set_step(i + 1);
            unsigned roll = static_cast<unsigned>(pick(100));
            if (roll < 50) {
                const std::string& app = choose(installed);
                ctrl::Intent intent = random_intent(nodes);
                std::optional<std::set<policy::ResourceId>> claim;
                if (roll < 10) {
                    // Vector 1: request resources outside the manifest.
                    claim = std::set<policy::ResourceId>{"device-config", "qos"};
                } else if (roll < 20) {
                    // Vector 1 lane two: understate the claim to pass the
                    // whitelist, letting the monitor judge the queries.
                    claim = std::set<policy::ResourceId>{
                        masks.at(app).tuples().empty() ? "dataplane-topology"
                                                       : masks.at(app).tuples().front().resource};
                }
                std::optional<std::string> credential;
                if (roll == 49) credential = "wrong-token";
                pipeline.submit_request(app, intent, claim, credential);
            } else if (roll < 70) {
                pipeline.inject_fault(random_fault(nodes));
            } else if (roll < 85) {
                if (pick(2) == 0)
                    tamper_record = true;
                else
                    tamper_batch = true;
            } else if (roll < 92) {
                // Delegation from a live delegable holder to a fresh id.
                for (const auto& app : installed) {
                    if (!pipeline.mano().dictionary().contains(app)) continue;
                    if (!masks.at(app).model().delegable) continue;
                    std::string delegate_id = "d" + std::to_string(next_delegate++);
                    std::vector<std::size_t> indices;
                    for (std::size_t t = 0; t < masks.at(app).tuples().size(); ++t)
                        if (indices.empty() || pick(2) == 0) indices.push_back(t);
                    auto outcome = pipeline.mano().delegate(app, delegate_id, indices);
                    if (outcome.installed) {
                        installed.push_back(delegate_id);
                        masks.emplace(delegate_id, pipeline.mano().dictionary().at(delegate_id));
                    }
                    break;
                }
            } else {
                const std::string& app = choose(installed);
                pipeline.mano().terminate(app);
            }
        }
        pipeline.flush();
    }

    std::mt19937_64 rng;
    nib::NibSnapshot topology;
    Pipeline pipeline;
    std::vector<std::string> installed;
    std::map<std::string, policy::AccessMask> masks;
    bool tamper_record = false;
    bool tamper_batch = false;
    unsigned next_delegate = 0;
};

}  // namespace

unsigned soundness_violations(const std::vector<nlohmann::json>& audit_events,
                              const std::map<std::string, policy::AccessMask>& masks,
                              const nib::NibSnapshot& topology) {
    unsigned violations = 0;
    std::map<std::string, std::string> flow_device;  // install history, never erased

    auto node_attr = [&topology](const std::string& id,
                                 policy::Attribute attribute) -> std::optional<std::string> {
        const nib::Node* node = topology.node(id);
        if (node == nullptr) return std::nullopt;
        if (attribute == policy::Attribute::jurisdiction) return node->jurisdiction;
        if (attribute == policy::Attribute::placement) return node->placement;
        return std::nullopt;
    };

    for (const auto& event : audit_events) {
        if (event.at("component").get<std::string>() != "nib") continue;
        if (event.at("event").get<std::string>() != "exec") continue;

        const std::string app = event.at("app_id").get<std::string>();
        const std::string op_name = event.at("op").get<std::string>();
        const std::string target = event.at("target").get<std::string>();

        QueryOp op = QueryOp::topo_read;
        for (int code = 0; code <= static_cast<int>(QueryOp::subscribe); ++code)
            if (query_op_name(static_cast<QueryOp>(code)) == op_name)
                op = static_cast<QueryOp>(code);

        bool installed_ok = event.value("ok", false);
        if (op == QueryOp::flow_install && installed_ok && event.contains("flow_id"))
            flow_device[event.at("flow_id").get<std::string>()] = target;

        auto mask_it = masks.find(app);
        if (mask_it == masks.end()) {
            ++violations;  // emission for an app that never installed
            continue;
        }
        const policy::AccessMask& mask = mask_it->second;
        const policy::MaskTuple* tuple = mask.tuple_for(query_resource(op));
        if (tuple == nullptr) {
            ++violations;
            continue;
        }
        if (!tuple->actions.contains(query_action(op))) {
            ++violations;
            continue;
        }

        for (const auto& rule : tuple->rules) {
            for (const auto& constraint : rule.constraints) {
                if (!policy::attribute_enforced(constraint.attribute)) continue;
                if (constraint.attribute == policy::Attribute::modification_type) {
                    if (!constraint.matches(query_mutates(op) ? "modify" : "read")) ++violations;
                    continue;
                }
                if (op == QueryOp::topo_read) {
                    for (const auto& id : event.value("visible", nlohmann::json::array())) {
                        auto value = node_attr(id.get<std::string>(), constraint.attribute);
                        if (!value || !constraint.matches(*value)) ++violations;
                    }
                    continue;
                }
                std::string node_id = target;
                auto flow = flow_device.find(target);
                if (flow != flow_device.end()) node_id = flow->second;
                auto value = node_attr(node_id, constraint.attribute);
                if (!value || !constraint.matches(*value)) ++violations;
            }
        }
    }
    return violations;
}

AdversaryStats adversary_suite(const AdversaryConfig& config,
                               const std::function<void(const RunArtifacts&)>& observer) {
    AdversaryStats stats;
    std::mt19937_64 master(config.seed);
    for (unsigned run = 0; run < config.runs; ++run) {
        RunDriver driver(master());
        driver.enroll_apps();
        driver.drive_events();

        const auto& events = driver.pipeline.audit().events();
        for (const auto& event : events) {
            const std::string component = event.at("component").get<std::string>();
            const std::string kind = event.at("event").get<std::string>();
            if (component == "tagger" && kind == "tagged") ++stats.requests;
            if (component == "tagger" && kind == "drop") ++stats.tagger_drops;
            if (component == "monitor" && kind == "batch") {
                if (event.at("verdict").get<std::string>() == "accept")
                    ++stats.batches_accepted;
                else
                    ++stats.batches_rejected;
            }
            if (component == "nib" && kind == "exec") ++stats.nib_execs;
        }
        stats.violations += soundness_violations(events, driver.masks, driver.topology);
        if (observer) observer(RunArtifacts{events, driver.masks, driver.topology});
        ++stats.runs;
    }
    return stats;
}

}  // namespace nbac::harness
