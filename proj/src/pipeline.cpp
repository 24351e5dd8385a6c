#include "nbac/pipeline.hpp"

namespace nbac {

std::set<policy::ResourceId> default_catalogue() {
    return {"dataplane-topology", "flow", "stats", "device-config", "events"};
}

namespace {

mano::KeySet keys_for(const PipelineConfig& config) {
    return config.keys ? *config.keys : mano::derive_keys(config.seed);
}

}  // namespace

Pipeline::Pipeline(nib::NibSnapshot topology, PipelineConfig config)
    : rng_(config.seed),
      mano_(config.catalogue, keys_for(config), config.audit_enabled ? &audit_ : nullptr),
      nib_(std::move(topology), keys_for(config).nib_key,
           config.audit_enabled ? &audit_ : nullptr),
      compile_view_(nib_.read_view()),
      tagger_(keys_for(config).tag_key, "tagger-1", config.audit_enabled ? &audit_ : nullptr),
      monitor_(keys_for(config).tag_key, keys_for(config).nib_key, config.window_limit, &nib_,
               config.audit_enabled ? &audit_ : nullptr, &rng_),
      controller_(config.audit_enabled ? &audit_ : nullptr) {
    mano_.attach(&tagger_, &monitor_);
    monitor_.on_verdict(
        [this](const std::string& request_id, bool accepted) {
            if (accepted) {
                // Result path: report installed flow ids back to the
                // controller so withdrawals can compile their deletions.
                std::vector<std::string> flow_ids;
                if (const auto* results = monitor_.results_for(request_id))
                    for (const auto& result : *results)
                        if (result.ok && result.value.contains("flow_id"))
                            flow_ids.push_back(result.value.at("flow_id").get<std::string>());
                if (!flow_ids.empty()) controller_.note_flows(request_id, std::move(flow_ids));
            }
            controller_.on_monitor_verdict(request_id, accepted);
        });
    monitor_.on_reject(
        [this](const std::string& app_id, const std::string& request_id, const std::string& reason) {
            mano_.handle_mitigation(app_id, request_id, reason);
        });
}

std::set<policy::ResourceId> Pipeline::claimed_resources(const ctrl::Intent& intent) {
    switch (intent.kind) {
        case ctrl::Intent::Kind::connectivity:
        case ctrl::Intent::Kind::flow_install: return {"flow"};
        case ctrl::Intent::Kind::topology_read:
        case ctrl::Intent::Kind::node_ltps: return {"dataplane-topology"};
        case ctrl::Intent::Kind::stats_read: return {"stats"};
    }
    return {};
}

std::optional<std::string> Pipeline::submit(tagger::AppRequest request) {
    auto tagged = tagger_.tag_request(request);
    if (!tagged) return std::nullopt;

    // Tag record first (trusted channel), then the forwarded request.
    std::string request_id = tagged->record.request_id;
    if (record_interceptor_) record_interceptor_(tagged->record);
    monitor_.receive_tag_record(tagged->record);
    controller_.submit(std::move(tagged->forward));
    pump();
    return request_id;
}

std::optional<std::string> Pipeline::submit_request(const std::string& app_id,
                                                    const ctrl::Intent& intent,
                                                    std::optional<std::set<policy::ResourceId>> claim,
                                                    std::optional<std::string> credential) {
    tagger::AppRequest request;
    request.app_id = app_id;
    request.credential = credential ? *credential : mano_.credential_for(app_id);
    request.intent = intent;
    request.requested_resources = claim ? *claim : claimed_resources(intent);
    return submit(std::move(request));
}

std::optional<std::string> Pipeline::submit_withdraw(const std::string& app_id,
                                                     const std::string& request_id) {
    tagger::AppRequest request;
    request.app_id = app_id;
    request.credential = mano_.credential_for(app_id);
    request.withdraw_of = request_id;
    request.requested_resources = {"flow"};
    return submit(std::move(request));
}

void Pipeline::inject_fault(ctrl::Fault fault) { controller_.inject_fault(std::move(fault)); }

void Pipeline::deliver(std::vector<QueryBatch> batches) {
    for (auto& batch : batches) {
        if (batch_interceptor_) batch_interceptor_(batch);
        monitor_.verify_batch(std::move(batch));
    }
}

void Pipeline::pump() { deliver(controller_.pump(compile_view_)); }

void Pipeline::flush() {
    pump();
    deliver(controller_.flush());
}

}  // namespace nbac
