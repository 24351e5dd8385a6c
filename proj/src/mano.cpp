#include "nbac/mano.hpp"

#include <algorithm>

#include "nbac/manifest_io.hpp"

namespace nbac::mano {

KeySet derive_keys(std::uint64_t seed) {
    auto derive = [seed](std::string_view label, std::string key_id) {
        std::vector<auth::Field> fields{auth::Field{seed}, auth::Field{std::string(label)}};
        auto digest = auth::sha256(auth::canonical_encode(fields));
        auth::MacKey key;
        std::copy(digest.begin(), digest.end(), key.bytes.begin());
        key.key_id = std::move(key_id);
        return key;
    };
    return KeySet{derive("tag-channel", "K"), derive("nib-channel", "K_NIB")};
}

std::string_view app_status_name(AppStatus s) {
    switch (s) {
        case AppStatus::candidate: return "candidate";
        case AppStatus::installed: return "installed";
        case AppStatus::terminated: return "terminated";
    }
    return "candidate";
}

Mano::Mano(std::set<policy::ResourceId> catalogue, KeySet keys, AuditLog* audit)
    : catalogue_(std::move(catalogue)), keys_(std::move(keys)), audit_(audit) {}

void Mano::attach(tagger::RequestTagger* tagger, monitor::ReferenceMonitor* monitor) {
    tagger_ = tagger;
    monitor_ = monitor;
}

EnrollOutcome Mano::enroll(const std::string& app_id, std::string_view manifest_doc,
                           const policy::AccessModel& model,
                           const std::vector<policy::ResourceAccessRule>& operator_rules) {
    policy::DeploymentManifest manifest;
    try {
        manifest = policy::parse_manifest(manifest_doc);
    } catch (const std::exception& e) {
        if (audit_ != nullptr)
            audit_->emit("mano", "enroll_rejected",
                         {{"app_id", app_id}, {"reason", "parse"}, {"detail", e.what()}});
        EnrollOutcome outcome;
        outcome.error = "parse";
        return outcome;
    }
    manifest.app_id = app_id;
    return enroll_parsed(std::move(manifest), model, operator_rules);
}

EnrollOutcome Mano::enroll_parsed(policy::DeploymentManifest manifest,
                                  const policy::AccessModel& model,
                                  const std::vector<policy::ResourceAccessRule>& operator_rules) {
    EnrollOutcome outcome;
    const std::string app_id = manifest.app_id;

    if (dictionary_.contains(app_id)) {
        outcome.error = "duplicate";
        if (audit_ != nullptr)
            audit_->emit("mano", "enroll_rejected", {{"app_id", app_id}, {"reason", "duplicate"}});
        return outcome;
    }

    outcome.missing_resources = policy::validate_requested_resources(manifest, catalogue_);
    if (!outcome.missing_resources.empty()) {
        outcome.error = "catalogue";
        if (audit_ != nullptr)
            audit_->emit("mano", "enroll_rejected",
                         {{"app_id", app_id},
                          {"reason", "catalogue"},
                          {"missing", outcome.missing_resources}});
        return outcome;
    }

    auto op_set = policy::build_operator_policy_set(operator_rules, manifest);
    auto mask = policy::compute_access_mask(op_set, manifest, model);

    AppRecord record;
    record.app_id = app_id;
    record.manifest = std::move(manifest);
    record.model = model;
    return install(std::move(record), std::move(mask));
}

EnrollOutcome Mano::delegate(const std::string& from, const std::string& to,
                             const std::vector<std::size_t>& tuple_indices) {
    EnrollOutcome outcome;
    auto parent = dictionary_.find(from);
    if (parent == dictionary_.end()) throw policy::UnknownApp(from);
    if (dictionary_.contains(to)) {
        outcome.error = "duplicate";
        if (audit_ != nullptr)
            audit_->emit("mano", "delegation_rejected",
                         {{"from", from}, {"to", to}, {"reason", "delegate already holds a mask"}});
        return outcome;
    }

    auto mask = policy::derive_mask(parent->second, to, tuple_indices);

    AppRecord record;
    record.app_id = to;
    record.model = mask.model();
    record.parent = from;
    auto result = install(std::move(record), std::move(mask));
    if (result.installed) {
        delegations_.emplace(from, to);
        if (audit_ != nullptr) audit_->emit("mano", "delegated", {{"from", from}, {"to", to}});
    }
    return result;
}

EnrollOutcome Mano::install(AppRecord record, policy::AccessMask mask) {
    EnrollOutcome outcome;
    outcome.conflicts = policy::detect_conflicts(mask, dictionary_);
    if (!outcome.conflicts.empty()) {
        outcome.error = "conflict";
        record.status = AppStatus::candidate;
        if (audit_ != nullptr) {
            nlohmann::json pairs = nlohmann::json::array();
            for (const auto& pair : outcome.conflicts.pairs)
                pairs.push_back({{"app_a", pair.app_a},
                                 {"app_b", pair.app_b},
                                 {"resource", pair.resource},
                                 {"clashes", pair.clashes}});
            audit_->emit("mano", "enroll_rejected",
                         {{"app_id", record.app_id}, {"reason", "conflict"}, {"pairs", pairs}});
        }
        // Atomicity: rejected candidates never reach the tagger or monitor.
        records_.insert_or_assign(record.app_id, std::move(record));
        return outcome;
    }

    record.status = AppStatus::installed;
    record.mask = mask;
    const std::string app_id = record.app_id;
    dictionary_.emplace(app_id, mask);
    records_.insert_or_assign(app_id, std::move(record));

    if (tagger_ != nullptr) {
        tagger_->register_mask(mask);
        tagger_->seed_credential(app_id, credential_for(app_id));
    }
    if (monitor_ != nullptr) monitor_->register_mask(mask);

    if (audit_ != nullptr)
        audit_->emit("mano", "enrolled",
                     {{"app_id", app_id},
                      {"model", std::string(policy::access_model_name(mask.model().variant))},
                      {"mask_digest", auth::to_hex(mask.digest())}});
    outcome.installed = true;
    return outcome;
}

std::vector<std::string> Mano::terminate(const std::string& app_id) {
    auto revoked = policy::revocation_set(delegations_, app_id);

    auto retire = [this](const std::string& id, std::string_view how) {
        auto it = records_.find(id);
        if (it != records_.end()) it->second.status = AppStatus::terminated;
        dictionary_.erase(id);
        if (tagger_ != nullptr) tagger_->invalidate_mask(id);
        if (monitor_ != nullptr) monitor_->unregister_mask(id);
        if (audit_ != nullptr)
            audit_->emit("mano", "terminated", {{"app_id", id}, {"how", std::string(how)}});
    };

    retire(app_id, "terminate");
    for (const auto& delegate_id : revoked) retire(delegate_id, "revoked");

    for (auto it = delegations_.begin(); it != delegations_.end();) {
        bool gone = it->first == app_id || it->second == app_id ||
                    std::find(revoked.begin(), revoked.end(), it->first) != revoked.end() ||
                    std::find(revoked.begin(), revoked.end(), it->second) != revoked.end();
        it = gone ? delegations_.erase(it) : ++it;
    }
    return revoked;
}

void Mano::handle_mitigation(const std::string& app_id, const std::string& request_id,
                             const std::string& reason) {
    auto it = records_.find(app_id);
    if (it != records_.end()) it->second.quarantined = true;
    if (tagger_ != nullptr) tagger_->quarantine(app_id);
    if (audit_ != nullptr)
        audit_->emit("mano", "mitigation",
                     {{"app_id", app_id},
                      {"request_id", request_id},
                      {"reason", reason},
                      {"action", "quarantine"}});
}

const AppRecord* Mano::record(const std::string& app_id) const {
    auto it = records_.find(app_id);
    return it == records_.end() ? nullptr : &it->second;
}

std::string Mano::credential_for(const std::string& app_id) const {
    // Static registry token standing in for the signature/certificate check.
    return "cred:" + app_id;
}

}  // namespace nbac::mano
