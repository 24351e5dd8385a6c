#include "nbac/tagger.hpp"

namespace nbac::tagger {

auth::Bytes TagRecord::mac_message() const {
    auth::Encoder enc;
    enc.string(app_id).string(request_id).bytes(mask_digest).u64(counter);
    return enc.take();
}

RequestTagger::RequestTagger(auth::MacKey key, std::string instance_id, AuditLog* audit)
    : key_(std::move(key)), counter_{0, std::move(instance_id)}, audit_(audit) {}

void RequestTagger::seed_credential(const std::string& app_id, const std::string& token) {
    credentials_[app_id] = token;
}

void RequestTagger::register_mask(const policy::AccessMask& mask) {
    if (masks_.contains(mask.app_id()))
        throw std::invalid_argument("mask already registered for '" + mask.app_id() + "'");
    masks_.emplace(mask.app_id(), std::make_shared<const policy::AccessMask>(mask));
    std::set<policy::ResourceId> resources;
    for (const auto& tuple : mask.tuples()) resources.insert(tuple.resource);
    manifest_resources_[mask.app_id()] = std::move(resources);
}

bool RequestTagger::has_mask(const std::string& app_id) const { return masks_.contains(app_id); }

void RequestTagger::invalidate_mask(const std::string& app_id) {
    masks_.erase(app_id);
    manifest_resources_.erase(app_id);
}

void RequestTagger::quarantine(const std::string& app_id) { quarantined_.insert(app_id); }

std::optional<TagOutput> RequestTagger::tag_request(const AppRequest& request) {
    auto drop = [&](std::string_view reason) -> std::optional<TagOutput> {
        if (audit_ != nullptr)
            audit_->emit("tagger", "drop",
                         {{"app_id", request.app_id}, {"reason", std::string(reason)}});
        return std::nullopt;
    };

    // 1. authenticate the credential against the registry
    auto cred = credentials_.find(request.app_id);
    if (cred == credentials_.end() || cred->second != request.credential)
        return drop("auth_fail");
    if (quarantined_.contains(request.app_id)) return drop("quarantined");

    // 2. match the application to its access mask
    auto mask = masks_.find(request.app_id);
    if (mask == masks_.end()) return drop("no_mask");

    // Whitelist throttle: requested resources must stay inside the manifest.
    const auto& allowed = manifest_resources_[request.app_id];
    for (const auto& resource : request.requested_resources)
        if (!allowed.contains(resource)) return drop("resource_outside_manifest");

    // 3. assign the unique request id; 4. compute the tag
    counter_ = auth::next_counter(counter_);
    TagRecord record;
    record.app_id = request.app_id;
    record.request_id = request.app_id + "/" + std::to_string(counter_.value);
    record.mask_digest = mask->second->digest();
    record.counter = counter_.value;
    record.mac = auth::mac_compute(key_, record.mac_message());

    ctrl::Submission forward;
    forward.app_id = request.app_id;
    forward.request_id = record.request_id;
    forward.intent = request.intent;        // forwarded without further processing
    forward.withdraw_of = request.withdraw_of;
    forward.mask = mask->second;

    if (audit_ != nullptr)
        audit_->emit("tagger", "tagged",
                     {{"app_id", request.app_id},
                      {"request_id", record.request_id},
                      {"counter", record.counter}});
    return TagOutput{std::move(record), std::move(forward)};
}

}  // namespace nbac::tagger
