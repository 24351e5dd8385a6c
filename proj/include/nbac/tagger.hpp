#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>

#include "nbac/audit.hpp"
#include "nbac/authcode.hpp"
#include "nbac/controller.hpp"
#include "nbac/policy.hpp"

// Request tagger: authenticates application requests against the credential
// registry, whitelists the requested resources against the app's manifest,
// binds each admitted request to its access mask with a keyed tag, and
// forwards the request untouched to the controller. Dropped requests never
// consume a counter.

namespace nbac::tagger {

struct TagRecord {
    std::string app_id;
    std::string request_id;
    auth::Digest mask_digest{};
    std::uint64_t counter = 0;
    auth::Mac mac{};

    // Canonical MAC input over (app_id, request_id, mask_digest, counter).
    auth::Bytes mac_message() const;
};

struct AppRequest {
    std::string app_id;
    std::string credential;
    std::optional<ctrl::Intent> intent;
    std::optional<std::string> withdraw_of;
    std::set<policy::ResourceId> requested_resources;
};

struct TagOutput {
    TagRecord record;        // to the monitor channel
    ctrl::Submission forward;  // to the controller channel, intent byte-identical
};

class RequestTagger {
public:
    RequestTagger(auth::MacKey key, std::string instance_id, AuditLog* audit);

    void seed_credential(const std::string& app_id, const std::string& token);

    // Mask registration from MANO; overwrite is forbidden (masks immutable).
    void register_mask(const policy::AccessMask& mask);
    bool has_mask(const std::string& app_id) const;
    void invalidate_mask(const std::string& app_id);

    void quarantine(const std::string& app_id);

    // nullopt = dropped (audited); drops consume no counter.
    std::optional<TagOutput> tag_request(const AppRequest& request);

    std::uint64_t counter_value() const { return counter_.value; }

private:
    auth::MacKey key_;
    auth::Counter counter_;
    AuditLog* audit_;
    std::map<std::string, std::string> credentials_;
    std::map<std::string, std::shared_ptr<const policy::AccessMask>> masks_;
    std::map<std::string, std::set<policy::ResourceId>> manifest_resources_;
    std::set<std::string> quarantined_;
};

}  // namespace nbac::tagger
