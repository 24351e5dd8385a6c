#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nbac/audit.hpp"
#include "nbac/authcode.hpp"
#include "nbac/monitor.hpp"
#include "nbac/policy.hpp"
#include "nbac/tagger.hpp"

// Management and orchestration: application enrollment (manifest -> operator
// policy set -> mask -> conflict gate), key provisioning, ownership of the
// mask dictionary, termination with delegation revocation, and mitigation
// handling for monitor reject events.

namespace nbac::mano {

struct KeySet {
    auth::MacKey tag_key;  // tagger <-> monitor
    auth::MacKey nib_key;  // monitor <-> NIB
};

// Deterministic scenario keys derived from the seed; scenario files may
// override with explicit hex values (test-only).
KeySet derive_keys(std::uint64_t seed);

enum class AppStatus : std::uint8_t { candidate, installed, terminated };

std::string_view app_status_name(AppStatus s);

struct AppRecord {
    std::string app_id;
    policy::DeploymentManifest manifest;
    policy::AccessModel model;
    std::optional<policy::AccessMask> mask;
    AppStatus status = AppStatus::candidate;
    std::optional<std::string> parent;
    bool quarantined = false;
};

struct EnrollOutcome {
    bool installed = false;
    std::string error;  // "", "parse", "catalogue", "conflict", "duplicate"
    std::vector<policy::ResourceId> missing_resources;
    policy::ConflictReport conflicts;
};

class Mano {
public:
    Mano(std::set<policy::ResourceId> catalogue, KeySet keys, AuditLog* audit);

    // Components receiving masks and credentials at enrollment time.
    void attach(tagger::RequestTagger* tagger, monitor::ReferenceMonitor* monitor);

    const KeySet& keys() const { return keys_; }

    // parse -> validate -> operator policy set -> mask -> conflict gate.
    // Atomic: nothing is registered anywhere unless the app installs.
    EnrollOutcome enroll(const std::string& app_id, std::string_view manifest_doc,
                         const policy::AccessModel& model,
                         const std::vector<policy::ResourceAccessRule>& operator_rules);
    EnrollOutcome enroll_parsed(policy::DeploymentManifest manifest,
                                const policy::AccessModel& model,
                                const std::vector<policy::ResourceAccessRule>& operator_rules);

    // Derived mask for `to`, registered like an enrollment; `to` must not
    // already hold a mask.
    EnrollOutcome delegate(const std::string& from, const std::string& to,
                           const std::vector<std::size_t>& tuple_indices);

    // Terminates the app and revokes the transitive delegation closure;
    // returns the revoked app ids (excluding the terminated app itself).
    std::vector<std::string> terminate(const std::string& app_id);

    // Monitor reject events: quarantine the app and log the action.
    void handle_mitigation(const std::string& app_id, const std::string& request_id,
                           const std::string& reason);

    const std::map<std::string, policy::AccessMask>& dictionary() const { return dictionary_; }
    const AppRecord* record(const std::string& app_id) const;
    std::string credential_for(const std::string& app_id) const;

private:
    EnrollOutcome install(AppRecord record, policy::AccessMask mask);

    std::set<policy::ResourceId> catalogue_;
    KeySet keys_;
    AuditLog* audit_;
    tagger::RequestTagger* tagger_ = nullptr;
    monitor::ReferenceMonitor* monitor_ = nullptr;

    std::map<std::string, AppRecord> records_;
    std::map<std::string, policy::AccessMask> dictionary_;
    std::multimap<std::string, std::string> delegations_;
};

}  // namespace nbac::mano
