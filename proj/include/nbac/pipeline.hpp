#pragma once

#include <optional>
#include <random>
#include <set>
#include <string>

#include "nbac/audit.hpp"
#include "nbac/controller.hpp"
#include "nbac/mano.hpp"
#include "nbac/monitor.hpp"
#include "nbac/nib.hpp"
#include "nbac/tagger.hpp"

// Wires the enforcement chain over ordered in-process channels:
// app -> tagger -> controller -> monitor -> NIB, with MANO provisioning keys,
// masks and mitigation. Single-threaded and fully deterministic: the only
// randomness is the seeded generator used for nonces.

namespace nbac {

std::set<policy::ResourceId> default_catalogue();

struct PipelineConfig {
    std::uint64_t seed = 1;
    unsigned window_limit = 2;
    std::set<policy::ResourceId> catalogue = default_catalogue();
    std::optional<mano::KeySet> keys;  // default: derived from the seed
    bool audit_enabled = true;         // benches disable the trail
};

class Pipeline {
public:
    Pipeline(nib::NibSnapshot topology, PipelineConfig config);

    // Components hold pointers into each other; the pipeline stays put.
    Pipeline(const Pipeline&) = delete;
    Pipeline& operator=(const Pipeline&) = delete;

    mano::Mano& mano() { return mano_; }
    tagger::RequestTagger& tagger() { return tagger_; }
    ctrl::MockController& controller() { return controller_; }
    monitor::ReferenceMonitor& monitor() { return monitor_; }
    nib::Nib& nib() { return nib_; }
    AuditLog& audit() { return audit_; }
    std::mt19937_64& rng() { return rng_; }

    // Resources a request for this intent claims by default.
    static std::set<policy::ResourceId> claimed_resources(const ctrl::Intent& intent);

    // Tags and drives one request end to end; returns the request id when the
    // tagger admitted it. `claim` overrides the declared resources (the
    // adversarial lane past the tagger whitelist); `credential` overrides the
    // registry token.
    std::optional<std::string> submit_request(
        const std::string& app_id, const ctrl::Intent& intent,
        std::optional<std::set<policy::ResourceId>> claim = std::nullopt,
        std::optional<std::string> credential = std::nullopt);

    // Withdrawal of an earlier installed request (compiled to flow deletions).
    std::optional<std::string> submit_withdraw(const std::string& app_id,
                                               const std::string& request_id);

    void inject_fault(ctrl::Fault fault);

    // Drains the controller channel into the monitor.
    void pump();
    // Releases delay/reorder remnants, then pumps.
    void flush();

    // Adversarial interceptors on the two monitor-bound channels (packet
    // tampering lane); applied to every record/batch until cleared.
    void intercept_records(std::function<void(tagger::TagRecord&)> fn) { record_interceptor_ = std::move(fn); }
    void intercept_batches(std::function<void(QueryBatch&)> fn) { batch_interceptor_ = std::move(fn); }

private:
    void deliver(std::vector<QueryBatch> batches);
    std::optional<std::string> submit(tagger::AppRequest request);

    AuditLog audit_;
    std::mt19937_64 rng_;
    mano::Mano mano_;
    nib::Nib nib_;
    // The controller's compilation snapshot. Topology never mutates in this
    // version (queries touch flows, config and subscriptions only), so one
    // copy serves every pump.
    nib::NibSnapshot compile_view_;
    tagger::RequestTagger tagger_;
    monitor::ReferenceMonitor monitor_;
    ctrl::MockController controller_;
    std::function<void(tagger::TagRecord&)> record_interceptor_;
    std::function<void(QueryBatch&)> batch_interceptor_;
};

}  // namespace nbac
