#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "nbac/nib.hpp"
#include "nbac/policy.hpp"

// Randomized adversarial campaigns: arbitrary resource requests, tag/batch
// byte tampering, and controller fault injection, followed by a soundness
// re-check of the NIB-channel audit trail against the installed masks.

namespace nbac::harness {

struct AdversaryConfig {
    std::uint64_t seed = 1;
    unsigned runs = 1000;
};

struct AdversaryStats {
    unsigned runs = 0;
    unsigned requests = 0;
    unsigned tagger_drops = 0;
    unsigned batches_accepted = 0;
    unsigned batches_rejected = 0;
    unsigned nib_execs = 0;
    unsigned violations = 0;
};

// Per-run artifacts handed to an external observer (independent re-checks).
struct RunArtifacts {
    const std::vector<nlohmann::json>& events;
    const std::map<std::string, policy::AccessMask>& masks;
    const nib::NibSnapshot& topology;
};

AdversaryStats adversary_suite(const AdversaryConfig& config,
                               const std::function<void(const RunArtifacts&)>& observer = {});

// Replays the audit trail: every query emitted on the NIB channel must
// satisfy the mask of its originating app (resource, action, and enforced
// attributes, resolving flow targets through the install history). Returns
// the number of violating emissions.
unsigned soundness_violations(const std::vector<nlohmann::json>& audit_events,
                              const std::map<std::string, policy::AccessMask>& masks,
                              const nib::NibSnapshot& topology);

}  // namespace nbac::harness
