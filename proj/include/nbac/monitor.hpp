#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "nbac/audit.hpp"
#include "nbac/authcode.hpp"
#include "nbac/nib.hpp"
#include "nbac/policy.hpp"
#include "nbac/query.hpp"
#include "nbac/tagger.hpp"

// Reference monitor: recomputes tags, enforces the sliding window over the
// tagger's counter sequence, validates every query against the registered
// access mask (resolving target attributes through the NIB), and MAC-stamps
// accepted queries for the NIB. Fail-closed throughout: resolution failures
// and unknown enums reject, never accept.

namespace nbac::monitor {

enum class Decision : std::uint8_t {
    accept = 0,
    reject_mac = 1,
    reject_stale = 2,
    reject_window = 3,
    reject_mask_resource = 4,
    reject_mask_action = 5,
    reject_mask_attribute = 6,
};

std::string_view decision_name(Decision d);

struct Verdict {
    Decision decision = Decision::accept;
    int query_index = -1;  // offending query; -1 for batch-level causes
    std::string reason;

    bool accepted() const { return decision == Decision::accept; }
};

enum class WindowCheck : std::uint8_t { in_order, held, stale, invalidate_batch_set };

std::string_view window_check_name(WindowCheck c);

struct HeldBatch {
    std::string app_id;
    std::string request_id;
    Verdict verdict;
    std::vector<nib::SealedQuery> sealed;  // empty unless accepted
};

struct WindowState {
    std::uint64_t expected_counter = 1;
    unsigned limit = 2;
    std::map<std::uint64_t, HeldBatch> pending;  // counters > expected_counter
};

// Pure classification of an arriving counter against the window state.
// `app_of_counter` resolves gap counters to their tag-record app; unknown
// gap owners invalidate (fail closed).
WindowCheck window_check(const WindowState& ws, std::uint64_t counter, const std::string& app_id,
                         const std::function<std::optional<std::string>(std::uint64_t)>& app_of_counter);

// Attribute map for a query target resolved against a NIB view: jurisdiction
// and placement of the target's node (a flow resolves to its device), plus
// the query's own modification class. nullopt when the target is unknown.
std::optional<std::map<policy::Attribute, std::string>> resolve_attributes(
    const Query& q, const nib::NibSnapshot& view);

class ReferenceMonitor {
public:
    ReferenceMonitor(auth::MacKey key, auth::MacKey nib_key, unsigned window_limit, nib::Nib* nib,
                     AuditLog* audit, std::mt19937_64* rng);

    // Mask provisioning from MANO; the monitor trusts only this store.
    void register_mask(const policy::AccessMask& mask);
    void unregister_mask(const std::string& app_id);
    bool has_mask(const std::string& app_id) const;

    // Tag records arrive on the trusted tagger channel, indexed by counter
    // and request id; duplicates are replay signals.
    bool receive_tag_record(const tagger::TagRecord& record);

    // Verification chain: locate record, recompute the tag, window check,
    // per-query mask compliance; accepted queries are sealed and emitted to
    // the NIB (buffered until the gap closes for held batches).
    Verdict verify_batch(QueryBatch batch);

    const WindowState& window() const { return window_; }

    // Final verdict notifications (controller bookkeeping).
    void on_verdict(std::function<void(const std::string&, bool)> sink) { verdict_sink_ = std::move(sink); }
    // Reject notifications (MANO mitigation).
    void on_reject(std::function<void(const std::string&, const std::string&, const std::string&)> sink) {
        mitigation_sink_ = std::move(sink);
    }

    const std::map<std::string, std::vector<nib::ExecResult>>& results() const { return results_; }
    const std::vector<nib::ExecResult>* results_for(const std::string& request_id) const {
        auto it = results_.find(request_id);
        return it == results_.end() ? nullptr : &it->second;
    }

private:
    struct Judged {
        Verdict verdict;
        std::vector<nib::SealedQuery> sealed;
    };

    Judged judge(QueryBatch& batch);
    nib::SealedQuery seal(Query q);
    void emit_sealed(const std::string& request_id, std::vector<nib::SealedQuery>& sealed);
    void finalize(const std::string& app_id, const std::string& request_id, const Verdict& verdict);
    void advance_and_flush();

    auth::MacKey key_;
    auth::MacKey nib_key_;
    nib::Nib* nib_;
    AuditLog* audit_;
    std::mt19937_64* rng_;
    WindowState window_;

    std::map<std::string, policy::AccessMask> masks_;
    std::map<std::string, tagger::TagRecord> records_by_request_;
    std::map<std::uint64_t, std::string> request_by_counter_;
    std::set<auth::Nonce> used_nonces_;
    std::map<std::string, std::vector<nib::ExecResult>> results_;

    std::function<void(const std::string&, bool)> verdict_sink_;
    std::function<void(const std::string&, const std::string&, const std::string&)> mitigation_sink_;
};

}  // namespace nbac::monitor
