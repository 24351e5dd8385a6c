#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nbac/audit.hpp"
#include "nbac/nib.hpp"
#include "nbac/policy.hpp"
#include "nbac/query.hpp"

// Deliberately untrusted mock network controller: compiles intents into NIB
// queries through the intent state machine, with injectable faults (delay,
// reorder, forged queries, drops, identity swaps) for adversarial testing.
// The controller has no NIB channel; every batch it produces goes to the
// reference monitor.

namespace nbac::ctrl {

struct Intent {
    enum class Kind : std::uint8_t {
        connectivity = 0,
        topology_read = 1,
        node_ltps = 2,
        flow_install = 3,
        stats_read = 4,
    };

    Kind kind = Kind::topology_read;
    // connectivity
    std::string src_host;
    std::string dst_host;
    std::string protocol;
    int src_port = 0;
    int dst_port = 0;
    // topology_read
    std::string filter;
    // node_ltps
    std::string node_id;
    // flow_install
    std::map<std::string, std::string> match_fields;
    // stats_read
    std::string resource;

    int priority = 0;
    std::vector<policy::AttributeConstraint> constraints;

    bool operator==(const Intent&) const = default;
};

std::string_view intent_kind_name(Intent::Kind kind);

enum class IntentState : std::uint8_t {
    install_request = 0,
    compiling = 1,
    installing = 2,
    ref_monitor = 3,
    installed = 4,
    recompiling = 5,
    failed = 6,
    withdrawing = 7,
    withdrawn = 8,
};

std::string_view intent_state_name(IntentState s);

// Lifecycle events. app_request and tagged_request are entry edges (the
// tagger admits the request and submit() creates the intent); they are not
// legal in-lifecycle steps.
enum class IntentEvent : std::uint8_t {
    app_request = 1,
    tagged_request = 2,
    submit_compile = 3,
    compile_ok = 4,
    install_ok = 5,
    verify_access = 6,
    withdraw_request = 7,
    flows_removed = 8,
    topo_event = 9,
    compile_failed = 10,
    retry_compile = 11,
    install_failed = 12,
    retry_install = 13,
    recompile_failed = 14,
    withdraw_failed_intent = 15,
    monitor_rejected = 16,
    resubmit = 17,
};

std::string_view intent_event_name(IntentEvent e);

// Legal-edge map; nullopt for illegal (state, event) pairs.
std::optional<IntentState> transition(IntentState from, IntentEvent event);

struct TransitionError : std::runtime_error {
    TransitionError(IntentState from, IntentEvent event)
        : std::runtime_error("illegal transition: " + std::string(intent_state_name(from)) +
                             " on " + std::string(intent_event_name(event))) {}
};

struct CompileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Retry transitions (retry_compile, retry_install, resubmit) are bounded;
// the bound exhausts to failed.
constexpr int kRetryLimit = 3;

struct IntentRecord {
    Intent intent;
    std::string app_id;
    std::string request_id;
    IntentState state = IntentState::install_request;
    int retries = 0;
    // Flow ids reported back on the result path; withdrawal compiles its
    // deletions from these.
    std::vector<std::string> installed_flows;

    // Applies the event or throws TransitionError; returns the new state.
    IntentState step(IntentEvent event);
};

// What the tagger forwards: the request (byte-identical intent), plus the
// mask copy that travels with it. The monitor never trusts this copy.
struct Submission {
    std::string app_id;
    std::string request_id;
    std::optional<Intent> intent;            // install request
    std::optional<std::string> withdraw_of;  // withdrawal of an earlier request
    std::shared_ptr<const policy::AccessMask> mask;  // advisory copy
};

struct Fault {
    enum class Mode : std::uint8_t { delay, reorder, forge_extra, drop_batch, swap_mask };

    Mode mode = Mode::drop_batch;
    unsigned k = 0;                         // delay: release after k later batches
    std::vector<unsigned> permutation;      // reorder: 0-based over the next n batches
    std::optional<Query> forged;            // forge_extra payload
};

std::string_view fault_mode_name(Fault::Mode mode);

// Pure compilation of an intent into queries against a read-only view.
// Connectivity intents route along the unique lowest-cost path (uniform link
// cost, lexicographic tie-break) and install flows on the intermediate
// nodes. Throws CompileError when no path exists or the intent is malformed.
std::vector<Query> compile(const Intent& intent, const policy::AccessMask& mask,
                           const nib::NibSnapshot& view, const std::string& app_id,
                           const std::string& request_id);

// Lexicographically-least shortest path between two nodes, inclusive;
// empty when unreachable.
std::vector<std::string> shortest_path(const nib::NibSnapshot& view, const std::string& from,
                                       const std::string& to);

class MockController {
public:
    explicit MockController(AuditLog* audit) : audit_(audit) {}

    // Tagged request enters the lifecycle in install_request order (FIFO).
    void submit(Submission submission);

    void inject_fault(Fault fault);

    // Compiles every queued submission and returns the batches released to
    // the monitor channel this round, after fault transforms.
    std::vector<QueryBatch> pump(const nib::NibSnapshot& view);

    // Releases everything still buffered by delay/reorder faults.
    std::vector<QueryBatch> flush();

    // Monitor verdict for an emitted batch: install_ok or monitor_rejected.
    void on_monitor_verdict(const std::string& request_id, bool accepted);

    // Result-path report of the flow ids a request installed.
    void note_flows(const std::string& request_id, std::vector<std::string> flow_ids);

    // Flow-removal confirmation for a withdrawal request.
    void on_flows_removed(const std::string& request_id);

    std::optional<IntentState> state_of(const std::string& request_id) const;
    const std::map<std::string, IntentRecord>& records() const { return records_; }

private:
    struct Buffered {
        QueryBatch batch;
        unsigned hold = 0;  // releases when 0
    };

    void emit(QueryBatch batch, std::vector<QueryBatch>& out);

    AuditLog* audit_;
    std::deque<Submission> inbox_;
    std::map<std::string, IntentRecord> records_;
    std::map<std::string, std::string> withdraw_target_;  // withdraw req -> original req

    std::vector<Buffered> held_;
    std::vector<QueryBatch> reorder_buffer_;
    std::optional<Fault> pending_delay_;
    std::optional<Fault> pending_reorder_;
    std::optional<Fault> pending_forge_;
    bool drop_next_ = false;
    bool swap_next_ = false;
    std::optional<std::pair<std::string, std::string>> last_identity_;
};

}  // namespace nbac::ctrl
