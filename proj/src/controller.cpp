#include "nbac/controller.hpp"

#include <algorithm>
#include <deque>

namespace nbac::ctrl {

namespace {

constexpr std::string_view kKindNames[] = {"connectivity", "topology_read", "node_ltps",
                                           "flow_install", "stats_read"};

constexpr std::string_view kStateNames[] = {"install_request", "compiling",  "installing",
                                            "ref_monitor",     "installed",  "recompiling",
                                            "failed",          "withdrawing", "withdrawn"};

constexpr std::string_view kEventNames[] = {
    "",              "app_request",    "tagged_request",  "submit_compile",
    "compile_ok",    "install_ok",     "verify_access",   "withdraw_request",
    "flows_removed", "topo_event",     "compile_failed",  "retry_compile",
    "install_failed", "retry_install", "recompile_failed", "withdraw_failed_intent",
    "monitor_rejected", "resubmit"};

constexpr std::string_view kFaultNames[] = {"delay", "reorder", "forge_extra", "drop_batch",
                                            "swap_mask"};

}  // namespace

std::string_view intent_kind_name(Intent::Kind kind) {
    return kKindNames[static_cast<std::size_t>(kind)];
}

std::string_view intent_state_name(IntentState s) {
    return kStateNames[static_cast<std::size_t>(s)];
}

std::string_view intent_event_name(IntentEvent e) {
    return kEventNames[static_cast<std::size_t>(e)];
}

std::string_view fault_mode_name(Fault::Mode mode) {
    return kFaultNames[static_cast<std::size_t>(mode)];
}

std::optional<IntentState> transition(IntentState from, IntentEvent event) {
    using S = IntentState;
    using E = IntentEvent;
    switch (event) {
        case E::app_request:
        case E::tagged_request: return std::nullopt;  // entry edges, not lifecycle steps
        case E::submit_compile: return from == S::install_request ? std::make_optional(S::compiling) : std::nullopt;
        case E::compile_ok: return from == S::compiling ? std::make_optional(S::installing) : std::nullopt;
        case E::install_ok: return from == S::ref_monitor ? std::make_optional(S::installed) : std::nullopt;
        case E::verify_access: return from == S::installing ? std::make_optional(S::ref_monitor) : std::nullopt;
        case E::withdraw_request: return from == S::installed ? std::make_optional(S::withdrawing) : std::nullopt;
        case E::flows_removed: return from == S::withdrawing ? std::make_optional(S::withdrawn) : std::nullopt;
        case E::topo_event: return from == S::installed ? std::make_optional(S::recompiling) : std::nullopt;
        case E::compile_failed: return from == S::compiling ? std::make_optional(S::failed) : std::nullopt;
        case E::retry_compile: return from == S::failed ? std::make_optional(S::compiling) : std::nullopt;
        case E::install_failed: return from == S::installing ? std::make_optional(S::failed) : std::nullopt;
        case E::retry_install: return from == S::failed ? std::make_optional(S::installing) : std::nullopt;
        case E::recompile_failed: return from == S::recompiling ? std::make_optional(S::failed) : std::nullopt;
        case E::withdraw_failed_intent: return from == S::failed ? std::make_optional(S::withdrawing) : std::nullopt;
        case E::monitor_rejected: return from == S::ref_monitor ? std::make_optional(S::failed) : std::nullopt;
        case E::resubmit: return from == S::withdrawn ? std::make_optional(S::install_request) : std::nullopt;
    }
    return std::nullopt;
}

IntentState IntentRecord::step(IntentEvent event) {
    auto next = transition(state, event);
    if (!next) throw TransitionError(state, event);
    bool retry = event == IntentEvent::retry_compile || event == IntentEvent::retry_install ||
                 event == IntentEvent::resubmit;
    if (retry) {
        if (retries >= kRetryLimit) {
            state = IntentState::failed;
            return state;
        }
        ++retries;
    }
    state = *next;
    return state;
}

std::vector<std::string> shortest_path(const nib::NibSnapshot& view, const std::string& from,
                                       const std::string& to) {
    if (view.node(from) == nullptr || view.node(to) == nullptr) return {};
    if (from == to) return {from};

    // BFS layering, then lexicographically-least path reconstruction over
    // the shortest-path DAG. Topologies are small.
    std::map<std::string, int> dist{{from, 0}};
    std::deque<std::string> frontier{from};
    while (!frontier.empty()) {
        std::string current = std::move(frontier.front());
        frontier.pop_front();
        for (const auto& next : view.neighbors(current)) {
            if (dist.contains(next)) continue;
            dist[next] = dist[current] + 1;
            frontier.push_back(next);
        }
    }
    if (!dist.contains(to)) return {};

    std::vector<std::string> path{from};
    std::string current = from;
    while (current != to) {
        std::string best;
        for (const auto& next : view.neighbors(current)) {
            auto it = dist.find(next);
            if (it == dist.end() || it->second != dist[current] + 1) continue;
            // Only descend into nodes that still reach `to` along shortest edges.
            if (it->second > dist[to]) continue;
            if (next != to) {
                // Reachability of `to` from `next` within the DAG: dist must
                // keep increasing toward dist[to].
                std::map<std::string, bool> memo;
                std::function<bool(const std::string&)> reaches = [&](const std::string& n) -> bool {
                    if (n == to) return true;
                    auto found = memo.find(n);
                    if (found != memo.end()) return found->second;
                    memo[n] = false;
                    for (const auto& m : view.neighbors(n))
                        if (dist.contains(m) && dist[m] == dist[n] + 1 && reaches(m))
                            return memo[n] = true;
                    return false;
                };
                if (!reaches(next)) continue;
            }
            if (best.empty() || next < best) best = next;
        }
        if (best.empty()) return {};
        path.push_back(best);
        current = best;
    }
    return path;
}

std::vector<Query> compile(const Intent& intent, const policy::AccessMask& mask,
                           const nib::NibSnapshot& view, const std::string& app_id,
                           const std::string& request_id) {
    (void)mask;  // advisory; a benign compiler needs nothing from it here
    std::vector<Query> queries;
    auto base = [&](QueryOp op, std::string target) {
        Query q;
        q.app_id = app_id;
        q.request_id = request_id;
        q.op = op;
        q.target = std::move(target);
        return q;
    };

    switch (intent.kind) {
        case Intent::Kind::connectivity: {
            auto path = shortest_path(view, intent.src_host, intent.dst_host);
            if (path.size() < 2) throw CompileError("no path between '" + intent.src_host +
                                                    "' and '" + intent.dst_host + "'");
            for (std::size_t i = 1; i + 1 < path.size(); ++i) {
                Query q = base(QueryOp::flow_install, path[i]);
                q.args = {{"src_ip", intent.src_host},
                          {"dst_ip", intent.dst_host},
                          {"protocol", intent.protocol},
                          {"src_port", std::to_string(intent.src_port)},
                          {"dst_port", std::to_string(intent.dst_port)},
                          {"action", "forward"}};
                queries.push_back(std::move(q));
            }
            if (queries.empty())
                throw CompileError("hosts '" + intent.src_host + "' and '" + intent.dst_host +
                                   "' are directly attached; nothing to install");
            break;
        }
        case Intent::Kind::topology_read: {
            Query q = base(QueryOp::topo_read, "*");
            if (!intent.filter.empty()) q.args["filter"] = intent.filter;
            queries.push_back(std::move(q));
            break;
        }
        case Intent::Kind::node_ltps:
            queries.push_back(base(QueryOp::node_ltps, intent.node_id));
            break;
        case Intent::Kind::flow_install: {
            auto fields = intent.match_fields;
            auto device = fields.find("device");
            if (device == fields.end()) throw CompileError("flow_install intent without device");
            Query q = base(QueryOp::flow_install, device->second);
            fields.erase(device);
            q.args = std::move(fields);
            if (!q.args.count("action")) q.args["action"] = "allow";
            queries.push_back(std::move(q));
            break;
        }
        case Intent::Kind::stats_read:
            queries.push_back(base(QueryOp::stats_read, intent.resource));
            break;
        default:
            throw CompileError("unknown intent kind");
    }
    return queries;
}

void MockController::submit(Submission submission) {
    IntentRecord record;
    record.app_id = submission.app_id;
    record.request_id = submission.request_id;
    if (submission.intent) record.intent = *submission.intent;
    records_[submission.request_id] = std::move(record);
    inbox_.push_back(std::move(submission));
}

void MockController::inject_fault(Fault fault) {
    if (audit_ != nullptr)
        audit_->emit("controller", "fault_injected",
                     {{"mode", std::string(fault_mode_name(fault.mode))}});
    switch (fault.mode) {
        case Fault::Mode::delay: pending_delay_ = fault; break;
        case Fault::Mode::reorder: pending_reorder_ = fault; break;
        case Fault::Mode::forge_extra: pending_forge_ = fault; break;
        case Fault::Mode::drop_batch: drop_next_ = true; break;
        case Fault::Mode::swap_mask: swap_next_ = true; break;
    }
}

void MockController::emit(QueryBatch batch, std::vector<QueryBatch>& out) {
    // Fault transforms apply at the emission point, one-shot each.
    if (drop_next_) {
        drop_next_ = false;
        if (audit_ != nullptr)
            audit_->emit("controller", "batch_dropped", {{"request_id", batch.request_id}});
        return;
    }
    if (pending_forge_ && pending_forge_->forged) {
        Query forged = *pending_forge_->forged;
        forged.app_id = batch.app_id;
        forged.request_id = batch.request_id;
        batch.queries.push_back(std::move(forged));
        pending_forge_.reset();
        if (audit_ != nullptr)
            audit_->emit("controller", "batch_forged", {{"request_id", batch.request_id}});
    }
    if (swap_next_ && last_identity_) {
        swap_next_ = false;
        if (audit_ != nullptr)
            audit_->emit("controller", "identity_swapped",
                         {{"request_id", batch.request_id},
                          {"claimed", last_identity_->second}});
        batch.app_id = last_identity_->first;
        batch.request_id = last_identity_->second;
    } else if (swap_next_) {
        swap_next_ = false;  // nothing to swap with yet
    }
    last_identity_ = {batch.app_id, batch.request_id};

    if (pending_delay_) {
        held_.push_back(Buffered{std::move(batch), pending_delay_->k});
        pending_delay_.reset();
        return;
    }
    if (pending_reorder_) {
        reorder_buffer_.push_back(std::move(batch));
        if (reorder_buffer_.size() >= pending_reorder_->permutation.size()) {
            for (unsigned index : pending_reorder_->permutation)
                if (index < reorder_buffer_.size()) out.push_back(reorder_buffer_[index]);
            reorder_buffer_.clear();
            pending_reorder_.reset();
        }
        return;
    }
    out.push_back(std::move(batch));
}

std::vector<QueryBatch> MockController::pump(const nib::NibSnapshot& view) {
    std::vector<QueryBatch> released;

    while (!inbox_.empty()) {
        Submission submission = std::move(inbox_.front());
        inbox_.pop_front();
        IntentRecord& record = records_[submission.request_id];

        if (submission.withdraw_of) {
            // Withdrawal: flip the original intent, compile the compensating
            // flow deletions as this request's batch.
            withdraw_target_[submission.request_id] = *submission.withdraw_of;
            std::vector<std::string> flow_ids;
            auto target = records_.find(*submission.withdraw_of);
            if (target != records_.end()) {
                IntentEvent ev = target->second.state == IntentState::failed
                                     ? IntentEvent::withdraw_failed_intent
                                     : IntentEvent::withdraw_request;
                if (transition(target->second.state, ev))
                    target->second.step(ev);
                if (target->second.app_id == submission.app_id)
                    flow_ids = target->second.installed_flows;
            }
            record.step(IntentEvent::submit_compile);
            QueryBatch batch;
            batch.app_id = submission.app_id;
            batch.request_id = submission.request_id;
            std::sort(flow_ids.begin(), flow_ids.end());
            for (auto& flow_id : flow_ids) {
                Query q;
                q.app_id = submission.app_id;
                q.request_id = submission.request_id;
                q.op = QueryOp::flow_delete;
                q.target = flow_id;
                batch.queries.push_back(std::move(q));
            }
            record.step(IntentEvent::compile_ok);
            record.step(IntentEvent::verify_access);
            emit(std::move(batch), released);
            continue;
        }

        record.step(IntentEvent::submit_compile);
        try {
            static const policy::AccessMask no_mask("", {}, policy::AccessModel{});
            QueryBatch batch;
            batch.app_id = submission.app_id;
            batch.request_id = submission.request_id;
            batch.queries = compile(record.intent, submission.mask ? *submission.mask : no_mask,
                                    view, submission.app_id, submission.request_id);
            record.step(IntentEvent::compile_ok);
            record.step(IntentEvent::verify_access);
            emit(std::move(batch), released);
        } catch (const CompileError& e) {
            record.step(IntentEvent::compile_failed);
            if (audit_ != nullptr)
                audit_->emit("controller", "compile_failed",
                             {{"request_id", submission.request_id}, {"reason", e.what()}});
        }
    }

    // Delay countdown: a held batch releases after `hold` later emissions.
    unsigned emitted_now = static_cast<unsigned>(released.size());
    for (auto& buffered : held_)
        buffered.hold = buffered.hold > emitted_now ? buffered.hold - emitted_now : 0;
    for (auto it = held_.begin(); it != held_.end();) {
        if (it->hold == 0) {
            released.push_back(std::move(it->batch));
            it = held_.erase(it);
        } else {
            ++it;
        }
    }
    return released;
}

std::vector<QueryBatch> MockController::flush() {
    std::vector<QueryBatch> released;
    for (auto& buffered : reorder_buffer_) released.push_back(std::move(buffered));
    reorder_buffer_.clear();
    pending_reorder_.reset();
    for (auto& buffered : held_) released.push_back(std::move(buffered.batch));
    held_.clear();
    return released;
}

void MockController::on_monitor_verdict(const std::string& request_id, bool accepted) {
    auto it = records_.find(request_id);
    if (it == records_.end()) return;  // forged identity: no record to advance
    if (it->second.state != IntentState::ref_monitor) return;
    it->second.step(accepted ? IntentEvent::install_ok : IntentEvent::monitor_rejected);

    if (accepted) {
        auto target = withdraw_target_.find(request_id);
        if (target != withdraw_target_.end()) on_flows_removed(target->second);
    }
}

void MockController::note_flows(const std::string& request_id, std::vector<std::string> flow_ids) {
    auto it = records_.find(request_id);
    if (it == records_.end()) return;
    it->second.installed_flows = std::move(flow_ids);
}

void MockController::on_flows_removed(const std::string& request_id) {
    auto it = records_.find(request_id);
    if (it == records_.end()) return;
    if (it->second.state == IntentState::withdrawing) it->second.step(IntentEvent::flows_removed);
}

std::optional<IntentState> MockController::state_of(const std::string& request_id) const {
    auto it = records_.find(request_id);
    if (it == records_.end()) return std::nullopt;
    return it->second.state;
}

}  // namespace nbac::ctrl
