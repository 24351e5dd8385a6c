#include "nbac/monitor.hpp"

#include <algorithm>

namespace nbac::monitor {

namespace {

constexpr std::string_view kDecisionNames[] = {
    "accept",           "reject_mac",         "reject_stale",         "reject_window",
    "reject_mask_resource", "reject_mask_action", "reject_mask_attribute"};

constexpr std::string_view kWindowNames[] = {"in_order", "held", "stale", "invalidate_batch_set"};

}  // namespace

std::string_view decision_name(Decision d) { return kDecisionNames[static_cast<std::size_t>(d)]; }

std::string_view window_check_name(WindowCheck c) {
    return kWindowNames[static_cast<std::size_t>(c)];
}

WindowCheck window_check(const WindowState& ws, std::uint64_t counter, const std::string& app_id,
                         const std::function<std::optional<std::string>(std::uint64_t)>& app_of_counter) {
    if (counter < ws.expected_counter) return WindowCheck::stale;
    if (counter == ws.expected_counter) return WindowCheck::in_order;
    if (ws.pending.contains(counter)) return WindowCheck::stale;  // duplicate of a held slot
    if (counter - ws.expected_counter > ws.limit) return WindowCheck::invalidate_batch_set;

    for (std::uint64_t gap = ws.expected_counter; gap < counter; ++gap) {
        auto held = ws.pending.find(gap);
        if (held != ws.pending.end()) {
            if (held->second.app_id != app_id) return WindowCheck::invalidate_batch_set;
            continue;
        }
        auto owner = app_of_counter(gap);
        if (!owner || *owner != app_id) return WindowCheck::invalidate_batch_set;
    }
    return WindowCheck::held;
}

std::optional<std::map<policy::Attribute, std::string>> resolve_attributes(
    const Query& q, const nib::NibSnapshot& view) {
    std::map<policy::Attribute, std::string> attrs;
    attrs[policy::Attribute::modification_type] = query_mutates(q.op) ? "modify" : "read";

    const nib::Node* node = view.node(q.target);
    if (node == nullptr) {
        auto flow = view.flows.find(q.target);
        if (flow != view.flows.end()) node = view.node(flow->second.device);
    }
    if (node == nullptr) return std::nullopt;
    attrs[policy::Attribute::jurisdiction] = node->jurisdiction;
    attrs[policy::Attribute::placement] = node->placement;
    return attrs;
}

ReferenceMonitor::ReferenceMonitor(auth::MacKey key, auth::MacKey nib_key, unsigned window_limit,
                                   nib::Nib* nib, AuditLog* audit, std::mt19937_64* rng)
    : key_(std::move(key)), nib_key_(std::move(nib_key)), nib_(nib), audit_(audit), rng_(rng) {
    window_.limit = window_limit;
}

void ReferenceMonitor::register_mask(const policy::AccessMask& mask) {
    if (masks_.contains(mask.app_id()))
        throw std::invalid_argument("mask already registered for '" + mask.app_id() + "'");
    masks_.emplace(mask.app_id(), mask);
}

void ReferenceMonitor::unregister_mask(const std::string& app_id) { masks_.erase(app_id); }

bool ReferenceMonitor::has_mask(const std::string& app_id) const { return masks_.contains(app_id); }

bool ReferenceMonitor::receive_tag_record(const tagger::TagRecord& record) {
    if (request_by_counter_.contains(record.counter) ||
        records_by_request_.contains(record.request_id)) {
        if (audit_ != nullptr)
            audit_->emit("monitor", "tag_record_replay",
                         {{"app_id", record.app_id},
                          {"request_id", record.request_id},
                          {"counter", record.counter}});
        return false;
    }
    request_by_counter_[record.counter] = record.request_id;
    records_by_request_[record.request_id] = record;
    return true;
}

nib::SealedQuery ReferenceMonitor::seal(Query q) {
    nib::SealedQuery sealed;
    sealed.query = std::move(q);
    for (auto& byte : sealed.nonce.value) byte = static_cast<std::uint8_t>((*rng_)() & 0xff);
    if (!used_nonces_.insert(sealed.nonce).second)
        throw std::logic_error("nonce collision within a scenario run");
    sealed.mac = auth::mac_compute(nib_key_, nib::sealed_message(sealed.query, sealed.nonce));
    return sealed;
}

void ReferenceMonitor::emit_sealed(const std::string& request_id,
                                   std::vector<nib::SealedQuery>& sealed) {
    if (audit_ != nullptr) audit_->emit("monitor", "emit", {{"request_id", request_id}});
    for (auto& sq : sealed) results_[request_id].push_back(nib_->execute(sq));
}

void ReferenceMonitor::finalize(const std::string& app_id, const std::string& request_id,
                                const Verdict& verdict) {
    if (verdict_sink_) verdict_sink_(request_id, verdict.accepted());
    if (!verdict.accepted() && mitigation_sink_)
        mitigation_sink_(app_id, request_id, std::string(decision_name(verdict.decision)));
}

void ReferenceMonitor::advance_and_flush() {
    ++window_.expected_counter;
    for (;;) {
        auto it = window_.pending.find(window_.expected_counter);
        if (it == window_.pending.end()) break;
        HeldBatch held = std::move(it->second);
        window_.pending.erase(it);
        if (held.verdict.accepted()) {
            emit_sealed(held.request_id, held.sealed);
            finalize(held.app_id, held.request_id, held.verdict);
        }
        ++window_.expected_counter;
    }
}

ReferenceMonitor::Judged ReferenceMonitor::judge(QueryBatch& batch) {
    Judged out;
    const nib::NibSnapshot& view = nib_->peek();
    // Attribute resolution cache, per batch.
    std::map<std::string, std::optional<std::map<policy::Attribute, std::string>>> cache;

    auto mask_it = masks_.find(batch.app_id);
    if (mask_it == masks_.end()) {
        out.verdict = Verdict{Decision::reject_mac, -1, "no registered mask"};
        return out;
    }
    const policy::AccessMask& mask = mask_it->second;

    for (std::size_t i = 0; i < batch.queries.size(); ++i) {
        Query q = std::move(batch.queries[i]);
        int index = static_cast<int>(i);
        if (q.app_id != batch.app_id || q.request_id != batch.request_id) {
            out.verdict = Verdict{Decision::reject_mac, index, "query identity mismatch"};
            return out;
        }
        if (!q.scope.empty()) {
            // Scopes are monitor-attached; a pre-scoped query is forged.
            out.verdict = Verdict{Decision::reject_mac, index, "unexpected scope on query"};
            return out;
        }

        policy::ResourceId resource = query_resource(q.op);
        const policy::MaskTuple* tuple = mask.tuple_for(resource);
        if (tuple == nullptr) {
            out.verdict = Verdict{Decision::reject_mask_resource, index,
                                  "resource '" + resource + "' not in mask"};
            return out;
        }
        policy::Action action = query_action(q.op);
        if (!tuple->actions.contains(action)) {
            out.verdict = Verdict{Decision::reject_mask_action, index,
                                  "action '" + std::string(policy::action_name(action)) +
                                      "' not permitted on '" + resource + "'"};
            return out;
        }

        bool scan = q.op == QueryOp::topo_read;
        std::vector<std::string> unenforced;
        for (const auto& rule : tuple->rules) {
            for (const auto& constraint : rule.constraints) {
                if (!policy::attribute_enforced(constraint.attribute)) {
                    unenforced.emplace_back(policy::attribute_name(constraint.attribute));
                    continue;
                }
                if (constraint.attribute == policy::Attribute::modification_type) {
                    std::string actual = query_mutates(q.op) ? "modify" : "read";
                    if (!constraint.matches(actual)) {
                        out.verdict = Verdict{Decision::reject_mask_attribute, index,
                                              "modification-type '" + actual + "' outside rule '" +
                                                  rule.rule_id + "'"};
                        return out;
                    }
                    continue;
                }
                if (scan) {
                    // Scans are admitted with the constraint attached as a
                    // result scope; the NIB filters visibility by it.
                    auto& values = q.scope[constraint.attribute];
                    if (values.empty()) {
                        values = constraint.values;
                    } else {
                        std::vector<std::string> merged;
                        for (const auto& v : values)
                            if (constraint.matches(v)) merged.push_back(v);
                        values = std::move(merged);
                        if (values.empty()) {
                            out.verdict = Verdict{Decision::reject_mask_attribute, index,
                                                  "contradictory scope on '" + resource + "'"};
                            return out;
                        }
                    }
                    continue;
                }
                auto cached = cache.find(q.target);
                if (cached == cache.end())
                    cached = cache.emplace(q.target, resolve_attributes(q, view)).first;
                if (!cached->second) {
                    out.verdict = Verdict{Decision::reject_mask_resource, index,
                                          "unknown target '" + q.target + "'"};
                    return out;
                }
                auto attr = cached->second->find(constraint.attribute);
                if (attr == cached->second->end() || !constraint.matches(attr->second)) {
                    out.verdict = Verdict{
                        Decision::reject_mask_attribute, index,
                        std::string(policy::attribute_name(constraint.attribute)) + " of '" +
                            q.target + "' outside rule '" + rule.rule_id + "'"};
                    return out;
                }
            }
        }
        if (!unenforced.empty() && audit_ != nullptr) {
            std::sort(unenforced.begin(), unenforced.end());
            unenforced.erase(std::unique(unenforced.begin(), unenforced.end()), unenforced.end());
            audit_->emit("monitor", "attributes_not_enforced",
                         {{"request_id", batch.request_id}, {"attributes", unenforced}});
        }
        out.sealed.push_back(seal(std::move(q)));
    }
    out.verdict = Verdict{Decision::accept, -1, ""};
    return out;
}

Verdict ReferenceMonitor::verify_batch(QueryBatch batch) {
    auto audit_batch = [&](std::string_view window, const Verdict& verdict,
                           std::uint64_t counter) {
        if (audit_ == nullptr) return;
        nlohmann::json fields{{"app_id", batch.app_id},
                              {"request_id", batch.request_id},
                              {"window", std::string(window)},
                              {"verdict", std::string(decision_name(verdict.decision))}};
        if (counter != 0) fields["counter"] = counter;
        if (!verdict.reason.empty()) fields["reason"] = verdict.reason;
        if (verdict.query_index >= 0) fields["query_index"] = verdict.query_index;
        audit_->emit("monitor", "batch", fields);
    };

    // (1) locate the tag record for the claimed request
    auto record_it = records_by_request_.find(batch.request_id);
    if (record_it == records_by_request_.end()) {
        Verdict verdict{Decision::reject_mac, -1, "no tag record for request"};
        audit_batch("none", verdict, 0);
        finalize(batch.app_id, batch.request_id, verdict);
        return verdict;
    }
    const tagger::TagRecord& record = record_it->second;

    // (2) recompute the tag and bind the batch to it
    Verdict mac_verdict{Decision::accept, -1, ""};
    if (!auth::mac_verify(key_, record.mac_message(), record.mac)) {
        mac_verdict = Verdict{Decision::reject_mac, -1, "tag recomputation mismatch"};
    } else if (batch.app_id != record.app_id) {
        mac_verdict = Verdict{Decision::reject_mac, -1, "claimed app does not match tag record"};
    } else {
        auto mask_it = masks_.find(batch.app_id);
        if (mask_it == masks_.end())
            mac_verdict = Verdict{Decision::reject_mac, -1, "no registered mask"};
        else if (mask_it->second.digest() != record.mask_digest)
            mac_verdict = Verdict{Decision::reject_mac, -1, "mask digest mismatch"};
    }
    if (!mac_verdict.accepted()) {
        audit_batch("none", mac_verdict, record.counter);
        finalize(batch.app_id, batch.request_id, mac_verdict);
        return mac_verdict;
    }

    // (3) sliding-window check over the counter
    auto app_of = [this](std::uint64_t counter) -> std::optional<std::string> {
        auto it = request_by_counter_.find(counter);
        if (it == request_by_counter_.end()) return std::nullopt;
        return records_by_request_.at(it->second).app_id;
    };
    WindowCheck wc = window_check(window_, record.counter, batch.app_id, app_of);

    switch (wc) {
        case WindowCheck::stale: {
            Verdict verdict{Decision::reject_stale, -1, "counter already consumed"};
            audit_batch(window_check_name(wc), verdict, record.counter);
            finalize(batch.app_id, batch.request_id, verdict);
            return verdict;
        }
        case WindowCheck::invalidate_batch_set: {
            // The held set and the arriving batch are rejected; the window
            // jumps past everything invalidated.
            std::uint64_t ceiling = record.counter;
            for (auto& [counter, held] : window_.pending) {
                ceiling = std::max(ceiling, counter);
                Verdict verdict{Decision::reject_window, -1, "window invalidated"};
                if (audit_ != nullptr)
                    audit_->emit("monitor", "invalidated",
                                 {{"app_id", held.app_id},
                                  {"request_id", held.request_id},
                                  {"counter", counter},
                                  {"verdict", std::string(decision_name(verdict.decision))}});
                finalize(held.app_id, held.request_id, verdict);
            }
            window_.pending.clear();
            window_.expected_counter = ceiling + 1;
            Verdict verdict{Decision::reject_window, -1, "window invalidated"};
            audit_batch(window_check_name(wc), verdict, record.counter);
            finalize(batch.app_id, batch.request_id, verdict);
            return verdict;
        }
        case WindowCheck::in_order:
        case WindowCheck::held: break;
    }

    // (4) per-query mask compliance; held batches are judged on arrival and
    // emitted only when the gap closes (FIFO restoration toward the NIB).
    Judged judged = judge(batch);
    audit_batch(window_check_name(wc), judged.verdict, record.counter);

    if (wc == WindowCheck::in_order) {
        if (judged.verdict.accepted()) emit_sealed(batch.request_id, judged.sealed);
        finalize(batch.app_id, batch.request_id, judged.verdict);
        advance_and_flush();
    } else {
        if (judged.verdict.accepted()) {
            window_.pending.emplace(
                record.counter,
                HeldBatch{batch.app_id, batch.request_id, judged.verdict, std::move(judged.sealed)});
        } else {
            // Mask violations are final regardless of the window outcome;
            // the slot stays consumed so the gap can still close.
            window_.pending.emplace(record.counter,
                                    HeldBatch{batch.app_id, batch.request_id, judged.verdict, {}});
            finalize(batch.app_id, batch.request_id, judged.verdict);
        }
    }
    return judged.verdict;
}

}  // namespace nbac::monitor
