#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

// Append-only audit trail shared by all pipeline components. Events are JSON
// objects ordered by a virtual clock (scenario step + emission sequence);
// no wall-clock time is recorded, so equal inputs produce byte-identical
// trails.

namespace nbac {

class AuditLog {
public:
    // `fields` is merged into the event; step/seq/component/event keys win.
    void emit(std::string_view component, std::string_view event, nlohmann::json fields);

    void set_step(std::uint64_t step) { step_ = step; }
    std::uint64_t step() const { return step_; }

    const std::vector<nlohmann::json>& events() const { return events_; }

    std::vector<nlohmann::json> select(std::string_view component, std::string_view event) const;

    std::string to_jsonl() const;

    // Observer invoked on each emitted event (mitigation wiring).
    void on_emit(std::function<void(const nlohmann::json&)> observer);

private:
    std::vector<nlohmann::json> events_;
    std::vector<std::function<void(const nlohmann::json&)>> observers_;
    std::uint64_t step_ = 0;
    std::uint64_t seq_ = 0;
};

}  // namespace nbac
