#include "nbac/audit.hpp"

namespace nbac {

void AuditLog::emit(std::string_view component, std::string_view event, nlohmann::json fields) {
    fields["step"] = step_;
    fields["seq"] = seq_++;
    fields["component"] = std::string(component);
    fields["event"] = std::string(event);
    events_.push_back(fields);
    for (const auto& observer : observers_) observer(events_.back());
}

std::vector<nlohmann::json> AuditLog::select(std::string_view component,
                                             std::string_view event) const {
    std::vector<nlohmann::json> out;
    for (const auto& e : events_) {
        if (!component.empty() && e.at("component").get<std::string>() != component) continue;
        if (!event.empty() && e.at("event").get<std::string>() != event) continue;
        out.push_back(e);
    }
    return out;
}

std::string AuditLog::to_jsonl() const {
    std::string out;
    for (const auto& e : events_) {
        out += e.dump();
        out += '\n';
    }
    return out;
}

void AuditLog::on_emit(std::function<void(const nlohmann::json&)> observer) {
    observers_.push_back(std::move(observer));
}

}  // namespace nbac
