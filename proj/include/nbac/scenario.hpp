#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nbac/pipeline.hpp"

// Scenario runner: a scenario file declares the topology, the applications
// (manifest, model, rules) and an ordered event list (enroll, request, fault,
// terminate, expect). Runs are bit-reproducible for a fixed seed.

namespace nbac::harness {

struct ScenarioError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ScenarioReport {
    std::string name;
    bool passed = true;
    std::vector<std::string> failures;
    unsigned events = 0;
    unsigned checks = 0;
    std::string audit_jsonl;
};

// `base_dir` resolves relative manifest/rule/topology paths.
ScenarioReport run_scenario(const nlohmann::json& doc, const std::string& base_dir,
                            std::optional<std::uint64_t> seed_override = std::nullopt);

ScenarioReport run_scenario_file(const std::string& path,
                                 std::optional<std::uint64_t> seed_override = std::nullopt);

// Shared by the scenario runner and tests.
ctrl::Intent intent_from_json(const nlohmann::json& j);
Query query_from_json(const nlohmann::json& j);

}  // namespace nbac::harness
