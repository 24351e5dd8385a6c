#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nbac/policy.hpp"

// Parsers and serializers for the deployment-manifest and operator-rule
// grammars: an XACML-3.0 subset (AnyOf/AllOf/Match/AttributeValue/
// AttributeDesignator, MatchId "string-equal", Category resource|action) and
// an equivalent canonical JSON form used by scenario files.

namespace nbac::policy {

struct ManifestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Accepts either grammar; documents starting with '<' are parsed as XML.
DeploymentManifest parse_manifest(std::string_view doc);
DeploymentManifest manifest_from_json(const nlohmann::json& j);

std::string serialize_manifest_xml(const DeploymentManifest& dm);
nlohmann::json manifest_to_json(const DeploymentManifest& dm);

// Rule documents use the same grammar with resource-attribute designators.
std::vector<ResourceAccessRule> parse_rules(std::string_view doc);
std::vector<ResourceAccessRule> rules_from_json(const nlohmann::json& j);

std::string serialize_rules_xml(const std::vector<ResourceAccessRule>& rules);

}  // namespace nbac::policy
