#include "nbac/manifest_io.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "nbac/xml.hpp"

namespace nbac::policy {

namespace {

[[noreturn]] void fail_at(const xml::Element& el, const std::string& what) {
    throw ManifestError(what + " at line " + std::to_string(el.line) + ", column " +
                        std::to_string(el.column));
}

// Resource ids use hyphenated form; internal whitespace runs collapse to a
// single hyphen ("dataplane topology" -> "dataplane-topology").
std::string normalize_resource_id(std::string_view raw) {
    std::string out;
    bool in_gap = false;
    for (char c : raw) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            in_gap = !out.empty();
            continue;
        }
        if (in_gap) {
            out.push_back('-');
            in_gap = false;
        }
        out.push_back(c);
    }
    return out;
}

struct MatchData {
    std::string attribute_id;
    std::string category;
    std::vector<std::string> values;
    const xml::Element* element = nullptr;
};

MatchData read_match(const xml::Element& match) {
    const std::string* match_id = match.attribute("MatchId");
    if (match_id == nullptr || *match_id != "string-equal")
        fail_at(match, "Match requires MatchId=\"string-equal\"");

    MatchData data;
    data.element = &match;
    for (const auto& child : match.children) {
        if (child.name == "AttributeValue") {
            if (child.text.empty()) fail_at(child, "empty AttributeValue");
            data.values.push_back(child.text);
        } else if (child.name == "AttributeDesignator") {
            if (!data.attribute_id.empty()) fail_at(child, "duplicate AttributeDesignator");
            const std::string* id = child.attribute("AttributeId");
            const std::string* category = child.attribute("Category");
            if (id == nullptr || category == nullptr)
                fail_at(child, "AttributeDesignator requires AttributeId and Category");
            data.attribute_id = *id;
            data.category = *category;
        } else {
            fail_at(child, "unknown element '" + child.name + "' in Match");
        }
    }
    if (data.values.empty()) fail_at(match, "Match without AttributeValue");
    if (data.attribute_id.empty()) fail_at(match, "Match without AttributeDesignator");
    if (data.category != "resource" && data.category != "action")
        fail_at(match, "unknown Category '" + data.category + "'");
    return data;
}

std::vector<MatchData> read_all_of(const xml::Element& all_of) {
    std::vector<MatchData> matches;
    for (const auto& child : all_of.children) {
        if (child.name != "Match") fail_at(child, "unknown element '" + child.name + "' in AllOf");
        matches.push_back(read_match(child));
    }
    if (matches.empty()) fail_at(all_of, "empty AllOf");
    return matches;
}

bool is_action_any_of(const xml::Element& any_of) {
    for (const auto& all_of : any_of.children)
        for (const auto& match : all_of.children)
            for (const auto& child : match.children)
                if (child.name == "AttributeDesignator") {
                    const std::string* category = child.attribute("Category");
                    return category != nullptr && *category == "action";
                }
    return false;
}

ActionSet read_action_any_of(const xml::Element& any_of) {
    ActionSet actions;
    for (const auto& all_of : any_of.children) {
        if (all_of.name != "AllOf") fail_at(all_of, "unknown element '" + all_of.name + "' in AnyOf");
        auto matches = read_all_of(all_of);
        for (const auto& match : matches) {
            if (match.category != "action" || match.attribute_id != "action-id")
                fail_at(*match.element, "expected action-id Match in action AnyOf");
            for (const auto& value : match.values) {
                auto action = action_from_name(value);
                if (!action) fail_at(*match.element, "unknown action '" + value + "'");
                actions.insert(*action);
            }
        }
    }
    return actions;
}

void check_top_level(const xml::Element& el) {
    if (el.name != "AnyOf") fail_at(el, "unknown top-level element '" + el.name + "'");
}

}  // namespace

DeploymentManifest parse_manifest(std::string_view doc) {
    auto first = doc.find_first_not_of(" \t\r\n");
    if (first != std::string_view::npos && doc[first] != '<')
        return manifest_from_json(nlohmann::json::parse(doc));

    auto roots = xml::parse_fragment(doc);
    DeploymentManifest dm;
    std::set<ResourceId> seen;

    for (std::size_t i = 0; i < roots.size(); ++i) {
        check_top_level(roots[i]);
        if (is_action_any_of(roots[i]))
            fail_at(roots[i], "action AnyOf without a preceding resource AnyOf");

        // Resource AnyOf: one resource-id Match per AllOf.
        std::vector<ResourceId> resources;
        for (const auto& all_of : roots[i].children) {
            if (all_of.name != "AllOf")
                fail_at(all_of, "unknown element '" + all_of.name + "' in AnyOf");
            auto matches = read_all_of(all_of);
            if (matches.size() != 1 || matches[0].category != "resource" ||
                matches[0].attribute_id != "resource-id")
                fail_at(all_of, "manifest AllOf must contain exactly one resource-id Match");
            if (matches[0].values.size() != 1)
                fail_at(*matches[0].element, "manifest resource Match must carry one value");
            resources.push_back(normalize_resource_id(matches[0].values[0]));
        }

        if (i + 1 >= roots.size() || !is_action_any_of(roots[i + 1]))
            fail_at(roots[i], "resource AnyOf without a following action AnyOf");
        check_top_level(roots[i + 1]);
        ActionSet actions = read_action_any_of(roots[i + 1]);
        if (actions.empty()) fail_at(roots[i + 1], "empty action set");
        ++i;

        for (auto& resource : resources) {
            if (resource.empty()) fail_at(roots[i], "empty resource id");
            if (!seen.insert(resource).second)
                throw ManifestError("duplicate resource '" + resource + "' in manifest");
            dm.entries.push_back(ManifestEntry{std::move(resource), actions});
        }
    }
    return dm;
}

DeploymentManifest manifest_from_json(const nlohmann::json& j) {
    DeploymentManifest dm;
    if (j.contains("app_id")) dm.app_id = j.at("app_id").get<std::string>();
    std::set<ResourceId> seen;
    for (const auto& entry : j.at("entries")) {
        ManifestEntry e;
        e.resource = normalize_resource_id(entry.at("resource").get<std::string>());
        if (e.resource.empty()) throw ManifestError("empty resource id");
        if (!seen.insert(e.resource).second)
            throw ManifestError("duplicate resource '" + e.resource + "' in manifest");
        for (const auto& a : entry.at("actions")) {
            auto action = action_from_name(a.get<std::string>());
            if (!action) throw ManifestError("unknown action '" + a.get<std::string>() + "'");
            e.actions.insert(*action);
        }
        if (e.actions.empty()) throw ManifestError("empty action set for '" + e.resource + "'");
        dm.entries.push_back(std::move(e));
    }
    return dm;
}

namespace {

void write_match(std::ostream& os, const std::string& indent, const std::string& attribute_id,
                 const std::string& category, const std::vector<std::string>& values) {
    os << indent << "<Match MatchId=\"string-equal\">\n";
    for (const auto& value : values)
        os << indent << "  <AttributeValue DataType=\"string\">" << xml::escape(value)
           << "</AttributeValue>\n";
    os << indent << "  <AttributeDesignator AttributeId=\"" << attribute_id << "\" Category=\""
       << category << "\"/>\n";
    os << indent << "</Match>\n";
}

void write_action_any_of(std::ostream& os, const ActionSet& actions) {
    os << "<AnyOf>\n";
    for (Action action : actions) {
        os << "  <AllOf>\n";
        write_match(os, "    ", "action-id", "action", {std::string(action_name(action))});
        os << "  </AllOf>\n";
    }
    os << "</AnyOf>\n";
}

}  // namespace

std::string serialize_manifest_xml(const DeploymentManifest& dm) {
    std::ostringstream os;
    for (const auto& entry : dm.entries) {
        os << "<AnyOf>\n  <AllOf>\n";
        write_match(os, "    ", "resource-id", "resource", {entry.resource});
        os << "  </AllOf>\n</AnyOf>\n";
        write_action_any_of(os, entry.actions);
    }
    return os.str();
}

nlohmann::json manifest_to_json(const DeploymentManifest& dm) {
    nlohmann::json j;
    if (!dm.app_id.empty()) j["app_id"] = dm.app_id;
    j["entries"] = nlohmann::json::array();
    for (const auto& entry : dm.entries) {
        nlohmann::json e;
        e["resource"] = entry.resource;
        e["actions"] = nlohmann::json::array();
        for (Action a : entry.actions) e["actions"].push_back(std::string(action_name(a)));
        j["entries"].push_back(std::move(e));
    }
    return j;
}

std::vector<ResourceAccessRule> parse_rules(std::string_view doc) {
    auto first = doc.find_first_not_of(" \t\r\n");
    if (first != std::string_view::npos && doc[first] != '<')
        return rules_from_json(nlohmann::json::parse(doc));

    auto roots = xml::parse_fragment(doc);
    std::vector<ResourceAccessRule> rules;

    for (std::size_t i = 0; i < roots.size(); ++i) {
        check_top_level(roots[i]);
        if (is_action_any_of(roots[i]))
            fail_at(roots[i], "action AnyOf without a preceding rule AnyOf");
        if (roots[i].children.size() != 1)
            fail_at(roots[i], "rule AnyOf must contain exactly one AllOf");
        const xml::Element& all_of = roots[i].children.front();
        if (all_of.name != "AllOf") fail_at(all_of, "unknown element '" + all_of.name + "' in AnyOf");

        ResourceAccessRule rule;
        rule.rule_id = "r" + std::to_string(rules.size() + 1);
        std::set<Attribute> seen_attributes;

        for (const auto& match : read_all_of(all_of)) {
            if (match.category != "resource")
                fail_at(*match.element, "rule AllOf accepts resource-category matches only");
            if (match.attribute_id == "resource-id") {
                if (match.values.size() != 1)
                    fail_at(*match.element, "resource-id Match must carry one value");
                std::string resource = normalize_resource_id(match.values[0]);
                // Listing-style fragments repeat the resource-id match;
                // identical repeats are tolerated.
                if (!rule.resource.empty() && rule.resource != resource)
                    fail_at(*match.element, "conflicting resource ids within one rule");
                rule.resource = std::move(resource);
                continue;
            }
            auto attribute = attribute_from_name(match.attribute_id);
            if (!attribute)
                fail_at(*match.element, "unknown attribute '" + match.attribute_id + "'");
            if (!seen_attributes.insert(*attribute).second)
                fail_at(*match.element,
                        "duplicate constraint on attribute '" + match.attribute_id + "'");
            AttributeConstraint constraint;
            constraint.attribute = *attribute;
            constraint.comparator =
                match.values.size() > 1 ? Comparator::one_of : Comparator::equals;
            constraint.values = match.values;
            rule.constraints.push_back(std::move(constraint));
        }
        if (rule.resource.empty()) fail_at(all_of, "rule without a resource-id Match");

        if (i + 1 < roots.size() && is_action_any_of(roots[i + 1])) {
            check_top_level(roots[i + 1]);
            rule.permitted_actions = read_action_any_of(roots[i + 1]);
            ++i;
        }
        rules.push_back(std::move(rule));
    }
    return rules;
}

std::vector<ResourceAccessRule> rules_from_json(const nlohmann::json& j) {
    std::vector<ResourceAccessRule> rules;
    for (const auto& r : j.at("rules")) {
        ResourceAccessRule rule;
        rule.rule_id = r.contains("rule_id") ? r.at("rule_id").get<std::string>()
                                             : "r" + std::to_string(rules.size() + 1);
        rule.resource = normalize_resource_id(r.at("resource").get<std::string>());
        if (rule.resource.empty()) throw ManifestError("empty resource id in rule");
        std::set<Attribute> seen_attributes;
        for (const auto& c : r.value("constraints", nlohmann::json::array())) {
            AttributeConstraint constraint;
            auto attribute = attribute_from_name(c.at("attribute").get<std::string>());
            if (!attribute)
                throw ManifestError("unknown attribute '" + c.at("attribute").get<std::string>() +
                                    "'");
            constraint.attribute = *attribute;
            if (!seen_attributes.insert(*attribute).second)
                throw ManifestError("duplicate constraint on attribute '" +
                                    std::string(attribute_name(*attribute)) + "'");
            if (c.contains("values")) {
                constraint.comparator = Comparator::one_of;
                for (const auto& v : c.at("values"))
                    constraint.values.push_back(v.get<std::string>());
            } else {
                constraint.comparator = Comparator::equals;
                constraint.values.push_back(c.at("value").get<std::string>());
            }
            if (constraint.values.empty()) throw ManifestError("constraint without values");
            rule.constraints.push_back(std::move(constraint));
        }
        for (const auto& a : r.value("actions", nlohmann::json::array())) {
            auto action = action_from_name(a.get<std::string>());
            if (!action) throw ManifestError("unknown action '" + a.get<std::string>() + "'");
            rule.permitted_actions.insert(*action);
        }
        rules.push_back(std::move(rule));
    }
    return rules;
}

std::string serialize_rules_xml(const std::vector<ResourceAccessRule>& rules) {
    std::ostringstream os;
    for (const auto& rule : rules) {
        os << "<AnyOf>\n  <AllOf>\n";
        write_match(os, "    ", "resource-id", "resource", {rule.resource});
        for (const auto& c : rule.constraints)
            write_match(os, "    ", std::string(attribute_name(c.attribute)), "resource", c.values);
        os << "  </AllOf>\n</AnyOf>\n";
        if (!rule.permitted_actions.empty()) write_action_any_of(os, rule.permitted_actions);
    }
    return os.str();
}

}  // namespace nbac::policy
