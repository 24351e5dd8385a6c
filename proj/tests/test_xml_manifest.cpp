#include <doctest.h>

#include <algorithm>
#include <random>

#include "nbac/manifest_io.hpp"
#include "nbac/xml.hpp"

using namespace nbac;

namespace {

// The deployment-manifest fragment shape produced by XACML-style tooling,
// including loose attribute spacing and a hyphen-free resource name.
constexpr std::string_view kManifestFragment = R"(<AnyOf>
 <AllOf>
  <Match MatchId="string-equal">
	<AttributeValue>dataplane topology</AttributeValue>
     <AttributeDesignator AttributeId = "resource-id" Category="resource"/>
  </Match>
 </AllOf>
</AnyOf>
<AnyOf>
<AllOf>
  <Match MatchId="string-equal">
    <AttributeValue>read</AttributeValue>
     <AttributeDesignator AttributeId = "action-id" Category="action"/>
  </Match>
</AllOf>
<AllOf>
  <Match MatchId="string-equal">
    <AttributeValue>modify</AttributeValue>
    <AttributeDesignator AttributeId = "action-id" Category="action"/>
  </Match>
</AllOf>
</AnyOf>
)";

// Operator rule fragment: jurisdiction pin plus an action whitelist, with a
// duplicated resource-id match and non-self-closing designators.
constexpr std::string_view kRuleFragment = R"(<AnyOf>
 <AllOf>
   <Match MatchId="string-equal">
	<AttributeValue> dataplane topology </AttributeValue>
      <AttributeDesignator AttributeId="resource-id" Category="resource"></AttributeDesignator>
   </Match>
   <Match MatchId="string-equal">
	<AttributeValue DataType="string">region-A</AttributeValue>
      <AttributeDesignator AttributeId="jurisdiction" Category="resource"></AttributeDesignator>
   </Match>
   <Match MatchId="string-equal">
	<AttributeValue DataType="string">dataplane topology</AttributeValue>
      <AttributeDesignator AttributeId="resource-id" Category="resource"></AttributeDesignator>
   </Match>
 </AllOf>
</AnyOf>
<AnyOf>
 <AllOf>
   <Match MatchId="string-equal">
     <AttributeValue DataType="string">read</AttributeValue>
                 <AttributeDesignator AttributeId="action-id" Category="action">
     </AttributeDesignator>
   </Match>
 </AllOf>
</AnyOf>
)";

bool manifests_equal(const policy::DeploymentManifest& a, const policy::DeploymentManifest& b) {
    if (a.entries.size() != b.entries.size()) return false;
    for (std::size_t i = 0; i < a.entries.size(); ++i)
        if (a.entries[i].resource != b.entries[i].resource ||
            a.entries[i].actions != b.entries[i].actions)
            return false;
    return true;
}

}  // namespace

TEST_CASE("manifest fragment parses to one topology entry with read+config_mod") {
    auto dm = policy::parse_manifest(kManifestFragment);
    REQUIRE(dm.entries.size() == 1);
    CHECK(dm.entries[0].resource == "dataplane-topology");
    CHECK(dm.entries[0].actions ==
          policy::ActionSet{policy::Action::read, policy::Action::config_mod});
}

TEST_CASE("empty document yields a manifest with zero entries") {
    CHECK(policy::parse_manifest("").entries.empty());
    CHECK(policy::parse_manifest("  \n\t ").entries.empty());
}

TEST_CASE("manifest parse errors carry positions and name the offence") {
    // Unterminated tag: a syntax error with a position.
    try {
        policy::parse_manifest("<AnyOf><AllOf>");
        FAIL("expected a parse error");
    } catch (const xml::ParseError& e) {
        CHECK(e.line >= 1);
        CHECK(e.column >= 1);
    }

    // Unknown action string.
    std::string bad_action(kManifestFragment);
    auto at = bad_action.find(">modify<");
    bad_action.replace(at, 8, ">fly<");
    CHECK_THROWS_WITH_AS(policy::parse_manifest(bad_action),
                         doctest::Contains("unknown action 'fly'"), policy::ManifestError);

    // Duplicate resource across entries.
    std::string doubled(kManifestFragment);
    doubled += kManifestFragment;
    CHECK_THROWS_WITH_AS(policy::parse_manifest(doubled), doctest::Contains("duplicate resource"),
                         policy::ManifestError);

    // Unknown elements are rejected.
    CHECK_THROWS_AS(policy::parse_manifest("<Policy></Policy>"), policy::ManifestError);

    // A lone action block has no resource to attach to.
    std::string floating = R"(<AnyOf><AllOf><Match MatchId="string-equal">
      <AttributeValue>read</AttributeValue>
      <AttributeDesignator AttributeId="action-id" Category="action"/>
    </Match></AllOf></AnyOf>)";
    CHECK_THROWS_AS(policy::parse_manifest(floating), policy::ManifestError);
}

TEST_CASE("rule fragment parses to a jurisdiction constraint with action narrowing") {
    auto rules = policy::parse_rules(kRuleFragment);
    REQUIRE(rules.size() == 1);
    CHECK(rules[0].resource == "dataplane-topology");
    REQUIRE(rules[0].constraints.size() == 1);
    CHECK(rules[0].constraints[0].attribute == policy::Attribute::jurisdiction);
    CHECK(rules[0].constraints[0].comparator == policy::Comparator::equals);
    CHECK(rules[0].constraints[0].values == std::vector<std::string>{"region-A"});
    CHECK(rules[0].permitted_actions == policy::ActionSet{policy::Action::read});
}

TEST_CASE("rules reject duplicate attributes and conflicting resource ids") {
    std::string dup = R"(<AnyOf><AllOf>
      <Match MatchId="string-equal"><AttributeValue>flow</AttributeValue>
        <AttributeDesignator AttributeId="resource-id" Category="resource"/></Match>
      <Match MatchId="string-equal"><AttributeValue>region-A</AttributeValue>
        <AttributeDesignator AttributeId="jurisdiction" Category="resource"/></Match>
      <Match MatchId="string-equal"><AttributeValue>region-B</AttributeValue>
        <AttributeDesignator AttributeId="jurisdiction" Category="resource"/></Match>
    </AllOf></AnyOf>)";
    CHECK_THROWS_WITH_AS(policy::parse_rules(dup), doctest::Contains("duplicate constraint"),
                         policy::ManifestError);

    std::string conflicting = R"(<AnyOf><AllOf>
      <Match MatchId="string-equal"><AttributeValue>flow</AttributeValue>
        <AttributeDesignator AttributeId="resource-id" Category="resource"/></Match>
      <Match MatchId="string-equal"><AttributeValue>stats</AttributeValue>
        <AttributeDesignator AttributeId="resource-id" Category="resource"/></Match>
    </AllOf></AnyOf>)";
    CHECK_THROWS_WITH_AS(policy::parse_rules(conflicting),
                         doctest::Contains("conflicting resource ids"), policy::ManifestError);
}

TEST_CASE("one_of arises from multiple attribute values in one match") {
    std::string doc = R"(<AnyOf><AllOf>
      <Match MatchId="string-equal"><AttributeValue>flow</AttributeValue>
        <AttributeDesignator AttributeId="resource-id" Category="resource"/></Match>
      <Match MatchId="string-equal">
        <AttributeValue>region-A</AttributeValue>
        <AttributeValue>region-B</AttributeValue>
        <AttributeDesignator AttributeId="jurisdiction" Category="resource"/></Match>
    </AllOf></AnyOf>)";
    auto rules = policy::parse_rules(doc);
    REQUIRE(rules.size() == 1);
    CHECK(rules[0].constraints[0].comparator == policy::Comparator::one_of);
    CHECK(rules[0].constraints[0].values == std::vector<std::string>{"region-A", "region-B"});
}

TEST_CASE("round-trip: parse(serialize(parse(doc))) == parse(doc) on random manifests") {
    std::mt19937_64 rng(99);
    const std::vector<std::string> pool{"dataplane-topology", "flow",   "stats",
                                        "device-config",      "events", "qos"};
    for (int trial = 0; trial < 100; ++trial) {
        policy::DeploymentManifest dm;
        auto resources = pool;
        std::shuffle(resources.begin(), resources.end(), rng);
        std::size_t count = 1 + rng() % 4;
        for (std::size_t i = 0; i < count; ++i) {
            policy::ManifestEntry entry;
            entry.resource = resources[i];
            for (int a = 0; a < 5; ++a)
                if (rng() % 2 == 0) entry.actions.insert(static_cast<policy::Action>(a));
            if (entry.actions.empty()) entry.actions.insert(policy::Action::read);
            dm.entries.push_back(std::move(entry));
        }

        auto xml_text = policy::serialize_manifest_xml(dm);
        auto reparsed = policy::parse_manifest(xml_text);
        CHECK(manifests_equal(dm, reparsed));

        auto second = policy::parse_manifest(policy::serialize_manifest_xml(reparsed));
        CHECK(manifests_equal(reparsed, second));
    }
}

TEST_CASE("rules round-trip through the xml serializer") {
    std::mt19937_64 rng(123);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<policy::ResourceAccessRule> rules;
        std::size_t count = 1 + rng() % 3;
        for (std::size_t i = 0; i < count; ++i) {
            policy::ResourceAccessRule rule;
            rule.rule_id = "r" + std::to_string(i + 1);
            rule.resource = rng() % 2 == 0 ? "flow" : "dataplane-topology";
            policy::AttributeConstraint c;
            c.attribute = static_cast<policy::Attribute>(rng() % 9);
            if (rng() % 3 == 0) {
                c.comparator = policy::Comparator::one_of;
                c.values = {"v1", "v2"};
            } else {
                c.comparator = policy::Comparator::equals;
                c.values = {"v" + std::to_string(rng() % 5)};
            }
            rule.constraints.push_back(std::move(c));
            if (rng() % 2 == 0) rule.permitted_actions.insert(policy::Action::read);
            rules.push_back(std::move(rule));
        }
        auto reparsed = policy::parse_rules(policy::serialize_rules_xml(rules));
        REQUIRE(reparsed.size() == rules.size());
        for (std::size_t i = 0; i < rules.size(); ++i) {
            CHECK(reparsed[i].resource == rules[i].resource);
            CHECK(reparsed[i].permitted_actions == rules[i].permitted_actions);
            REQUIRE(reparsed[i].constraints.size() == rules[i].constraints.size());
            CHECK(reparsed[i].constraints[0].attribute == rules[i].constraints[0].attribute);
            CHECK(reparsed[i].constraints[0].values == rules[i].constraints[0].values);
        }
    }
}

TEST_CASE("json forms parse and mirror the xml grammar") {
    auto dm = policy::parse_manifest(R"({"app_id": "ids", "entries": [
        {"resource": "dataplane-topology", "actions": ["read", "modify"]}]})");
    CHECK(dm.app_id == "ids");
    REQUIRE(dm.entries.size() == 1);
    CHECK(dm.entries[0].actions ==
          policy::ActionSet{policy::Action::read, policy::Action::config_mod});

    auto via_json = policy::manifest_from_json(policy::manifest_to_json(dm));
    CHECK(manifests_equal(dm, via_json));

    auto rules = policy::rules_from_json(nlohmann::json::parse(R"({"rules": [
        {"rule_id": "ops-1", "resource": "flow",
         "constraints": [{"attribute": "jurisdiction", "values": ["region-A", "region-B"]},
                          {"attribute": "modification_type", "value": "read"}],
         "actions": ["read"]}]})"));
    REQUIRE(rules.size() == 1);
    CHECK(rules[0].rule_id == "ops-1");
    CHECK(rules[0].constraints.size() == 2);
    CHECK(rules[0].constraints[0].comparator == policy::Comparator::one_of);
    CHECK(rules[0].constraints[1].attribute == policy::Attribute::modification_type);
    CHECK(rules[0].permitted_actions == policy::ActionSet{policy::Action::read});
}

TEST_CASE("xml reader handles comments, declarations and entities") {
    auto roots = xml::parse_fragment(
        "<?xml version=\"1.0\"?><!-- note --><A x=\"1 &amp; 2\">text &lt;here&gt;</A>");
    REQUIRE(roots.size() == 1);
    CHECK(roots[0].name == "A");
    CHECK(roots[0].attributes.at("x") == "1 & 2");
    CHECK(roots[0].text == "text <here>");

    CHECK_THROWS_AS(xml::parse_fragment("<A><B></A>"), xml::ParseError);
    CHECK_THROWS_AS(xml::parse_fragment("<A x=1></A>"), xml::ParseError);
}
