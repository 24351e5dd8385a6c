#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nbac/authcode.hpp"

// Mask algebra: deployment manifests, operator rules, access-mask
// computation, mapping classification, conflict detection, and the resource
// access models used for admission and delegation.

namespace nbac::policy {

using ResourceId = std::string;

// Closed action set; the numeric order is the canonical encoding order.
enum class Action : std::uint8_t {
    read = 0,
    stat = 1,
    config_read = 2,
    config_mod = 3,
    subscr = 4,
};

using ActionSet = std::set<Action>;

std::string_view action_name(Action a);
// Accepts the five canonical names plus the manifest alias "modify" -> config_mod.
std::optional<Action> action_from_name(std::string_view name);

// Closed resource-attribute set used by operator rules.
enum class Attribute : std::uint8_t {
    placement = 0,
    scope = 1,
    time = 2,
    jurisdiction = 3,
    physical_visibility = 4,
    exec_env_access = 5,
    modification_type = 6,
    concurrency = 7,
    delegation = 8,
};

std::string_view attribute_name(Attribute a);
std::optional<Attribute> attribute_from_name(std::string_view name);

// Attributes the monitor enforces in v1; the rest are carried, encoded and
// reported but not enforced.
bool attribute_enforced(Attribute a);

enum class Comparator : std::uint8_t { equals = 0, one_of = 1 };

struct AttributeConstraint {
    Attribute attribute = Attribute::placement;
    Comparator comparator = Comparator::equals;
    std::vector<std::string> values;  // exactly one for equals, >=1 for one_of

    bool matches(std::string_view value) const;

    bool operator==(const AttributeConstraint&) const = default;
};

// Operator-authored constraint on one resource. permitted_actions empty means
// the rule does not restrict actions.
struct ResourceAccessRule {
    std::string rule_id;
    ResourceId resource;
    std::vector<AttributeConstraint> constraints;  // at most one per attribute
    ActionSet permitted_actions;

    bool operator==(const ResourceAccessRule&) const = default;
};

struct ManifestEntry {
    ResourceId resource;
    ActionSet actions;
};

// Application-declared <resource, actions> tuples, in document order.
struct DeploymentManifest {
    std::string app_id;
    std::vector<ManifestEntry> entries;

    const ManifestEntry* entry_for(const ResourceId& r) const;
};

// Rules selected for one manifest, in operator-declared order.
struct OperatorPolicySet {
    std::vector<ResourceAccessRule> rules;

    std::vector<const ResourceAccessRule*> rules_for(const ResourceId& r) const;
};

enum class AccessModelKind : std::uint8_t {
    direct_explicit = 0,
    exclusive_longterm = 1,
    exclusive_dynamic = 2,
    shared_priority = 3,
    commons_uncontrolled = 4,
    commons_private = 5,
};

std::string_view access_model_name(AccessModelKind k);
std::optional<AccessModelKind> access_model_from_name(std::string_view name);

// Exclusive-class models admit only their holder (and, for delegable ones,
// its delegates); shared-class models arbitrate by priority.
bool exclusive_class(AccessModelKind k);

struct AccessModel {
    AccessModelKind variant = AccessModelKind::direct_explicit;
    int priority = 0;
    bool delegable = false;

    // delegable is true exactly for exclusive_dynamic and commons_private.
    static AccessModel make(AccessModelKind variant, int priority = 0);
};

struct MaskTuple {
    ResourceId resource;
    ActionSet actions;
    std::vector<ResourceAccessRule> rules;
};

// Immutable per-application enforcement unit: the manifest's resources, the
// permitted actions after operator narrowing, and the attached rules. The
// digest is a SHA-256 over the canonical encoding and never changes over the
// mask's lifetime.
class AccessMask {
public:
    AccessMask(std::string app_id, std::vector<MaskTuple> tuples, AccessModel model,
               std::optional<std::string> parent = std::nullopt);

    const std::string& app_id() const { return app_id_; }
    const std::vector<MaskTuple>& tuples() const { return tuples_; }
    const AccessModel& model() const { return model_; }
    const std::optional<std::string>& parent() const { return parent_; }
    const auth::Digest& digest() const { return digest_; }

    const MaskTuple* tuple_for(const ResourceId& r) const;

    auth::Bytes canonical_encoding() const;
    auth::Digest recompute_digest() const;

private:
    std::string app_id_;
    std::vector<MaskTuple> tuples_;
    AccessModel model_;
    std::optional<std::string> parent_;
    auth::Digest digest_;
};

struct ConflictPair {
    std::string app_a;
    std::string app_b;
    ResourceId resource;
    std::vector<std::string> clashes;  // rule ids / attribute names / "exclusivity"
};

struct ConflictReport {
    std::vector<ConflictPair> pairs;

    bool empty() const { return pairs.empty(); }
};

enum class MappingClass : std::uint8_t { surjective, bijective, injective, partial };

std::string_view mapping_class_name(MappingClass c);

enum class Admission : std::uint8_t { grant, deny, defer_to_priority };

std::string_view admission_name(Admission a);

struct UnknownApp : std::runtime_error {
    explicit UnknownApp(const std::string& app_id)
        : std::runtime_error("unknown app id '" + app_id + "'") {}
};

// Returns the manifest resources missing from the catalogue (empty = ok).
std::vector<ResourceId> validate_requested_resources(const DeploymentManifest& dm,
                                                     const std::set<ResourceId>& catalogue);

// Selects the rules whose resource appears in the manifest, preserving the
// operator-declared order.
OperatorPolicySet build_operator_policy_set(const std::vector<ResourceAccessRule>& all_rules,
                                            const DeploymentManifest& dm);

// Maps each rule to the manifest entry with the same resource id and builds
// the mask. Rule action whitelists narrow the manifest actions by
// intersection; entries without rules are carried unconstrained. A rule whose
// resource is absent from the manifest is a contract breach.
AccessMask compute_access_mask(const OperatorPolicySet& op_set, const DeploymentManifest& dm,
                               const AccessModel& model);

// Classification of the rule->entry mapping: bijective when it is one-to-one
// and onto, surjective when onto but some entry has several rules, injective
// when one-to-one but some entries are unmatched, partial when both overlap
// and uncovered entries occur.
MappingClass classify_mapping(const OperatorPolicySet& op_set, const DeploymentManifest& dm);

// Recursive clash check: shared resource -> model compatibility -> attribute
// footprint overlap. Masks related by a delegation parent chain never
// conflict. `installed` must be pairwise conflict-free.
ConflictReport detect_conflicts(const AccessMask& candidate,
                                const std::map<std::string, AccessMask>& installed);

// Admission of `incoming_app` to resource r given the installed dictionary.
// Throws UnknownApp when the app is not in the dictionary.
Admission admit_under_model(const std::map<std::string, AccessMask>& installed, const ResourceId& r,
                            const std::string& incoming_app);

// Derived mask for a delegate: the selected tuple subset, parent marker, and
// the parent's model. Throws on non-delegable models or index escape.
AccessMask derive_mask(const AccessMask& parent, const std::string& to_app,
                       const std::vector<std::size_t>& tuple_indices);

// Transitive closure of delegation edges reachable from `terminated`,
// deterministic (breadth-first, children in sorted order). The terminated app
// itself is not included.
std::vector<std::string> revocation_set(const std::multimap<std::string, std::string>& delegations,
                                        const std::string& terminated);

}  // namespace nbac::policy
