#include "nbac/policy.hpp"

#include <algorithm>
#include <deque>

namespace nbac::policy {

namespace {

constexpr std::string_view kActionNames[] = {"read", "stat", "config_read", "config_mod", "subscr"};

constexpr std::string_view kAttributeNames[] = {
    "placement",     "scope",           "time",
    "jurisdiction",  "physical-visibility", "exec-env-access",
    "modification-type", "concurrency", "delegation"};

constexpr std::string_view kModelNames[] = {"direct_explicit",  "exclusive_longterm",
                                            "exclusive_dynamic", "shared_priority",
                                            "commons_uncontrolled", "commons_private"};

}  // namespace

std::string_view action_name(Action a) { return kActionNames[static_cast<std::size_t>(a)]; }

std::optional<Action> action_from_name(std::string_view name) {
    for (std::size_t i = 0; i < std::size(kActionNames); ++i)
        if (name == kActionNames[i]) return static_cast<Action>(i);
    if (name == "modify") return Action::config_mod;
    return std::nullopt;
}

std::string_view attribute_name(Attribute a) { return kAttributeNames[static_cast<std::size_t>(a)]; }

std::optional<Attribute> attribute_from_name(std::string_view name) {
    for (std::size_t i = 0; i < std::size(kAttributeNames); ++i)
        if (name == kAttributeNames[i]) return static_cast<Attribute>(i);
    // Tolerate underscore spelling in the JSON form.
    std::string normalized(name);
    std::replace(normalized.begin(), normalized.end(), '_', '-');
    for (std::size_t i = 0; i < std::size(kAttributeNames); ++i)
        if (normalized == kAttributeNames[i]) return static_cast<Attribute>(i);
    return std::nullopt;
}

bool attribute_enforced(Attribute a) {
    return a == Attribute::jurisdiction || a == Attribute::placement ||
           a == Attribute::modification_type;
}

bool AttributeConstraint::matches(std::string_view value) const {
    return std::find(values.begin(), values.end(), value) != values.end();
}

std::string_view access_model_name(AccessModelKind k) {
    return kModelNames[static_cast<std::size_t>(k)];
}

std::optional<AccessModelKind> access_model_from_name(std::string_view name) {
    for (std::size_t i = 0; i < std::size(kModelNames); ++i)
        if (name == kModelNames[i]) return static_cast<AccessModelKind>(i);
    return std::nullopt;
}

bool exclusive_class(AccessModelKind k) {
    switch (k) {
        case AccessModelKind::direct_explicit:
        case AccessModelKind::exclusive_longterm:
        case AccessModelKind::exclusive_dynamic:
        case AccessModelKind::commons_private:
            return true;
        case AccessModelKind::shared_priority:
        case AccessModelKind::commons_uncontrolled:
            return false;
    }
    return true;  // fail closed on unknown enum values
}

AccessModel AccessModel::make(AccessModelKind variant, int priority) {
    AccessModel m;
    m.variant = variant;
    m.priority = priority;
    m.delegable = variant == AccessModelKind::exclusive_dynamic ||
                  variant == AccessModelKind::commons_private;
    return m;
}

const ManifestEntry* DeploymentManifest::entry_for(const ResourceId& r) const {
    for (const auto& e : entries)
        if (e.resource == r) return &e;
    return nullptr;
}

std::vector<const ResourceAccessRule*> OperatorPolicySet::rules_for(const ResourceId& r) const {
    std::vector<const ResourceAccessRule*> out;
    for (const auto& rule : rules)
        if (rule.resource == r) out.push_back(&rule);
    return out;
}

namespace {

auth::Nested encode_constraint(const AttributeConstraint& c) {
    std::vector<auth::Field> value_fields;
    auto values = c.values;
    std::sort(values.begin(), values.end());
    for (auto& v : values) value_fields.emplace_back(std::move(v));
    return auth::Nested{auth::canonical_encode(
        {auth::Field{static_cast<std::uint64_t>(c.attribute)},
         auth::Field{static_cast<std::uint64_t>(c.comparator)},
         auth::Field{auth::Nested{auth::canonical_encode(value_fields)}}})};
}

auth::U8Set encode_actions(const ActionSet& actions) {
    auth::U8Set set;
    for (Action a : actions) set.codes.push_back(static_cast<std::uint8_t>(a));
    return set;
}

auth::Nested encode_rule(const ResourceAccessRule& rule) {
    std::vector<auth::Field> constraint_fields;
    for (const auto& c : rule.constraints) constraint_fields.emplace_back(encode_constraint(c));
    return auth::Nested{auth::canonical_encode(
        {auth::Field{rule.rule_id}, auth::Field{rule.resource},
         auth::Field{encode_actions(rule.permitted_actions)},
         auth::Field{auth::Nested{auth::canonical_encode(constraint_fields)}}})};
}

}  // namespace

AccessMask::AccessMask(std::string app_id, std::vector<MaskTuple> tuples, AccessModel model,
                       std::optional<std::string> parent)
    : app_id_(std::move(app_id)),
      tuples_(std::move(tuples)),
      model_(model),
      parent_(std::move(parent)) {
    digest_ = recompute_digest();
}

const MaskTuple* AccessMask::tuple_for(const ResourceId& r) const {
    for (const auto& t : tuples_)
        if (t.resource == r) return &t;
    return nullptr;
}

auth::Bytes AccessMask::canonical_encoding() const {
    // Tuples are sorted by resource id for the canonical form; the in-memory
    // order stays the manifest order.
    std::vector<const MaskTuple*> sorted;
    sorted.reserve(tuples_.size());
    for (const auto& t : tuples_) sorted.push_back(&t);
    std::sort(sorted.begin(), sorted.end(),
              [](const MaskTuple* a, const MaskTuple* b) { return a->resource < b->resource; });

    std::vector<auth::Field> tuple_fields;
    for (const MaskTuple* t : sorted) {
        std::vector<auth::Field> rule_fields;
        for (const auto& rule : t->rules) rule_fields.emplace_back(encode_rule(rule));
        tuple_fields.emplace_back(auth::Nested{auth::canonical_encode(
            {auth::Field{t->resource}, auth::Field{encode_actions(t->actions)},
             auth::Field{auth::Nested{auth::canonical_encode(rule_fields)}}})});
    }

    return auth::canonical_encode(
        {auth::Field{app_id_}, auth::Field{static_cast<std::uint64_t>(model_.variant)},
         auth::Field{static_cast<std::uint64_t>(static_cast<std::int64_t>(model_.priority))},
         auth::Field{static_cast<std::uint64_t>(model_.delegable ? 1 : 0)},
         auth::Field{parent_.value_or(std::string{})},
         auth::Field{auth::Nested{auth::canonical_encode(tuple_fields)}}});
}

auth::Digest AccessMask::recompute_digest() const {
    auto encoding = canonical_encoding();
    return auth::sha256(encoding);
}

std::string_view mapping_class_name(MappingClass c) {
    switch (c) {
        case MappingClass::surjective: return "surjective";
        case MappingClass::bijective: return "bijective";
        case MappingClass::injective: return "injective";
        case MappingClass::partial: return "partial";
    }
    return "partial";
}

std::string_view admission_name(Admission a) {
    switch (a) {
        case Admission::grant: return "grant";
        case Admission::deny: return "deny";
        case Admission::defer_to_priority: return "defer_to_priority";
    }
    return "deny";
}

std::vector<ResourceId> validate_requested_resources(const DeploymentManifest& dm,
                                                     const std::set<ResourceId>& catalogue) {
    std::vector<ResourceId> missing;
    for (const auto& entry : dm.entries)
        if (!catalogue.contains(entry.resource)) missing.push_back(entry.resource);
    return missing;
}

OperatorPolicySet build_operator_policy_set(const std::vector<ResourceAccessRule>& all_rules,
                                            const DeploymentManifest& dm) {
    OperatorPolicySet op;
    for (const auto& rule : all_rules)
        if (dm.entry_for(rule.resource) != nullptr) op.rules.push_back(rule);
    return op;
}

AccessMask compute_access_mask(const OperatorPolicySet& op_set, const DeploymentManifest& dm,
                               const AccessModel& model) {
    for (const auto& rule : op_set.rules)
        if (dm.entry_for(rule.resource) == nullptr)
            throw std::logic_error("operator rule '" + rule.rule_id +
                                   "' references a resource absent from the manifest");

    std::vector<MaskTuple> tuples;
    tuples.reserve(dm.entries.size());
    for (const auto& entry : dm.entries) {
        MaskTuple tuple;
        tuple.resource = entry.resource;
        tuple.actions = entry.actions;
        for (const ResourceAccessRule* rule : op_set.rules_for(entry.resource)) {
            tuple.rules.push_back(*rule);
            if (!rule->permitted_actions.empty()) {
                ActionSet narrowed;
                std::set_intersection(tuple.actions.begin(), tuple.actions.end(),
                                      rule->permitted_actions.begin(),
                                      rule->permitted_actions.end(),
                                      std::inserter(narrowed, narrowed.begin()));
                tuple.actions = std::move(narrowed);
            }
        }
        tuples.push_back(std::move(tuple));
    }
    return AccessMask(dm.app_id, std::move(tuples), model);
}

MappingClass classify_mapping(const OperatorPolicySet& op_set, const DeploymentManifest& dm) {
    std::map<ResourceId, int> hits;
    for (const auto& entry : dm.entries) hits[entry.resource] = 0;
    for (const auto& rule : op_set.rules) {
        auto it = hits.find(rule.resource);
        if (it == hits.end())
            throw std::logic_error("operator rule '" + rule.rule_id +
                                   "' references a resource absent from the manifest");
        ++it->second;
    }
    bool onto = true;
    bool one_to_one = true;
    for (const auto& [resource, count] : hits) {
        if (count == 0) onto = false;
        if (count > 1) one_to_one = false;
    }
    if (onto && one_to_one) return MappingClass::bijective;
    if (onto) return MappingClass::surjective;
    if (one_to_one) return MappingClass::injective;
    return MappingClass::partial;
}

namespace {

// Allowed value set per attribute, merged across the tuple's rules. AND
// semantics: several constraints on one attribute intersect. An unconstrained
// attribute is absent from the map (universal set).
std::map<Attribute, std::set<std::string>> attribute_footprint(const MaskTuple& tuple) {
    std::map<Attribute, std::set<std::string>> footprint;
    for (const auto& rule : tuple.rules) {
        for (const auto& c : rule.constraints) {
            std::set<std::string> values(c.values.begin(), c.values.end());
            auto [it, inserted] = footprint.emplace(c.attribute, values);
            if (!inserted) {
                std::set<std::string> merged;
                std::set_intersection(it->second.begin(), it->second.end(), values.begin(),
                                      values.end(), std::inserter(merged, merged.begin()));
                it->second = std::move(merged);
            }
        }
    }
    return footprint;
}

// Exclusive-vs-exclusive clash: footprints overlap unless some attribute
// constrained on both sides has disjoint values.
bool footprints_overlap(const MaskTuple& a, const MaskTuple& b,
                        std::vector<std::string>& clashes) {
    auto fa = attribute_footprint(a);
    auto fb = attribute_footprint(b);
    for (const auto& [attr, va] : fa) {
        if (va.empty()) return false;  // contradictory own rules: empty footprint
        auto it = fb.find(attr);
        if (it == fb.end()) continue;
        std::set<std::string> common;
        std::set_intersection(va.begin(), va.end(), it->second.begin(), it->second.end(),
                              std::inserter(common, common.begin()));
        if (common.empty()) return false;
        clashes.push_back(std::string(attribute_name(attr)) + "=" + *common.begin());
    }
    for (const auto& [attr, vb] : fb)
        if (vb.empty()) return false;
    return true;
}

bool delegation_related(const AccessMask& a, const AccessMask& b,
                        const std::map<std::string, AccessMask>& installed) {
    // Masks in one delegation tree share the holder's grant: follow parent
    // chains to the root and compare. Chains are short (DAG depth).
    auto root_of = [&installed](const AccessMask& mask) {
        std::string root = mask.app_id();
        std::optional<std::string> cursor = mask.parent();
        while (cursor) {
            root = *cursor;
            auto it = installed.find(*cursor);
            if (it == installed.end()) break;
            cursor = it->second.parent();
        }
        return root;
    };
    if (!a.parent() && !b.parent()) return false;
    return root_of(a) == root_of(b);
}

}  // namespace

ConflictReport detect_conflicts(const AccessMask& candidate,
                                const std::map<std::string, AccessMask>& installed) {
    ConflictReport report;
    for (const auto& [app_id, mask] : installed) {
        if (app_id == candidate.app_id()) continue;
        if (delegation_related(candidate, mask, installed)) continue;
        for (const auto& tuple : candidate.tuples()) {
            const MaskTuple* other = mask.tuple_for(tuple.resource);
            if (other == nullptr) continue;

            bool cand_excl = exclusive_class(candidate.model().variant);
            bool inst_excl = exclusive_class(mask.model().variant);
            if (!cand_excl && !inst_excl) continue;  // shared/shared arbitrates at admission

            std::vector<std::string> clashes;
            if (cand_excl != inst_excl) {
                clashes.emplace_back("exclusivity");
            } else {
                if (!footprints_overlap(tuple, *other, clashes)) continue;
                clashes.emplace_back("exclusivity");
                for (const auto& rule : tuple.rules) clashes.push_back(rule.rule_id);
                for (const auto& rule : other->rules) clashes.push_back(rule.rule_id);
            }
            report.pairs.push_back(
                ConflictPair{candidate.app_id(), app_id, tuple.resource, std::move(clashes)});
        }
    }
    return report;
}

Admission admit_under_model(const std::map<std::string, AccessMask>& installed, const ResourceId& r,
                            const std::string& incoming_app) {
    auto self = installed.find(incoming_app);
    if (self == installed.end()) throw UnknownApp(incoming_app);

    const MaskTuple* own = self->second.tuple_for(r);
    if (own == nullptr) return Admission::deny;  // deny-by-default off-mask

    const AccessModel& model = self->second.model();
    if (exclusive_class(model.variant)) return Admission::grant;  // holder or delegate

    // Shared-class arbitration among the claimants of r.
    std::vector<const AccessMask*> claimants;
    for (const auto& [app_id, mask] : installed)
        if (mask.tuple_for(r) != nullptr) claimants.push_back(&mask);

    int top = model.priority;
    for (const AccessMask* m : claimants) top = std::max(top, m->model().priority);
    if (model.priority < top) return Admission::deny;

    std::vector<std::string> tied;
    for (const AccessMask* m : claimants)
        if (m->model().priority == top) tied.push_back(m->app_id());
    if (tied.size() == 1) return Admission::grant;

    if (model.variant == AccessModelKind::shared_priority)
        return Admission::defer_to_priority;  // negotiation hook, logged by callers

    // commons_uncontrolled: priority then lexicographic app id.
    return *std::min_element(tied.begin(), tied.end()) == incoming_app ? Admission::grant
                                                                       : Admission::deny;
}

AccessMask derive_mask(const AccessMask& parent, const std::string& to_app,
                       const std::vector<std::size_t>& tuple_indices) {
    if (!parent.model().delegable)
        throw std::invalid_argument("model '" +
                                    std::string(access_model_name(parent.model().variant)) +
                                    "' is not delegable");
    std::vector<MaskTuple> tuples;
    tuples.reserve(tuple_indices.size());
    for (std::size_t index : tuple_indices) {
        if (index >= parent.tuples().size())
            throw std::out_of_range("delegated tuple index " + std::to_string(index) +
                                    " escapes the parent mask");
        tuples.push_back(parent.tuples()[index]);
    }
    return AccessMask(to_app, std::move(tuples), parent.model(), parent.app_id());
}

std::vector<std::string> revocation_set(const std::multimap<std::string, std::string>& delegations,
                                        const std::string& terminated) {
    std::vector<std::string> revoked;
    std::set<std::string> seen{terminated};
    std::deque<std::string> frontier{terminated};
    while (!frontier.empty()) {
        std::string current = std::move(frontier.front());
        frontier.pop_front();
        auto [begin, end] = delegations.equal_range(current);
        std::vector<std::string> children;
        for (auto it = begin; it != end; ++it) children.push_back(it->second);
        std::sort(children.begin(), children.end());
        for (auto& child : children) {
            if (seen.insert(child).second) {
                revoked.push_back(child);
                frontier.push_back(child);
            }
        }
    }
    return revoked;
}

}  // namespace nbac::policy
