/// @file ontology.hpp
/// @brief The closed CTI ontology: 17 entity types, 20 relationship types and
/// per-label property rules.

#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ctirag/common/value.hpp"

namespace ctirag::graph {

/// Format constraint attached to a property. Returns true when compliant.
using FormatCheck = std::function<bool(const Value&)>;

class Ontology {
public:
    struct PropertyRule {
        std::string name;
        FormatCheck format;  // empty = any scalar
    };

    /// The 17-entity / 20-relationship ontology used throughout the harness.
    static const Ontology& cti();

    Ontology(std::vector<std::string> entity_types, std::vector<std::string> relationship_types,
             std::map<std::string, std::vector<PropertyRule>> node_rules,
             std::vector<PropertyRule> edge_rules);

    const std::set<std::string>& entity_types() const { return entity_types_; }
    const std::set<std::string>& relationship_types() const { return relationship_types_; }

    bool is_entity_type(std::string_view label) const;
    bool is_relationship_type(std::string_view type) const;

    /// Case-insensitive lookup returning the canonical spelling.
    std::optional<std::string> canonical_entity_type(std::string_view label) const;
    std::optional<std::string> canonical_relationship_type(std::string_view type) const;

    bool node_property_allowed(std::string_view label, std::string_view property) const;
    /// True when at least one entity type allows the property.
    bool any_node_property_allowed(std::string_view property) const;
    bool edge_property_allowed(std::string_view property) const;

    std::vector<std::string> node_properties(std::string_view label) const;
    std::vector<std::string> edge_properties() const;

    /// Format rule for (label, property); nullptr when unconstrained.
    const FormatCheck* node_format(std::string_view label, std::string_view property) const;
    const FormatCheck* edge_format(std::string_view property) const;

    /// Human-readable schema listing used in prompts.
    std::string describe() const;

private:
    std::set<std::string> entity_types_;
    std::set<std::string> relationship_types_;
    std::map<std::string, std::string> entity_by_lower_;
    std::map<std::string, std::string> relationship_by_lower_;
    std::map<std::string, std::vector<PropertyRule>, std::less<>> node_rules_;
    std::vector<PropertyRule> edge_rules_;
};

/// ISO 3166-1 alpha-2 officially assigned code check (exact uppercase).
bool is_iso3166_alpha2(std::string_view code);

}  // namespace ctirag::graph
