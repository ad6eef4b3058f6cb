#include "ctirag/graph/ontology.hpp"

#include <algorithm>
#include <regex>
#include <sstream>
#include <stdexcept>

#include "ctirag/common/text.hpp"

namespace ctirag::graph {

namespace {

constexpr std::string_view kIsoAlpha2 =
    "AD AE AF AG AI AL AM AO AQ AR AS AT AU AW AX AZ BA BB BD BE BF BG BH BI BJ BL BM BN BO BQ "
    "BR BS BT BV BW BY BZ CA CC CD CF CG CH CI CK CL CM CN CO CR CU CV CW CX CY CZ DE DJ DK DM "
    "DO DZ EC EE EG EH ER ES ET FI FJ FK FM FO FR GA GB GD GE GF GG GH GI GL GM GN GP GQ GR GS "
    "GT GU GW GY HK HM HN HR HT HU ID IE IL IM IN IO IQ IR IS IT JE JM JO JP KE KG KH KI KM KN "
    "KP KR KW KY KZ LA LB LC LI LK LR LS LT LU LV LY MA MC MD ME MF MG MH MK ML MM MN MO MP MQ "
    "MR MS MT MU MV MW MX MY MZ NA NC NE NF NG NI NL NO NP NR NU NZ OM PA PE PF PG PH PK PL PM "
    "PN PR PS PT PW PY QA RE RO RS RU RW SA SB SC SD SE SG SH SI SJ SK SL SM SN SO SR SS ST SV "
    "SX SY SZ TC TD TF TG TH TJ TK TL TM TN TO TR TT TV TW TZ UA UG UM US UY UZ VA VC VE VG VI "
    "VN VU WF WS YE YT ZA ZM ZW";

bool matches(const Value& v, const std::regex& re) {
    if (v.is_string()) return std::regex_match(v.as_string(), re);
    if (v.is_int()) return std::regex_match(std::to_string(v.as_int()), re);
    return false;
}

FormatCheck regex_check(const std::string& pattern) {
    auto re = std::make_shared<std::regex>(pattern, std::regex::icase);
    return [re](const Value& v) { return matches(v, *re); };
}

FormatCheck date_check() { return regex_check(R"(\d{4}(-\d{2}(-\d{2})?)?)"); }

FormatCheck iso_check() {
    return [](const Value& v) { return v.is_string() && is_iso3166_alpha2(v.as_string()); };
}

FormatCheck page_check() {
    return [](const Value& v) {
        if (v.is_int()) return v.as_int() >= 1;
        return v.is_string() && std::regex_match(v.as_string(), std::regex(R"([1-9]\d*)"));
    };
}

Ontology build_cti() {
    std::vector<std::string> entities = {
        "ThreatActor", "Malware", "Tool",      "Victim",   "C2_Infrastructure", "Campaign",
        "Incident",    "Date",    "Sector",    "Region",   "Country",           "Technique",
        "CVE",         "Motivation", "Mitigation", "Capability", "Source"};
    std::vector<std::string> relationships = {
        "attacked",     "uses",         "exploits",       "abuses",        "targets",
        "includes",     "occurred_on",  "has_alias",      "attributed_to", "involved_malware",
        "involved_tool", "used_technique", "occurred_in", "targets_sector", "located_in",
        "motivated_by", "exploited_in", "mitigates",      "leverages",     "supported_by"};

    using Rule = Ontology::PropertyRule;
    auto common = [] {
        return std::vector<Rule>{{"name", {}}, {"summary", {}}, {"aliases", {}}, {"source_id", {}}};
    };
    std::map<std::string, std::vector<Rule>> rules;
    for (const auto& e : entities) rules[e] = common();
    auto add = [&](const std::string& label, Rule rule) { rules[label].push_back(std::move(rule)); };

    add("ThreatActor", {"first_seen", date_check()});
    add("Malware", {"type", {}});
    add("Malware", {"first_seen", date_check()});
    add("Tool", {"type", {}});
    add("Victim", {"type", {}});
    add("C2_Infrastructure", {"type", {}});
    add("C2_Infrastructure", {"value", {}});
    add("Campaign", {"start_date", date_check()});
    add("Campaign", {"end_date", date_check()});
    add("Incident", {"date", date_check()});
    add("Date", {"value", date_check()});
    add("Country", {"code", iso_check()});
    add("Technique", {"technique_id", regex_check(R"(T\d{4}(\.\d{3})?)")});
    add("Technique", {"tactic", {}});
    add("CVE", {"product", {}});
    add("CVE", {"published", date_check()});
    add("Source", {"url", {}});
    add("Source", {"publisher", {}});
    add("Source", {"published", date_check()});

    std::vector<Rule> edge_rules = {
        {"date", date_check()}, {"evidence", {}}, {"source_id", {}}, {"page", page_check()}};

    return Ontology(std::move(entities), std::move(relationships), std::move(rules),
                    std::move(edge_rules));
}

}  // namespace

bool is_iso3166_alpha2(std::string_view code) {
    if (code.size() != 2) return false;
    for (char c : code) {
        if (c < 'A' || c > 'Z') return false;
    }
    for (std::size_t i = 0; i + 1 < kIsoAlpha2.size(); i += 3) {
        if (kIsoAlpha2.substr(i, 2) == code) return true;
    }
    return false;
}

const Ontology& Ontology::cti() {
    static const Ontology instance = build_cti();
    return instance;
}

Ontology::Ontology(std::vector<std::string> entity_types,
                   std::vector<std::string> relationship_types,
                   std::map<std::string, std::vector<PropertyRule>> node_rules,
                   std::vector<PropertyRule> edge_rules)
    : edge_rules_(std::move(edge_rules)) {
    for (auto& e : entity_types) {
        if (!entity_by_lower_.emplace(text::to_lower(e), e).second)
            throw std::invalid_argument("duplicate entity type (case-insensitive): " + e);
        entity_types_.insert(e);
    }
    for (auto& r : relationship_types) {
        if (!relationship_by_lower_.emplace(text::to_lower(r), r).second)
            throw std::invalid_argument("duplicate relationship type (case-insensitive): " + r);
        relationship_types_.insert(r);
    }
    for (auto& [label, rules] : node_rules) {
        if (!entity_types_.contains(label))
            throw std::invalid_argument("property rules for unknown label " + label);
        node_rules_.emplace(label, std::move(rules));
    }
}

bool Ontology::is_entity_type(std::string_view label) const {
    return entity_types_.contains(std::string(label));
}

bool Ontology::is_relationship_type(std::string_view type) const {
    return relationship_types_.contains(std::string(type));
}

std::optional<std::string> Ontology::canonical_entity_type(std::string_view label) const {
    auto it = entity_by_lower_.find(text::to_lower(label));
    if (it == entity_by_lower_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::string> Ontology::canonical_relationship_type(std::string_view type) const {
    auto it = relationship_by_lower_.find(text::to_lower(type));
    if (it == relationship_by_lower_.end()) return std::nullopt;
    return it->second;
}

bool Ontology::node_property_allowed(std::string_view label, std::string_view property) const {
    auto it = node_rules_.find(label);
    if (it == node_rules_.end()) return false;
    return std::any_of(it->second.begin(), it->second.end(),
                       [&](const PropertyRule& r) { return r.name == property; });
}

bool Ontology::any_node_property_allowed(std::string_view property) const {
    for (const auto& [label, rules] : node_rules_) {
        if (node_property_allowed(label, property)) return true;
    }
    return false;
}

bool Ontology::edge_property_allowed(std::string_view property) const {
    return std::any_of(edge_rules_.begin(), edge_rules_.end(),
                       [&](const PropertyRule& r) { return r.name == property; });
}

std::vector<std::string> Ontology::node_properties(std::string_view label) const {
    std::vector<std::string> out;
    if (auto it = node_rules_.find(label); it != node_rules_.end()) {
        for (const auto& r : it->second) out.push_back(r.name);
    }
    return out;
}

std::vector<std::string> Ontology::edge_properties() const {
    std::vector<std::string> out;
    for (const auto& r : edge_rules_) out.push_back(r.name);
    return out;
}

const FormatCheck* Ontology::node_format(std::string_view label, std::string_view property) const {
    auto it = node_rules_.find(label);
    if (it == node_rules_.end()) return nullptr;
    for (const auto& r : it->second) {
        if (r.name == property && r.format) return &r.format;
    }
    return nullptr;
}

const FormatCheck* Ontology::edge_format(std::string_view property) const {
    for (const auto& r : edge_rules_) {
        if (r.name == property && r.format) return &r.format;
    }
    return nullptr;
}

std::string Ontology::describe() const {
    std::ostringstream os;
    os << "Node labels and properties:\n";
    for (const auto& label : entity_types_) {
        os << "  (:" << label << " {";
        bool first = true;
        for (const auto& p : node_properties(label)) {
            os << (first ? "" : ", ") << p;
            first = false;
        }
        os << "})\n";
    }
    os << "Relationship types: ";
    bool first = true;
    for (const auto& r : relationship_types_) {
        os << (first ? "" : ", ") << r;
        first = false;
    }
    os << "\nRelationship properties: ";
    first = true;
    for (const auto& p : edge_properties()) {
        os << (first ? "" : ", ") << p;
        first = false;
    }
    os << "\n";
    return os.str();
}

}  // namespace ctirag::graph
