#include "ctirag/cypher/validator.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>

#include "ctirag/common/text.hpp"
#include "ctirag/cypher/parser.hpp"

namespace ctirag::cypher {

namespace {

const std::set<std::string> kScalarFunctions = {"tolower", "toupper", "trim",   "tostring",
                                                "size",    "type",    "labels", "coalesce",
                                                "tointeger", "tofloat"};

std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

// Case-insensitive match first, then the closest name within a third of the length.
std::optional<std::string> nearest(const std::string& name, const std::set<std::string>& known,
                                   const std::optional<std::string>& exact) {
    if (exact) return exact;
    const std::string lower = text::to_lower(name);
    std::optional<std::string> best;
    std::size_t best_d = std::max<std::size_t>(2, lower.size() / 3) + 1;
    for (const auto& k : known) {
        const std::size_t d = edit_distance(lower, text::to_lower(k));
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    return best;
}

struct VarInfo {
    enum class Kind { Node, Rel, RelList, Alias } kind = Kind::Node;
    std::optional<std::string> label;
};

class Checker {
public:
    Checker(const graph::Ontology& onto, Mode mode, ValidationReport& report)
        : onto_(onto), mode_(mode), r_(report) {}

    void run(const CypherAst& ast) {
        // Label information may appear on any occurrence of a variable.
        for (const auto& c : ast.clauses) {
            for (const auto& p : c.patterns) {
                for (const auto& n : p.nodes) {
                    if (!n.var.empty() && n.label && !labels_.contains(n.var)) labels_[n.var] = *n.label;
                }
            }
        }
        for (const auto& c : ast.clauses) clause(c);
    }

private:
    void syntax(std::string kind, std::string msg, std::string span) {
        r_.syntactic_ok = false;
        r_.violations.push_back({std::move(kind), std::move(msg), std::move(span)});
    }
    void schema(std::string kind, std::string msg, std::string span) {
        r_.schema_ok = false;
        r_.violations.push_back({std::move(kind), std::move(msg), std::move(span)});
    }

    void clause(const Clause& c) {
        if (is_write_clause(c.kind) && mode_ == Mode::Read) {
            r_.readonly_ok = false;
            r_.violations.push_back({"write_clause",
                                     std::string(to_string(c.kind)) + " is not allowed in a read-only query",
                                     to_string(c.kind)});
        }
        switch (c.kind) {
            case ClauseKind::Match:
            case ClauseKind::OptionalMatch:
            case ClauseKind::Merge:
            case ClauseKind::Create:
                for (const auto& p : c.patterns) pattern(p, c.kind);
                if (c.where) {
                    if (contains_aggregate(*c.where))
                        syntax("aggregate_in_where", "aggregate functions are not allowed in WHERE",
                               render(*c.where));
                    expr(*c.where);
                }
                for (const auto& s : c.sets) set_item(s);
                break;
            case ClauseKind::Set:
                for (const auto& s : c.sets) set_item(s);
                break;
            case ClauseKind::Return:
                return_clause(c);
                break;
        }
    }

    void pattern(const PathPattern& p, ClauseKind kind) {
        const bool writing = kind == ClauseKind::Merge || kind == ClauseKind::Create;
        for (const auto& n : p.nodes) {
            if (n.label && !onto_.is_entity_type(*n.label)) {
                auto hint = nearest(*n.label, onto_.entity_types(), onto_.canonical_entity_type(*n.label));
                schema("unknown_label",
                       "label " + *n.label + " is not in the ontology" +
                           (hint ? " (did you mean " + *hint + "?)" : std::string()),
                       render(PathPattern{{n}, {}}));
            }
            const bool bound = !n.var.empty() && vars_.contains(n.var);
            if (writing && !bound && !n.label)
                syntax("unlabeled_write", "nodes created by MERGE/CREATE need a label",
                       render(PathPattern{{n}, {}}));
            for (const auto& [key, value] : n.props) {
                expr(value);
                node_property(n.label ? n.label : label_of(n.var), key, render(PathPattern{{n}, {}}));
            }
            if (!n.var.empty()) {
                auto it = vars_.find(n.var);
                if (it != vars_.end() && it->second.kind != VarInfo::Kind::Node)
                    syntax("variable_kind", "variable " + n.var + " is already bound to a non-node value",
                           n.var);
                else
                    vars_[n.var] = VarInfo{VarInfo::Kind::Node, n.label ? n.label : label_of(n.var)};
            }
        }
        for (const auto& rel : p.rels) {
            for (const auto& t : rel.types) {
                if (!onto_.is_relationship_type(t)) {
                    auto hint = nearest(t, onto_.relationship_types(), onto_.canonical_relationship_type(t));
                    schema("unknown_relationship",
                           "relationship type " + t + " is not in the ontology" +
                               (hint ? " (did you mean " + *hint + "?)" : std::string()),
                           t);
                }
            }
            if (writing && rel.types.size() != 1)
                syntax("untyped_write", "relationships created by MERGE/CREATE need exactly one type",
                       render(p));
            if (rel.var_length) {
                if (writing)
                    syntax("var_length_write", "variable-length relationships cannot be written", render(p));
                if (!rel.max_hops || *rel.max_hops > kMaxVarLengthHops || rel.min_hops < 0 ||
                    rel.min_hops > *rel.max_hops)
                    syntax("var_length_bound",
                           "variable-length bounds must satisfy 0 <= min <= max <= " +
                               std::to_string(kMaxVarLengthHops),
                           render(p));
            }
            for (const auto& [key, value] : rel.props) {
                expr(value);
                if (!onto_.edge_property_allowed(key))
                    schema("unknown_property", "relationship property " + key + " is not in the ontology",
                           key);
            }
            if (!rel.var.empty())
                vars_[rel.var] = VarInfo{rel.var_length ? VarInfo::Kind::RelList : VarInfo::Kind::Rel, {}};
        }
    }

    std::optional<std::string> label_of(const std::string& var) const {
        if (var.empty()) return std::nullopt;
        auto it = labels_.find(var);
        if (it == labels_.end()) return std::nullopt;
        return it->second;
    }

    void node_property(const std::optional<std::string>& label, const std::string& key,
                       const std::string& span) {
        if (label && onto_.is_entity_type(*label)) {
            if (!onto_.node_property_allowed(*label, key))
                schema("unknown_property", "property " + key + " is not defined for " + *label, span);
        } else if (!label) {
            if (!onto_.any_node_property_allowed(key))
                schema("unknown_property", "property " + key + " is not defined for any label", span);
        }
    }

    void set_item(const SetItem& s) {
        auto it = vars_.find(s.var);
        if (it == vars_.end()) {
            syntax("unbound_variable", "variable " + s.var + " is not defined", s.var);
        } else if (it->second.kind == VarInfo::Kind::Rel) {
            if (!onto_.edge_property_allowed(s.key))
                schema("unknown_property", "relationship property " + s.key + " is not in the ontology",
                       s.var + "." + s.key);
        } else if (it->second.kind == VarInfo::Kind::Node) {
            node_property(it->second.label, s.key, s.var + "." + s.key);
        } else {
            syntax("variable_kind", "cannot SET a property on " + s.var, s.var);
        }
        expr(s.value);
    }

    void return_clause(const Clause& c) {
        std::set<std::string> aliases;
        for (const auto& item : c.items) {
            expr(item.expr);
            if (!item.alias) {
                syntax("missing_alias", "RETURN item " + render(item.expr) + " needs an AS alias",
                       render(item.expr));
            } else if (!aliases.insert(*item.alias).second) {
                syntax("duplicate_alias", "alias " + *item.alias + " is used twice", *item.alias);
            }
        }
        for (const auto& a : aliases) {
            if (!vars_.contains(a)) vars_[a] = VarInfo{VarInfo::Kind::Alias, {}};
        }
        for (const auto& s : c.order_by) expr(s.expr);
        if (c.skip && *c.skip < 0) syntax("negative_skip", "SKIP must be non-negative", "SKIP");
        if (c.limit && *c.limit < 0) syntax("negative_limit", "LIMIT must be non-negative", "LIMIT");
    }

    void expr(const Expr& e, bool in_aggregate = false) {
        using K = Expr::Kind;
        switch (e.kind) {
            case K::Variable:
                if (!vars_.contains(e.name))
                    syntax("unbound_variable", "variable " + e.name + " is not defined", e.name);
                return;
            case K::Property: {
                expr(e.args[0], in_aggregate);
                if (e.args[0].kind != K::Variable) return;
                auto it = vars_.find(e.args[0].name);
                if (it == vars_.end()) return;
                if (it->second.kind == VarInfo::Kind::Rel) {
                    if (!onto_.edge_property_allowed(e.name))
                        schema("unknown_property", "relationship property " + e.name + " is not in the ontology",
                               render(e));
                } else if (it->second.kind == VarInfo::Kind::Node) {
                    node_property(it->second.label, e.name, render(e));
                }
                return;
            }
            case K::Call: {
                const std::string fn = text::to_lower(e.name);
                const bool agg = is_aggregate_function(fn);
                if (agg && in_aggregate)
                    syntax("nested_aggregate", "aggregate functions cannot be nested", render(e));
                if (!agg && !kScalarFunctions.contains(fn))
                    syntax("unknown_function", "function " + e.name + " is not supported", render(e));
                if (agg && e.args.size() != 1)
                    syntax("arity", e.name + " takes exactly one argument", render(e));
                for (const auto& a : e.args) expr(a, in_aggregate || agg);
                return;
            }
            default:
                for (const auto& a : e.args) expr(a, in_aggregate);
        }
    }

    const graph::Ontology& onto_;
    Mode mode_;
    ValidationReport& r_;
    std::map<std::string, VarInfo> vars_;
    std::map<std::string, std::string> labels_;
};

}  // namespace

std::string ValidationReport::summary() const {
    std::string out;
    for (const auto& v : violations) {
        out += v.kind + ": " + v.message + "\n";
    }
    return out;
}

ValidationReport validate(const CypherAst& ast, const graph::Ontology& ontology, Mode mode) {
    ValidationReport report;
    Checker(ontology, mode, report).run(ast);
    return report;
}

ValidationReport validate_text(std::string_view text, const graph::Ontology& ontology, Mode mode) {
    try {
        return validate(parse(text), ontology, mode);
    } catch (const SyntaxError& e) {
        ValidationReport report;
        report.syntactic_ok = false;
        std::string found = e.found();
        report.violations.push_back({"syntax", e.what(), found});
        return report;
    }
}

nlohmann::json to_json(const ValidationReport& report) {
    nlohmann::json v = nlohmann::json::array();
    for (const auto& x : report.violations)
        v.push_back({{"kind", x.kind}, {"message", x.message}, {"span", x.span}});
    return {{"syntactic_ok", report.syntactic_ok},
            {"readonly_ok", report.readonly_ok},
            {"schema_ok", report.schema_ok},
            {"violations", v}};
}

}  // namespace ctirag::cypher
