#include "ctirag/cypher/ast.hpp"

#include <cctype>
#include <sstream>

#include "ctirag/common/text.hpp"
#include "ctirag/cypher/parser.hpp"

namespace ctirag::cypher {

Expr Expr::lit(Value v) {
    Expr e;
    e.kind = Kind::Literal;
    e.literal = std::move(v);
    return e;
}

Expr Expr::var(std::string name) {
    Expr e;
    e.kind = Kind::Variable;
    e.name = std::move(name);
    return e;
}

Expr Expr::prop(std::string var, std::string key) {
    Expr e;
    e.kind = Kind::Property;
    e.name = std::move(key);
    e.args.push_back(Expr::var(std::move(var)));
    return e;
}

Expr Expr::call(std::string fn, std::vector<Expr> args, bool distinct) {
    Expr e;
    e.kind = Kind::Call;
    e.name = std::move(fn);
    e.args = std::move(args);
    e.distinct = distinct;
    return e;
}

Expr Expr::binary(Kind kind, Expr lhs, Expr rhs, std::string op) {
    Expr e;
    e.kind = kind;
    e.name = std::move(op);
    e.args.push_back(std::move(lhs));
    e.args.push_back(std::move(rhs));
    return e;
}

const char* to_string(ClauseKind kind) {
    switch (kind) {
        case ClauseKind::Match: return "MATCH";
        case ClauseKind::OptionalMatch: return "OPTIONAL MATCH";
        case ClauseKind::Merge: return "MERGE";
        case ClauseKind::Create: return "CREATE";
        case ClauseKind::Set: return "SET";
        case ClauseKind::Return: return "RETURN";
    }
    return "?";
}

bool is_write_clause(ClauseKind kind) {
    return kind == ClauseKind::Merge || kind == ClauseKind::Create || kind == ClauseKind::Set;
}

const Clause* CypherAst::return_clause() const {
    for (const auto& c : clauses) {
        if (c.kind == ClauseKind::Return) return &c;
    }
    return nullptr;
}

bool is_aggregate_function(const std::string& lowered_name) {
    return lowered_name == "count" || lowered_name == "collect" || lowered_name == "sum" ||
           lowered_name == "avg" || lowered_name == "min" || lowered_name == "max";
}

bool contains_aggregate(const Expr& e) {
    if (e.kind == Expr::Kind::CountStar) return true;
    if (e.kind == Expr::Kind::Call && is_aggregate_function(text::to_lower(e.name))) return true;
    for (const auto& a : e.args) {
        if (contains_aggregate(a)) return true;
    }
    return false;
}

namespace {

std::string ident(const std::string& s) {
    bool plain = !s.empty() && (std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_');
    for (char c : s) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') plain = false;
    }
    if (plain && !is_reserved_word(s)) return s;
    return "`" + s + "`";
}

std::string literal(const Value& v) {
    if (v.is_null()) return "null";
    return to_literal(v);
}

std::string props(const PropertyPredicates& p) {
    std::string out = "{";
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i) out += ", ";
        out += ident(p[i].first) + ": " + render(p[i].second);
    }
    return out + "}";
}

std::string node(const NodePattern& n) {
    std::string out = "(" + (n.var.empty() ? std::string() : ident(n.var));
    if (n.label) out += ":" + ident(*n.label);
    if (!n.props.empty()) out += (out.size() > 1 ? " " : "") + props(n.props);
    return out + ")";
}

std::string rel(const RelPattern& r) {
    std::string inner = r.var.empty() ? std::string() : ident(r.var);
    for (std::size_t i = 0; i < r.types.size(); ++i) inner += (i ? "|" : ":") + ident(r.types[i]);
    if (r.var_length) {
        inner += "*" + std::to_string(r.min_hops) + "..";
        if (r.max_hops) inner += std::to_string(*r.max_hops);
    }
    if (!r.props.empty()) inner += (inner.empty() ? "" : " ") + props(r.props);
    const std::string body = "[" + inner + "]";
    switch (r.dir) {
        case Direction::Out: return "-" + body + "->";
        case Direction::In: return "<-" + body + "-";
        case Direction::Both: return "-" + body + "-";
    }
    return body;
}

std::string set_item(const SetItem& s) { return ident(s.var) + "." + ident(s.key) + " = " + render(s.value); }

std::string binary(const Expr& e, const char* op) {
    return "(" + render(e.args[0]) + " " + op + " " + render(e.args[1]) + ")";
}

}  // namespace

std::string render(const Expr& e) {
    using K = Expr::Kind;
    switch (e.kind) {
        case K::Literal: return literal(e.literal);
        case K::Variable: return ident(e.name);
        case K::Property: {
            const Expr& base = e.args[0];
            std::string b = render(base);
            if (base.kind != K::Variable && base.kind != K::Property && base.kind != K::Call &&
                base.kind != K::CountStar)
                b = "(" + b + ")";
            return b + "." + ident(e.name);
        }
        case K::List: {
            std::string out = "[";
            for (std::size_t i = 0; i < e.args.size(); ++i) out += (i ? ", " : "") + render(e.args[i]);
            return out + "]";
        }
        case K::Call: {
            std::string out = e.name + "(" + (e.distinct ? "DISTINCT " : "");
            for (std::size_t i = 0; i < e.args.size(); ++i) out += (i ? ", " : "") + render(e.args[i]);
            return out + ")";
        }
        case K::CountStar: return (e.name.empty() ? std::string("count") : e.name) + "(*)";
        case K::Not: return "(NOT " + render(e.args[0]) + ")";
        case K::And: return binary(e, "AND");
        case K::Or: return binary(e, "OR");
        case K::Xor: return binary(e, "XOR");
        case K::Compare: return binary(e, e.name.c_str());
        case K::IsNull: return "(" + render(e.args[0]) + " IS NULL)";
        case K::IsNotNull: return "(" + render(e.args[0]) + " IS NOT NULL)";
        case K::Contains: return binary(e, "CONTAINS");
        case K::StartsWith: return binary(e, "STARTS WITH");
        case K::EndsWith: return binary(e, "ENDS WITH");
        case K::In: return binary(e, "IN");
        case K::Add: return binary(e, "+");
        case K::Sub: return binary(e, "-");
        case K::Neg: return "(-(" + render(e.args[0]) + "))";
    }
    return "?";
}

std::string render(const PathPattern& p) {
    std::string out = node(p.nodes.at(0));
    for (std::size_t i = 0; i < p.rels.size(); ++i) out += rel(p.rels[i]) + node(p.nodes.at(i + 1));
    return out;
}

std::string render(const CypherAst& ast) {
    std::ostringstream os;
    bool first = true;
    auto sep = [&] {
        if (!first) os << ' ';
        first = false;
    };
    auto pattern_list = [&](const std::vector<PathPattern>& ps) {
        for (std::size_t i = 0; i < ps.size(); ++i) os << (i ? ", " : "") << render(ps[i]);
    };
    for (const auto& c : ast.clauses) {
        sep();
        switch (c.kind) {
            case ClauseKind::Match:
            case ClauseKind::OptionalMatch:
                os << to_string(c.kind) << ' ';
                pattern_list(c.patterns);
                if (c.where) os << " WHERE " << render(*c.where);
                break;
            case ClauseKind::Merge: {
                os << "MERGE ";
                pattern_list(c.patterns);
                for (std::size_t i = 0; i < c.sets.size(); ++i) {
                    const auto& s = c.sets[i];
                    if (i == 0 || c.sets[i - 1].when != s.when)
                        os << (s.when == SetItem::When::OnMatch ? " ON MATCH SET " : " ON CREATE SET ");
                    else
                        os << ", ";
                    os << set_item(s);
                }
                break;
            }
            case ClauseKind::Create:
                os << "CREATE ";
                pattern_list(c.patterns);
                break;
            case ClauseKind::Set:
                os << "SET ";
                for (std::size_t i = 0; i < c.sets.size(); ++i) os << (i ? ", " : "") << set_item(c.sets[i]);
                break;
            case ClauseKind::Return:
                os << "RETURN " << (c.distinct ? "DISTINCT " : "");
                for (std::size_t i = 0; i < c.items.size(); ++i) {
                    os << (i ? ", " : "") << render(c.items[i].expr);
                    if (c.items[i].alias) os << " AS " << ident(*c.items[i].alias);
                }
                if (!c.order_by.empty()) {
                    os << " ORDER BY ";
                    for (std::size_t i = 0; i < c.order_by.size(); ++i)
                        os << (i ? ", " : "") << render(c.order_by[i].expr)
                           << (c.order_by[i].descending ? " DESC" : "");
                }
                if (c.skip) os << " SKIP " << *c.skip;
                if (c.limit) os << " LIMIT " << *c.limit;
                break;
        }
    }
    return os.str();
}

}  // namespace ctirag::cypher
