/// @file ast.hpp
/// @brief Syntax tree for the supported Cypher subset.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ctirag/common/value.hpp"

namespace ctirag::cypher {

struct Expr {
    enum class Kind {
        Literal,    // literal
        Variable,   // name
        Property,   // args[0].name
        List,       // [args...]
        Call,       // name(args...), distinct flag for aggregates
        CountStar,  // count(*)
        Not,
        And,
        Or,
        Xor,
        Compare,    // name holds the operator: = <> < <= > >=
        IsNull,
        IsNotNull,
        Contains,
        StartsWith,
        EndsWith,
        In,
        Add,
        Sub,
        Neg,
    };

    Kind kind = Kind::Literal;
    Value literal;
    std::string name;
    bool distinct = false;
    std::vector<Expr> args;

    bool operator==(const Expr&) const = default;

    static Expr lit(Value v);
    static Expr var(std::string name);
    static Expr prop(std::string var, std::string key);
    static Expr call(std::string fn, std::vector<Expr> args, bool distinct = false);
    static Expr binary(Kind kind, Expr lhs, Expr rhs, std::string op = {});
};

using PropertyPredicates = std::vector<std::pair<std::string, Expr>>;

struct NodePattern {
    std::string var;
    std::optional<std::string> label;
    PropertyPredicates props;
    bool operator==(const NodePattern&) const = default;
};

enum class Direction { Out, In, Both };

struct RelPattern {
    std::string var;
    std::vector<std::string> types;  // alternatives; empty = any type
    Direction dir = Direction::Out;
    bool var_length = false;
    std::int64_t min_hops = 1;
    std::optional<std::int64_t> max_hops;  // nullopt = unbounded
    PropertyPredicates props;
    bool operator==(const RelPattern&) const = default;
};

/// Alternating node/relationship chain: nodes.size() == rels.size() + 1.
struct PathPattern {
    std::vector<NodePattern> nodes;
    std::vector<RelPattern> rels;
    bool operator==(const PathPattern&) const = default;
};

struct ReturnItem {
    Expr expr;
    std::optional<std::string> alias;
    bool operator==(const ReturnItem&) const = default;
};

struct SortItem {
    Expr expr;
    bool descending = false;
    bool operator==(const SortItem&) const = default;
};

struct SetItem {
    enum class When { Always, OnCreate, OnMatch };
    std::string var;
    std::string key;
    Expr value;
    When when = When::Always;
    bool operator==(const SetItem&) const = default;
};

enum class ClauseKind { Match, OptionalMatch, Merge, Create, Set, Return };

const char* to_string(ClauseKind kind);
bool is_write_clause(ClauseKind kind);

struct Clause {
    ClauseKind kind = ClauseKind::Match;
    std::vector<PathPattern> patterns;  // MATCH / OPTIONAL MATCH / MERGE / CREATE
    std::optional<Expr> where;          // MATCH / OPTIONAL MATCH
    std::vector<SetItem> sets;          // SET, and ON CREATE / ON MATCH SET of MERGE
    bool distinct = false;              // RETURN
    std::vector<ReturnItem> items;
    std::vector<SortItem> order_by;
    std::optional<std::int64_t> skip;
    std::optional<std::int64_t> limit;
    bool operator==(const Clause&) const = default;
};

enum class StatementKind { Read, Write };

struct CypherAst {
    StatementKind kind = StatementKind::Read;
    std::vector<Clause> clauses;
    bool operator==(const CypherAst&) const = default;

    const Clause* return_clause() const;
};

bool is_aggregate_function(const std::string& lowered_name);
bool contains_aggregate(const Expr& e);

/// Canonical text form. Composite expressions are fully parenthesised so
/// parse(render(ast)) == ast.
std::string render(const CypherAst& ast);
std::string render(const Expr& e);
std::string render(const PathPattern& p);

}  // namespace ctirag::cypher
