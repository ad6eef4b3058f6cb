/// @file value.hpp
/// @brief Dynamically typed value shared by graph properties and query results.

#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace ctirag {

struct NodeId {
    std::uint32_t value = 0;
    auto operator<=>(const NodeId&) const = default;
    std::string str() const { return "n" + std::to_string(value); }
};

struct EdgeId {
    std::uint32_t value = 0;
    auto operator<=>(const EdgeId&) const = default;
    std::string str() const { return "e" + std::to_string(value); }
};

struct Value;
using ValueList = std::vector<Value>;

/// Null, scalar, element reference, or list. Graph properties only ever hold
/// scalars or lists of scalars; element references appear in query results.
struct Value {
    using Storage = std::variant<std::monostate, bool, std::int64_t, double, std::string,
                                 NodeId, EdgeId, ValueList>;
    Storage data;

    Value() = default;
    Value(std::nullptr_t) {}
    Value(bool b) : data(b) {}
    Value(int i) : data(static_cast<std::int64_t>(i)) {}
    Value(std::int64_t i) : data(i) {}
    Value(std::size_t i) : data(static_cast<std::int64_t>(i)) {}
    Value(double d) : data(d) {}
    Value(const char* s) : data(std::string(s)) {}
    Value(std::string s) : data(std::move(s)) {}
    Value(NodeId n) : data(n) {}
    Value(EdgeId e) : data(e) {}
    Value(ValueList l) : data(std::move(l)) {}

    bool is_null() const { return std::holds_alternative<std::monostate>(data); }
    bool is_bool() const { return std::holds_alternative<bool>(data); }
    bool is_int() const { return std::holds_alternative<std::int64_t>(data); }
    bool is_double() const { return std::holds_alternative<double>(data); }
    bool is_number() const { return is_int() || is_double(); }
    bool is_string() const { return std::holds_alternative<std::string>(data); }
    bool is_node() const { return std::holds_alternative<NodeId>(data); }
    bool is_edge() const { return std::holds_alternative<EdgeId>(data); }
    bool is_list() const { return std::holds_alternative<ValueList>(data); }
    bool is_scalar() const { return !is_node() && !is_edge() && !is_list(); }

    bool as_bool() const { return std::get<bool>(data); }
    std::int64_t as_int() const { return std::get<std::int64_t>(data); }
    double as_number() const {
        return is_int() ? static_cast<double>(as_int()) : std::get<double>(data);
    }
    const std::string& as_string() const { return std::get<std::string>(data); }
    NodeId as_node() const { return std::get<NodeId>(data); }
    EdgeId as_edge() const { return std::get<EdgeId>(data); }
    const ValueList& as_list() const { return std::get<ValueList>(data); }

    bool operator==(const Value&) const = default;
};

/// Plain-text rendering used for answers and gold strings. Strings are
/// emitted verbatim, integers as digits, lists as comma-separated items.
std::string to_display(const Value& v);

/// Cypher-literal rendering (strings quoted and escaped).
std::string to_literal(const Value& v);

/// Total order used by ORDER BY and deterministic sorting. Nulls sort last.
int compare_values(const Value& a, const Value& b);

/// True for null and for lists whose every element is null-like.
bool is_null_like(const Value& v);

nlohmann::json to_json(const Value& v);
Value value_from_json(const nlohmann::json& j);

}  // namespace ctirag
