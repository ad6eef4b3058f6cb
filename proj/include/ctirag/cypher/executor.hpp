/// @file executor.hpp
/// @brief Pattern-matching interpreter over a PropertyGraph.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctirag/common/value.hpp"
#include "ctirag/cypher/ast.hpp"
#include "ctirag/cypher/validator.hpp"
#include "ctirag/graph/property_graph.hpp"

namespace ctirag::cypher {

class CypherRuntimeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<Value>> rows;

    bool operator==(const ResultTable&) const = default;
};

struct ExecOptions {
    /// Upper bound on intermediate bindings; exceeding it raises a runtime error.
    std::size_t max_bindings = 200000;
};

/// READ statements need a frozen graph, WRITE statements an unfrozen one.
/// Node values in the result are NodeId references into `graph`.
ResultTable execute(const CypherAst& ast, graph::PropertyGraph& graph, const ExecOptions& opts = {});
ResultTable execute(const CypherAst& ast, const graph::PropertyGraph& graph, const ExecOptions& opts = {});

/// True for zero rows, or when every cell of every row is null-like.
bool empty_result(const ResultTable& table);

/// Cell rendering that resolves node/edge references to readable text.
std::string render_cell(const Value& v, const graph::PropertyGraph& graph);

/// Markdown-ish table for prompts: header row then one line per row.
std::string render_table(const ResultTable& table, const graph::PropertyGraph& graph,
                         std::size_t max_rows = 50);

nlohmann::json to_json(const ResultTable& table, const graph::PropertyGraph& graph);

/// Every non-null cell in row-major order joined by ", "; lists are
/// flattened, nodes render as their name and integers as digits.
std::string render_flat(const ResultTable& table, const graph::PropertyGraph& graph);

enum class QueryFailure { None, Syntax, ReadOnly, Schema, Runtime, Empty };

const char* to_string(QueryFailure f);

struct QueryOutcome {
    std::string text;
    ValidationReport report;
    ResultTable table;
    QueryFailure failure = QueryFailure::None;
    std::string error;  // feedback text for repair prompts

    bool succeeded() const { return failure == QueryFailure::None; }
};

/// parse, validate as READ, execute; classifies the first failure. With
/// `empty_is_failure` an empty result counts as a failure.
QueryOutcome run_read_query(std::string_view text, const graph::PropertyGraph& graph,
                            bool empty_is_failure = true);

}  // namespace ctirag::cypher
