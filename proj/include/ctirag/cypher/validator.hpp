/// @file validator.hpp
/// @brief Syntactic, read-only and schema checks against the ontology.

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctirag/cypher/ast.hpp"
#include "ctirag/graph/ontology.hpp"

namespace ctirag::cypher {

enum class Mode { Read, Write };

struct Violation {
    std::string kind;     // e.g. syntax, missing_alias, write_clause, unknown_label
    std::string message;
    std::string span;     // offending fragment as rendered text
};

struct ValidationReport {
    bool syntactic_ok = true;
    bool readonly_ok = true;
    bool schema_ok = true;
    std::vector<Violation> violations;

    bool ok() const { return syntactic_ok && readonly_ok && schema_ok; }
    /// One violation per line, suitable for feeding back to a generator.
    std::string summary() const;
};

inline constexpr std::int64_t kMaxVarLengthHops = 4;

ValidationReport validate(const CypherAst& ast, const graph::Ontology& ontology, Mode mode);

/// parse + validate; a SyntaxError becomes a `syntax` violation.
ValidationReport validate_text(std::string_view text, const graph::Ontology& ontology, Mode mode);

nlohmann::json to_json(const ValidationReport& report);

}  // namespace ctirag::cypher
