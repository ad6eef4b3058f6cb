/// @file parser.hpp
/// @brief Recursive-descent parser for the Cypher subset.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ctirag/cypher/ast.hpp"

namespace ctirag::cypher {

class SyntaxError : public std::runtime_error {
public:
    SyntaxError(std::size_t position, std::size_t line, std::size_t column,
                std::vector<std::string> expected, std::string found);

    std::size_t position() const { return position_; }  // byte offset
    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }
    const std::vector<std::string>& expected() const { return expected_; }
    const std::string& found() const { return found_; }

private:
    std::size_t position_;
    std::size_t line_;
    std::size_t column_;
    std::vector<std::string> expected_;
    std::string found_;
};

/// Parses exactly one statement; a single trailing `;` is allowed.
CypherAst parse(std::string_view text);

/// Splits on top-level `;` and parses each non-empty statement.
std::vector<CypherAst> parse_script(std::string_view text);

/// True when `word` is reserved (case-insensitive) and must be backquoted
/// to be used as an identifier.
bool is_reserved_word(std::string_view word);

}  // namespace ctirag::cypher
