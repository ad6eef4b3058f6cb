/// @file io.hpp
/// @brief File helpers: whole-file reads, atomic writes, JSONL.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace ctirag::io {

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames it into place, so readers never
/// observe a partially written artifact.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);
std::string to_jsonl(const std::vector<nlohmann::json>& rows);

}  // namespace ctirag::io
