#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>

namespace lumen {

// Writes via a temp file in the same directory plus an atomic rename, so a
// failure never leaves a partial file at the target path. Throws IoError.
void atomic_write_file(const std::filesystem::path& path, const std::string& content);

// Parses a JSON file; IoError if unreadable, SchemaError if not valid JSON.
nlohmann::json load_json_file(const std::filesystem::path& path);

}  // namespace lumen
