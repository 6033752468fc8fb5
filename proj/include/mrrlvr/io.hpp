#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace mrrlvr::io {

using json = nlohmann::json;
// ordered_json keeps insertion order on dump, so emitted files list fields in
// schema order instead of alphabetically. Both are deterministic; this one is
// easier on human readers.
using ojson = nlohmann::ordered_json;

// Read a whole file; IoError if it cannot be opened.
std::string read_file(const std::filesystem::path& path);

// Write atomically: write to a temp file in the same directory, then rename.
// A crash mid-write never leaves a truncated file at `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// Parse one JSON object per non-blank line. `on_row(line_number, parsed)` is
// invoked in file order with 1-based line numbers. Malformed JSON raises
// SchemaError carrying the line number.
void for_each_jsonl_row(const std::filesystem::path& path,
                        const std::function<void(int, const json&)>& on_row);

// Serialize rows to JSONL text (one compact object per line, LF endings).
std::string to_jsonl(const std::vector<ojson>& rows);

// FNV-1a fingerprint of a file's bytes, rendered as 16 hex chars.
std::string file_fingerprint(const std::filesystem::path& path);

}  // namespace mrrlvr::io
