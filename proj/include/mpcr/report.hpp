#pragma once

#include <map>
#include <string>

#include <json.hpp>

namespace mpcr {

inline constexpr const char* kToolName = "mpcr";
inline constexpr const char* kToolVersion = "0.1.0";

using Json = nlohmann::ordered_json;

// FNV-1a 64-bit digest of a file's bytes, as a hex string.
std::string file_digest(const std::string& path);

// Standard report envelope: tool identity, command, input digests,
// config echo, result payload. No timestamps, so reports from identical
// runs are byte-identical.
Json make_envelope(const std::string& command,
                   const std::map<std::string, std::string>& input_paths, Json config, Json result);

// Flattens the envelope into "dotted.key<TAB>value" lines.
std::string to_tsv(const Json& report);

// Serializes to `path`, or stdout when path is empty. format is "json"
// or "tsv".
void emit_report(const Json& report, const std::string& path, const std::string& format);

}  // namespace mpcr
