#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace lifesim {

using Json = nlohmann::json;

/// Reads line-delimited JSON; blank lines are skipped. Parse failures throw
/// ValidationError naming the 1-based line number.
std::vector<Json> read_jsonl(const std::filesystem::path& path);

/// Visits each record with its 1-based line number (for streaming-sized inputs).
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(std::size_t, const Json&)>& fn);

void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& records);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

/// Boolean field that model replies sometimes quote ("true"/"false").
bool json_flag(const Json& v, const char* field);

/// Leading record carried by pipeline JSONL artifacts; data loaders skip it.
Json provenance_record(const std::string& config_hash, std::uint64_t seed);
bool is_provenance_record(const Json& record);

}  // namespace lifesim
