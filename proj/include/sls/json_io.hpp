#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "sls/planner.hpp"

namespace sls {

using Json = nlohmann::ordered_json;

Json to_json(const TsneConfig& c);
Json to_json(const ScProfile& p);
Json to_json(const PruningPlan& p);
Json to_json(const ModelStorageSpec& s);
Json to_json(const StorageReport& r);

/// Parsers throw FormatError on malformed documents.
TsneConfig tsne_config_from_json(const Json& j);
ScProfile profile_from_json(const Json& j);
PruningPlan plan_from_json(const Json& j);
ModelStorageSpec model_spec_from_json(const Json& j);

/// Two-space indented text with a trailing newline.
std::string dump(const Json& j);

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace sls
