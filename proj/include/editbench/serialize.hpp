#pragma once

#include <filesystem>
#include <vector>

#include "editbench/diff.hpp"
#include "editbench/types.hpp"
#include "json.hpp"

namespace editbench {

using ojson = nlohmann::ordered_json;

ojson object_json(const ObjectValue& v);
ObjectValue object_from_json(const nlohmann::json& j);

ojson triplet_json(const Triplet& t);
Triplet triplet_from_json(const nlohmann::json& j);

/// Diff report record: {subject, relation, object, change_kind, old_object}.
ojson changed_report_json(const ChangedTriplet& c);
ChangedTriplet changed_from_json(const nlohmann::json& j);

void write_triplets_jsonl(const std::vector<Triplet>& triplets, const std::filesystem::path& path);
std::vector<Triplet> read_triplets_jsonl(const std::filesystem::path& path);

void write_changed_jsonl(const std::vector<ChangedTriplet>& changed, const std::filesystem::path& path);
std::vector<ChangedTriplet> read_changed_jsonl(const std::filesystem::path& path);

/// Reads every non-blank line of a JSONL file; throws SchemaError with the line number
/// on malformed JSON.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

}  // namespace editbench
