#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "editbench/qa.hpp"
#include "editbench/serialize.hpp"

namespace editbench {

struct DateRange {
    std::string start;  // ISO-8601 dates
    std::string end;

    std::string to_string() const { return start + "/" + end; }
    bool operator==(const DateRange&) const = default;
};

/// One benchmark timestep: every QA set generated from one snapshot pair.
struct UpdateBatch {
    std::string timestep_id;
    DateRange date_range;
    std::map<QaKind, std::vector<QaPair>> sets;

    std::map<QaKind, std::size_t> counts() const;
    std::size_t total() const;
    const std::vector<QaPair>& set(QaKind kind) const;
    bool operator==(const UpdateBatch&) const;
};

struct ManifestEntry {
    std::string timestep_id;
    DateRange date_range;
    std::map<std::string, std::size_t> counts;       // kind -> pairs
    std::map<std::string, std::string> files;        // kind -> path relative to the root
    std::map<std::string, std::string> file_hashes;  // kind -> sha256
    std::string content_hash;

    std::size_t samples() const;
    bool operator==(const ManifestEntry&) const = default;
};

struct BenchmarkManifest {
    std::vector<ManifestEntry> timesteps;

    const ManifestEntry* find(const std::string& timestep_id) const;
};

/// Frozen JSONL record: {"id","kind","timestep","question","answer","subject","relation",
/// "object","provenance","persona","parent_id"}.
ojson qa_json(const QaPair& qa);
QaPair qa_from_json(const nlohmann::json& j);

void write_qa_jsonl(const std::vector<QaPair>& pairs, const std::filesystem::path& path);
std::vector<QaPair> read_qa_jsonl(const std::filesystem::path& path);

/// Referential problems in a batch (duplicate ids, dangling parent_id, unresolved mhop
/// provenance, kind/timestep mismatches). Empty when the batch is consistent.
std::vector<std::string> batch_problems(const UpdateBatch& batch);

BenchmarkManifest read_manifest(const std::filesystem::path& root);
void write_manifest(const BenchmarkManifest& manifest, const std::filesystem::path& root);

/// Writes `<root>/<timestep>/<kind>.jsonl` for all five kinds and records the entry in
/// `<root>/manifest.json`. Entries stay ordered by start date; an entry whose start date
/// precedes the previous entry's end date is accepted with a warning.
ManifestEntry emit_timestep(const UpdateBatch& batch, const std::filesystem::path& root,
                            std::vector<std::string>* warnings = nullptr);

/// Loads and verifies a timestep: file hashes, counts, and referential integrity.
/// Throws IntegrityError on hash/count mismatch and SchemaError on broken references.
UpdateBatch load_timestep(const std::filesystem::path& root, const std::string& timestep_id);

/// `dir` is `<root>/<timestep>`.
UpdateBatch load_timestep(const std::filesystem::path& dir);

}  // namespace editbench
