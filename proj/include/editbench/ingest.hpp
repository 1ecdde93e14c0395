#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "editbench/types.hpp"

namespace editbench {

enum class DumpFormat { Dump, Tsv };

struct IngestConfig {
    std::string label_lang = "en";
    DumpFormat format = DumpFormat::Dump;
    std::string snapshot_date = "1970-01-01";
    std::string source_uri;
};

struct SnapshotMeta {
    std::string snapshot_date;
    std::string source_uri;
    std::size_t entity_count = 0;
    std::size_t triplet_count = 0;

    bool operator==(const SnapshotMeta&) const = default;
};

/// id -> label, plus property descriptions.
struct LabelTable {
    std::unordered_map<std::string, std::string> labels;
    std::unordered_map<std::string, std::string> descriptions;

    std::size_t byte_size() const;
    bool operator==(const LabelTable&) const = default;
};

struct ScanStats {
    std::size_t records = 0;
    std::size_t malformed_records = 0;
    std::size_t malformed_claims = 0;
    std::size_t entities = 0;
    std::size_t triplets = 0;
};

/// Immutable multiset of triplets indexed by (subject.id, relation.id).
class TripletStore {
public:
    TripletStore() = default;
    TripletStore(std::vector<Triplet> triplets, LabelTable labels, SnapshotMeta meta,
                 std::size_t skipped_records = 0);

    const std::vector<Triplet>& triplets() const noexcept { return triplets_; }
    std::size_t size() const noexcept { return triplets_.size(); }
    bool empty() const noexcept { return triplets_.empty(); }

    /// All triplets stored under the key, in ingest order.
    std::vector<const Triplet*> lookup(const std::string& subject_id,
                                       const std::string& relation_id) const;

    const LabelTable& labels() const noexcept { return labels_; }
    const SnapshotMeta& meta() const noexcept { return meta_; }
    std::size_t skipped_records() const noexcept { return skipped_; }

private:
    std::vector<Triplet> triplets_;
    std::unordered_map<std::string, std::vector<std::size_t>> index_;
    LabelTable labels_;
    SnapshotMeta meta_;
    std::size_t skipped_ = 0;
};

using TripletSink = std::function<void(Triplet&&)>;

/// Streams line-delimited entity documents, handing each claim's triplet to `sink`
/// and collecting labels into `labels`. Only the label table is retained.
ScanStats scan_dump(std::istream& in, const IngestConfig& config, LabelTable& labels,
                    const TripletSink& sink);

/// Parses an entity-document dump into an unresolved store.
TripletStore parse_snapshot(std::istream& in, const IngestConfig& config);

/// Parses the canonical TSV triplet form; `labels` is an optional JSONL sidecar.
TripletStore parse_tsv(std::istream& triplets, std::istream* labels, const IngestConfig& config);

/// Fills labels and relation descriptions from the store's own label table.
TripletStore resolve_labels(const TripletStore& store);

/// Opens a dump file (".gz" is decompressed transparently) and parses + resolves it.
/// For the TSV format `path` names the triplet file and the sidecar is `labels.jsonl`
/// next to it, when present.
TripletStore load_snapshot(const std::filesystem::path& path, const IngestConfig& config);

/// Writes store.tsv, labels.jsonl and snapshot.json into `dir`.
void write_canonical(const TripletStore& store, const std::filesystem::path& dir);

/// Reads a directory written by `write_canonical`, label-resolved.
TripletStore read_canonical(const std::filesystem::path& dir);

/// Escaping used by the TSV columns (tab, newline, carriage return, backslash).
std::string tsv_escape(std::string_view s);
std::string tsv_unescape(std::string_view s);

bool is_iso_date(std::string_view s);

}  // namespace editbench
