#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "editbench/ingest.hpp"
#include "editbench/types.hpp"

namespace editbench {

enum class ChangeKind { New, Modified };

std::string_view to_string(ChangeKind kind);

struct ChangedTriplet {
    Triplet triplet;
    ChangeKind change_kind = ChangeKind::New;
    std::optional<ObjectValue> old_object;

    bool operator==(const ChangedTriplet&) const = default;
};

/// Static and changed sets between two snapshots. Keys that carry more than one
/// distinct object in either snapshot are not diffed; their new-snapshot triplets
/// land in `ambiguous` and are removed at the filter stage.
struct DiffResult {
    std::vector<Triplet> static_set;
    std::vector<ChangedTriplet> changed_set;
    std::vector<Triplet> ambiguous;

    bool operator==(const DiffResult&) const = default;
};

struct DiffOptions {
    /// Stores larger than this many triplets are sorted through spill files.
    std::size_t memory_threshold = std::size_t{1} << 22;
    /// Spill directory; defaults to the system temp directory.
    std::filesystem::path spill_dir;
};

/// Sorted-merge diff. Outputs are ordered by (subject.id, relation.id, object key).
DiffResult diff_snapshots(const TripletStore& old_store, const TripletStore& new_store,
                          const DiffOptions& options = {});

/// Strict weak order on (subject.id, relation.id, object key).
bool triplet_less(const Triplet& a, const Triplet& b);

/// Writes one JSONL record per changed triplet:
/// {subject, relation, object, change_kind, old_object}.
void write_diff_report(const DiffResult& diff, std::ostream& out);

}  // namespace editbench
