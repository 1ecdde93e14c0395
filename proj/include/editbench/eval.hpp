#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "editbench/model.hpp"
#include "editbench/rag.hpp"
#include "editbench/retry.hpp"
#include "editbench/store.hpp"

namespace editbench {

enum class MatchMode { Exact, Contains };

std::optional<MatchMode> match_mode_from_string(std::string_view name);

/// Exact: normalized equality. Contains: normalized gold is a substring of the
/// normalized generated text.
bool judge_answer(std::string_view generated, std::string_view gold, MatchMode mode = MatchMode::Contains);

enum class EvalAxis { Update, Rephrase, Personas, Mhop, Locality };

inline constexpr std::array<EvalAxis, 5> kAllAxes{EvalAxis::Update, EvalAxis::Rephrase, EvalAxis::Personas,
                                                  EvalAxis::Mhop, EvalAxis::Locality};

std::string_view to_string(EvalAxis axis);
std::optional<EvalAxis> eval_axis_from_string(std::string_view name);
QaKind axis_kind(EvalAxis axis);

struct Verdict {
    std::string id;
    std::string question;
    std::string gold;
    std::string generated;
    bool correct = false;
    bool errored = false;
    std::string error;
};

struct EvalRecord {
    std::string timestep_id;
    EvalAxis axis = EvalAxis::Update;
    std::size_t n = 0;        // judged items; errored items are excluded
    std::size_t correct = 0;
    std::size_t errored = 0;
    double accuracy = 0.0;    // correct / n, 0 when n = 0
    std::vector<Verdict> verdicts;  // ordered by id
};

struct EvalOptions {
    MatchMode mode = MatchMode::Contains;
    std::size_t max_inflight = 8;
    RetryPolicy retry{};
};

EvalRecord evaluate_pairs(ModelProvider& model, const std::string& timestep_id, EvalAxis axis,
                          const std::vector<QaPair>& pairs, const EvalOptions& options = {});

std::vector<EvalRecord> evaluate_batch(ModelProvider& model, const UpdateBatch& batch,
                                       const std::vector<EvalAxis>& axes = {kAllAxes.begin(), kAllAxes.end()},
                                       const EvalOptions& options = {});

/// F[b][j], j <= b: update accuracy on batch j after step b. Row b holds b + 1 cells.
struct ForgettingMatrix {
    std::vector<std::string> timesteps;
    std::vector<std::vector<double>> rows;

    std::size_t size() const { return rows.size(); }
    /// Throws std::out_of_range above the diagonal.
    double at(std::size_t b, std::size_t j) const;
    bool lower_triangular() const;
};

ForgettingMatrix evaluate_history(const std::vector<ModelProvider*>& states, const std::vector<UpdateBatch>& batches,
                                  const EvalOptions& options = {});

/// One mutable model: `advance(b)` brings it to state b (e.g. ingests batch b) before
/// the row for step b is measured.
ForgettingMatrix evaluate_history(ModelProvider& model, const std::vector<UpdateBatch>& batches,
                                  const std::function<void(std::size_t)>& advance, const EvalOptions& options = {});

struct LocalityConsistency {
    std::size_t n = 0;
    std::size_t errored = 0;
    double accuracy_after = 0.0;
    double consistency = 0.0;
};

LocalityConsistency locality_consistency(ModelProvider& before, ModelProvider& after,
                                         const std::vector<QaPair>& probes, const EvalOptions& options = {});

struct HopVerdict {
    std::string id;
    bool hop1 = false;
    bool hop2 = false;
    bool correct = false;
};

struct HopStats {
    std::size_t n = 0;
    double hop1_retrieved = 0.0;
    double hop2_retrieved = 0.0;
    double both_retrieved = 0.0;
    double accuracy_given_both = 0.0;
    double accuracy_given_hop1_only = 0.0;
    std::size_t n_both = 0;
    std::size_t n_hop1_only = 0;
    std::vector<HopVerdict> items;
};

/// Retrieves top-k for every mhop question and checks whether the entries storing each
/// constituent fact were retrieved; the model answers from the retrieved context.
HopStats hop_retrieval_analysis(const RagMemory& memory, const std::vector<QaPair>& mhop_pairs,
                                ModelProvider& model, std::size_t k, Embedder& embedder,
                                const EvalOptions& options = {});

// ---- binning -----------------------------------------------------------------------

struct Annotation {
    std::optional<double> fact_year;
    std::optional<double> subject_count;
    std::optional<double> object_count;
    std::optional<double> subject_views;
    std::optional<double> object_views;
};

/// Sidecar JSONL: {"id","fact_year"?,"subject_count"?,"object_count"?,"subject_views"?,"object_views"?}.
std::map<std::string, Annotation> read_annotations(const std::filesystem::path& path);

enum class BinKey { FactYear, SubjectCount, ObjectCount };

std::optional<BinKey> bin_key_from_string(std::string_view name);

struct Bin {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t n = 0;
    std::size_t correct = 0;
    double accuracy = 0.0;
};

struct Histogram {
    std::vector<Bin> bins;   // empty bins omitted
    std::size_t skipped = 0; // missing annotation or value outside the edges
};

/// Bins [edges[i], edges[i+1]); the last bin is closed on the right.
Histogram bin_records(const std::vector<Verdict>& verdicts, const std::map<std::string, Annotation>& annotations,
                      BinKey key, const std::vector<double>& edges);

/// Equal-count bins by rank: records sorted by value (then id) are split into `bins`
/// groups whose sizes differ by at most one.
Histogram bin_records_quantiles(const std::vector<Verdict>& verdicts,
                                const std::map<std::string, Annotation>& annotations, BinKey key,
                                std::size_t bins);

// ---- reports -----------------------------------------------------------------------

/// One JSONL line per record: {"timestep","axis","n","correct","errored","accuracy"}.
void write_eval_jsonl(const std::vector<EvalRecord>& records, std::ostream& out);
std::string eval_table(const std::vector<EvalRecord>& records);
std::string forgetting_table(const ForgettingMatrix& matrix);

}  // namespace editbench
