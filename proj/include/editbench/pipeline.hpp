#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "editbench/config.hpp"
#include "editbench/embed.hpp"
#include "editbench/model.hpp"
#include "editbench/probes.hpp"
#include "editbench/provider.hpp"
#include "editbench/serialize.hpp"

namespace editbench {

/// Outcome of one file-based stage. `summary` is also written as the stage's
/// summary.json; `violations` lists exceeded error budgets.
struct StageResult {
    explicit StageResult(std::string name = {}) : stage(std::move(name)) {}

    std::string stage;
    ojson summary = ojson::object();
    std::vector<std::string> violations;
    std::string table;

    bool ok() const { return violations.empty(); }
};

/// Standard artifact layout under a work directory.
struct WorkLayout {
    std::filesystem::path root;

    std::filesystem::path ingest(const std::string& name) const { return root / "ingest" / name; }
    std::filesystem::path diff() const { return root / "diff"; }
    std::filesystem::path filter() const { return root / "filter"; }
    std::filesystem::path probes() const { return root / "probes"; }
    std::filesystem::path qagen() const { return root / "qagen"; }
    std::filesystem::path validate() const { return root / "validate"; }
    std::filesystem::path dataset() const { return root / "dataset"; }
    std::filesystem::path eval() const { return root / "eval"; }
    std::filesystem::path rag() const { return root / "rag"; }
    std::filesystem::path rag_eval() const { return root / "rag_eval"; }
};

std::shared_ptr<Embedder> make_embedder(const Config& config);
std::shared_ptr<GenerationProvider> make_provider(const Config& config);
std::shared_ptr<ModelProvider> make_model(const Config& config);

ojson probe_json(const LocalityProbe& p);
LocalityProbe probe_from_json(const nlohmann::json& j);
ojson mhop_json(const MhopQuintuple& m);
MhopQuintuple mhop_from_json(const nlohmann::json& j);

StageResult stage_ingest(const Config& config, const std::filesystem::path& input, const std::filesystem::path& dest,
                         const std::string& snapshot_date);
StageResult stage_diff(const Config& config, const std::filesystem::path& old_dir,
                       const std::filesystem::path& new_dir, const std::filesystem::path& dest);
StageResult stage_filter(const Config& config, const std::filesystem::path& diff_dir,
                         const std::filesystem::path& dest);
StageResult stage_probes(const Config& config, const std::filesystem::path& filter_dir,
                         const std::filesystem::path& dest, Embedder& embedder);
StageResult stage_qagen(const Config& config, const std::filesystem::path& filter_dir,
                        const std::filesystem::path& probes_dir, const std::filesystem::path& dest,
                        std::shared_ptr<GenerationProvider> provider);
StageResult stage_validate(const Config& config, const std::filesystem::path& filter_dir,
                           const std::filesystem::path& probes_dir, const std::filesystem::path& qagen_dir,
                           const std::filesystem::path& dest);
StageResult stage_emit(const Config& config, const std::filesystem::path& qagen_dir,
                       const std::filesystem::path& dataset_root);
StageResult stage_eval(const Config& config, const std::filesystem::path& dataset_root,
                       const std::filesystem::path& dest, ModelProvider& model);
StageResult stage_rag_build(const Config& config, const std::filesystem::path& dataset_root,
                            const std::filesystem::path& dest, Embedder& embedder,
                            const std::optional<std::string>& up_to_timestep = std::nullopt);
StageResult stage_rag_eval(const Config& config, const std::filesystem::path& dataset_root,
                           const std::filesystem::path& memory_dir, const std::filesystem::path& dest,
                           std::shared_ptr<ModelProvider> base, std::shared_ptr<Embedder> embedder);
/// Collects every stage summary under the work directory.
StageResult stage_report(const WorkLayout& layout);

/// ingest (old, new) -> diff -> filter -> probes -> qagen -> validate -> emit. The old
/// snapshot is dated timestep.start and the new one timestep.end. Stops after the first
/// stage that exceeds an error budget.
std::vector<StageResult> run_pipeline(const Config& config, const std::filesystem::path& old_input,
                                      const std::filesystem::path& new_input, const WorkLayout& layout,
                                      std::shared_ptr<GenerationProvider> provider, Embedder& embedder);

}  // namespace editbench
