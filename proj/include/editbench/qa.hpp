#pragma once

#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "editbench/diff.hpp"
#include "editbench/probes.hpp"
#include "editbench/provider.hpp"
#include "editbench/retry.hpp"
#include "editbench/types.hpp"

namespace editbench {

enum class QaKind { Update, Locality, Rephrase, Persona, Mhop };

inline constexpr std::array<QaKind, 5> kAllKinds{QaKind::Update, QaKind::Locality, QaKind::Rephrase,
                                                 QaKind::Persona, QaKind::Mhop};

std::string_view to_string(QaKind kind);
std::optional<QaKind> qa_kind_from_string(std::string_view name);

struct QaPair {
    std::string id;
    QaKind kind = QaKind::Update;
    std::string timestep;
    std::string question;
    std::string answer;
    // Source labels; for multi-hop pairs `relation` joins both relation labels with " / ".
    std::string subject;
    std::string relation;
    std::string object;
    std::vector<std::string> provenance;
    std::optional<std::string> persona;
    std::optional<std::string> parent_id;

    bool operator==(const QaPair&) const = default;
};

struct PersonaSpec {
    std::string name;
    std::string description;
};

/// Detective, Casual, Pirate, Philosopher, Caveman.
const std::vector<PersonaSpec>& default_personas();
const PersonaSpec* find_persona(std::string_view name);

// ---- prompt templates ------------------------------------------------------------

enum class TemplateId { UpdateLocality, Rephrase, Persona, Mhop };

std::string_view to_string(TemplateId id);

/// Prompt templates with `{name}` placeholders. Defaults are the few-shot templates
/// used to build the benchmark; `load_dir` overrides any of update_locality.txt,
/// rephrase.txt, persona.txt, mhop.txt found in a directory.
class TemplateRegistry {
public:
    TemplateRegistry();
    static TemplateRegistry load_dir(const std::filesystem::path& dir);

    const std::string& get(TemplateId id) const;
    void set(TemplateId id, std::string text);

    /// Substitutes every `{name}`; a placeholder without a non-empty value raises RenderError.
    std::string render(TemplateId id, const std::map<std::string, std::string>& values) const;

private:
    std::map<TemplateId, std::string> templates_;
};

std::string render_prompt(const TemplateRegistry& templates, const Triplet& fact);
std::string render_prompt(const TemplateRegistry& templates, const QaPair& qa);
std::string render_prompt(const TemplateRegistry& templates, const QaPair& qa, const PersonaSpec& persona);
std::string render_prompt(const TemplateRegistry& templates, const MhopQuintuple& tuple);

/// Extracts the first "Q:" line and the following "A:" line.
std::optional<std::pair<std::string, std::string>> parse_qa_response(std::string_view text);
/// Extracts the "Reformulated Question:" line, falling back to a "Q:" line.
std::optional<std::string> parse_rephrase_response(std::string_view text);

// ---- validation --------------------------------------------------------------------

using QaSource = std::variant<Triplet, MhopQuintuple>;

/// Reason codes, in check order.
inline constexpr std::string_view kMissingSubject = "missing-subject";
inline constexpr std::string_view kMissingRelation = "missing-relation";
inline constexpr std::string_view kAnswerLeak = "answer-leak";
inline constexpr std::string_view kAnswerMismatch = "answer-mismatch";

struct ValidationResult {
    std::vector<std::string> reasons;

    bool pass() const { return reasons.empty(); }
    /// First failing check, or empty on pass.
    std::string reason() const { return reasons.empty() ? std::string{} : reasons.front(); }
};

/// True when some question token matches the relation token exactly or shares a
/// stem-length prefix with it ("educated" ~ "education").
bool token_matches(std::string_view question_token, std::string_view relation_token);

ValidationResult validate_qa(const QaPair& qa, const QaSource& source);

// ---- generation --------------------------------------------------------------------

struct ForgeConfig {
    std::map<QaKind, std::string> models{{QaKind::Update, "gpt-3.5-turbo"},
                                         {QaKind::Locality, "gpt-3.5-turbo"},
                                         {QaKind::Rephrase, "gpt-4o-mini"},
                                         {QaKind::Persona, "gpt-4o-mini"},
                                         {QaKind::Mhop, "gpt-4o-mini"}};
    GenerationParams params{};
    std::size_t max_inflight = 8;
    RetryPolicy retry{};
    std::uint64_t seed = 0;
};

struct KindCounters {
    std::size_t attempted = 0;
    std::size_t emitted = 0;
    std::size_t transport_failures = 0;
    std::size_t parse_failures = 0;
    std::size_t unchanged_rephrase = 0;
    std::size_t invalid = 0;

    std::size_t failures() const { return transport_failures + parse_failures + unchanged_rephrase + invalid; }
    bool operator==(const KindCounters&) const = default;
};

struct ForgeInputs {
    std::string timestep_id;
    std::vector<ChangedTriplet> changed;
    std::vector<LocalityProbe> probes;
    std::vector<MhopQuintuple> mhop;
};

struct ForgeOutput {
    std::map<QaKind, std::vector<QaPair>> sets;
    std::map<QaKind, KindCounters> counters;
};

/// Drives a GenerationProvider through the templates to produce and validate QA pairs.
/// Safe to call from multiple threads; counters are updated atomically.
class QaForge {
public:
    QaForge(std::shared_ptr<GenerationProvider> provider, ForgeConfig config = {},
            TemplateRegistry templates = {});

    /// Update or locality pair for a fact; the answer is always the object label.
    std::optional<QaPair> generate_qa(const Triplet& fact, QaKind kind);
    std::optional<QaPair> generate_qa(const MhopQuintuple& tuple);
    /// Reworded question with the parent's answer; a reply that repeats the question
    /// (case-insensitively) is retried once, then skipped.
    std::optional<QaPair> generate_rephrase(const QaPair& parent);
    std::optional<QaPair> generate_persona(const QaPair& parent, const PersonaSpec& persona);

    /// Seeded, order-independent persona choice for a parent pair id.
    const PersonaSpec& choose_persona(std::string_view parent_id) const;

    /// Full generation for one timestep: update, locality, rephrase, persona and mhop sets,
    /// each validated; failures are dropped and counted.
    ForgeOutput forge(const ForgeInputs& inputs);

    std::map<QaKind, KindCounters> counters() const;
    const ForgeConfig& config() const { return config_; }
    const TemplateRegistry& templates() const { return templates_; }

private:
    struct AtomicCounters {
        std::atomic<std::size_t> attempted{0}, emitted{0}, transport_failures{0}, parse_failures{0},
            unchanged_rephrase{0}, invalid{0};
    };

    std::optional<std::string> call(QaKind kind, const std::string& prompt);
    std::optional<std::pair<std::string, std::string>> call_qa(QaKind kind, const std::string& prompt);
    std::optional<QaPair> reword(const QaPair& parent, QaKind kind, const std::string& prompt);
    AtomicCounters& counter(QaKind kind) { return counters_[static_cast<std::size_t>(kind)]; }

    std::shared_ptr<GenerationProvider> provider_;
    ForgeConfig config_;
    TemplateRegistry templates_;
    std::array<AtomicCounters, 5> counters_;
};

}  // namespace editbench
