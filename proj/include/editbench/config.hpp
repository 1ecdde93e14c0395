#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "editbench/diff.hpp"
#include "editbench/eval.hpp"
#include "editbench/filter.hpp"
#include "editbench/ingest.hpp"
#include "editbench/probes.hpp"
#include "editbench/qa.hpp"
#include "editbench/rag.hpp"

namespace editbench {

struct Config {
    std::uint64_t seed = 0;

    IngestConfig ingest{};
    DiffOptions diff{};
    FilterConfig filters{};

    struct Locality {
        LocalityOptions options{};
    } locality;

    struct Mhop {
        bool enabled = true;
    } mhop;

    struct Qa {
        std::string provider = "replay";  // replay | http | record | formulaic
        std::string endpoint;
        std::string replay_dir;
        std::string template_dir;
        int timeout_seconds = 60;
        ForgeConfig forge{};
    } qa;

    struct Rag {
        RagConfig config{};
        std::string embedder = "stub";  // stub | http
        std::size_t embed_dim = 256;
        std::string embed_endpoint;
    } rag;

    struct Eval {
        MatchMode match = MatchMode::Contains;
        std::string model = "http";  // http | subprocess | copy_first
        std::string model_endpoint;
        std::string model_command;
        std::size_t max_inflight = 8;
        std::vector<EvalAxis> axes{kAllAxes.begin(), kAllAxes.end()};
        std::string annotations;
        std::string bin_key;        // fact_year | subject_count | object_count; empty disables
        std::size_t bins = 10;      // quantile bins
    } eval;

    struct Timestep {
        std::string id = "T1";
        std::string start = "1970-01-01";
        std::string end = "1970-01-01";
    } timestep;

    // Stage error budgets; a stage exits non-zero when a counter exceeds its limit.
    struct Limits {
        std::size_t max_malformed_records = std::numeric_limits<std::size_t>::max();
        std::size_t max_embed_errors = 0;
        std::size_t max_transport_failures = 0;
        double max_generation_failure_rate = 0.5;
        std::size_t max_eval_errors = 0;
    } limits;
};

/// TOML subset: [section] headers, `key = value` with strings, integers, floats,
/// booleans and (possibly multi-line) arrays; `#` comments. Unknown keys are errors.
Config parse_config(std::string_view text);
Config load_config(const std::filesystem::path& path);

/// Applies one `section.key=value` override; the value uses the same literal syntax,
/// and a bare word is taken as a string.
void apply_override(Config& config, std::string_view assignment);

}  // namespace editbench
