// Command-line driver: one subcommand per pipeline stage plus `pipeline`.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "editbench/config.hpp"
#include "editbench/error.hpp"
#include "editbench/pipeline.hpp"

namespace {

using namespace editbench;

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    std::string provider_endpoint;
    std::string replay_dir;
    std::vector<std::string> overrides;
};

Config resolve_config(const Globals& g) {
    Config config = g.config_path.empty() ? Config{} : load_config(g.config_path);
    if (!g.replay_dir.empty()) apply_override(config, "qa.replay_dir=\"" + g.replay_dir + "\"");
    if (!g.provider_endpoint.empty()) {
        apply_override(config, "qa.endpoint=\"" + g.provider_endpoint + "\"");
        if (config.qa.provider != "record") apply_override(config, "qa.provider=\"http\"");
    }
    for (const auto& o : g.overrides) apply_override(config, o);
    if (g.seed) apply_override(config, "seed=" + std::to_string(*g.seed));
    return config;
}

int report(const StageResult& r) {
    std::cout << r.table;
    if (r.ok()) return 0;
    for (const auto& v : r.violations) std::cerr << "stage " << r.stage << " failed: " << v << "\n";
    return 1;
}

int report_all(const std::vector<StageResult>& results) {
    int code = 0;
    for (const auto& r : results) code = std::max(code, report(r));
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Benchmark forge and evaluation harness for lifelong knowledge editing"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--config", g.config_path, "TOML config file");
    app.add_option("--seed", g.seed, "Seed for every stochastic choice (overrides config)");
    app.add_option("--out-dir", g.out_dir, "Work directory holding stage artifacts");
    app.add_option("--provider-endpoint", g.provider_endpoint, "Chat-completion endpoint for generation");
    app.add_option("--replay-dir", g.replay_dir, "Directory of canned generation responses");
    app.add_option("--set", g.overrides, "Config override section.key=value (repeatable)");

    std::string old_input, new_input, input, name, date, dataset, memory_dir, up_to;

    auto* ingest = app.add_subcommand("ingest", "Parse snapshot dumps into canonical triplet stores");
    ingest->add_option("--old", old_input, "Older snapshot dump");
    ingest->add_option("--new", new_input, "Newer snapshot dump");
    ingest->add_option("--input", input, "Single dump to ingest under --name");
    ingest->add_option("--name", name, "Store name for --input");
    ingest->add_option("--date", date, "Snapshot date for --input");

    auto* diff = app.add_subcommand("diff", "Diff the ingested old and new stores");
    auto* filter = app.add_subcommand("filter", "Apply quality filters to the diff");
    auto* probes = app.add_subcommand("probes", "Build locality probes and multi-hop tuples");
    auto* qagen = app.add_subcommand("qagen", "Generate QA pairs through the generation provider");
    auto* validate = app.add_subcommand("validate", "Re-validate generated QA pairs");
    auto* emit = app.add_subcommand("emit", "Write the timestep into the dataset directory");
    emit->add_option("--dataset", dataset, "Dataset root (default <out-dir>/dataset)");

    auto* eval = app.add_subcommand("eval", "Evaluate the configured model on every timestep");
    eval->add_option("--dataset", dataset, "Dataset root (default <out-dir>/dataset)");
    auto* rag_build = app.add_subcommand("rag-build", "Build the retrieval memory from update sets");
    rag_build->add_option("--dataset", dataset, "Dataset root (default <out-dir>/dataset)");
    rag_build->add_option("--up-to", up_to, "Last timestep to include");
    auto* rag_eval = app.add_subcommand("rag-eval", "Evaluate the retrieval-augmented model");
    rag_eval->add_option("--dataset", dataset, "Dataset root (default <out-dir>/dataset)");
    rag_eval->add_option("--memory", memory_dir, "Memory directory (default <out-dir>/rag)");
    auto* report_cmd = app.add_subcommand("report", "Summarize every stage under the work directory");

    auto* pipeline = app.add_subcommand("pipeline", "ingest -> diff -> filter -> probes -> qagen -> validate -> emit");
    pipeline->add_option("--old", old_input, "Older snapshot dump")->required();
    pipeline->add_option("--new", new_input, "Newer snapshot dump")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    Config config;
    try {
        config = resolve_config(g);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    const WorkLayout layout{g.out_dir};
    const std::filesystem::path dataset_root = dataset.empty() ? layout.dataset() : std::filesystem::path(dataset);
    std::string stage = app.get_subcommands().front()->get_name();
    try {
        if (ingest->parsed()) {
            std::vector<StageResult> results;
            if (!input.empty()) {
                if (name.empty()) throw ConfigError("--name", "required with --input");
                results.push_back(stage_ingest(config, input, layout.ingest(name), date.empty() ? config.timestep.end : date));
            }
            if (!old_input.empty()) results.push_back(stage_ingest(config, old_input, layout.ingest("old"), config.timestep.start));
            if (!new_input.empty()) results.push_back(stage_ingest(config, new_input, layout.ingest("new"), config.timestep.end));
            if (results.empty()) throw ConfigError("--old/--new/--input", "nothing to ingest");
            return report_all(results);
        }
        if (diff->parsed()) return report(stage_diff(config, layout.ingest("old"), layout.ingest("new"), layout.diff()));
        if (filter->parsed()) return report(stage_filter(config, layout.diff(), layout.filter()));
        if (probes->parsed()) {
            auto embedder = make_embedder(config);
            return report(stage_probes(config, layout.filter(), layout.probes(), *embedder));
        }
        if (qagen->parsed())
            return report(stage_qagen(config, layout.filter(), layout.probes(), layout.qagen(), make_provider(config)));
        if (validate->parsed())
            return report(stage_validate(config, layout.filter(), layout.probes(), layout.qagen(), layout.validate()));
        if (emit->parsed()) return report(stage_emit(config, layout.qagen(), dataset_root));
        if (eval->parsed()) {
            auto model = make_model(config);
            return report(stage_eval(config, dataset_root, layout.eval(), *model));
        }
        if (rag_build->parsed()) {
            auto embedder = make_embedder(config);
            return report(stage_rag_build(config, dataset_root, layout.rag(), *embedder,
                                          up_to.empty() ? std::nullopt : std::optional<std::string>(up_to)));
        }
        if (rag_eval->parsed()) {
            return report(stage_rag_eval(config, dataset_root, memory_dir.empty() ? layout.rag() : std::filesystem::path(memory_dir),
                                         layout.rag_eval(), make_model(config), make_embedder(config)));
        }
        if (report_cmd->parsed()) return report(stage_report(layout));
        if (pipeline->parsed()) {
            auto embedder = make_embedder(config);
            const auto results = run_pipeline(config, old_input, new_input, layout, make_provider(config), *embedder);
            return report_all(results);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "stage " << stage << " failed: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
