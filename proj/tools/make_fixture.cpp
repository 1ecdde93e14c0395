// Writes the synthetic snapshot pair and records canned generation responses for it.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "editbench/config.hpp"
#include "editbench/pipeline.hpp"
#include "editbench/synth.hpp"

namespace fs = std::filesystem;
using namespace editbench;

namespace {

constexpr const char* kFixtureConfig = R"(seed = 7

[timestep]
id = "T1"
start = "2024-01-01"
end = "2024-02-01"

[qa]
provider = "replay"

[rag]
embed_dim = 256
)";

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generate the synthetic fixture and its replay responses"};
    std::string out_dir;
    std::uint64_t seed = 7;
    app.add_option("out_dir", out_dir, "Fixture directory")->required();
    app.add_option("--seed", seed, "Fixture seed");
    CLI11_PARSE(app, argc, argv);

    try {
        const fs::path dir = out_dir;
        synth::write_fixture(synth::make_fixture(seed), dir);
        {
            std::ofstream cfg(dir / "config.toml");
            cfg << kFixtureConfig;
        }
        fs::remove_all(dir / "replay");
        Config config = load_config(dir / "config.toml");
        apply_override(config, "qa.provider=\"record\"");
        apply_override(config, "qa.replay_dir=\"" + (dir / "replay").string() + "\"");

        const fs::path work = fs::temp_directory_path() / ("editbench-fixture-" + std::to_string(::getpid()));
        fs::remove_all(work);
        auto embedder = make_embedder(config);
        const auto results = run_pipeline(config, dir / "old.json", dir / "new.json", WorkLayout{work},
                                          make_provider(config), *embedder);
        fs::remove_all(work);
        for (const auto& r : results) {
            std::cout << r.table;
            if (!r.ok()) {
                for (const auto& v : r.violations) std::cerr << "stage " << r.stage << " failed: " << v << "\n";
                return 1;
            }
        }
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
    return 0;
}
