#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "editbench/error.hpp"
#include "editbench/store.hpp"
#include "../support/batches.hpp"

using namespace editbench;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << s;
}

QaPair update(const std::string& ts, int i) {
    QaPair p;
    p.id = ts + "-update-" + std::to_string(i);
    p.kind = QaKind::Update;
    p.timestep = ts;
    p.question = "What is the color of thing " + std::to_string(i) + "?";
    p.answer = "white";
    p.provenance = {"Q" + std::to_string(i) + "|P1|Q2"};
    return p;
}

UpdateBatch three_updates() {
    UpdateBatch b;
    b.timestep_id = "T1";
    b.date_range = {"2024-01-01", "2024-02-01"};
    for (int i = 0; i < 3; ++i) b.sets[QaKind::Update].push_back(update("T1", i));
    return b;
}

}  // namespace

TEST_CASE("three updates make three lines") {
    const auto root = fresh_dir("editbench-store-3");
    const auto entry = emit_timestep(three_updates(), root);
    CHECK(entry.counts.at("update") == 3);
    const auto text = slurp(root / "T1" / "update.jsonl");
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
    CHECK(read_manifest(root).find("T1")->counts.at("update") == 3);
    CHECK(load_timestep(root, "T1") == three_updates());
    CHECK(load_timestep(root / "T1") == three_updates());
}

TEST_CASE("record keys are in frozen order") {
    const auto j = qa_json(update("T1", 0));
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    CHECK(keys == std::vector<std::string>{"id", "kind", "timestep", "question", "answer", "subject", "relation",
                                           "object", "provenance", "persona", "parent_id"});
    CHECK(j["persona"].is_null());
}

TEST_CASE("flipped bit is an integrity error") {
    const auto root = fresh_dir("editbench-store-flip");
    emit_timestep(three_updates(), root);
    auto text = slurp(root / "T1" / "update.jsonl");
    text[10] = static_cast<char>(text[10] ^ 0x01);
    spit(root / "T1" / "update.jsonl", text);
    CHECK_THROWS_AS(load_timestep(root, "T1"), IntegrityError);
}

TEST_CASE("dangling parent is a schema error naming the id") {
    auto b = three_updates();
    QaPair r = update("T1", 9);
    r.id = "T1-rephrase-9";
    r.kind = QaKind::Rephrase;
    r.parent_id = "T1-update-404";
    b.sets[QaKind::Rephrase].push_back(r);
    try {
        emit_timestep(b, fresh_dir("editbench-store-dangling"));
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("T1-update-404") != std::string::npos);
    }
}

TEST_CASE("manifest stays ordered and warns on overlap") {
    const auto root = fresh_dir("editbench-store-order");
    std::mt19937_64 rng(2);
    emit_timestep(batches::random_batch(rng, "T2", {"2024-02-01", "2024-03-01"}), root);
    emit_timestep(batches::random_batch(rng, "T1", {"2024-01-01", "2024-02-01"}), root);
    std::vector<std::string> warnings;
    emit_timestep(batches::random_batch(rng, "T3", {"2024-02-15", "2024-04-01"}), root, &warnings);
    const auto m = read_manifest(root);
    REQUIRE(m.timesteps.size() == 3);
    CHECK(m.timesteps[0].timestep_id == "T1");
    CHECK(m.timesteps[1].timestep_id == "T2");
    CHECK(m.timesteps[2].timestep_id == "T3");
    CHECK(warnings.size() == 1);
    CHECK_THROWS_AS(emit_timestep(batches::random_batch(rng, "T4", {"2024-01-01", "2024-01-05"}), root), SchemaError);
}

TEST_CASE("random batches round-trip and detect single-byte corruption") {
    const auto root = fresh_dir("editbench-store-prop");
    std::mt19937_64 rng(200);
    for (int i = 0; i < 50; ++i) {
        const auto ts = "T" + std::to_string(i);
        const auto batch = batches::random_batch(rng, ts, {"2020-01-01", "2020-01-02"});
        const auto dir = root / ts;
        fs::remove_all(root);
        emit_timestep(batch, root);
        CHECK(load_timestep(root, ts) == batch);

        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(dir))
            if (fs::file_size(e.path()) > 0) files.push_back(e.path());
        REQUIRE(!files.empty());
        const auto victim = files[rng() % files.size()];
        auto bytes = slurp(victim);
        const auto pos = rng() % bytes.size();
        bytes[pos] = static_cast<char>(bytes[pos] ^ static_cast<char>(1 + rng() % 255));
        spit(victim, bytes);
        CHECK_THROWS_AS(load_timestep(root, ts), IntegrityError);
    }
}

TEST_CASE("missing set file is an integrity error") {
    const auto root = fresh_dir("editbench-store-missing");
    emit_timestep(three_updates(), root);
    fs::remove(root / "T1" / "mhop.jsonl");
    CHECK_THROWS_AS(load_timestep(root, "T1"), IntegrityError);
}
