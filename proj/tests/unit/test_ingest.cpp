#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "editbench/error.hpp"
#include "editbench/ingest.hpp"
#include "editbench/synth.hpp"
#include "json.hpp"

using namespace editbench;
using nlohmann::json;

namespace {

json item_claim(const std::string& prop, int target) {
    return {{"mainsnak",
             {{"snaktype", "value"},
              {"property", prop},
              {"datavalue", {{"type", "wikibase-entityid"}, {"value", {{"id", "Q" + std::to_string(target)}}}}}}}};
}

std::string dump_of(const std::vector<json>& docs) {
    std::string out = "[\n";
    for (const auto& d : docs) out += d.dump() + ",\n";
    return out + "]\n";
}

TripletStore parse(const std::string& text) {
    std::istringstream in(text);
    return parse_snapshot(in, IngestConfig{});
}

}  // namespace

TEST_CASE("single claim becomes one entity triplet") {
    json doc = {{"id", "Q1"}, {"claims", {{"P2", {item_claim("P2", 3)}}}}};
    const auto store = parse(dump_of({doc}));
    REQUIRE(store.size() == 1);
    const auto& t = store.triplets()[0];
    CHECK(t.subject.id == "Q1");
    CHECK(t.relation.id == "P2");
    REQUIRE(is_entity(t.object));
    CHECK(std::get<EntityRef>(t.object).id == "Q3");
    CHECK(store.lookup("Q1", "P2").size() == 1);
}

TEST_CASE("quantity claim becomes a quantity literal") {
    json claim = {{"mainsnak",
                   {{"snaktype", "value"},
                    {"property", "P1082"},
                    {"datavalue", {{"type", "quantity"}, {"value", {{"amount", "+5000"}, {"unit", "1"}}}}}}}};
    json doc = {{"id", "Q5"}, {"claims", {{"P1082", {claim}}}}};
    const auto store = parse(dump_of({doc}));
    REQUIRE(store.size() == 1);
    const auto* lit = std::get_if<Literal>(&store.triplets()[0].object);
    REQUIRE(lit != nullptr);
    CHECK(lit->kind == LiteralKind::Quantity);
}

TEST_CASE("malformed records are counted and skipped") {
    json good = {{"id", "Q1"}, {"claims", {{"P2", {item_claim("P2", 3)}}}}};
    std::string text = "[\n" + good.dump() + ",\n{not json\n{\"id\": 7},\n" + good.dump() + "\n]\n";
    std::istringstream in(text);
    LabelTable labels;
    std::size_t seen = 0;
    const auto stats = scan_dump(in, IngestConfig{}, labels, [&](Triplet&&) { ++seen; });
    CHECK(seen == 2);
    CHECK(stats.malformed_records == 2);
}

TEST_CASE("labels resolve from the table") {
    LabelTable table;
    table.labels = {{"Q1", "Norway"}, {"Q2", "Oslo"}, {"P36", "capital"}};
    TripletStore raw({Triplet{{"Q1", ""}, {"P36", "", ""}, EntityRef{"Q2", ""}}}, table, SnapshotMeta{});
    const auto store = resolve_labels(raw);
    const auto& t = store.triplets()[0];
    CHECK(t.subject.label == "Norway");
    CHECK(t.relation.label == "capital");
    CHECK(std::get<EntityRef>(t.object).label == "Oslo");
    CHECK_FALSE(t.unresolved());

    const auto bare = resolve_labels(TripletStore(raw.triplets(), LabelTable{}, SnapshotMeta{}));
    for (const auto& u : bare.triplets()) CHECK(u.unresolved());
}

TEST_CASE("deleting labels flags exactly the affected triplets") {
    std::mt19937_64 rng(11);
    LabelTable table;
    std::vector<Triplet> raw;
    for (int i = 1; i <= 100; ++i) table.labels["Q" + std::to_string(i)] = "entity " + std::to_string(i);
    table.labels["P1"] = "linked to";
    for (int i = 0; i < 400; ++i) {
        const int s = 1 + static_cast<int>(rng() % 100);
        const int o = 1 + static_cast<int>(rng() % 100);
        raw.push_back({{"Q" + std::to_string(s), ""}, {"P1", "", ""}, EntityRef{"Q" + std::to_string(o), ""}});
    }
    std::set<std::string> deleted;
    while (deleted.size() < 10) deleted.insert("Q" + std::to_string(1 + rng() % 100));
    for (const auto& d : deleted) table.labels.erase(d);

    const auto store = resolve_labels(TripletStore(raw, table, SnapshotMeta{}));
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const bool expect = deleted.count(raw[i].subject.id) > 0 ||
                            deleted.count(std::get<EntityRef>(raw[i].object).id) > 0;
        CHECK(store.triplets()[i].unresolved() == expect);
    }
}

TEST_CASE("synthetic 200-entity fixture ingests to its planned counts") {
    const auto fixture = synth::make_fixture(7);
    const auto old_store = parse(fixture.old_dump);
    const auto new_store = parse(fixture.new_dump);
    CHECK(old_store.size() == fixture.expected.old_triplets);
    CHECK(new_store.size() == fixture.expected.new_triplets);
    CHECK(old_store.skipped_records() == fixture.expected.old_malformed);
    CHECK(new_store.skipped_records() == fixture.expected.new_malformed);
}

TEST_CASE("canonical form round-trips, including literals with tabs") {
    const auto dir = std::filesystem::temp_directory_path() / "editbench-ingest-rt";
    std::filesystem::remove_all(dir);
    LabelTable table;
    table.labels = {{"Q1", "Norway"}, {"Q2", "Oslo"}, {"P36", "capital"}, {"P5", "motto"}};
    std::vector<Triplet> ts{{{"Q1", ""}, {"P36", "", ""}, EntityRef{"Q2", ""}},
                            {{"Q1", ""}, {"P5", "", ""}, Literal{"a\tb\\c\nd", LiteralKind::String}}};
    SnapshotMeta meta{"2024-01-01", "file://x", 2, 2};
    const auto store = resolve_labels(TripletStore(ts, table, meta));
    write_canonical(store, dir);
    const auto back = read_canonical(dir);
    CHECK(back.triplets() == store.triplets());
    CHECK(back.meta().snapshot_date == "2024-01-01");
    std::filesystem::remove_all(dir);
}

TEST_CASE("unreadable input is a fatal ingest error") {
    CHECK_THROWS_AS(load_snapshot("/nonexistent/dump.json", IngestConfig{}), IngestError);
}

TEST_CASE("tsv escaping round-trips") {
    for (const std::string s : {"", "plain", "tab\there", "nl\nx", "back\\slash", "\r\n\t\\"})
        CHECK(tsv_unescape(tsv_escape(s)) == s);
}

TEST_CASE("iso dates") {
    CHECK(is_iso_date("2024-02-29"));
    CHECK_FALSE(is_iso_date("2023-02-29"));
    CHECK_FALSE(is_iso_date("2024-13-01"));
    CHECK_FALSE(is_iso_date("24-01-01"));
}
