#include "editbench/synth.hpp"

#include <fstream>
#include <random>
#include <variant>
#include <vector>

#include "editbench/error.hpp"

namespace editbench::synth {

namespace {

using nlohmann::json;

// Disjoint vocabularies keep subject, object and relation labels from leaking into
// one another's questions.
const std::vector<std::string> kSubjectFirst{"Amber",  "Birch",   "Cedar",  "Dover",  "Elm",    "Fenwick", "Garnet",
                                             "Hollis", "Ivory",   "Juniper", "Kestrel", "Linden", "Marlow", "Norcott",
                                             "Oakley", "Penrose", "Quarry", "Rowan",  "Sable",  "Thistle"};
const std::vector<std::string> kSubjectSecond{"Harbor", "Lighthouse", "Library", "Abbey", "Observatory", "Mill"};
const std::vector<std::string> kObjectFirst{"Velmora", "Tarquin", "Ostrava", "Zephyra", "Quillon", "Brevik",
                                            "Calloway", "Drummond", "Everhart", "Fairbanks", "Galloway", "Hartigan"};
const std::vector<std::string> kObjectSecond{"Consortium", "Foundation", "Partners", "Guild", "Trust"};
const std::vector<std::string> kBridge{"Nordhavn Works",   "Silverpine Group", "Coldwater Press", "Redfern Studio",
                                       "Blackmoor Yard",   "Whitcombe Hall",   "Ashgrove Forge",  "Millbrook Depot",
                                       "Stonebridge Mint", "Greywell Dock"};

struct Relation {
    const char* label;
    const char* description;
};

// P1..P6 carry static facts; P7..P12 carry edits.
const std::vector<Relation> kRelations{
    {"color", "The color of the subject."},
    {"architect", "Person or firm that designed the structure."},
    {"heritage designation", "Heritage status of the subject."},
    {"material used", "Material the subject is made from."},
    {"patron saint", "Patron saint of the subject."},
    {"twinned administrative body", "Twin entity of the subject."},
    {"owned by", "Owner of the subject."},
    {"operator", "Entity that operates the subject."},
    {"sponsor", "Organization sponsoring the subject."},
    {"manufacturer", "Maker of the subject."},
    {"maintained by", "Entity responsible for upkeep."},
    {"publisher", "Organization that publishes the subject."},
};

constexpr int kSubjects = 120;     // Q1..Q120
constexpr int kObjectBase = 120;   // Q121..Q180
constexpr int kObjects = 60;
constexpr int kBridgeBase = 180;   // Q181..Q190
constexpr int kSpecialBase = 190;  // Q191..Q200

std::string qid(int n) { return "Q" + std::to_string(n); }
std::string pid(int n) { return "P" + std::to_string(n); }

using Value = std::variant<int, json>;  // entity number or literal datavalue

struct Doc {
    std::string id;
    std::string label;
    std::string description;
    std::vector<std::pair<int, Value>> claims;  // (property number, value)
};

json claim(int prop, const Value& v) {
    json dv;
    if (const auto* n = std::get_if<int>(&v)) {
        dv = {{"value", {{"entity-type", "item"}, {"id", qid(*n)}, {"numeric-id", *n}}}, {"type", "wikibase-entityid"}};
    } else {
        dv = std::get<json>(v);
    }
    return {{"mainsnak", {{"snaktype", "value"}, {"property", pid(prop)}, {"datavalue", dv}}},
            {"type", "statement"},
            {"rank", "normal"}};
}

std::string render(const std::vector<Doc>& docs, const std::vector<std::string>& garbage) {
    std::string out = "[\n";
    for (const auto& d : docs) {
        json doc;
        doc["id"] = d.id;
        doc["type"] = d.id[0] == 'P' ? "property" : "item";
        if (!d.label.empty()) doc["labels"] = {{"en", {{"language", "en"}, {"value", d.label}}}};
        if (!d.description.empty()) doc["descriptions"] = {{"en", {{"language", "en"}, {"value", d.description}}}};
        json claims = json::object();
        for (const auto& [prop, value] : d.claims) claims[pid(prop)].push_back(claim(prop, value));
        doc["claims"] = claims;
        out += doc.dump() + ",\n";
    }
    for (const auto& g : garbage) out += g + "\n";
    out += "]\n";
    return out;
}

}  // namespace

ojson Expectations::to_json() const {
    ojson j;
    j["old_triplets"] = old_triplets;
    j["new_triplets"] = new_triplets;
    j["old_malformed"] = old_malformed;
    j["new_malformed"] = new_malformed;
    j["static"] = static_count;
    j["modified"] = modified;
    j["new"] = added;
    j["ambiguous"] = ambiguous;
    j["removed_by_rule"] = removed_by_rule;
    j["kept_changed"] = kept_changed;
    j["mhop"] = mhop;
    j["qa_counts"] = qa_counts;
    return j;
}

Fixture make_fixture(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); };
    auto object = [&] { return kObjectBase + 1 + pick(kObjects); };
    auto edit_relation = [&] { return 7 + pick(6); };

    std::vector<Doc> old_docs;
    std::vector<Doc> new_docs;
    std::vector<Doc> shared;  // label-only entities present in both snapshots

    for (int p = 1; p <= 12; ++p) shared.push_back({pid(p), kRelations[p - 1].label, kRelations[p - 1].description, {}});
    for (int i = 0; i < kObjects; ++i)
        shared.push_back({qid(kObjectBase + 1 + i),
                          kObjectFirst[i % kObjectFirst.size()] + " " + kObjectSecond[i / kObjectFirst.size()], "", {}});

    std::vector<Doc> old_subjects(kSubjects);
    std::vector<Doc> new_subjects(kSubjects);
    for (int i = 0; i < kSubjects; ++i) {
        const auto label = kSubjectFirst[i % kSubjectFirst.size()] + " " + kSubjectSecond[i / kSubjectFirst.size()];
        old_subjects[i] = new_subjects[i] = Doc{qid(i + 1), label, "", {}};
    }
    auto both = [&](int subject, int prop, const Value& v) {
        old_subjects[subject - 1].claims.emplace_back(prop, v);
        new_subjects[subject - 1].claims.emplace_back(prop, v);
    };
    auto only_old = [&](int subject, int prop, const Value& v) { old_subjects[subject - 1].claims.emplace_back(prop, v); };
    auto only_new = [&](int subject, int prop, const Value& v) { new_subjects[subject - 1].claims.emplace_back(prop, v); };

    Expectations e;

    // Static: two facts per subject over P1..P6.
    for (int s = 1; s <= kSubjects; ++s) {
        const int a = 1 + pick(6);
        const int b = 1 + (a + pick(5)) % 6;
        both(s, a, object());
        both(s, b, object());
        e.static_count += 2;
    }
    // Modified objects.
    for (int s = 1; s <= 40; ++s) {
        const int r = edit_relation();
        const int before = object();
        int after = object();
        while (after == before) after = object();
        only_old(s, r, before);
        only_new(s, r, after);
        ++e.modified;
    }
    // Additions.
    for (int s = 41; s <= 80; ++s) {
        only_new(s, edit_relation(), object());
        ++e.added;
    }
    // Deletions are not edits.
    for (int s = 81; s <= 90; ++s) only_old(s, edit_relation(), object());

    // Multi-hop chains: (Qs, r1, bridge) and (bridge, r2, object), both new.
    std::vector<Doc> bridges_old;
    std::vector<Doc> bridges_new;
    for (int k = 0; k < 10; ++k) {
        bridges_old.push_back({qid(kBridgeBase + 1 + k), kBridge[k], "", {}});
        bridges_new.push_back(bridges_old.back());
    }
    for (int c = 0; c < 6; ++c) {
        const int r1 = edit_relation();
        int r2 = edit_relation();
        while (r2 == r1) r2 = edit_relation();
        only_new(91 + c, r1, kBridgeBase + 1 + c);
        bridges_new[c].claims.emplace_back(r2, object());
        e.added += 2;
        ++e.mhop;
    }

    // One planted violation family per rule, all as additions.
    only_new(97, edit_relation(), 97);  // circular
    only_new(98, edit_relation(), 98);
    e.removed_by_rule["circular"] = 2;
    only_new(99, edit_relation(), kSpecialBase + 1);  // non-Roman object
    e.removed_by_rule["non_roman"] = 1;
    only_new(100, edit_relation(), kSpecialBase + 2);  // single character
    e.removed_by_rule["single_char"] = 1;
    only_new(101, edit_relation(), kSpecialBase + 3);  // six words
    e.removed_by_rule["long_phrase"] = 1;
    only_new(102, edit_relation(), json{{"value", {{"amount", "+42"}, {"unit", "1"}}}, {"type", "quantity"}});
    only_new(103, edit_relation(),
             json{{"value", {{"time", "+2024-02-03T00:00:00Z"}, {"precision", 11}}}, {"type", "time"}});
    only_new(104, edit_relation(), json{{"value", "Blue Note"}, {"type", "string"}});
    e.removed_by_rule["non_entity"] = 3;
    only_new(105, edit_relation(), 999);  // never defined
    only_new(106, edit_relation(), 998);
    e.removed_by_rule["unresolved"] = 2;
    e.added += 10;

    // Ambiguous keys: two objects in the new snapshot, and two objects in the old one only.
    {
        const int r = edit_relation();
        const int o1 = object();
        int o2 = object();
        while (o2 == o1) o2 = object();
        only_new(107, r, o1);
        only_new(107, r, o2);
    }
    {
        const int r = edit_relation();
        const int o1 = object();
        int o2 = object();
        while (o2 == o1) o2 = object();
        only_old(108, r, o1);
        only_old(108, r, o2);
        only_new(108, r, o1);
    }
    e.ambiguous = 3;
    e.removed_by_rule["ambiguous"] = 3;

    std::vector<Doc> special{{qid(kSpecialBase + 1), "Алексей Иванов", "", {}},
                             {qid(kSpecialBase + 2), "X", "", {}},
                             {qid(kSpecialBase + 3), "The Grand Old Duke Of York", "", {}}};

    for (const auto& d : shared) old_docs.push_back(d), new_docs.push_back(d);
    old_docs.insert(old_docs.end(), old_subjects.begin(), old_subjects.end());
    new_docs.insert(new_docs.end(), new_subjects.begin(), new_subjects.end());
    old_docs.insert(old_docs.end(), bridges_old.begin(), bridges_old.end());
    new_docs.insert(new_docs.end(), bridges_new.begin(), bridges_new.end());
    old_docs.insert(old_docs.end(), special.begin(), special.end());
    new_docs.insert(new_docs.end(), special.begin(), special.end());

    auto count = [](const std::vector<Doc>& docs) {
        std::size_t n = 0;
        for (const auto& d : docs) n += d.claims.size();
        return n;
    };
    e.old_triplets = count(old_docs);
    e.new_triplets = count(new_docs);
    e.old_malformed = 1;
    e.new_malformed = 2;
    e.kept_changed = e.changed() - (e.removed_by_rule["circular"] + e.removed_by_rule["non_roman"] +
                                    e.removed_by_rule["single_char"] + e.removed_by_rule["long_phrase"] +
                                    e.removed_by_rule["non_entity"] + e.removed_by_rule["unresolved"]);
    for (const char* kind : {"update", "locality", "rephrase", "persona"}) e.qa_counts[kind] = e.kept_changed;
    e.qa_counts["mhop"] = e.mhop;

    Fixture f;
    f.old_dump = render(old_docs, {R"({"id": "Q77", "claims": )"});
    f.new_dump = render(new_docs, {"not json at all", R"({"id": 5})"});
    f.expected = e;
    return f;
}

void write_fixture(const Fixture& fixture, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto write = [&](const char* name, const std::string& body) {
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) throw Error("cannot write " + (dir / name).string());
        out << body;
    };
    write("old.json", fixture.old_dump);
    write("new.json", fixture.new_dump);
    write("expected.json", fixture.expected.to_json().dump(2) + "\n");
}

}  // namespace editbench::synth
