// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "editbench/diff.hpp"
#include "editbench/error.hpp"
#include "editbench/eval.hpp"
#include "editbench/filter.hpp"
#include "editbench/probes.hpp"
#include "editbench/qa.hpp"
#include "editbench/rag.hpp"
#include "editbench/store.hpp"
#include "json.hpp"
#include "../support/batches.hpp"
#include "../support/oracles.hpp"

using namespace editbench;
namespace fs = std::filesystem;
using oracle::trip;
using Clock = std::chrono::steady_clock;

namespace {

const fs::path kFixture = fs::path(EDITBENCH_FIXTURE_DIR) / "synth200";

/// Collects failure messages; an empty list means the criterion passed.
struct Check {
    std::vector<std::string> failures;
    void expect(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << s;
}

fs::path fresh(const std::string& name) {
    const auto dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

QaPair qa_of(std::string q, std::string a) {
    QaPair p;
    p.question = std::move(q);
    p.answer = std::move(a);
    return p;
}

EvalOptions fast_eval() {
    EvalOptions o;
    o.retry.base_delay = std::chrono::milliseconds(0);
    return o;
}

class TableEmbedder final : public Embedder {
public:
    explicit TableEmbedder(std::map<std::string, Embedding> table) : table_(std::move(table)) {}
    std::size_t dim() const override { return table_.begin()->second.size(); }
    std::vector<Embedding> embed(const std::vector<std::string>& texts) override {
        std::vector<Embedding> out;
        for (const auto& t : texts) out.push_back(table_.at(t));
        return out;
    }

private:
    std::map<std::string, Embedding> table_;
};

// ---- 1 -------------------------------------------------------------------------------

void diff_equivalence(Check& c, std::string& note) {
    std::mt19937_64 rng(1);
    double diff_time = 0;
    for (int round = 0; round < 50; ++round) {
        const std::size_t n = round == 0 ? 10000 : 1000 + rng() % 9001;
        const auto pair = oracle::random_snapshot_pair(rng, n);
        const auto old_store = oracle::make_store(pair.old_triplets);
        const auto new_store = oracle::make_store(pair.new_triplets);
        const auto t0 = Clock::now();
        const auto got = diff_snapshots(old_store, new_store);
        diff_time += seconds_since(t0);
        c.expect(got == oracle::brute_force_diff(pair.old_triplets, pair.new_triplets),
                 "round " + std::to_string(round) + " differs from oracle");
    }
    c.expect(diff_time < 5.0, "diff time " + std::to_string(diff_time) + " s");
    note = "diff time " + std::to_string(diff_time).substr(0, 5) + " s";
}

// ---- 2 -------------------------------------------------------------------------------

void filter_conformance(Check& c, std::string&) {
    auto rule = [](const Triplet& t) -> std::string {
        const auto r = first_matching_rule(t, FilterConfig{});
        return r ? std::string(rule_name(*r)) : "kept";
    };
    c.expect(rule(trip("Lea County Regional Airport", "state of use", "in use")) == "kept", "kept example rejected");
    c.expect(rule(trip("iPod", "named after", "iPod")) == "circular", "circular label");
    c.expect(rule(trip("Turnberry Lighthouse", "color", "white", 7, 1, 7)) == "circular", "circular id");
    c.expect(rule(trip("Алексей Иванов", "occupation", "writer")) == "non_roman", "non-roman");
    c.expect(rule(trip("X", "follows", "Twitter")) == "single_char", "single char");
    c.expect(rule(trip("The Grand Old Duke Of York", "rank", "duke")) == "long_phrase", "six words");
    c.expect(rule(Triplet{{"Q1", "Oslo"}, {"P1082", "population", ""}, Literal{"+700000", LiteralKind::Quantity}}) ==
                 "non_entity",
             "literal object");
    const auto amb = drop_ambiguous({trip(1, 1, 2), trip(1, 1, 3), trip(4, 1, 5)});
    c.expect(amb.kept == std::vector<Triplet>{trip(4, 1, 5)}, "ambiguous key kept");
    c.expect(amb.report.removed_by_rule.at("ambiguous") == 2, "ambiguous count");

    std::mt19937_64 rng(2);
    const std::vector<std::string> labels{"Oslo", "X", "Алексей", "Very Long Label With Many Words", "Bergen", ""};
    for (int round = 0; round < 50; ++round) {
        std::vector<Triplet> ts;
        for (int i = 0; i < 400; ++i) {
            Triplet t{{"Q" + std::to_string(rng() % 60), labels[rng() % labels.size()]},
                      {"P" + std::to_string(rng() % 2), "near", ""},
                      EntityRef{"Q" + std::to_string(rng() % 60), labels[rng() % labels.size()]}};
            if (rng() % 7 == 0) t.object = Literal{"3", LiteralKind::Quantity};
            ts.push_back(t);
        }
        const auto rules = apply_filters(ts);
        const auto both = drop_ambiguous(rules.kept);
        std::size_t removed = 0;
        for (const auto& [name, n] : rules.report.removed_by_rule) removed += n;
        for (const auto& [name, n] : both.report.removed_by_rule) removed += n;
        c.expect(rules.report.reconciles() && both.report.reconciles(), "report does not reconcile");
        c.expect(removed + both.kept.size() == ts.size(), "counts do not sum to input size");
    }
}

// ---- 3 -------------------------------------------------------------------------------

void mhop_equivalence(Check& c, std::string&) {
    std::mt19937_64 rng(3);
    std::size_t tuples = 0;
    for (int round = 0; round < 50; ++round) {
        const std::size_t n = round == 0 ? 5000 : 100 + rng() % 4901;
        const auto changed = oracle::random_changed(rng, n, static_cast<int>(std::max<std::size_t>(20, n / 15)));
        const auto got = build_mhop_tuples(changed);
        tuples += got.size();
        c.expect(got == oracle::brute_force_mhop(changed), "round " + std::to_string(round) + " differs from oracle");
    }
    c.expect(tuples > 0, "no tuples generated");

    const ChangedTriplet a{trip("podcast", "named after", "iPod", 1, 138, 2), ChangeKind::New, std::nullopt};
    const ChangedTriplet b{trip("iPod", "manufacturer", "Apple", 2, 176, 3), ChangeKind::New, std::nullopt};
    const auto out = build_mhop_tuples({a, b});
    c.expect(out.size() == 1, "podcast example tuple count");
    if (out.size() == 1) {
        const auto& q = out[0];
        c.expect(q.e0.label == "podcast" && q.r1.label == "named after" && q.e1.label == "iPod" &&
                     q.r2.label == "manufacturer" && q.e2.label == "Apple",
                 "podcast example labels");
    }
}

// ---- 4 -------------------------------------------------------------------------------

void locality_pairing(Check& c, std::string& note) {
    static const std::vector<std::string> words{"north", "river", "castle", "green", "iron", "harbor",
                                                "stone", "valley", "bridge", "tower", "mill", "lake"};
    static const std::vector<std::string> rel_words{"capital", "owner", "color", "founder", "mayor", "sponsor"};
    auto phrase = [](std::mt19937_64& rng, const std::vector<std::string>& pool, int max_len) {
        const int len = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_len));
        std::string out;
        for (int i = 0; i < len; ++i) out += (i ? " " : "") + pool[rng() % pool.size()];
        return out;
    };
    StubEmbedder emb(128);
    std::mt19937_64 rng(4);
    std::size_t matched = 0;
    std::size_t empty = 0;
    for (int round = 0; round < 1000; ++round) {
        std::vector<Triplet> statics;
        const std::size_t n_static = 5 + rng() % 40;
        for (std::size_t i = 0; i < n_static; ++i) {
            const auto o = rng() % 6;
            statics.push_back({{"Q" + std::to_string(i + 10), phrase(rng, words, 3)},
                               {"P" + std::to_string(rng() % 6), rel_words[rng() % rel_words.size()], ""},
                               EntityRef{"Q" + std::to_string(500 + o), "obj " + std::to_string(o)}});
        }
        const auto o = rng() % 6;
        const Triplet changed{{"Q1", phrase(rng, words, 3)},
                              {"P9", rel_words[rng() % rel_words.size()], ""},
                              EntityRef{"Q" + std::to_string(500 + o), "obj " + std::to_string(o)}};
        const auto r = build_locality_probes({{changed, ChangeKind::New, std::nullopt}}, statics, emb);
        const long want = oracle::brute_force_locality(changed, statics, emb);
        if (want < 0) {
            empty += 1;
            matched += r.probes.empty() ? 1 : 0;
            continue;
        }
        if (r.probes.size() != 1) continue;
        const auto& probe = r.probes[0].probe;
        c.expect(distinct_objects(probe.object, changed.object), "probe shares the changed object");
        matched += probe == statics[static_cast<std::size_t>(want)] ? 1 : 0;
    }
    c.expect(matched == 1000, std::to_string(matched) + "/1000 match the exhaustive scan");
    note = std::to_string(matched) + "/1000 match, " + std::to_string(empty) + " without candidate";
}

// ---- 5 -------------------------------------------------------------------------------

void qa_validation(Check& c, std::string&) {
    const Triplet turnberry = trip("Turnberry Lighthouse", "color", "white", 1, 462, 2);
    MhopQuintuple novak{{"Q1", "Josef Novak"}, {"P27", "country of citizenship", ""}, {"Q28", "Hungary"},
                        {"P610", "highest point", ""}, {"Q9", "Kékes"}, "", ""};
    novak.first_id = triplet_id(novak.first());
    novak.second_id = triplet_id(novak.second());

    c.expect(validate_qa(qa_of("What is the color of Turnberry Lighthouse?", "white"), turnberry).pass(),
             "Turnberry example fails");
    c.expect(validate_qa(qa_of("What is the highest point of the country of citizenship of Josef Novak?", "Kékes"),
                         novak)
                 .pass(),
             "Novak example fails");
    c.expect(validate_qa(qa_of("Is white the color of Turnberry Lighthouse?", "white"), turnberry).reason() ==
                 kAnswerLeak,
             "leak mutant");
    c.expect(validate_qa(qa_of("What is its color?", "white"), turnberry).reason() == kMissingSubject,
             "missing-subject mutant");
    c.expect(validate_qa(qa_of("What is the highest point of the country of citizenship of Josef Novak? Kékes?", "Kékes"),
                         novak)
                 .reason() == kAnswerLeak,
             "mhop leak mutant");
    c.expect(validate_qa(qa_of("What is the highest point of the country of citizenship of him?", "Kékes"), novak)
                     .reason() == kMissingSubject,
             "mhop missing-subject mutant");
}

// ---- 6 -------------------------------------------------------------------------------

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string("\"") + EDITBENCH_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> tree_bytes(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
    return out;
}

void pipeline_determinism(Check& c, std::string& note) {
    std::vector<fs::path> runs;
    for (int i = 0; i < 2; ++i) {
        const auto out = fresh("editbench-accept-run" + std::to_string(i));
        const int rc = run_cli("--config " + (kFixture / "config.toml").string() + " --replay-dir " +
                                   (kFixture / "replay").string() + " --seed 7 --out-dir " + out.string() +
                                   " pipeline --old " + (kFixture / "old.json").string() + " --new " +
                                   (kFixture / "new.json").string(),
                               out.parent_path() / ("editbench-accept-run" + std::to_string(i) + ".log"));
        c.expect(rc == 0, "run " + std::to_string(i) + " exited " + std::to_string(rc));
        runs.push_back(out);
    }
    if (!c.failures.empty()) return;
    const auto a = tree_bytes(runs[0] / "dataset");
    const auto b = tree_bytes(runs[1] / "dataset");
    c.expect(!a.empty() && a == b, "dataset directories differ");

    const auto expected = nlohmann::json::parse(slurp(kFixture / "expected.json"));
    const auto batch = load_timestep(runs[0] / "dataset", "T1");
    for (auto kind : kAllKinds) {
        const auto want = expected["qa_counts"][std::string(to_string(kind))].get<std::size_t>();
        c.expect(batch.set(kind).size() == want, std::string(to_string(kind)) + " count " +
                                                      std::to_string(batch.set(kind).size()) + " != " +
                                                      std::to_string(want));
    }
    const auto filter = nlohmann::json::parse(slurp(runs[0] / "filter" / "summary.json"));
    for (const auto& [rule, n] : expected["removed_by_rule"].items())
        c.expect(filter["changed"]["removed_by_rule"][rule] == n, "removed_by_rule." + rule);
    note = std::to_string(a.size()) + " files identical";
}

// ---- 7 -------------------------------------------------------------------------------

std::vector<MemoryEntry> random_entries(std::mt19937_64& rng, std::size_t n, std::size_t dim,
                                        std::vector<std::vector<float>>& vectors) {
    std::vector<MemoryEntry> out;
    for (std::size_t i = 0; i < n; ++i) {
        MemoryEntry e;
        e.source_id = "s" + std::to_string(i);
        e.question = "q" + std::to_string(i);
        e.answer = "a" + std::to_string(i);
        e.embedding = oracle::random_unit(rng, dim);
        vectors.push_back(e.embedding);
        out.push_back(std::move(e));
    }
    return out;
}

void rag_retrieval(Check& c, std::string& note) {
    constexpr std::size_t kDim = 32;
    std::mt19937_64 rng(7);
    std::vector<std::vector<float>> vectors;
    const auto entries = random_entries(rng, 10000, kDim, vectors);

    RagMemory exact;
    exact.add_embedded(entries);
    RagConfig approx_cfg;
    approx_cfg.mode = RetrievalMode::Approximate;
    RagMemory approx(approx_cfg);
    approx.add_embedded(entries);

    std::size_t hits = 0;
    std::size_t total = 0;
    for (int q = 0; q < 200; ++q) {
        const auto query = oracle::random_unit(rng, kDim);
        for (std::size_t k : {1, 2, 10}) {
            const auto got = exact.retrieve_vector(query, k);
            const auto want = oracle::brute_force_knn(vectors, query, k);
            bool same = got.size() == want.size();
            for (std::size_t i = 0; same && i < k; ++i) same = got[i].entry->id == want[i];
            c.expect(same, "exact k=" + std::to_string(k) + " differs on query " + std::to_string(q));
        }
        const auto top2 = exact.retrieve_vector(query, 2);
        const auto got = approx.retrieve_vector(query, 2);
        for (const auto& w : top2) {
            ++total;
            for (const auto& g : got) hits += g.entry->id == w.entry->id ? 1 : 0;
        }
    }
    const double recall = double(hits) / double(total);
    c.expect(recall >= 0.95, "approximate recall@2 " + std::to_string(recall));

    StubEmbedder emb(256);
    RagMemory stored;
    std::vector<QaPair> pairs;
    for (int i = 0; i < 50; ++i) {
        QaPair p = qa_of("Who is the current owner of estate number " + std::to_string(i) + "?",
                         "owner " + std::to_string(i));
        p.id = "u" + std::to_string(i);
        p.provenance = {"f" + std::to_string(i)};
        pairs.push_back(p);
    }
    stored.add_entries(pairs, emb);
    const auto r = stored.retrieve(pairs[17].question, 1, emb);
    c.expect(!r.empty() && r[0].entry->source_id == "u17", "stored question not at rank 1");
    c.expect(!r.empty() && std::abs(r[0].similarity - 1.0) <= 1e-6, "rank-1 similarity not 1");
    std::ostringstream msg;
    msg.precision(4);
    msg << "recall@2 " << recall;
    note = msg.str();
}

// ---- 8, 9 ----------------------------------------------------------------------------

UpdateBatch owner_batch(const std::string& ts, int n) {
    static const std::vector<std::string> names{"amber", "birch", "cedar", "dune", "ember", "fjord", "garnet",
                                                "heath", "indigo", "juniper", "kestrel", "lumen"};
    UpdateBatch b;
    b.timestep_id = ts;
    for (auto k : kAllKinds) b.sets[k];
    for (int i = 0; i < n; ++i) {
        const auto s = std::to_string(i);
        QaPair p = qa_of("Who owns the " + ts + " " + names[static_cast<std::size_t>(i) % names.size()] + " estate " + s + "?",
                         ts + " owner " + s);
        p.id = ts + "-u" + s;
        p.kind = QaKind::Update;
        p.timestep = ts;
        p.provenance = {p.id + "-fact"};
        b.sets[QaKind::Update].push_back(p);
    }
    return b;
}

void memorization(Check& c, std::string& note) {
    auto emb = std::make_shared<StubEmbedder>(256);

    // The fixture's own update set, straight from the pipeline output of criterion 6.
    const auto fixture = load_timestep(fs::temp_directory_path() / "editbench-accept-run0" / "dataset", "T1");
    auto memory = std::make_shared<RagMemory>();
    memory->add_entries(fixture.set(QaKind::Update), *emb);
    RagModel model(memory, std::make_shared<CopyFirstAnswerModel>(), emb, 2);
    for (const auto& r : evaluate_batch(model, fixture, {EvalAxis::Update}, fast_eval())) {
        c.expect(r.n == fixture.set(QaKind::Update).size() && r.accuracy == 1.0,
                 "fixture update accuracy " + std::to_string(r.accuracy));
        note = "fixture update accuracy " + std::to_string(r.correct) + "/" + std::to_string(r.n);
    }

    const std::vector<UpdateBatch> bs{owner_batch("T1", 30), owner_batch("T2", 30), owner_batch("T3", 30)};
    auto history_memory = std::make_shared<RagMemory>();
    RagModel history_model(history_memory, std::make_shared<CopyFirstAnswerModel>(), emb, 2);
    const auto f = evaluate_history(
        history_model, bs, [&](std::size_t b) { history_memory->add_entries(bs[b].set(QaKind::Update), *emb); },
        fast_eval());
    c.expect(f.size() == 3 && f.lower_triangular(), "history shape");
    for (std::size_t b = 0; b < f.size(); ++b)
        for (std::size_t j = 0; j <= b; ++j) c.expect(f.at(b, j) == 1.0, "forgetting at " + std::to_string(b) + "," + std::to_string(j));
}

void forgetting_bookkeeping(Check& c, std::string&) {
    const std::vector<UpdateBatch> bs{owner_batch("T1", 4), owner_batch("T2", 4), owner_batch("T3", 4)};
    // State s knows batches 0..s; state 2 lost the first two facts of batch 0, state 1 the
    // last fact of batch 1.
    std::vector<std::unique_ptr<LookupModel>> states;
    for (std::size_t s = 0; s < 3; ++s) {
        std::map<std::string, std::string> table;
        for (std::size_t j = 0; j <= s; ++j)
            for (const auto& qa : bs[j].set(QaKind::Update)) table[qa.question] = qa.answer;
        if (s == 1) table.erase(bs[1].set(QaKind::Update)[3].question);
        if (s == 2) {
            table.erase(bs[0].set(QaKind::Update)[0].question);
            table.erase(bs[0].set(QaKind::Update)[1].question);
        }
        states.push_back(std::make_unique<LookupModel>(table));
    }
    const auto f = evaluate_history({states[0].get(), states[1].get(), states[2].get()}, bs, fast_eval());
    const std::vector<std::vector<double>> expected{{1.0}, {1.0, 0.75}, {0.5, 1.0, 1.0}};
    c.expect(f.rows == expected, "matrix differs from the hand-computed table");
    c.expect(f.lower_triangular(), "not lower-triangular");
    for (std::size_t b = 0; b < 3; ++b) {
        const auto diag =
            evaluate_pairs(*states[b], bs[b].timestep_id, EvalAxis::Update, bs[b].set(QaKind::Update), fast_eval());
        c.expect(f.at(b, b) == diag.accuracy, "diagonal " + std::to_string(b));
    }
}

// ---- 10 ------------------------------------------------------------------------------

QaPair fact_pair(const std::string& q, const std::string& a, const std::string& f) {
    QaPair p = qa_of(q, a);
    p.id = q;
    p.kind = QaKind::Update;
    p.timestep = "T1";
    p.provenance = {f};
    return p;
}

QaPair mhop_pair(const std::string& q, const std::string& a, const std::string& f1, const std::string& f2) {
    QaPair p = qa_of(q, a);
    p.id = q;
    p.kind = QaKind::Mhop;
    p.timestep = "T1";
    p.provenance = {f1, f2};
    return p;
}

void hop_diagnostics(Check& c, std::string&) {
    auto unit = [](std::vector<std::pair<std::size_t, float>> parts) {
        Embedding v(7, 0.0F);
        for (auto [i, x] : parts) v[i] = x;
        return v;
    };
    TableEmbedder emb({{"f1a", unit({{0, 1}})},
                       {"f1b", unit({{5, 1}})},
                       {"f2a", unit({{1, 1}})},
                       {"f2b", unit({{2, 1}})},
                       {"f3a", unit({{6, 1}})},
                       {"f3b", unit({{3, 1}})},
                       {"x", unit({{4, 1}})},
                       {"m1", unit({{0, 0.8F}, {4, 0.6F}})},
                       {"m2", unit({{1, 0.6F}, {2, 0.8F}})},
                       {"m3", unit({{3, 0.8F}, {4, 0.6F}})}});
    RagMemory memory;
    memory.add_entries({fact_pair("f1a", "A1", "F1a"), fact_pair("f1b", "B1", "F1b"), fact_pair("f2a", "A2", "F2a"),
                        fact_pair("f2b", "B2", "F2b"), fact_pair("f3a", "A3", "F3a"), fact_pair("f3b", "B3", "F3b"),
                        fact_pair("x", "X", "FX")},
                       emb);
    const std::vector<QaPair> items{mhop_pair("m1", "B1", "F1a", "F1b"), mhop_pair("m2", "B2", "F2a", "F2b"),
                                    mhop_pair("m3", "B3", "F3a", "F3b")};
    CopyFirstAnswerModel copy;
    const auto s = hop_retrieval_analysis(memory, items, copy, 2, emb, fast_eval());
    auto near = [](double a, double b) { return std::abs(a - b) < 1e-12; };
    c.expect(s.n == 3 && near(s.hop1_retrieved, 2.0 / 3) && near(s.hop2_retrieved, 2.0 / 3) &&
                 near(s.both_retrieved, 1.0 / 3),
             "planted retrieval rates");
    c.expect(s.n_both == 1 && s.n_hop1_only == 1 && s.accuracy_given_both == 1.0 && s.accuracy_given_hop1_only == 0.0,
             "planted conditional accuracies");
    c.expect(hop_retrieval_analysis(memory, items, copy, memory.size(), emb, fast_eval()).both_retrieved == 1.0,
             "k = |M| does not retrieve both");

    std::mt19937_64 rng(10);
    for (int run = 0; run < 1000; ++run) {
        const std::size_t n_facts = 2 + rng() % 30;
        const std::size_t dim = 4 + rng() % 12;
        std::map<std::string, Embedding> table;
        std::vector<QaPair> facts;
        for (std::size_t i = 0; i < n_facts; ++i) {
            const auto q = "f" + std::to_string(i);
            table[q] = oracle::random_unit(rng, dim);
            facts.push_back(fact_pair(q, "a" + std::to_string(i), "F" + std::to_string(i)));
        }
        std::vector<QaPair> mhops;
        const std::size_t n_items = 1 + rng() % 10;
        for (std::size_t i = 0; i < n_items; ++i) {
            const auto q = "m" + std::to_string(i);
            table[q] = oracle::random_unit(rng, dim);
            const auto a = rng() % n_facts;
            const auto b = rng() % n_facts;
            mhops.push_back(mhop_pair(q, "a" + std::to_string(b), "F" + std::to_string(a), "F" + std::to_string(b)));
        }
        TableEmbedder run_emb(table);
        RagMemory m;
        m.add_entries(facts, run_emb);
        const std::size_t k = 1 + rng() % n_facts;
        const auto stats = hop_retrieval_analysis(m, mhops, copy, k, run_emb, fast_eval());
        if (stats.both_retrieved > std::min(stats.hop1_retrieved, stats.hop2_retrieved) + 1e-12) {
            c.expect(false, "both > min(hop1, hop2) in run " + std::to_string(run));
            break;
        }
        if (run % 10 == 0) {
            const auto all = hop_retrieval_analysis(m, mhops, copy, m.size(), run_emb, fast_eval());
            c.expect(all.both_retrieved == 1.0, "k = |M| below 1 in run " + std::to_string(run));
        }
    }
}

// ---- 11 ------------------------------------------------------------------------------

void store_round_trip(Check& c, std::string& note) {
    const auto root = fs::temp_directory_path() / "editbench-accept-store";
    std::mt19937_64 rng(11);
    std::size_t detected = 0;
    std::size_t corrupted = 0;
    for (int i = 0; i < 200; ++i) {
        const auto ts = "T" + std::to_string(i);
        const auto batch = batches::random_batch(rng, ts, {"2020-01-01", "2020-01-02"});
        fs::remove_all(root);
        emit_timestep(batch, root);
        c.expect(load_timestep(root, ts) == batch, "batch " + ts + " does not round-trip");

        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(root / ts))
            if (fs::file_size(e.path()) > 0) files.push_back(e.path());
        if (files.empty()) continue;  // an empty batch has no bytes to corrupt
        ++corrupted;
        const auto victim = files[rng() % files.size()];
        auto bytes = slurp(victim);
        const auto pos = rng() % bytes.size();
        bytes[pos] = static_cast<char>(bytes[pos] ^ static_cast<char>(1 + rng() % 255));
        spit(victim, bytes);
        try {
            load_timestep(root, ts);
            c.expect(false, "corruption of " + victim.filename().string() + " in " + ts + " undetected at byte " + std::to_string(pos) + " of " + std::to_string(bytes.size()));
        } catch (const IntegrityError&) {
            ++detected;
        }
    }
    c.expect(detected == corrupted, std::to_string(detected) + "/" + std::to_string(corrupted) + " corruptions detected");
    note = std::to_string(detected) + "/" + std::to_string(corrupted) + " corruptions detected";
    fs::remove_all(root);
}

}  // namespace

int main() {
    struct Criterion {
        int number;
        const char* name;
        std::function<void(Check&, std::string&)> run;
    };
    const std::vector<Criterion> criteria{
        {1, "diff oracle equivalence", diff_equivalence},
        {2, "filter conformance", filter_conformance},
        {3, "mhop join equivalence", mhop_equivalence},
        {4, "locality pairing", locality_pairing},
        {5, "qa validation", qa_validation},
        {6, "pipeline determinism", pipeline_determinism},
        {7, "rag retrieval", rag_retrieval},
        {8, "memorization", memorization},
        {9, "forgetting bookkeeping", forgetting_bookkeeping},
        {10, "hop diagnostics", hop_diagnostics},
        {11, "store round-trip", store_round_trip},
    };
    int failed = 0;
    const auto start = Clock::now();
    for (const auto& criterion : criteria) {
        Check check;
        std::string note;
        const auto t0 = Clock::now();
        try {
            criterion.run(check, note);
        } catch (const std::exception& e) {
            check.failures.push_back(std::string("exception: ") + e.what());
        }
        const double secs = seconds_since(t0);
        char timing[32];
        std::snprintf(timing, sizeof timing, "%.2fs", secs);
        if (check.failures.empty()) {
            std::cout << "PASS " << criterion.number << " " << criterion.name << " (" << timing
                      << (note.empty() ? "" : ", " + note) << ")\n";
        } else {
            ++failed;
            std::cout << "FAIL " << criterion.number << " " << criterion.name << " (" << timing << "): "
                      << check.failures.front();
            if (check.failures.size() > 1) std::cout << " [+" << check.failures.size() - 1 << " more]";
            std::cout << "\n";
        }
        std::cout.flush();
    }
    std::printf("%d/%zu criteria passed in %.1fs\n", static_cast<int>(criteria.size()) - failed, criteria.size(),
                seconds_since(start));
    return failed == 0 ? 0 : 1;
}
