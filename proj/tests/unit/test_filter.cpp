#include <map>
#include <random>

#include "doctest.h"
#include "editbench/error.hpp"
#include "editbench/filter.hpp"
#include "../support/oracles.hpp"

using namespace editbench;
using oracle::trip;

namespace {

std::optional<std::string> rule_for(const Triplet& t) {
    const auto r = first_matching_rule(t, FilterConfig{});
    if (!r) return std::nullopt;
    return std::string(rule_name(*r));
}

}  // namespace

TEST_CASE("kept example survives every rule") {
    CHECK_FALSE(rule_for(trip("Lea County Regional Airport", "state of use", "in use")).has_value());
}

TEST_CASE("each rule rejects its crafted case") {
    CHECK(rule_for(trip("iPod", "named after", "iPod")) == "circular");
    CHECK(rule_for(trip("Turnberry Lighthouse", "color", "white", 7, 1, 7)) == "circular");
    CHECK(rule_for(trip("Алексей Иванов", "occupation", "writer")) == "non_roman");
    CHECK(rule_for(trip("X", "follows", "Twitter")) == "single_char");
    CHECK(rule_for(trip("The Grand Old Duke Of York", "rank", "duke")) == "long_phrase");
    CHECK_FALSE(rule_for(trip("Five Words Are Just Fine", "rank", "duke")).has_value());

    Triplet literal{{"Q1", "Oslo"}, {"P1082", "population", ""}, Literal{"+700000", LiteralKind::Quantity}};
    CHECK(rule_for(literal) == "non_entity");
    CHECK(rule_for(Triplet{{"Q1", "Oslo"}, {"P1", "mayor", ""}, EntityRef{"Q9", ""}}) == "unresolved");
}

TEST_CASE("accented Latin is Roman") {
    CHECK(is_roman("Kékes", default_scripts()));
    CHECK(is_roman("Łódź Voivodeship", default_scripts()));
    CHECK_FALSE(is_roman("東京", default_scripts()));
    CHECK_THROWS_AS(is_roman("a", {"klingon"}), ConfigError);
}

TEST_CASE("first matching rule gets the attribution") {
    // Circular and single-character at once: circular is checked first.
    const auto out = apply_filters({trip("X", "r", "X")});
    CHECK(out.report.removed_by_rule.at("circular") == 1);
    CHECK(out.report.removed_by_rule.at("single_char") == 0);
    CHECK(out.report.reconciles());
}

TEST_CASE("disabled rules pass triplets through") {
    FilterConfig cfg;
    cfg.enabled.erase(FilterRule::SingleChar);
    CHECK_FALSE(first_matching_rule(trip("X", "follows", "Twitter"), cfg).has_value());
    cfg.max_phrase_words = 10;
    CHECK_FALSE(first_matching_rule(trip("The Grand Old Duke Of York", "rank", "duke"), cfg).has_value());
}

TEST_CASE("ambiguous keys are dropped") {
    SUBCASE("same key, two objects") {
        const auto out = drop_ambiguous({trip(1, 1, 2), trip(1, 1, 3)});
        CHECK(out.kept.empty());
        CHECK(out.report.removed_by_rule.at("ambiguous") == 2);
    }
    SUBCASE("distinct keys") {
        const auto out = drop_ambiguous({trip(1, 1, 2), trip(4, 1, 5)});
        CHECK(out.kept.size() == 2);
    }
    SUBCASE("flagged keys") {
        const auto out = drop_ambiguous({trip(1, 1, 2), trip(4, 1, 5)}, {triplet_key(trip(4, 1, 5))});
        CHECK(out.kept == std::vector<Triplet>{trip(1, 1, 2)});
    }
}

TEST_CASE("ambiguity removal equals a group-by oracle") {
    std::mt19937_64 rng(3);
    for (int round = 0; round < 20; ++round) {
        std::vector<Triplet> ts;
        for (int i = 0; i < 500; ++i)
            ts.push_back(trip(1 + static_cast<int>(rng() % 150), 1 + static_cast<int>(rng() % 3),
                              1000 + static_cast<int>(rng() % 4)));
        std::map<std::string, std::set<std::string>> objects;
        for (const auto& t : ts) objects[triplet_key(t)].insert(object_key(t.object));
        std::vector<Triplet> want;
        for (const auto& t : ts)
            if (objects[triplet_key(t)].size() == 1) want.push_back(t);
        const auto got = drop_ambiguous(ts);
        CHECK(got.kept == want);
        CHECK(got.report.reconciles());
        CHECK(got.report.input_count == ts.size());
    }
}

TEST_CASE("reports reconcile on random mixtures") {
    std::mt19937_64 rng(9);
    const std::vector<std::string> labels{"Oslo", "X", "Алексей", "Very Long Label With Many Words", "Bergen", ""};
    for (int round = 0; round < 20; ++round) {
        std::vector<Triplet> ts;
        for (int i = 0; i < 300; ++i) {
            Triplet t{{"Q" + std::to_string(rng() % 40), labels[rng() % labels.size()]},
                      {"P1", "near", ""},
                      EntityRef{"Q" + std::to_string(rng() % 40), labels[rng() % labels.size()]}};
            if (rng() % 7 == 0) t.object = Literal{"3", LiteralKind::Quantity};
            ts.push_back(t);
        }
        auto out = apply_filters(ts);
        CHECK(out.report.reconciles());
        std::size_t brute_kept = 0;
        for (const auto& t : ts) brute_kept += first_matching_rule(t, FilterConfig{}) ? 0 : 1;
        CHECK(out.kept.size() == brute_kept);
        auto amb = drop_ambiguous(out.kept);
        FilterReport total = out.report;
        total.kept_count = 0;
        total += amb.report;
        total.input_count = ts.size();
        CHECK(total.kept_count == amb.kept.size());
        CHECK(total.reconciles());
    }
}

TEST_CASE("rule names round-trip") {
    for (auto r : {FilterRule::Circular, FilterRule::NonRoman, FilterRule::SingleChar, FilterRule::LongPhrase,
                   FilterRule::NonEntity, FilterRule::Unresolved, FilterRule::Ambiguous})
        CHECK(rule_from_name(rule_name(r)) == r);
}
