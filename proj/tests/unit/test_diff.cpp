#include <filesystem>
#include <random>

#include "doctest.h"
#include "editbench/diff.hpp"
#include "../support/oracles.hpp"

using namespace editbench;
using oracle::make_store;
using oracle::trip;

TEST_CASE("identical snapshots diff to all-static") {
    const auto d = diff_snapshots(make_store({trip(1, 1, 2)}), make_store({trip(1, 1, 2)}));
    CHECK(d.static_set == std::vector<Triplet>{trip(1, 1, 2)});
    CHECK(d.changed_set.empty());
}

TEST_CASE("modification and addition") {
    // old={(A,r,B)}, new={(A,r,C),(D,r,E)}
    const auto d = diff_snapshots(make_store({trip(1, 1, 2)}), make_store({trip(1, 1, 3), trip(4, 1, 5)}));
    CHECK(d.static_set.empty());
    REQUIRE(d.changed_set.size() == 2);
    CHECK(d.changed_set[0].triplet == trip(1, 1, 3));
    CHECK(d.changed_set[0].change_kind == ChangeKind::Modified);
    REQUIRE(d.changed_set[0].old_object.has_value());
    CHECK(object_key(*d.changed_set[0].old_object) == "Q2");
    CHECK(d.changed_set[1].triplet == trip(4, 1, 5));
    CHECK(d.changed_set[1].change_kind == ChangeKind::New);
    CHECK_FALSE(d.changed_set[1].old_object.has_value());
}

TEST_CASE("deletions are not edits") {
    const auto d = diff_snapshots(make_store({trip(1, 1, 2), trip(3, 1, 4)}), make_store({trip(1, 1, 2)}));
    CHECK(d.static_set.size() == 1);
    CHECK(d.changed_set.empty());
}

TEST_CASE("multi-object keys go to ambiguous") {
    const auto d = diff_snapshots(make_store({trip(1, 1, 2)}), make_store({trip(1, 1, 2), trip(1, 1, 3)}));
    CHECK(d.static_set.empty());
    CHECK(d.changed_set.empty());
    CHECK(d.ambiguous.size() == 2);
}

TEST_CASE("diff equals the brute-force oracle on random 1000-triplet pairs") {
    std::mt19937_64 rng(1000);
    for (int round = 0; round < 10; ++round) {
        const auto pair = oracle::random_snapshot_pair(rng, 1000);
        const auto got = diff_snapshots(make_store(pair.old_triplets), make_store(pair.new_triplets));
        const auto want = oracle::brute_force_diff(pair.old_triplets, pair.new_triplets);
        CHECK(got == want);
    }
}

TEST_CASE("spilled external sort gives the same result") {
    std::mt19937_64 rng(5);
    const auto pair = oracle::random_snapshot_pair(rng, 3000);
    const auto in_memory = diff_snapshots(make_store(pair.old_triplets), make_store(pair.new_triplets));
    DiffOptions spill;
    spill.memory_threshold = 256;
    spill.spill_dir = std::filesystem::temp_directory_path() / "editbench-diff-spill";
    const auto external = diff_snapshots(make_store(pair.old_triplets), make_store(pair.new_triplets), spill);
    CHECK(external == in_memory);
}

TEST_CASE("static and changed sets are disjoint and changed entries exist in the new snapshot") {
    std::mt19937_64 rng(77);
    const auto pair = oracle::random_snapshot_pair(rng, 2000);
    const auto d = diff_snapshots(make_store(pair.old_triplets), make_store(pair.new_triplets));
    std::set<std::string> statics;
    for (const auto& t : d.static_set) statics.insert(triplet_id(t));
    std::set<std::string> news;
    for (const auto& t : pair.new_triplets) news.insert(triplet_id(t));
    for (const auto& c : d.changed_set) {
        CHECK(statics.count(triplet_id(c.triplet)) == 0);
        CHECK(news.count(triplet_id(c.triplet)) == 1);
        CHECK((c.change_kind == ChangeKind::Modified) ==
              (c.old_object.has_value() && object_key(*c.old_object) != object_key(c.triplet.object)));
    }
}
