#pragma once
// Random, referentially consistent update batches for store and evaluation tests.

#include <random>
#include <string>

#include "editbench/store.hpp"

namespace batches {

using namespace editbench;

inline std::string random_text(std::mt19937_64& rng, std::size_t max_words) {
    static const std::vector<std::string> words{"alpha", "Bravo", "charlie", "délta", "echo", "fox\ttrot", "golf",
                                                "hotel", "\"india\"", "juliet", "kilo\\", "Łima", "mike", "🙂"};
    const std::size_t n = 1 + rng() % max_words;
    std::string out;
    for (std::size_t i = 0; i < n; ++i) out += (i ? " " : "") + words[rng() % words.size()];
    return out;
}

inline UpdateBatch random_batch(std::mt19937_64& rng, const std::string& timestep, DateRange range) {
    UpdateBatch b;
    b.timestep_id = timestep;
    b.date_range = std::move(range);
    for (auto kind : kAllKinds) b.sets[kind];
    const std::size_t n_update = rng() % 12;
    auto make = [&](QaKind kind, std::size_t i) {
        QaPair p;
        p.id = timestep + "-" + std::string(to_string(kind)) + "-" + std::to_string(i);
        p.kind = kind;
        p.timestep = timestep;
        p.question = random_text(rng, 8) + "?";
        p.answer = random_text(rng, 3);
        p.subject = random_text(rng, 2);
        p.relation = random_text(rng, 2);
        p.object = p.answer;
        p.provenance = {"Q" + std::to_string(rng() % 1000) + "|P1|Q" + std::to_string(rng() % 1000)};
        return p;
    };
    auto& updates = b.sets[QaKind::Update];
    for (std::size_t i = 0; i < n_update; ++i) updates.push_back(make(QaKind::Update, i));
    const std::size_t n_locality = rng() % 6;
    for (std::size_t i = 0; i < n_locality; ++i) b.sets[QaKind::Locality].push_back(make(QaKind::Locality, i));
    for (std::size_t i = 0; i < updates.size(); ++i) {
        if (rng() % 2) {
            auto r = make(QaKind::Rephrase, i);
            r.parent_id = updates[i].id;
            r.answer = updates[i].answer;
            b.sets[QaKind::Rephrase].push_back(r);
        }
        if (rng() % 2) {
            auto p = make(QaKind::Persona, i);
            p.parent_id = updates[i].id;
            p.persona = "Pirate";
            b.sets[QaKind::Persona].push_back(p);
        }
    }
    if (updates.size() >= 2) {
        const std::size_t n_mhop = 1 + rng() % 2;
        for (std::size_t i = 0; i < n_mhop; ++i) {
            auto m = make(QaKind::Mhop, i);
            m.provenance = {updates[rng() % updates.size()].provenance[0], updates[rng() % updates.size()].provenance[0]};
            m.relation = "r1 / r2";
            b.sets[QaKind::Mhop].push_back(m);
        }
    }
    return b;
}

}  // namespace batches
