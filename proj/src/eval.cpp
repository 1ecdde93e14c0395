#include "editbench/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "editbench/error.hpp"
#include "editbench/parallel.hpp"
#include "editbench/serialize.hpp"
#include "editbench/text.hpp"

namespace editbench {

std::optional<MatchMode> match_mode_from_string(std::string_view name) {
    if (name == "exact") return MatchMode::Exact;
    if (name == "contains") return MatchMode::Contains;
    return std::nullopt;
}

bool judge_answer(std::string_view generated, std::string_view gold, MatchMode mode) {
    const auto g = text::normalize(generated);
    const auto a = text::normalize(gold);
    if (a.empty()) return false;
    if (mode == MatchMode::Exact) return g == a;
    return g.find(a) != std::string::npos;
}

std::string_view to_string(EvalAxis axis) {
    switch (axis) {
        case EvalAxis::Update: return "update";
        case EvalAxis::Rephrase: return "rephrase";
        case EvalAxis::Personas: return "personas";
        case EvalAxis::Mhop: return "mhop";
        case EvalAxis::Locality: return "locality";
    }
    return "";
}

std::optional<EvalAxis> eval_axis_from_string(std::string_view name) {
    for (auto axis : kAllAxes)
        if (to_string(axis) == name) return axis;
    if (name == "persona") return EvalAxis::Personas;
    return std::nullopt;
}

QaKind axis_kind(EvalAxis axis) {
    switch (axis) {
        case EvalAxis::Update: return QaKind::Update;
        case EvalAxis::Rephrase: return QaKind::Rephrase;
        case EvalAxis::Personas: return QaKind::Persona;
        case EvalAxis::Mhop: return QaKind::Mhop;
        case EvalAxis::Locality: return QaKind::Locality;
    }
    return QaKind::Update;
}

namespace {

std::vector<QaPair> sorted_by_id(std::vector<QaPair> pairs) {
    std::sort(pairs.begin(), pairs.end(), [](const QaPair& a, const QaPair& b) { return a.id < b.id; });
    return pairs;
}

// Model answer with retries; nullopt (and `error` set) when the provider keeps failing.
std::optional<std::string> ask(ModelProvider& model, const std::string& question,
                               const std::optional<std::string>& context, const RetryPolicy& retry,
                               std::string& error) {
    try {
        return with_retries(retry, [&] { return model.answer(question, context); });
    } catch (const ProviderError& e) {
        error = e.what();
        return std::nullopt;
    }
}

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

EvalRecord evaluate_pairs(ModelProvider& model, const std::string& timestep_id, EvalAxis axis,
                          const std::vector<QaPair>& pairs, const EvalOptions& options) {
    const auto items = sorted_by_id(pairs);
    EvalRecord record;
    record.timestep_id = timestep_id;
    record.axis = axis;
    record.verdicts = parallel_map(items, options.max_inflight, [&](const QaPair& qa, std::size_t) {
        Verdict v;
        v.id = qa.id;
        v.question = qa.question;
        v.gold = qa.answer;
        if (auto got = ask(model, qa.question, std::nullopt, options.retry, v.error)) {
            v.generated = *got;
            v.correct = judge_answer(v.generated, v.gold, options.mode);
        } else {
            v.errored = true;
        }
        return v;
    });
    for (const auto& v : record.verdicts) {
        if (v.errored) {
            ++record.errored;
            continue;
        }
        ++record.n;
        if (v.correct) ++record.correct;
    }
    record.accuracy = ratio(record.correct, record.n);
    return record;
}

std::vector<EvalRecord> evaluate_batch(ModelProvider& model, const UpdateBatch& batch,
                                       const std::vector<EvalAxis>& axes, const EvalOptions& options) {
    std::vector<EvalRecord> out;
    out.reserve(axes.size());
    for (auto axis : axes) out.push_back(evaluate_pairs(model, batch.timestep_id, axis, batch.set(axis_kind(axis)), options));
    return out;
}

double ForgettingMatrix::at(std::size_t b, std::size_t j) const {
    if (b >= rows.size() || j > b) throw std::out_of_range("forgetting matrix cell above the diagonal");
    return rows[b][j];
}

bool ForgettingMatrix::lower_triangular() const {
    for (std::size_t b = 0; b < rows.size(); ++b)
        if (rows[b].size() != b + 1) return false;
    return true;
}

ForgettingMatrix evaluate_history(const std::vector<ModelProvider*>& states, const std::vector<UpdateBatch>& batches,
                                  const EvalOptions& options) {
    if (states.size() != batches.size())
        throw std::invalid_argument("evaluate_history needs one model state per batch");
    ForgettingMatrix m;
    for (std::size_t b = 0; b < batches.size(); ++b) {
        m.timesteps.push_back(batches[b].timestep_id);
        std::vector<double> row;
        for (std::size_t j = 0; j <= b; ++j)
            row.push_back(evaluate_pairs(*states[b], batches[j].timestep_id, EvalAxis::Update,
                                         batches[j].set(QaKind::Update), options)
                              .accuracy);
        m.rows.push_back(std::move(row));
    }
    return m;
}

ForgettingMatrix evaluate_history(ModelProvider& model, const std::vector<UpdateBatch>& batches,
                                  const std::function<void(std::size_t)>& advance, const EvalOptions& options) {
    ForgettingMatrix m;
    for (std::size_t b = 0; b < batches.size(); ++b) {
        if (advance) advance(b);
        m.timesteps.push_back(batches[b].timestep_id);
        std::vector<double> row;
        for (std::size_t j = 0; j <= b; ++j)
            row.push_back(evaluate_pairs(model, batches[j].timestep_id, EvalAxis::Update,
                                         batches[j].set(QaKind::Update), options)
                              .accuracy);
        m.rows.push_back(std::move(row));
    }
    return m;
}

LocalityConsistency locality_consistency(ModelProvider& before, ModelProvider& after,
                                         const std::vector<QaPair>& probes, const EvalOptions& options) {
    struct Outcome {
        bool errored = false;
        bool correct = false;
        bool same = false;
    };
    const auto items = sorted_by_id(probes);
    const auto outcomes = parallel_map(items, options.max_inflight, [&](const QaPair& qa, std::size_t) {
        Outcome o;
        std::string error;
        auto a0 = ask(before, qa.question, std::nullopt, options.retry, error);
        auto a1 = ask(after, qa.question, std::nullopt, options.retry, error);
        if (!a0 || !a1) {
            o.errored = true;
            return o;
        }
        o.correct = judge_answer(*a1, qa.answer, options.mode);
        o.same = text::normalize(*a0) == text::normalize(*a1);
        return o;
    });
    LocalityConsistency out;
    std::size_t correct = 0;
    std::size_t same = 0;
    for (const auto& o : outcomes) {
        if (o.errored) {
            ++out.errored;
            continue;
        }
        ++out.n;
        correct += o.correct ? 1 : 0;
        same += o.same ? 1 : 0;
    }
    out.accuracy_after = ratio(correct, out.n);
    out.consistency = ratio(same, out.n);
    return out;
}

HopStats hop_retrieval_analysis(const RagMemory& memory, const std::vector<QaPair>& mhop_pairs,
                                ModelProvider& model, std::size_t k, Embedder& embedder,
                                const EvalOptions& options) {
    const auto items = sorted_by_id(mhop_pairs);
    for (const auto& qa : items)
        if (qa.provenance.size() != 2) throw SchemaError(qa.id + " needs two provenance ids for hop analysis");

    struct Outcome {
        HopVerdict verdict;
        bool errored = false;
    };
    const auto outcomes = parallel_map(items, options.max_inflight, [&](const QaPair& qa, std::size_t) {
        Outcome o;
        o.verdict.id = qa.id;
        const auto retrieved = memory.retrieve(qa.question, k, embedder);
        for (const auto& r : retrieved) {
            if (r.entry->fact_id == qa.provenance[0]) o.verdict.hop1 = true;
            if (r.entry->fact_id == qa.provenance[1]) o.verdict.hop2 = true;
        }
        const auto ctx = build_context(qa.question, retrieved, memory.config().separator);
        std::string error;
        if (auto got = ask(model, qa.question, ctx.text, options.retry, error)) {
            o.verdict.correct = judge_answer(*got, qa.answer, options.mode);
        } else {
            o.errored = true;
        }
        return o;
    });

    HopStats stats;
    std::size_t hop1 = 0;
    std::size_t hop2 = 0;
    std::size_t correct_both = 0;
    std::size_t correct_hop1_only = 0;
    for (const auto& o : outcomes) {
        if (o.errored) continue;
        const auto& v = o.verdict;
        ++stats.n;
        hop1 += v.hop1 ? 1 : 0;
        hop2 += v.hop2 ? 1 : 0;
        if (v.hop1 && v.hop2) {
            ++stats.n_both;
            correct_both += v.correct ? 1 : 0;
        } else if (v.hop1) {
            ++stats.n_hop1_only;
            correct_hop1_only += v.correct ? 1 : 0;
        }
        stats.items.push_back(v);
    }
    stats.hop1_retrieved = ratio(hop1, stats.n);
    stats.hop2_retrieved = ratio(hop2, stats.n);
    stats.both_retrieved = ratio(stats.n_both, stats.n);
    stats.accuracy_given_both = ratio(correct_both, stats.n_both);
    stats.accuracy_given_hop1_only = ratio(correct_hop1_only, stats.n_hop1_only);
    return stats;
}

std::map<std::string, Annotation> read_annotations(const std::filesystem::path& path) {
    std::map<std::string, Annotation> out;
    auto number = [](const nlohmann::json& j, const char* key) -> std::optional<double> {
        if (!j.contains(key) || j[key].is_null()) return std::nullopt;
        if (!j[key].is_number()) throw SchemaError(std::string("annotation field '") + key + "' is not a number");
        return j[key].get<double>();
    };
    for (const auto& j : read_jsonl(path)) {
        if (!j.is_object() || !j.contains("id") || !j["id"].is_string())
            throw SchemaError("annotation record without a string id");
        Annotation a;
        a.fact_year = number(j, "fact_year");
        a.subject_count = number(j, "subject_count");
        a.object_count = number(j, "object_count");
        a.subject_views = number(j, "subject_views");
        a.object_views = number(j, "object_views");
        out[j["id"].get<std::string>()] = a;
    }
    return out;
}

std::optional<BinKey> bin_key_from_string(std::string_view name) {
    if (name == "fact_year") return BinKey::FactYear;
    if (name == "subject_count") return BinKey::SubjectCount;
    if (name == "object_count") return BinKey::ObjectCount;
    return std::nullopt;
}

namespace {

std::optional<double> key_value(const Annotation& a, BinKey key) {
    switch (key) {
        case BinKey::FactYear: return a.fact_year;
        case BinKey::SubjectCount: return a.subject_count;
        case BinKey::ObjectCount: return a.object_count;
    }
    return std::nullopt;
}

struct Keyed {
    double value;
    const Verdict* verdict;
};

// Judged verdicts with an annotation value; the rest are counted as skipped.
std::vector<Keyed> keyed_verdicts(const std::vector<Verdict>& verdicts,
                                  const std::map<std::string, Annotation>& annotations, BinKey key,
                                  std::size_t& skipped) {
    std::vector<Keyed> out;
    for (const auto& v : verdicts) {
        if (v.errored) continue;
        auto it = annotations.find(v.id);
        std::optional<double> value;
        if (it != annotations.end()) value = key_value(it->second, key);
        if (!value || std::isnan(*value)) {
            ++skipped;
            continue;
        }
        out.push_back({*value, &v});
    }
    return out;
}

void finish(Bin& bin) { bin.accuracy = ratio(bin.correct, bin.n); }

}  // namespace

Histogram bin_records(const std::vector<Verdict>& verdicts, const std::map<std::string, Annotation>& annotations,
                      BinKey key, const std::vector<double>& edges) {
    if (edges.size() < 2 || !std::is_sorted(edges.begin(), edges.end()))
        throw std::invalid_argument("bin edges must be at least two ascending values");
    Histogram h;
    std::vector<Bin> bins(edges.size() - 1);
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) bins[i] = {edges[i], edges[i + 1], 0, 0, 0.0};
    for (const auto& kv : keyed_verdicts(verdicts, annotations, key, h.skipped)) {
        if (kv.value < edges.front() || kv.value > edges.back()) {
            ++h.skipped;
            continue;
        }
        auto idx = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), kv.value) - edges.begin());
        idx = std::min(idx == 0 ? 0 : idx - 1, bins.size() - 1);
        ++bins[idx].n;
        if (kv.verdict->correct) ++bins[idx].correct;
    }
    for (auto& b : bins) {
        if (b.n == 0) continue;
        finish(b);
        h.bins.push_back(b);
    }
    return h;
}

Histogram bin_records_quantiles(const std::vector<Verdict>& verdicts,
                                const std::map<std::string, Annotation>& annotations, BinKey key,
                                std::size_t bins) {
    if (bins == 0) throw std::invalid_argument("quantile binning needs at least one bin");
    Histogram h;
    auto keyed = keyed_verdicts(verdicts, annotations, key, h.skipped);
    std::sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
        return a.value != b.value ? a.value < b.value : a.verdict->id < b.verdict->id;
    });
    const auto n = keyed.size();
    for (std::size_t q = 0; q < bins; ++q) {
        const auto lo = q * n / bins;
        const auto hi = (q + 1) * n / bins;
        if (lo == hi) continue;
        Bin b{keyed[lo].value, keyed[hi - 1].value, hi - lo, 0, 0.0};
        for (auto i = lo; i < hi; ++i) b.correct += keyed[i].verdict->correct ? 1 : 0;
        finish(b);
        h.bins.push_back(b);
    }
    return h;
}

void write_eval_jsonl(const std::vector<EvalRecord>& records, std::ostream& out) {
    for (const auto& r : records) {
        ojson j;
        j["timestep"] = r.timestep_id;
        j["axis"] = std::string(to_string(r.axis));
        j["n"] = r.n;
        j["correct"] = r.correct;
        j["errored"] = r.errored;
        j["accuracy"] = r.accuracy;
        out << j.dump() << '\n';
    }
}

std::string eval_table(const std::vector<EvalRecord>& records) {
    std::string out = "timestep  axis        n       correct  errored  accuracy\n";
    char line[160];
    for (const auto& r : records) {
        std::snprintf(line, sizeof line, "%-9s %-10s %7zu %8zu %8zu   %7.4f\n", r.timestep_id.c_str(),
                      std::string(to_string(r.axis)).c_str(), r.n, r.correct, r.errored, r.accuracy);
        out += line;
    }
    return out;
}

std::string forgetting_table(const ForgettingMatrix& matrix) {
    std::string out = "after\\on ";
    char cell[64];
    for (const auto& t : matrix.timesteps) {
        std::snprintf(cell, sizeof cell, " %8s", t.c_str());
        out += cell;
    }
    out += '\n';
    for (std::size_t b = 0; b < matrix.size(); ++b) {
        std::snprintf(cell, sizeof cell, "%-9s", matrix.timesteps[b].c_str());
        out += cell;
        for (std::size_t j = 0; j <= b; ++j) {
            std::snprintf(cell, sizeof cell, " %8.4f", matrix.rows[b][j]);
            out += cell;
        }
        out += '\n';
    }
    return out;
}

}  // namespace editbench
