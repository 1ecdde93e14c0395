#include "editbench/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "editbench/error.hpp"
#include "editbench/eval.hpp"
#include "editbench/filter.hpp"
#include "editbench/ingest.hpp"
#include "editbench/qa.hpp"
#include "editbench/rag.hpp"
#include "editbench/store.hpp"

namespace editbench {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Stage outputs are built in "<dest>.partial" and renamed into place on success. An
// interrupted stage, or one over an error budget, leaves only the flagged partial directory.
class Staging {
public:
    explicit Staging(fs::path dest) : dest_(std::move(dest)), partial_(dest_.string() + ".partial") {
        fs::remove_all(partial_);
        fs::create_directories(partial_);
    }
    const fs::path& dir() const { return partial_; }
    fs::path operator/(const std::string& name) const { return partial_ / name; }
    void commit(const StageResult& result) const {
        auto summary = result.summary;
        if (!result.ok()) summary["violations"] = result.violations;
        std::ofstream(partial_ / "summary.json", std::ios::binary) << summary.dump(2) << '\n';
        fs::remove_all(dest_);
        if (result.ok()) fs::rename(partial_, dest_);
    }

private:
    fs::path dest_;
    fs::path partial_;
};

void write_json_lines(const fs::path& path, const std::vector<ojson>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto& r : records) out << r.dump() << '\n';
}

void require_dir(const fs::path& dir, const std::string& what) {
    if (!fs::is_directory(dir)) throw Error(what + " not found at " + dir.string());
}

ojson report_json(const FilterReport& r) {
    ojson j;
    j["input_count"] = r.input_count;
    j["kept_count"] = r.kept_count;
    ojson removed = ojson::object();
    for (auto rule : {FilterRule::Circular, FilterRule::NonRoman, FilterRule::SingleChar, FilterRule::LongPhrase,
                      FilterRule::NonEntity, FilterRule::Unresolved, FilterRule::Ambiguous}) {
        const std::string name(rule_name(rule));
        auto it = r.removed_by_rule.find(name);
        removed[name] = it == r.removed_by_rule.end() ? 0 : it->second;
    }
    j["removed_by_rule"] = removed;
    return j;
}

std::string format_line(const char* fmt, const std::string& a, double b) {
    char buf[256];
    std::snprintf(buf, sizeof buf, fmt, a.c_str(), b);
    return buf;
}

std::map<QaKind, std::vector<QaPair>> read_sets(const fs::path& dir) {
    std::map<QaKind, std::vector<QaPair>> sets;
    for (auto kind : kAllKinds) {
        const auto path = dir / (std::string(to_string(kind)) + ".jsonl");
        if (!fs::exists(path)) throw Error("missing " + path.string());
        sets[kind] = read_qa_jsonl(path);
    }
    return sets;
}

std::vector<LocalityProbe> read_probes(const fs::path& path) {
    std::vector<LocalityProbe> out;
    for (const auto& j : read_jsonl(path)) out.push_back(probe_from_json(j));
    return out;
}

std::vector<MhopQuintuple> read_mhop(const fs::path& path) {
    std::vector<MhopQuintuple> out;
    for (const auto& j : read_jsonl(path)) out.push_back(mhop_from_json(j));
    return out;
}

}  // namespace

std::shared_ptr<Embedder> make_embedder(const Config& config) {
    if (config.rag.embedder == "http") {
        if (config.rag.embed_endpoint.empty()) throw ConfigError("rag.embed_endpoint", "required for the http embedder");
        return std::make_shared<HttpEmbedder>(config.rag.embed_endpoint, config.rag.embed_dim, config.qa.forge.retry);
    }
    return std::make_shared<StubEmbedder>(config.rag.embed_dim);
}

std::shared_ptr<GenerationProvider> make_provider(const Config& config) {
    const auto timeout = std::chrono::seconds(config.qa.timeout_seconds);
    if (config.qa.provider == "formulaic") return std::make_shared<FormulaicProvider>();
    if (config.qa.provider == "http") return std::make_shared<HttpChatProvider>(config.qa.endpoint, timeout);
    if (config.qa.replay_dir.empty()) throw ConfigError("qa.replay_dir", "required for the " + config.qa.provider + " provider");
    if (config.qa.provider == "record") {
        std::shared_ptr<GenerationProvider> upstream;
        if (config.qa.endpoint.empty()) {
            upstream = std::make_shared<FormulaicProvider>();
        } else {
            upstream = std::make_shared<HttpChatProvider>(config.qa.endpoint, timeout);
        }
        return std::make_shared<RecordingProvider>(upstream, config.qa.replay_dir);
    }
    return std::make_shared<ReplayProvider>(config.qa.replay_dir);
}

std::shared_ptr<ModelProvider> make_model(const Config& config) {
    if (config.eval.model == "copy_first") return std::make_shared<CopyFirstAnswerModel>();
    if (config.eval.model == "subprocess") {
        if (config.eval.model_command.empty()) throw ConfigError("eval.model_command", "required for the subprocess model");
        return std::make_shared<SubprocessModelProvider>(config.eval.model_command);
    }
    return std::make_shared<HttpModelProvider>(config.eval.model_endpoint);
}

ojson probe_json(const LocalityProbe& p) {
    ojson j;
    j["changed_id"] = p.changed_id;
    j["probe"] = triplet_json(p.probe);
    j["similarity"] = p.similarity;
    return j;
}

LocalityProbe probe_from_json(const json& j) {
    try {
        return LocalityProbe{j.at("changed_id").get<std::string>(), triplet_from_json(j.at("probe")),
                             j.at("similarity").get<float>()};
    } catch (const json::exception& e) {
        throw SchemaError(std::string("malformed locality probe: ") + e.what());
    }
}

ojson mhop_json(const MhopQuintuple& m) {
    ojson j;
    j["first_id"] = m.first_id;
    j["second_id"] = m.second_id;
    j["first"] = triplet_json(m.first());
    j["second"] = triplet_json(m.second());
    return j;
}

MhopQuintuple mhop_from_json(const json& j) {
    try {
        const auto first = triplet_from_json(j.at("first"));
        const auto second = triplet_from_json(j.at("second"));
        const auto* bridge = std::get_if<EntityRef>(&first.object);
        const auto* tail = std::get_if<EntityRef>(&second.object);
        if (bridge == nullptr || tail == nullptr) throw SchemaError("multi-hop record with a literal object");
        return MhopQuintuple{first.subject,
                             first.relation,
                             *bridge,
                             second.relation,
                             *tail,
                             j.at("first_id").get<std::string>(),
                             j.at("second_id").get<std::string>()};
    } catch (const json::exception& e) {
        throw SchemaError(std::string("malformed multi-hop record: ") + e.what());
    }
}

StageResult stage_ingest(const Config& config, const fs::path& input, const fs::path& dest,
                         const std::string& snapshot_date) {
    StageResult result("ingest");
    auto ingest = config.ingest;
    ingest.snapshot_date = snapshot_date;
    if (ingest.source_uri.empty()) ingest.source_uri = input.filename().string();
    const auto store = load_snapshot(input, ingest);
    Staging staging(dest);
    write_canonical(store, staging.dir());
    result.summary["snapshot_date"] = store.meta().snapshot_date;
    result.summary["entities"] = store.meta().entity_count;
    result.summary["triplets"] = store.size();
    result.summary["labels"] = store.labels().labels.size();
    result.summary["malformed_records"] = store.skipped_records();
    if (store.skipped_records() > config.limits.max_malformed_records)
        result.violations.push_back("malformed records " + std::to_string(store.skipped_records()) + " exceed " +
                                    std::to_string(config.limits.max_malformed_records));
    staging.commit(result);
    result.table = "ingest " + dest.filename().string() + ": " + std::to_string(store.size()) + " triplets, " +
                   std::to_string(store.skipped_records()) + " malformed records\n";
    return result;
}

StageResult stage_diff(const Config& config, const fs::path& old_dir, const fs::path& new_dir, const fs::path& dest) {
    StageResult result("diff");
    require_dir(old_dir, "old snapshot");
    require_dir(new_dir, "new snapshot");
    const auto old_store = read_canonical(old_dir);
    const auto new_store = read_canonical(new_dir);
    const auto diff = diff_snapshots(old_store, new_store, config.diff);

    Staging staging(dest);
    write_triplets_jsonl(diff.static_set, staging / "static.jsonl");
    write_changed_jsonl(diff.changed_set, staging / "changed.jsonl");
    write_triplets_jsonl(diff.ambiguous, staging / "ambiguous.jsonl");
    std::size_t modified = 0;
    for (const auto& c : diff.changed_set) modified += c.change_kind == ChangeKind::Modified ? 1 : 0;
    result.summary["static"] = diff.static_set.size();
    result.summary["changed"] = diff.changed_set.size();
    result.summary["new"] = diff.changed_set.size() - modified;
    result.summary["modified"] = modified;
    result.summary["ambiguous"] = diff.ambiguous.size();
    staging.commit(result);
    result.table = "diff: " + std::to_string(diff.static_set.size()) + " static, " +
                   std::to_string(diff.changed_set.size()) + " changed (" + std::to_string(modified) +
                   " modified), " + std::to_string(diff.ambiguous.size()) + " ambiguous\n";
    return result;
}

StageResult stage_filter(const Config& config, const fs::path& diff_dir, const fs::path& dest) {
    StageResult result("filter");
    require_dir(diff_dir, "diff output");
    const auto changed = read_changed_jsonl(diff_dir / "changed.jsonl");
    const auto ambiguous = read_triplets_jsonl(diff_dir / "ambiguous.jsonl");
    const auto static_set = read_triplets_jsonl(diff_dir / "static.jsonl");

    std::vector<Triplet> candidates;
    std::unordered_map<std::string, const ChangedTriplet*> by_id;
    for (const auto& c : changed) {
        candidates.push_back(c.triplet);
        by_id[triplet_id(c.triplet)] = &c;
    }
    std::unordered_set<std::string> flagged;
    for (const auto& t : ambiguous) {
        candidates.push_back(t);
        flagged.insert(triplet_key(t));
    }

    auto first = apply_filters(candidates, config.filters);
    FilterReport report = first.report;
    std::vector<Triplet> kept = std::move(first.kept);
    if (config.filters.enabled.count(FilterRule::Ambiguous) != 0) {
        auto second = drop_ambiguous(kept, flagged);
        for (const auto& [rule, n] : second.report.removed_by_rule) report.removed_by_rule[rule] += n;
        kept = std::move(second.kept);
    }
    report.kept_count = kept.size();

    std::vector<ChangedTriplet> kept_changed;
    for (const auto& t : kept) {
        auto it = by_id.find(triplet_id(t));
        kept_changed.push_back(it != by_id.end() ? *it->second : ChangedTriplet{t, ChangeKind::New, std::nullopt});
    }
    std::sort(kept_changed.begin(), kept_changed.end(),
              [](const ChangedTriplet& a, const ChangedTriplet& b) { return triplet_less(a.triplet, b.triplet); });

    const auto static_outcome = apply_filters(static_set, config.filters);

    Staging staging(dest);
    write_changed_jsonl(kept_changed, staging / "changed.jsonl");
    write_triplets_jsonl(static_outcome.kept, staging / "static.jsonl");
    ojson changed_line = report_json(report);
    changed_line["set"] = "changed";
    ojson static_line = report_json(static_outcome.report);
    static_line["set"] = "static";
    write_json_lines(staging / "filter_report.jsonl", {changed_line, static_line});

    result.summary["changed"] = report_json(report);
    result.summary["static"] = report_json(static_outcome.report);
    if (!report.reconciles() || !static_outcome.report.reconciles())
        result.violations.push_back("filter report does not reconcile with its input");
    staging.commit(result);

    std::string table = "filter      input    kept";
    for (const auto& [rule, n] : report_json(report)["removed_by_rule"].items()) table += "  " + rule;
    table += "\n";
    for (const auto& [name, r] : {std::pair<std::string, const FilterReport*>{"changed", &report},
                                  std::pair<std::string, const FilterReport*>{"static", &static_outcome.report}}) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%-10s %6zu %7zu", name.c_str(), r->input_count, r->kept_count);
        table += buf;
        for (const auto& [rule, n] : report_json(*r)["removed_by_rule"].items()) {
            std::snprintf(buf, sizeof buf, "  %*zu", static_cast<int>(rule.size()), n.get<std::size_t>());
            table += buf;
        }
        table += "\n";
    }
    result.table = table;
    return result;
}

StageResult stage_probes(const Config& config, const fs::path& filter_dir, const fs::path& dest, Embedder& embedder) {
    StageResult result("probes");
    require_dir(filter_dir, "filter output");
    const auto changed = read_changed_jsonl(filter_dir / "changed.jsonl");
    const auto static_set = read_triplets_jsonl(filter_dir / "static.jsonl");

    LocalityResult locality;
    if (!static_set.empty() && !changed.empty()) {
        locality = build_locality_probes(changed, static_set, embedder, config.locality.options);
    } else {
        locality.no_candidate = changed.size();
    }
    std::vector<MhopQuintuple> mhop;
    if (config.mhop.enabled) mhop = build_mhop_tuples(changed);

    Staging staging(dest);
    std::vector<ojson> lines;
    for (const auto& p : locality.probes) lines.push_back(probe_json(p));
    write_json_lines(staging / "locality.jsonl", lines);
    lines.clear();
    for (const auto& m : mhop) lines.push_back(mhop_json(m));
    write_json_lines(staging / "mhop.jsonl", lines);

    const double rate = changed.empty() ? 0.0 : 2.0 * static_cast<double>(mhop.size()) / static_cast<double>(changed.size());
    result.summary["changed"] = changed.size();
    result.summary["locality_probes"] = locality.probes.size();
    result.summary["no_candidate"] = locality.no_candidate;
    result.summary["embed_errors"] = locality.errors;
    result.summary["mhop_tuples"] = mhop.size();
    if (locality.errors > config.limits.max_embed_errors)
        result.violations.push_back("embedding errors " + std::to_string(locality.errors) + " exceed " +
                                    std::to_string(config.limits.max_embed_errors));
    staging.commit(result);
    result.table = "probes: " + std::to_string(locality.probes.size()) + " locality (" +
                   std::to_string(locality.no_candidate) + " without candidate, " + std::to_string(locality.errors) +
                   " errors), " + std::to_string(mhop.size()) + " multi-hop tuples" +
                   format_line("%s%.4f\n", ", constituent rate ", rate);
    return result;
}

StageResult stage_qagen(const Config& config, const fs::path& filter_dir, const fs::path& probes_dir,
                        const fs::path& dest, std::shared_ptr<GenerationProvider> provider) {
    StageResult result("qagen");
    require_dir(filter_dir, "filter output");
    require_dir(probes_dir, "probes output");
    ForgeInputs inputs;
    inputs.timestep_id = config.timestep.id;
    inputs.changed = read_changed_jsonl(filter_dir / "changed.jsonl");
    inputs.probes = read_probes(probes_dir / "locality.jsonl");
    inputs.mhop = read_mhop(probes_dir / "mhop.jsonl");

    TemplateRegistry templates;
    if (!config.qa.template_dir.empty()) {
        if (!fs::is_directory(config.qa.template_dir))
            throw ConfigError("qa.template_dir", "not a directory: " + config.qa.template_dir);
        templates = TemplateRegistry::load_dir(config.qa.template_dir);
    }
    QaForge forge(std::move(provider), config.qa.forge, templates);
    const auto out = forge.forge(inputs);

    Staging staging(dest);
    ojson counters = ojson::object();
    std::string table = "qagen     attempted emitted transport  parse unchanged invalid\n";
    std::size_t transport = 0;
    for (auto kind : kAllKinds) {
        const std::string name(to_string(kind));
        auto it = out.sets.find(kind);
        write_qa_jsonl(it == out.sets.end() ? std::vector<QaPair>{} : it->second, staging / (name + ".jsonl"));
        const auto& c = out.counters.at(kind);
        counters[name] = ojson{{"attempted", c.attempted},
                               {"emitted", c.emitted},
                               {"transport_failures", c.transport_failures},
                               {"parse_failures", c.parse_failures},
                               {"unchanged_rephrase", c.unchanged_rephrase},
                               {"invalid", c.invalid}};
        transport += c.transport_failures;
        char buf[128];
        std::snprintf(buf, sizeof buf, "%-9s %9zu %7zu %9zu %6zu %9zu %7zu\n", name.c_str(), c.attempted, c.emitted,
                      c.transport_failures, c.parse_failures, c.unchanged_rephrase, c.invalid);
        table += buf;
        if (c.attempted > 0) {
            const double rate = static_cast<double>(c.failures()) / static_cast<double>(c.attempted);
            if (rate > config.limits.max_generation_failure_rate)
                result.violations.push_back(name + format_line(" failure rate %s%.4f", "", rate) + " exceeds limit");
        }
    }
    if (transport > config.limits.max_transport_failures)
        result.violations.push_back("transport failures " + std::to_string(transport) + " exceed " +
                                    std::to_string(config.limits.max_transport_failures));
    result.summary["timestep"] = config.timestep.id;
    result.summary["counters"] = counters;
    staging.commit(result);
    result.table = table;
    return result;
}

StageResult stage_validate(const Config& config, const fs::path& filter_dir, const fs::path& probes_dir,
                           const fs::path& qagen_dir, const fs::path& dest) {
    StageResult result("validate");
    require_dir(qagen_dir, "qagen output");
    UpdateBatch batch;
    batch.timestep_id = config.timestep.id;
    batch.date_range = {config.timestep.start, config.timestep.end};
    batch.sets = read_sets(qagen_dir);

    std::unordered_map<std::string, Triplet> facts;
    for (const auto& c : read_changed_jsonl(filter_dir / "changed.jsonl")) facts.emplace(triplet_id(c.triplet), c.triplet);
    for (const auto& p : read_probes(probes_dir / "locality.jsonl")) facts.emplace(triplet_id(p.probe), p.probe);
    std::map<std::pair<std::string, std::string>, MhopQuintuple> tuples;
    for (const auto& m : read_mhop(probes_dir / "mhop.jsonl")) tuples.emplace(std::pair{m.first_id, m.second_id}, m);
    std::unordered_map<std::string, std::string> update_fact;  // update id -> fact id
    for (const auto& qa : batch.set(QaKind::Update))
        if (!qa.provenance.empty()) update_fact[qa.id] = qa.provenance.front();

    std::vector<ojson> failures;
    ojson per_kind = ojson::object();
    for (auto kind : kAllKinds) {
        std::size_t passed = 0;
        std::size_t failed = 0;
        for (const auto& qa : batch.set(kind)) {
            std::optional<QaSource> source;
            if (kind == QaKind::Mhop) {
                if (qa.provenance.size() == 2)
                    if (auto it = tuples.find({qa.provenance[0], qa.provenance[1]}); it != tuples.end())
                        source = it->second;
            } else {
                std::string fact_id;
                if (kind == QaKind::Rephrase || kind == QaKind::Persona) {
                    if (qa.parent_id)
                        if (auto it = update_fact.find(*qa.parent_id); it != update_fact.end()) fact_id = it->second;
                } else if (!qa.provenance.empty()) {
                    fact_id = qa.provenance.front();
                }
                if (auto it = facts.find(fact_id); it != facts.end()) source = it->second;
            }
            std::vector<std::string> reasons;
            if (!source) {
                reasons.emplace_back("unknown-source");
            } else {
                reasons = validate_qa(qa, *source).reasons;
            }
            if (reasons.empty()) {
                ++passed;
                continue;
            }
            ++failed;
            ojson f;
            f["id"] = qa.id;
            f["reasons"] = reasons;
            failures.push_back(f);
        }
        per_kind[std::string(to_string(kind))] = ojson{{"passed", passed}, {"failed", failed}};
    }
    const auto problems = batch_problems(batch);

    Staging staging(dest);
    write_json_lines(staging / "failures.jsonl", failures);
    result.summary["kinds"] = per_kind;
    result.summary["failures"] = failures.size();
    result.summary["referential_problems"] = problems;
    if (!failures.empty()) result.violations.push_back(std::to_string(failures.size()) + " pairs fail validation");
    if (!problems.empty()) result.violations.push_back(std::to_string(problems.size()) + " referential problems");
    staging.commit(result);
    result.table = "validate: " + std::to_string(failures.size()) + " failing pairs, " +
                   std::to_string(problems.size()) + " referential problems\n";
    return result;
}

StageResult stage_emit(const Config& config, const fs::path& qagen_dir, const fs::path& dataset_root) {
    StageResult result("emit");
    require_dir(qagen_dir, "qagen output");
    UpdateBatch batch;
    batch.timestep_id = config.timestep.id;
    batch.date_range = {config.timestep.start, config.timestep.end};
    batch.sets = read_sets(qagen_dir);
    std::vector<std::string> warnings;
    const auto entry = emit_timestep(batch, dataset_root, &warnings);
    result.summary["timestep"] = entry.timestep_id;
    result.summary["range"] = entry.date_range.to_string();
    result.summary["samples"] = entry.samples();
    ojson counts = ojson::object();
    for (auto kind : kAllKinds) counts[std::string(to_string(kind))] = entry.counts.at(std::string(to_string(kind)));
    result.summary["counts"] = counts;
    result.summary["content_hash"] = entry.content_hash;
    result.summary["warnings"] = warnings;
    std::ofstream(dataset_root / (entry.timestep_id + ".summary.json"), std::ios::binary) << result.summary.dump(2) << '\n';
    result.table = "emit: " + entry.timestep_id + " " + entry.date_range.to_string() + " " +
                   std::to_string(entry.samples()) + " samples\n";
    for (const auto& w : warnings) result.table += "warning: " + w + "\n";
    return result;
}

StageResult stage_eval(const Config& config, const fs::path& dataset_root, const fs::path& dest, ModelProvider& model) {
    StageResult result("eval");
    const auto manifest = read_manifest(dataset_root);
    if (manifest.timesteps.empty()) throw Error("no timesteps in " + dataset_root.string());
    EvalOptions options{config.eval.match, config.eval.max_inflight, config.qa.forge.retry};

    std::map<std::string, Annotation> annotations;
    std::optional<BinKey> bin_key;
    if (!config.eval.bin_key.empty()) {
        bin_key = bin_key_from_string(config.eval.bin_key);
        if (config.eval.annotations.empty()) throw ConfigError("eval.annotations", "required when eval.bin_key is set");
        annotations = read_annotations(config.eval.annotations);
    }

    std::vector<EvalRecord> records;
    for (const auto& entry : manifest.timesteps) {
        const auto batch = load_timestep(dataset_root, entry.timestep_id);
        auto r = evaluate_batch(model, batch, config.eval.axes, options);
        records.insert(records.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
    }

    Staging staging(dest);
    {
        std::ofstream out(staging / "eval.jsonl", std::ios::binary);
        write_eval_jsonl(records, out);
    }
    std::vector<ojson> verdict_lines;
    std::vector<ojson> bin_lines;
    std::size_t errored = 0;
    for (const auto& r : records) {
        errored += r.errored;
        for (const auto& v : r.verdicts) {
            ojson j;
            j["timestep"] = r.timestep_id;
            j["axis"] = std::string(to_string(r.axis));
            j["id"] = v.id;
            j["generated"] = v.generated;
            j["gold"] = v.gold;
            j["correct"] = v.correct;
            j["errored"] = v.errored;
            verdict_lines.push_back(j);
        }
        if (bin_key) {
            const auto h = bin_records_quantiles(r.verdicts, annotations, *bin_key, config.eval.bins);
            for (const auto& b : h.bins) {
                ojson j;
                j["timestep"] = r.timestep_id;
                j["axis"] = std::string(to_string(r.axis));
                j["key"] = config.eval.bin_key;
                j["lo"] = b.lo;
                j["hi"] = b.hi;
                j["n"] = b.n;
                j["accuracy"] = b.accuracy;
                bin_lines.push_back(j);
            }
        }
    }
    write_json_lines(staging / "verdicts.jsonl", verdict_lines);
    if (bin_key) write_json_lines(staging / "bins.jsonl", bin_lines);
    // The model as it stands is the latest state: its update accuracy on every timestep so
    // far is one row of the forgetting matrix.
    std::vector<ojson> row;
    for (const auto& r : records) {
        if (r.axis != EvalAxis::Update) continue;
        ojson j;
        j["after"] = manifest.timesteps.back().timestep_id;
        j["timestep"] = r.timestep_id;
        j["n"] = r.n;
        j["accuracy"] = r.accuracy;
        row.push_back(j);
    }
    write_json_lines(staging / "forgetting.jsonl", row);
    result.summary["model"] = model.identity();
    result.summary["records"] = records.size();
    result.summary["errored"] = errored;
    if (errored > config.limits.max_eval_errors)
        result.violations.push_back("errored items " + std::to_string(errored) + " exceed " +
                                    std::to_string(config.limits.max_eval_errors));
    staging.commit(result);
    result.table = eval_table(records);
    return result;
}

StageResult stage_rag_build(const Config& config, const fs::path& dataset_root, const fs::path& dest,
                            Embedder& embedder, const std::optional<std::string>& up_to_timestep) {
    StageResult result("rag-build");
    const auto manifest = read_manifest(dataset_root);
    if (manifest.timesteps.empty()) throw Error("no timesteps in " + dataset_root.string());
    if (up_to_timestep && manifest.find(*up_to_timestep) == nullptr)
        throw Error("timestep " + *up_to_timestep + " not in " + dataset_root.string());
    RagMemory memory(config.rag.config, embedder.dim());
    AddStats total;
    std::vector<std::string> included;
    for (const auto& entry : manifest.timesteps) {
        const auto batch = load_timestep(dataset_root, entry.timestep_id);
        const auto stats = memory.add_entries(batch.set(QaKind::Update), embedder);
        total.added += stats.added;
        total.skipped += stats.skipped;
        included.push_back(entry.timestep_id);
        if (up_to_timestep && entry.timestep_id == *up_to_timestep) break;
    }
    Staging staging(dest);
    memory.save(staging.dir());
    result.summary["timesteps"] = included;
    result.summary["entries"] = memory.size();
    result.summary["skipped"] = total.skipped;
    result.summary["dim"] = memory.dim();
    if (total.skipped > config.limits.max_embed_errors)
        result.violations.push_back("embedding failures " + std::to_string(total.skipped) + " exceed " +
                                    std::to_string(config.limits.max_embed_errors));
    staging.commit(result);
    result.table = "rag-build: " + std::to_string(memory.size()) + " entries from " + std::to_string(included.size()) +
                   " timesteps, " + std::to_string(total.skipped) + " skipped\n";
    return result;
}

StageResult stage_rag_eval(const Config& config, const fs::path& dataset_root, const fs::path& memory_dir,
                           const fs::path& dest, std::shared_ptr<ModelProvider> base,
                           std::shared_ptr<Embedder> embedder) {
    StageResult result("rag-eval");
    require_dir(memory_dir, "memory");
    auto memory = std::make_shared<RagMemory>(RagMemory::load(memory_dir, config.rag.config));
    if (memory->size() > 0 && memory->dim() != embedder->dim())
        throw ConfigError("rag.embed_dim", "memory dimension " + std::to_string(memory->dim()) +
                                               " does not match the embedder");
    RagModel model(memory, base, embedder, config.rag.config.k);
    EvalOptions options{config.eval.match, config.eval.max_inflight, config.qa.forge.retry};
    const auto manifest = read_manifest(dataset_root);

    std::vector<EvalRecord> records;
    std::vector<ojson> hop_lines;
    std::vector<UpdateBatch> batches;
    std::size_t errored = 0;
    for (const auto& entry : manifest.timesteps) {
        const auto& batch = batches.emplace_back(load_timestep(dataset_root, entry.timestep_id));
        auto r = evaluate_batch(model, batch, config.eval.axes, options);
        for (const auto& rec : r) errored += rec.errored;
        records.insert(records.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
        if (!batch.set(QaKind::Mhop).empty()) {
            const auto hs = hop_retrieval_analysis(*memory, batch.set(QaKind::Mhop), *base, config.rag.config.k,
                                                   *embedder, options);
            ojson j;
            j["timestep"] = entry.timestep_id;
            j["n"] = hs.n;
            j["hop1_retrieved"] = hs.hop1_retrieved;
            j["hop2_retrieved"] = hs.hop2_retrieved;
            j["both_retrieved"] = hs.both_retrieved;
            j["accuracy_given_both"] = hs.accuracy_given_both;
            j["accuracy_given_hop1_only"] = hs.accuracy_given_hop1_only;
            hop_lines.push_back(j);
        }
    }
    // Replays the memory's growth one timestep at a time for the full forgetting matrix.
    auto growing = std::make_shared<RagMemory>(config.rag.config, embedder->dim());
    RagModel growing_model(growing, base, embedder, config.rag.config.k);
    const auto forgetting = evaluate_history(
        growing_model, batches, [&](std::size_t b) { growing->add_entries(batches[b].set(QaKind::Update), *embedder); },
        options);
    std::vector<ojson> forgetting_lines;
    for (std::size_t b = 0; b < forgetting.size(); ++b) {
        for (std::size_t j = 0; j <= b; ++j) {
            ojson line;
            line["after"] = forgetting.timesteps[b];
            line["timestep"] = forgetting.timesteps[j];
            line["accuracy"] = forgetting.at(b, j);
            forgetting_lines.push_back(line);
        }
    }

    Staging staging(dest);
    {
        std::ofstream out(staging / "eval.jsonl", std::ios::binary);
        write_eval_jsonl(records, out);
    }
    write_json_lines(staging / "hops.jsonl", hop_lines);
    write_json_lines(staging / "forgetting.jsonl", forgetting_lines);
    result.summary["model"] = model.identity();
    result.summary["k"] = config.rag.config.k;
    result.summary["memory_entries"] = memory->size();
    result.summary["records"] = records.size();
    result.summary["errored"] = errored;
    if (errored > config.limits.max_eval_errors)
        result.violations.push_back("errored items " + std::to_string(errored) + " exceed " +
                                    std::to_string(config.limits.max_eval_errors));
    staging.commit(result);
    result.table = eval_table(records);
    for (const auto& h : hop_lines) result.table += "hops " + h.dump() + "\n";
    result.table += forgetting_table(forgetting);
    return result;
}

StageResult stage_report(const WorkLayout& layout) {
    StageResult result("report");
    std::vector<std::pair<std::string, fs::path>> stages{
        {"ingest-old", layout.ingest("old")}, {"ingest-new", layout.ingest("new")}, {"diff", layout.diff()},
        {"filter", layout.filter()},          {"probes", layout.probes()},          {"qagen", layout.qagen()},
        {"validate", layout.validate()},      {"eval", layout.eval()},              {"rag-build", layout.rag()},
        {"rag-eval", layout.rag_eval()}};
    std::vector<ojson> lines;
    std::string table;
    for (const auto& [name, dir] : stages) {
        std::ifstream in(dir / "summary.json", std::ios::binary);
        if (!in) continue;
        auto summary = ojson::parse(in, nullptr, false);
        if (summary.is_discarded()) throw SchemaError("malformed summary in " + dir.string());
        ojson line;
        line["stage"] = name;
        line["summary"] = summary;
        table += name + ": " + summary.dump() + "\n";
        lines.push_back(std::move(line));
    }
    const auto manifest = read_manifest(layout.dataset());
    for (const auto& e : manifest.timesteps) {
        ojson line;
        line["stage"] = "dataset";
        line["summary"] = ojson{{"timestep", e.timestep_id}, {"range", e.date_range.to_string()}, {"samples", e.samples()}};
        table += "dataset: " + line["summary"].dump() + "\n";
        lines.push_back(std::move(line));
    }
    write_json_lines(layout.root / "report.jsonl", lines);
    result.summary["stages"] = lines.size();
    result.table = table;
    return result;
}

std::vector<StageResult> run_pipeline(const Config& config, const fs::path& old_input, const fs::path& new_input,
                                      const WorkLayout& layout, std::shared_ptr<GenerationProvider> provider,
                                      Embedder& embedder) {
    std::vector<StageResult> results;
    auto run = [&](auto&& fn) {
        results.push_back(fn());
        return results.back().ok();
    };
    if (!run([&] { return stage_ingest(config, old_input, layout.ingest("old"), config.timestep.start); })) return results;
    if (!run([&] { return stage_ingest(config, new_input, layout.ingest("new"), config.timestep.end); })) return results;
    if (!run([&] { return stage_diff(config, layout.ingest("old"), layout.ingest("new"), layout.diff()); })) return results;
    if (!run([&] { return stage_filter(config, layout.diff(), layout.filter()); })) return results;
    if (!run([&] { return stage_probes(config, layout.filter(), layout.probes(), embedder); })) return results;
    if (!run([&] { return stage_qagen(config, layout.filter(), layout.probes(), layout.qagen(), provider); })) return results;
    if (!run([&] { return stage_validate(config, layout.filter(), layout.probes(), layout.qagen(), layout.validate()); }))
        return results;
    run([&] { return stage_emit(config, layout.qagen(), layout.dataset()); });
    return results;
}

}  // namespace editbench
