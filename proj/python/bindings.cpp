// Python bindings. Structured values cross the boundary as plain dicts and lists,
// converted through their JSON record forms.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "editbench/config.hpp"
#include "editbench/diff.hpp"
#include "editbench/error.hpp"
#include "editbench/eval.hpp"
#include "editbench/filter.hpp"
#include "editbench/pipeline.hpp"
#include "editbench/probes.hpp"
#include "editbench/qa.hpp"
#include "editbench/rag.hpp"
#include "editbench/serialize.hpp"
#include "editbench/store.hpp"
#include "editbench/synth.hpp"
#include "editbench/text.hpp"

namespace py = pybind11;
using namespace editbench;
namespace fs = std::filesystem;

namespace {

py::object to_py(const ojson& j) { return py::module_::import("json").attr("loads")(j.dump()); }

nlohmann::json from_py(const py::handle& obj) {
    return nlohmann::json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

std::vector<Triplet> triplets_from(const py::list& items) {
    std::vector<Triplet> out;
    for (const auto& item : items) out.push_back(triplet_from_json(from_py(item)));
    return out;
}

std::vector<ChangedTriplet> changed_from(const py::list& items) {
    std::vector<ChangedTriplet> out;
    for (const auto& item : items) {
        auto j = from_py(item);
        if (!j.contains("change_kind")) j["change_kind"] = "new";
        if (!j.contains("old_object")) j["old_object"] = nullptr;
        out.push_back(changed_from_json(j));
    }
    return out;
}

py::list triplet_list(const std::vector<Triplet>& ts) {
    py::list out;
    for (const auto& t : ts) out.append(to_py(triplet_json(t)));
    return out;
}

py::dict report_dict(const FilterReport& r) {
    py::dict d;
    d["input_count"] = r.input_count;
    d["kept_count"] = r.kept_count;
    d["removed_by_rule"] = r.removed_by_rule;
    return d;
}

py::dict batch_dict(const UpdateBatch& b) {
    py::dict sets;
    for (auto kind : kAllKinds) {
        py::list items;
        for (const auto& qa : b.set(kind)) items.append(to_py(qa_json(qa)));
        sets[py::str(std::string(to_string(kind)))] = items;
    }
    py::dict d;
    d["timestep_id"] = b.timestep_id;
    d["start"] = b.date_range.start;
    d["end"] = b.date_range.end;
    d["sets"] = sets;
    return d;
}

Config config_from(const std::optional<fs::path>& path, const std::vector<std::string>& overrides) {
    Config c = path ? load_config(*path) : Config{};
    for (const auto& o : overrides) apply_override(c, o);
    return c;
}

/// Retrieval memory bundled with the embedder that fills it.
class PyMemory {
public:
    PyMemory(std::size_t dim, const std::string& mode) : embedder_(dim), memory_(config_for(mode), dim) {}

    std::size_t add(const std::string& question, const std::string& answer, const std::string& id,
                    const std::string& fact) {
        QaPair p;
        p.id = id;
        p.question = question;
        p.answer = answer;
        if (!fact.empty()) p.provenance = {fact};
        return memory_.add_entries({p}, embedder_).added;
    }

    py::list retrieve(const std::string& question, std::size_t k) {
        py::list out;
        for (const auto& r : memory_.retrieve(question, k, embedder_)) {
            py::dict d;
            d["id"] = r.entry->id;
            d["source_id"] = r.entry->source_id;
            d["question"] = r.entry->question;
            d["answer"] = r.entry->answer;
            d["similarity"] = r.similarity;
            out.append(d);
        }
        return out;
    }

    std::string answer(const std::string& question, std::size_t k) {
        CopyFirstAnswerModel copy;
        return answer_with_rag(memory_, copy, question, k, embedder_);
    }

    std::size_t size() const { return memory_.size(); }
    void save(const fs::path& dir) const { memory_.save(dir); }

private:
    static RagConfig config_for(const std::string& mode) {
        RagConfig cfg;
        if (mode == "approx") cfg.mode = RetrievalMode::Approximate;
        else if (mode != "exact") throw ConfigError("rag.mode", "expected exact or approx, got " + mode);
        return cfg;
    }

    StubEmbedder embedder_;
    RagMemory memory_;
};

}  // namespace

PYBIND11_MODULE(_editbench, m) {
    m.doc() = "Temporal knowledge-edit benchmark construction and evaluation";

    auto base = py::register_exception<Error>(m, "EditbenchError");
    py::register_exception<ConfigError>(m, "ConfigError", base);
    py::register_exception<IntegrityError>(m, "IntegrityError", base);
    py::register_exception<SchemaError>(m, "SchemaError", base);
    py::register_exception<IngestError>(m, "IngestError", base);

    m.def("normalize", [](const std::string& s) { return text::normalize(s); });

    m.def(
        "judge_answer",
        [](const std::string& generated, const std::string& gold, const std::string& mode) {
            const auto parsed = match_mode_from_string(mode);
            if (!parsed) throw ConfigError("eval.match", "unknown match mode " + mode);
            return judge_answer(generated, gold, *parsed);
        },
        py::arg("generated"), py::arg("gold"), py::arg("mode") = "contains");

    m.def(
        "diff",
        [](const py::list& old_triplets, const py::list& new_triplets) {
            const auto r = diff_snapshots(TripletStore(triplets_from(old_triplets), {}, {}),
                                          TripletStore(triplets_from(new_triplets), {}, {}));
            py::list changed;
            for (const auto& c : r.changed_set) changed.append(to_py(changed_report_json(c)));
            py::dict d;
            d["static"] = triplet_list(r.static_set);
            d["changed"] = changed;
            d["ambiguous"] = triplet_list(r.ambiguous);
            return d;
        },
        "Compares two triplet lists; returns static, changed and ambiguous records.");

    m.def(
        "filter_triplets",
        [](const py::list& triplets) {
            const auto rules = apply_filters(triplets_from(triplets));
            const auto unique = drop_ambiguous(rules.kept);
            FilterReport report = rules.report;
            report.kept_count = 0;
            report += unique.report;
            report.input_count = rules.report.input_count;
            return py::make_tuple(triplet_list(unique.kept), report_dict(report));
        },
        "Applies every filter rule plus ambiguity removal; returns (kept, report).");

    m.def(
        "mhop_tuples",
        [](const py::list& changed) {
            py::list out;
            for (const auto& q : build_mhop_tuples(changed_from(changed))) out.append(to_py(mhop_json(q)));
            return out;
        },
        "Two-hop chains over changed triplets.");

    m.def(
        "validate_qa",
        [](const std::string& question, const std::string& answer, const py::dict& triplet) {
            QaPair p;
            p.question = question;
            p.answer = answer;
            return validate_qa(p, QaSource{triplet_from_json(from_py(triplet))}).reasons;
        },
        py::arg("question"), py::arg("answer"), py::arg("triplet"),
        "Reason codes for a generated pair; empty when it passes.");

    m.def(
        "run_pipeline",
        [](const fs::path& old_input, const fs::path& new_input, const fs::path& work_dir,
           const std::optional<fs::path>& config, const std::vector<std::string>& overrides) {
            const auto c = config_from(config, overrides);
            auto embedder = make_embedder(c);
            py::list out;
            for (const auto& r : run_pipeline(c, old_input, new_input, WorkLayout{work_dir}, make_provider(c), *embedder)) {
                py::dict d;
                d["stage"] = r.stage;
                d["ok"] = r.ok();
                d["summary"] = to_py(r.summary);
                d["violations"] = r.violations;
                out.append(d);
            }
            return out;
        },
        py::arg("old_input"), py::arg("new_input"), py::arg("work_dir"), py::arg("config") = std::nullopt,
        py::arg("overrides") = std::vector<std::string>{},
        "Runs ingest through dataset emission; returns one summary per stage.");

    m.def(
        "load_timestep", [](const fs::path& root, const std::string& ts) { return batch_dict(load_timestep(root, ts)); },
        py::arg("root"), py::arg("timestep_id"), "Loads and verifies one timestep of a dataset.");

    m.def(
        "write_fixture",
        [](const fs::path& dir, std::uint64_t seed) {
            const auto f = synth::make_fixture(seed);
            synth::write_fixture(f, dir);
        },
        py::arg("dir"), py::arg("seed") = 7, "Writes the synthetic snapshot pair and its expectations.");

    py::class_<PyMemory>(m, "Memory", "Append-only question/answer memory over the stub embedder.")
        .def(py::init<std::size_t, const std::string&>(), py::arg("dim") = 256, py::arg("mode") = "exact")
        .def("add", &PyMemory::add, py::arg("question"), py::arg("answer"), py::arg("id") = "",
             py::arg("fact") = "")
        .def("retrieve", &PyMemory::retrieve, py::arg("question"), py::arg("k") = 2)
        .def("answer", &PyMemory::answer, py::arg("question"), py::arg("k") = 2,
             "Answer copied from the top retrieved entry, or 'unknown'.")
        .def("save", &PyMemory::save)
        .def("__len__", &PyMemory::size);
}
