#include "editbench/serialize.hpp"

#include <fstream>

#include "editbench/error.hpp"

namespace editbench {

using nlohmann::json;

ojson object_json(const ObjectValue& v) {
    ojson j;
    if (const auto* e = std::get_if<EntityRef>(&v)) {
        j["id"] = e->id;
        j["label"] = e->label;
    } else {
        const auto& lit = std::get<Literal>(v);
        j["literal"] = lit.raw;
        j["kind"] = std::string(to_string(lit.kind));
    }
    return j;
}

ObjectValue object_from_json(const json& j) {
    if (!j.is_object()) throw SchemaError("object value must be a JSON object");
    if (j.contains("literal")) {
        auto kind = literal_kind_from_string(j.value("kind", std::string("other")));
        if (!kind) throw SchemaError("unknown literal kind");
        return Literal{j.at("literal").get<std::string>(), *kind};
    }
    return EntityRef{j.at("id").get<std::string>(), j.value("label", std::string{})};
}

ojson triplet_json(const Triplet& t) {
    ojson j;
    j["subject"] = ojson{{"id", t.subject.id}, {"label", t.subject.label}};
    j["relation"] = ojson{{"id", t.relation.id},
                          {"label", t.relation.label},
                          {"description", t.relation.description}};
    j["object"] = object_json(t.object);
    return j;
}

Triplet triplet_from_json(const json& j) {
    try {
        const auto& s = j.at("subject");
        const auto& r = j.at("relation");
        return Triplet{EntityRef{s.at("id").get<std::string>(), s.value("label", std::string{})},
                       PropertyRef{r.at("id").get<std::string>(), r.value("label", std::string{}),
                                   r.value("description", std::string{})},
                       object_from_json(j.at("object"))};
    } catch (const json::exception& e) {
        throw SchemaError(std::string("malformed triplet record: ") + e.what());
    }
}

ojson changed_report_json(const ChangedTriplet& c) {
    ojson j = triplet_json(c.triplet);
    j["change_kind"] = std::string(to_string(c.change_kind));
    j["old_object"] = c.old_object ? object_json(*c.old_object) : ojson(nullptr);
    return j;
}

ChangedTriplet changed_from_json(const json& j) {
    ChangedTriplet c;
    c.triplet = triplet_from_json(j);
    const auto kind = j.value("change_kind", std::string("new"));
    if (kind != "new" && kind != "modified") throw SchemaError("unknown change_kind: " + kind);
    c.change_kind = kind == "new" ? ChangeKind::New : ChangeKind::Modified;
    if (auto it = j.find("old_object"); it != j.end() && !it->is_null())
        c.old_object = object_from_json(*it);
    return c;
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::vector<json> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw SchemaError(path.string() + ":" + std::to_string(lineno) + ": malformed JSON");
        out.push_back(std::move(j));
    }
    return out;
}

void write_triplets_jsonl(const std::vector<Triplet>& triplets, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto& t : triplets) out << triplet_json(t).dump() << '\n';
}

std::vector<Triplet> read_triplets_jsonl(const std::filesystem::path& path) {
    std::vector<Triplet> out;
    for (const auto& j : read_jsonl(path)) out.push_back(triplet_from_json(j));
    return out;
}

void write_changed_jsonl(const std::vector<ChangedTriplet>& changed, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto& c : changed) out << changed_report_json(c).dump() << '\n';
}

std::vector<ChangedTriplet> read_changed_jsonl(const std::filesystem::path& path) {
    std::vector<ChangedTriplet> out;
    for (const auto& j : read_jsonl(path)) out.push_back(changed_from_json(j));
    return out;
}

}  // namespace editbench
