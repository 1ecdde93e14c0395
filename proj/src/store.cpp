#include "editbench/store.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_set>

#include "editbench/error.hpp"
#include "editbench/hash.hpp"
#include "editbench/ingest.hpp"

namespace editbench {

using nlohmann::json;

std::map<QaKind, std::size_t> UpdateBatch::counts() const {
    std::map<QaKind, std::size_t> out;
    for (auto kind : kAllKinds) out[kind] = set(kind).size();
    return out;
}

std::size_t UpdateBatch::total() const {
    std::size_t n = 0;
    for (const auto& [kind, pairs] : sets) n += pairs.size();
    return n;
}

const std::vector<QaPair>& UpdateBatch::set(QaKind kind) const {
    static const std::vector<QaPair> empty;
    auto it = sets.find(kind);
    return it == sets.end() ? empty : it->second;
}

bool UpdateBatch::operator==(const UpdateBatch& other) const {
    if (timestep_id != other.timestep_id || date_range != other.date_range) return false;
    for (auto kind : kAllKinds)
        if (set(kind) != other.set(kind)) return false;
    return true;
}

std::size_t ManifestEntry::samples() const {
    std::size_t n = 0;
    for (const auto& [kind, count] : counts) n += count;
    return n;
}

const ManifestEntry* BenchmarkManifest::find(const std::string& timestep_id) const {
    for (const auto& e : timesteps)
        if (e.timestep_id == timestep_id) return &e;
    return nullptr;
}

ojson qa_json(const QaPair& qa) {
    ojson j;
    j["id"] = qa.id;
    j["kind"] = std::string(to_string(qa.kind));
    j["timestep"] = qa.timestep;
    j["question"] = qa.question;
    j["answer"] = qa.answer;
    j["subject"] = qa.subject;
    j["relation"] = qa.relation;
    j["object"] = qa.object;
    j["provenance"] = qa.provenance;
    j["persona"] = qa.persona ? ojson(*qa.persona) : ojson(nullptr);
    j["parent_id"] = qa.parent_id ? ojson(*qa.parent_id) : ojson(nullptr);
    return j;
}

QaPair qa_from_json(const json& j) {
    static const std::vector<std::string> kKeys{"id",      "kind",   "timestep",   "question",
                                                "answer",  "subject", "relation", "object",
                                                "provenance", "persona", "parent_id"};
    if (!j.is_object()) throw SchemaError("QA record is not an object");
    for (const auto& k : kKeys)
        if (!j.contains(k)) throw SchemaError("QA record missing key '" + k + "'");
    try {
        QaPair qa;
        qa.id = j["id"].get<std::string>();
        auto kind = qa_kind_from_string(j["kind"].get<std::string>());
        if (!kind) throw SchemaError("QA record " + qa.id + " has unknown kind");
        qa.kind = *kind;
        qa.timestep = j["timestep"].get<std::string>();
        qa.question = j["question"].get<std::string>();
        qa.answer = j["answer"].get<std::string>();
        qa.subject = j["subject"].get<std::string>();
        qa.relation = j["relation"].get<std::string>();
        qa.object = j["object"].get<std::string>();
        qa.provenance = j["provenance"].get<std::vector<std::string>>();
        if (!j["persona"].is_null()) qa.persona = j["persona"].get<std::string>();
        if (!j["parent_id"].is_null()) qa.parent_id = j["parent_id"].get<std::string>();
        return qa;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("malformed QA record: ") + e.what());
    }
}

void write_qa_jsonl(const std::vector<QaPair>& pairs, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto& qa : pairs) out << qa_json(qa).dump() << '\n';
    if (!out) throw Error("write failed for " + path.string());
}

std::vector<QaPair> read_qa_jsonl(const std::filesystem::path& path) {
    std::vector<QaPair> out;
    for (const auto& j : read_jsonl(path)) out.push_back(qa_from_json(j));
    return out;
}

std::vector<std::string> batch_problems(const UpdateBatch& batch) {
    std::vector<std::string> problems;
    std::unordered_set<std::string> ids;
    std::unordered_set<std::string> update_ids;
    std::unordered_set<std::string> update_facts;
    for (const auto& qa : batch.set(QaKind::Update)) {
        update_ids.insert(qa.id);
        if (!qa.provenance.empty()) update_facts.insert(qa.provenance.front());
    }
    for (auto kind : kAllKinds) {
        for (const auto& qa : batch.set(kind)) {
            if (!ids.insert(qa.id).second) problems.push_back("duplicate id " + qa.id);
            if (qa.kind != kind)
                problems.push_back(qa.id + " stored under " + std::string(to_string(kind)) + " but has kind " +
                                   std::string(to_string(qa.kind)));
            if (qa.timestep != batch.timestep_id) problems.push_back(qa.id + " belongs to timestep " + qa.timestep);
            if (qa.answer.empty()) problems.push_back(qa.id + " has an empty answer");
            if (kind == QaKind::Rephrase || kind == QaKind::Persona) {
                if (!qa.parent_id || update_ids.count(*qa.parent_id) == 0)
                    problems.push_back("dangling parent_id " + qa.parent_id.value_or("<null>") + " in " + qa.id);
            }
            if (kind == QaKind::Mhop) {
                if (qa.provenance.size() != 2) {
                    problems.push_back(qa.id + " needs two provenance ids");
                } else {
                    for (const auto& p : qa.provenance)
                        if (update_facts.count(p) == 0)
                            problems.push_back("dangling mhop provenance " + p + " in " + qa.id);
                }
            }
        }
    }
    return problems;
}

namespace {

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) out += (out.empty() ? "" : "; ") + s;
    return out;
}

std::string content_hash(const std::map<std::string, std::string>& file_hashes) {
    std::string acc;
    for (auto kind : kAllKinds) {
        const std::string name(to_string(kind));
        auto it = file_hashes.find(name);
        acc += name + ' ' + (it == file_hashes.end() ? std::string{} : it->second) + '\n';
    }
    return sha256_hex(acc);
}

ojson entry_json(const ManifestEntry& e) {
    ojson j;
    j["timestep"] = e.timestep_id;
    j["range"] = e.date_range.to_string();
    j["samples"] = e.samples();
    ojson counts = ojson::object();
    ojson files = ojson::object();
    ojson hashes = ojson::object();
    for (auto kind : kAllKinds) {
        const std::string name(to_string(kind));
        if (auto it = e.counts.find(name); it != e.counts.end()) counts[name] = it->second;
        if (auto it = e.files.find(name); it != e.files.end()) files[name] = it->second;
        if (auto it = e.file_hashes.find(name); it != e.file_hashes.end()) hashes[name] = it->second;
    }
    j["counts"] = counts;
    j["files"] = files;
    j["sha256"] = hashes;
    j["content_hash"] = e.content_hash;
    return j;
}

ManifestEntry entry_from_json(const json& j) {
    try {
        ManifestEntry e;
        e.timestep_id = j.at("timestep").get<std::string>();
        const auto range = j.at("range").get<std::string>();
        const auto slash = range.find('/');
        if (slash == std::string::npos) throw SchemaError("manifest range must be start/end: " + range);
        e.date_range = {range.substr(0, slash), range.substr(slash + 1)};
        e.counts = j.at("counts").get<std::map<std::string, std::size_t>>();
        e.files = j.at("files").get<std::map<std::string, std::string>>();
        e.file_hashes = j.at("sha256").get<std::map<std::string, std::string>>();
        e.content_hash = j.at("content_hash").get<std::string>();
        return e;
    } catch (const json::exception& ex) {
        throw SchemaError(std::string("malformed manifest entry: ") + ex.what());
    }
}

}  // namespace

BenchmarkManifest read_manifest(const std::filesystem::path& root) {
    std::ifstream in(root / "manifest.json", std::ios::binary);
    if (!in) return {};
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("timesteps") || !j["timesteps"].is_array())
        throw IntegrityError("manifest.json in " + root.string() + " is corrupt");
    BenchmarkManifest m;
    for (const auto& e : j["timesteps"]) m.timesteps.push_back(entry_from_json(e));
    return m;
}

void write_manifest(const BenchmarkManifest& manifest, const std::filesystem::path& root) {
    std::filesystem::create_directories(root);
    ojson j;
    j["timesteps"] = ojson::array();
    for (const auto& e : manifest.timesteps) j["timesteps"].push_back(entry_json(e));
    const auto tmp = root / "manifest.json.partial";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw Error("cannot write " + tmp.string());
        out << j.dump(2) << '\n';
    }
    std::filesystem::rename(tmp, root / "manifest.json");
}

ManifestEntry emit_timestep(const UpdateBatch& batch, const std::filesystem::path& root,
                            std::vector<std::string>* warnings) {
    if (batch.timestep_id.empty()) throw SchemaError("batch has no timestep id");
    if (!is_iso_date(batch.date_range.start) || !is_iso_date(batch.date_range.end))
        throw SchemaError("batch date range must be ISO dates: " + batch.date_range.to_string());
    if (batch.date_range.end < batch.date_range.start)
        throw SchemaError("batch date range ends before it starts: " + batch.date_range.to_string());
    if (auto problems = batch_problems(batch); !problems.empty()) throw SchemaError(join(problems));

    auto manifest = read_manifest(root);
    std::erase_if(manifest.timesteps, [&](const ManifestEntry& e) { return e.timestep_id == batch.timestep_id; });
    for (const auto& e : manifest.timesteps) {
        if (e.date_range.start == batch.date_range.start)
            throw SchemaError("timestep " + batch.timestep_id + " shares start date with " + e.timestep_id);
    }

    const auto dir = root / batch.timestep_id;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());

    ManifestEntry entry;
    entry.timestep_id = batch.timestep_id;
    entry.date_range = batch.date_range;
    for (auto kind : kAllKinds) {
        const std::string name(to_string(kind));
        const auto file = dir / (name + ".jsonl");
        const auto partial = dir / (name + ".jsonl.partial");
        write_qa_jsonl(batch.set(kind), partial);
        std::filesystem::rename(partial, file);
        entry.counts[name] = batch.set(kind).size();
        entry.files[name] = batch.timestep_id + "/" + name + ".jsonl";
        entry.file_hashes[name] = sha256_file(file);
    }
    entry.content_hash = content_hash(entry.file_hashes);

    manifest.timesteps.push_back(entry);
    std::stable_sort(manifest.timesteps.begin(), manifest.timesteps.end(),
                     [](const ManifestEntry& a, const ManifestEntry& b) {
                         return a.date_range.start < b.date_range.start;
                     });
    for (std::size_t i = 1; i < manifest.timesteps.size(); ++i) {
        const auto& prev = manifest.timesteps[i - 1];
        const auto& cur = manifest.timesteps[i];
        if (cur.date_range.start < prev.date_range.end && warnings != nullptr)
            warnings->push_back("timestep " + cur.timestep_id + " starts " + cur.date_range.start +
                                " before " + prev.timestep_id + " ends " + prev.date_range.end);
    }
    write_manifest(manifest, root);
    return entry;
}

UpdateBatch load_timestep(const std::filesystem::path& root, const std::string& timestep_id) {
    const auto manifest = read_manifest(root);
    const auto* entry = manifest.find(timestep_id);
    if (entry == nullptr) throw SchemaError("timestep " + timestep_id + " not in manifest at " + root.string());
    if (content_hash(entry->file_hashes) != entry->content_hash)
        throw IntegrityError("manifest content hash mismatch for " + timestep_id);

    UpdateBatch batch;
    batch.timestep_id = entry->timestep_id;
    batch.date_range = entry->date_range;
    for (auto kind : kAllKinds) {
        const std::string name(to_string(kind));
        auto file_it = entry->files.find(name);
        auto hash_it = entry->file_hashes.find(name);
        if (file_it == entry->files.end() || hash_it == entry->file_hashes.end())
            throw SchemaError("manifest entry " + timestep_id + " lacks the " + name + " set");
        const auto path = root / file_it->second;
        if (!std::filesystem::exists(path)) throw IntegrityError("missing " + path.string());
        if (sha256_file(path) != hash_it->second) throw IntegrityError("hash mismatch for " + path.string());
        auto pairs = read_qa_jsonl(path);
        if (entry->counts.count(name) == 0 || entry->counts.at(name) != pairs.size())
            throw IntegrityError("count mismatch for " + path.string());
        batch.sets[kind] = std::move(pairs);
    }
    if (auto problems = batch_problems(batch); !problems.empty()) throw SchemaError(join(problems));
    return batch;
}

UpdateBatch load_timestep(const std::filesystem::path& dir) {
    auto clean = dir.lexically_normal();
    if (!clean.has_filename()) clean = clean.parent_path();
    return load_timestep(clean.parent_path().empty() ? std::filesystem::path(".") : clean.parent_path(),
                         clean.filename().string());
}

}  // namespace editbench
