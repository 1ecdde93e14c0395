#include "editbench/ingest.hpp"

#include <zlib.h>

#include <array>
#include <chrono>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <streambuf>

#include "editbench/error.hpp"
#include "editbench/text.hpp"
#include "json.hpp"

namespace editbench {

using nlohmann::json;

std::size_t LabelTable::byte_size() const {
    std::size_t n = 0;
    for (const auto& [k, v] : labels) n += k.size() + v.size();
    for (const auto& [k, v] : descriptions) n += k.size() + v.size();
    return n;
}

TripletStore::TripletStore(std::vector<Triplet> triplets, LabelTable labels, SnapshotMeta meta,
                           std::size_t skipped_records)
    : triplets_(std::move(triplets)),
      labels_(std::move(labels)),
      meta_(std::move(meta)),
      skipped_(skipped_records) {
    meta_.triplet_count = triplets_.size();
    for (std::size_t i = 0; i < triplets_.size(); ++i) index_[triplet_key(triplets_[i])].push_back(i);
}

std::vector<const Triplet*> TripletStore::lookup(const std::string& subject_id,
                                                 const std::string& relation_id) const {
    std::vector<const Triplet*> out;
    auto it = index_.find(subject_id + '|' + relation_id);
    if (it == index_.end()) return out;
    out.reserve(it->second.size());
    for (auto i : it->second) out.push_back(&triplets_[i]);
    return out;
}

bool is_iso_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9})
        if (s[i] < '0' || s[i] > '9') return false;
    auto num = [&](std::size_t from, std::size_t len) {
        int v = 0;
        for (std::size_t i = from; i < from + len; ++i) v = v * 10 + (s[i] - '0');
        return v;
    };
    const std::chrono::year_month_day ymd{std::chrono::year(num(0, 4)),
                                          std::chrono::month(static_cast<unsigned>(num(5, 2))),
                                          std::chrono::day(static_cast<unsigned>(num(8, 2)))};
    return ymd.ok();
}

std::string tsv_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '\t': out += "\\t"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\\': out += "\\\\"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

std::string tsv_unescape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '\\' || i + 1 == s.size()) {
            out.push_back(s[i]);
            continue;
        }
        switch (s[++i]) {
            case 't': out.push_back('\t'); break;
            case 'n': out.push_back('\n'); break;
            case 'r': out.push_back('\r'); break;
            default: out.push_back(s[i]);
        }
    }
    return out;
}

namespace {

std::string_view strip_record(std::string_view line) {
    while (!line.empty() && (line.back() == ',' || line.back() == '\r' || line.back() == ' ' ||
                             line.back() == '\t'))
        line.remove_suffix(1);
    while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
    return line;
}

const json* find_lang_value(const json& doc, const char* field, const std::string& lang) {
    auto it = doc.find(field);
    if (it == doc.end() || !it->is_object()) return nullptr;
    auto lit = it->find(lang);
    if (lit == it->end() || !lit->is_object()) return nullptr;
    auto vit = lit->find("value");
    if (vit == lit->end() || !vit->is_string()) return nullptr;
    return &*vit;
}

std::optional<ObjectValue> decode_datavalue(const json& dv) {
    if (!dv.is_object()) return std::nullopt;
    auto vit = dv.find("value");
    auto tit = dv.find("type");
    if (vit == dv.end() || tit == dv.end() || !tit->is_string()) return std::nullopt;
    const auto& value = *vit;
    const auto& type = tit->get_ref<const std::string&>();
    if (type == "wikibase-entityid") {
        if (!value.is_object()) return std::nullopt;
        std::string id;
        if (auto id_it = value.find("id"); id_it != value.end() && id_it->is_string()) {
            id = id_it->get<std::string>();
        } else if (auto num = value.find("numeric-id"); num != value.end() && num->is_number_integer()) {
            const auto et = value.value("entity-type", std::string("item"));
            id = (et == "property" ? "P" : "Q") + std::to_string(num->get<long long>());
        } else {
            return std::nullopt;
        }
        if (is_entity_id(id)) return ObjectValue{EntityRef{id, {}}};
        return ObjectValue{Literal{id, LiteralKind::Other}};
    }
    if (type == "quantity") {
        if (!value.is_object() || !value.contains("amount") || !value["amount"].is_string())
            return std::nullopt;
        return ObjectValue{Literal{value["amount"].get<std::string>(), LiteralKind::Quantity}};
    }
    if (type == "time") {
        if (!value.is_object() || !value.contains("time") || !value["time"].is_string())
            return std::nullopt;
        return ObjectValue{Literal{value["time"].get<std::string>(), LiteralKind::Time}};
    }
    if (type == "globecoordinate") {
        if (!value.is_object() || !value.contains("latitude") || !value.contains("longitude"))
            return std::nullopt;
        return ObjectValue{Literal{value["latitude"].dump() + "," + value["longitude"].dump(),
                                   LiteralKind::Coordinate}};
    }
    if (type == "string") {
        if (!value.is_string()) return std::nullopt;
        return ObjectValue{Literal{value.get<std::string>(), LiteralKind::String}};
    }
    if (type == "monolingualtext") {
        if (!value.is_object() || !value.contains("text") || !value["text"].is_string())
            return std::nullopt;
        return ObjectValue{Literal{value["text"].get<std::string>(), LiteralKind::String}};
    }
    return ObjectValue{Literal{value.dump(), LiteralKind::Other}};
}

}  // namespace

ScanStats scan_dump(std::istream& in, const IngestConfig& config, LabelTable& labels,
                    const TripletSink& sink) {
    if (!in.good()) throw IngestError("dump stream is not readable");
    ScanStats stats;
    std::string line;
    while (std::getline(in, line)) {
        const auto record = strip_record(line);
        if (record.empty() || record == "[" || record == "]") continue;
        ++stats.records;
        json doc = json::parse(record, nullptr, /*allow_exceptions=*/false);
        if (doc.is_discarded() || !doc.is_object() || !doc.contains("id") || !doc["id"].is_string() ||
            !is_entity_id(doc["id"].get_ref<const std::string&>())) {
            ++stats.malformed_records;
            continue;
        }
        const auto& id = doc["id"].get_ref<const std::string&>();
        auto claims_it = doc.find("claims");
        if (claims_it != doc.end() && !claims_it->is_object() &&
            !(claims_it->is_array() && claims_it->empty())) {
            ++stats.malformed_records;
            continue;
        }
        ++stats.entities;
        if (const auto* l = find_lang_value(doc, "labels", config.label_lang))
            labels.labels[id] = l->get<std::string>();
        if (id[0] == 'P') {
            if (const auto* d = find_lang_value(doc, "descriptions", config.label_lang))
                labels.descriptions[id] = d->get<std::string>();
        }
        if (claims_it == doc.end() || !claims_it->is_object()) continue;
        for (const auto& [prop, statements] : claims_it->items()) {
            if (!statements.is_array() || !is_entity_id(prop) || prop[0] != 'P') {
                ++stats.malformed_claims;
                continue;
            }
            for (const auto& st : statements) {
                if (!st.is_object() || !st.contains("mainsnak") || !st["mainsnak"].is_object()) {
                    ++stats.malformed_claims;
                    continue;
                }
                const auto& snak = st["mainsnak"];
                if (snak.value("snaktype", std::string("value")) != "value") continue;
                auto dv = snak.find("datavalue");
                if (dv == snak.end()) {
                    ++stats.malformed_claims;
                    continue;
                }
                auto obj = decode_datavalue(*dv);
                if (!obj) {
                    ++stats.malformed_claims;
                    continue;
                }
                ++stats.triplets;
                sink(Triplet{EntityRef{id, {}}, PropertyRef{prop, {}, {}}, std::move(*obj)});
            }
        }
    }
    if (in.bad()) throw IngestError("read error while streaming dump");
    return stats;
}

TripletStore parse_snapshot(std::istream& in, const IngestConfig& config) {
    LabelTable labels;
    std::vector<Triplet> triplets;
    auto stats = scan_dump(in, config, labels,
                           [&](Triplet&& t) { triplets.push_back(std::move(t)); });
    SnapshotMeta meta{config.snapshot_date, config.source_uri, stats.entities, triplets.size()};
    return TripletStore(std::move(triplets), std::move(labels), std::move(meta),
                        stats.malformed_records);
}

namespace {

std::size_t read_label_sidecar(std::istream& in, LabelTable& labels) {
    std::size_t skipped = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (text::trim(line).empty()) continue;
        json doc = json::parse(line, nullptr, false);
        if (doc.is_discarded() || !doc.is_object() || !doc.contains("id") || !doc["id"].is_string() ||
            !doc.contains("label") || !doc["label"].is_string()) {
            ++skipped;
            continue;
        }
        const auto id = doc["id"].get<std::string>();
        labels.labels[id] = doc["label"].get<std::string>();
        if (auto d = doc.find("description"); d != doc.end() && d->is_string())
            labels.descriptions[id] = d->get<std::string>();
    }
    return skipped;
}

}  // namespace

TripletStore parse_tsv(std::istream& triplets_in, std::istream* labels_in, const IngestConfig& config) {
    if (!triplets_in.good()) throw IngestError("triplet stream is not readable");
    std::vector<Triplet> triplets;
    std::set<std::string> subjects;
    std::size_t skipped = 0;
    std::string line;
    while (std::getline(triplets_in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string_view> cols;
        std::string_view rest = line;
        while (true) {
            auto tab = rest.find('\t');
            cols.push_back(rest.substr(0, tab));
            if (tab == std::string_view::npos) break;
            rest.remove_prefix(tab + 1);
        }
        if (cols.size() < 3 || cols.size() > 4 || !is_entity_id(cols[0]) || !is_entity_id(cols[1]) ||
            cols[1][0] != 'P') {
            ++skipped;
            continue;
        }
        ObjectValue obj;
        if (cols.size() == 3 && is_entity_id(cols[2])) {
            obj = EntityRef{std::string(cols[2]), {}};
        } else {
            auto kind = cols.size() == 4 ? literal_kind_from_string(cols[3]) : LiteralKind::String;
            if (!kind) {
                ++skipped;
                continue;
            }
            obj = Literal{tsv_unescape(cols[2]), *kind};
        }
        subjects.emplace(cols[0]);
        triplets.push_back(
            Triplet{EntityRef{std::string(cols[0]), {}}, PropertyRef{std::string(cols[1]), {}, {}}, obj});
    }
    if (triplets_in.bad()) throw IngestError("read error while reading triplets");
    LabelTable labels;
    if (labels_in != nullptr) skipped += read_label_sidecar(*labels_in, labels);
    SnapshotMeta meta{config.snapshot_date, config.source_uri, subjects.size(), triplets.size()};
    return TripletStore(std::move(triplets), std::move(labels), std::move(meta), skipped);
}

TripletStore resolve_labels(const TripletStore& store) {
    const auto& table = store.labels();
    auto label_of = [&](const std::string& id) -> std::string {
        auto it = table.labels.find(id);
        return it == table.labels.end() ? std::string{} : it->second;
    };
    std::vector<Triplet> out;
    out.reserve(store.size());
    for (Triplet t : store.triplets()) {
        t.subject.label = label_of(t.subject.id);
        t.relation.label = label_of(t.relation.id);
        if (auto it = table.descriptions.find(t.relation.id); it != table.descriptions.end())
            t.relation.description = it->second;
        if (auto* e = std::get_if<EntityRef>(&t.object)) e->label = label_of(e->id);
        out.push_back(std::move(t));
    }
    return TripletStore(std::move(out), table, store.meta(), store.skipped_records());
}

namespace {

class GzipStreamBuf : public std::streambuf {
public:
    explicit GzipStreamBuf(const std::filesystem::path& path) : file_(gzopen(path.c_str(), "rb")) {}
    ~GzipStreamBuf() override {
        if (file_ != nullptr) gzclose(file_);
    }
    GzipStreamBuf(const GzipStreamBuf&) = delete;
    GzipStreamBuf& operator=(const GzipStreamBuf&) = delete;

    bool is_open() const { return file_ != nullptr; }

protected:
    int_type underflow() override {
        if (gptr() < egptr()) return traits_type::to_int_type(*gptr());
        const int n = gzread(file_, buffer_.data(), static_cast<unsigned>(buffer_.size()));
        if (n < 0) throw IngestError("gzip decompression failed");
        if (n == 0) return traits_type::eof();
        setg(buffer_.data(), buffer_.data(), buffer_.data() + n);
        return traits_type::to_int_type(*gptr());
    }

private:
    gzFile file_;
    std::array<char, 1 << 16> buffer_{};
};

}  // namespace

TripletStore load_snapshot(const std::filesystem::path& path, const IngestConfig& config) {
    IngestConfig cfg = config;
    if (cfg.source_uri.empty()) cfg.source_uri = path.string();
    if (cfg.format == DumpFormat::Tsv) {
        std::ifstream triplets(path);
        if (!triplets) throw IngestError("cannot open " + path.string());
        const auto sidecar = path.parent_path() / "labels.jsonl";
        std::ifstream labels(sidecar);
        return resolve_labels(parse_tsv(triplets, labels ? &labels : nullptr, cfg));
    }
    if (path.extension() == ".gz") {
        GzipStreamBuf buf(path);
        if (!buf.is_open()) throw IngestError("cannot open " + path.string());
        std::istream in(&buf);
        return resolve_labels(parse_snapshot(in, cfg));
    }
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open " + path.string());
    return resolve_labels(parse_snapshot(in, cfg));
}

void write_canonical(const TripletStore& store, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream tsv(dir / "store.tsv", std::ios::binary);
    if (!tsv) throw Error("cannot write " + (dir / "store.tsv").string());
    for (const auto& t : store.triplets()) {
        tsv << t.subject.id << '\t' << t.relation.id << '\t';
        if (const auto* e = std::get_if<EntityRef>(&t.object)) {
            tsv << e->id << '\n';
        } else {
            const auto& lit = std::get<Literal>(t.object);
            tsv << tsv_escape(lit.raw) << '\t' << to_string(lit.kind) << '\n';
        }
    }
    // Sorted for byte-stable output.
    std::map<std::string, std::pair<std::string, const std::string*>> sorted;
    for (const auto& [id, label] : store.labels().labels) sorted[id].first = label;
    for (const auto& [id, desc] : store.labels().descriptions) sorted[id].second = &desc;
    std::ofstream labels(dir / "labels.jsonl", std::ios::binary);
    for (const auto& [id, entry] : sorted) {
        nlohmann::ordered_json rec;
        rec["id"] = id;
        rec["label"] = entry.first;
        if (entry.second != nullptr) rec["description"] = *entry.second;
        labels << rec.dump() << '\n';
    }
    nlohmann::ordered_json meta;
    meta["snapshot_date"] = store.meta().snapshot_date;
    meta["source_uri"] = store.meta().source_uri;
    meta["entity_count"] = store.meta().entity_count;
    meta["triplet_count"] = store.meta().triplet_count;
    meta["skipped_records"] = store.skipped_records();
    std::ofstream(dir / "snapshot.json", std::ios::binary) << meta.dump(2) << '\n';
}

TripletStore read_canonical(const std::filesystem::path& dir) {
    std::ifstream meta_in(dir / "snapshot.json");
    if (!meta_in) throw IngestError("missing " + (dir / "snapshot.json").string());
    json meta = json::parse(meta_in, nullptr, false);
    if (meta.is_discarded() || !meta.is_object()) throw IngestError("malformed snapshot.json in " + dir.string());
    IngestConfig cfg;
    cfg.format = DumpFormat::Tsv;
    cfg.snapshot_date = meta.value("snapshot_date", std::string("1970-01-01"));
    cfg.source_uri = meta.value("source_uri", std::string{});
    std::ifstream tsv(dir / "store.tsv");
    if (!tsv) throw IngestError("missing " + (dir / "store.tsv").string());
    std::ifstream labels(dir / "labels.jsonl");
    auto store = resolve_labels(parse_tsv(tsv, labels ? &labels : nullptr, cfg));
    SnapshotMeta m = store.meta();
    m.entity_count = meta.value("entity_count", m.entity_count);
    return TripletStore(store.triplets(), store.labels(), m, meta.value("skipped_records", std::size_t{0}));
}

}  // namespace editbench
