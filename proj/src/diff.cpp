#include "editbench/diff.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <memory>
#include <ostream>
#include <queue>
#include <string>

#include "editbench/error.hpp"
#include "editbench/serialize.hpp"

namespace editbench {

std::string_view to_string(ChangeKind kind) { return kind == ChangeKind::New ? "new" : "modified"; }

bool triplet_less(const Triplet& a, const Triplet& b) {
    if (a.subject.id != b.subject.id) return a.subject.id < b.subject.id;
    if (a.relation.id != b.relation.id) return a.relation.id < b.relation.id;
    return object_key(a.object) < object_key(b.object);
}

namespace {

bool same_key(const Triplet& a, const Triplet& b) {
    return a.subject.id == b.subject.id && a.relation.id == b.relation.id;
}

class Cursor {
public:
    virtual ~Cursor() = default;
    virtual bool next(Triplet& out) = 0;
};

class VectorCursor final : public Cursor {
public:
    explicit VectorCursor(const std::vector<Triplet>& triplets) {
        order_.reserve(triplets.size());
        for (const auto& t : triplets) order_.push_back(&t);
        std::stable_sort(order_.begin(), order_.end(),
                         [](const Triplet* a, const Triplet* b) { return triplet_less(*a, *b); });
    }
    bool next(Triplet& out) override {
        if (pos_ == order_.size()) return false;
        out = *order_[pos_++];
        return true;
    }

private:
    std::vector<const Triplet*> order_;
    std::size_t pos_ = 0;
};

// One tab-separated line per triplet, columns escaped.
std::string encode_line(const Triplet& t) {
    std::string line = tsv_escape(t.subject.id) + '\t' + tsv_escape(t.subject.label) + '\t' +
                       tsv_escape(t.relation.id) + '\t' + tsv_escape(t.relation.label) + '\t' +
                       tsv_escape(t.relation.description) + '\t';
    if (const auto* e = std::get_if<EntityRef>(&t.object)) {
        line += "e\t" + tsv_escape(e->id) + '\t' + tsv_escape(e->label);
    } else {
        const auto& lit = std::get<Literal>(t.object);
        line += "l\t" + tsv_escape(lit.raw) + '\t' + std::string(to_string(lit.kind));
    }
    return line;
}

Triplet decode_line(const std::string& line) {
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
        auto tab = line.find('\t', start);
        cols.push_back(tsv_unescape(std::string_view(line).substr(start, tab - start)));
        if (tab == std::string::npos) break;
        start = tab + 1;
    }
    if (cols.size() != 8) throw Error("corrupt diff spill record");
    Triplet t{EntityRef{cols[0], cols[1]}, PropertyRef{cols[2], cols[3], cols[4]}, EntityRef{}};
    if (cols[5] == "e") {
        t.object = EntityRef{cols[6], cols[7]};
    } else {
        t.object = Literal{cols[6], literal_kind_from_string(cols[7]).value_or(LiteralKind::Other)};
    }
    return t;
}

class SpillDir {
public:
    explicit SpillDir(const std::filesystem::path& base) {
        static std::atomic<unsigned> counter{0};
        const auto root = base.empty() ? std::filesystem::temp_directory_path() : base;
        path_ = root / ("editbench-diff-" + std::to_string(::getpid()) + "-" +
                        std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~SpillDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    SpillDir(const SpillDir&) = delete;
    SpillDir& operator=(const SpillDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// Sorts a store in runs of `run_size`, spilling each sorted run to disk, then
/// yields the k-way merge of the runs.
class ExternalCursor final : public Cursor {
public:
    ExternalCursor(const std::vector<Triplet>& triplets, std::size_t run_size,
                   const std::filesystem::path& dir, const std::string& tag) {
        run_size = std::max<std::size_t>(run_size, 1);
        for (std::size_t begin = 0; begin < triplets.size(); begin += run_size) {
            const auto end = std::min(triplets.size(), begin + run_size);
            std::vector<const Triplet*> run;
            for (auto i = begin; i < end; ++i) run.push_back(&triplets[i]);
            std::stable_sort(run.begin(), run.end(),
                             [](const Triplet* a, const Triplet* b) { return triplet_less(*a, *b); });
            const auto path = dir / (tag + "-" + std::to_string(runs_.size()) + ".run");
            {
                std::ofstream out(path, std::ios::binary);
                if (!out) throw Error("cannot write spill file " + path.string());
                for (const auto* t : run) out << encode_line(*t) << '\n';
            }
            runs_.push_back(std::make_unique<std::ifstream>(path, std::ios::binary));
        }
        for (std::size_t r = 0; r < runs_.size(); ++r) advance(r);
    }

    bool next(Triplet& out) override {
        if (heap_.empty()) return false;
        auto top = heap_.top();
        heap_.pop();
        out = std::move(top.triplet);
        advance(top.run);
        return true;
    }

private:
    struct Head {
        Triplet triplet;
        std::size_t run;
    };
    struct Greater {
        bool operator()(const Head& a, const Head& b) const {
            if (triplet_less(b.triplet, a.triplet)) return true;
            if (triplet_less(a.triplet, b.triplet)) return false;
            return a.run > b.run;
        }
    };

    void advance(std::size_t run) {
        std::string line;
        if (std::getline(*runs_[run], line)) heap_.push(Head{decode_line(line), run});
    }

    std::vector<std::unique_ptr<std::ifstream>> runs_;
    std::priority_queue<Head, std::vector<Head>, Greater> heap_;
};

/// Pulls consecutive same-key groups from a sorted cursor.
class GroupReader {
public:
    explicit GroupReader(Cursor& cursor) : cursor_(cursor) { has_ = cursor_.next(peek_); }

    bool done() const { return !has_; }
    const Triplet& peek() const { return peek_; }

    std::vector<Triplet> take_group() {
        std::vector<Triplet> group;
        group.push_back(std::move(peek_));
        while ((has_ = cursor_.next(peek_)) && same_key(peek_, group.front())) {
            group.push_back(std::move(peek_));
        }
        // Collapse duplicate claims of the same object.
        group.erase(std::unique(group.begin(), group.end(),
                                [](const Triplet& a, const Triplet& b) {
                                    return object_key(a.object) == object_key(b.object);
                                }),
                    group.end());
        return group;
    }

private:
    Cursor& cursor_;
    Triplet peek_;
    bool has_ = false;
};

int compare_keys(const Triplet& a, const Triplet& b) {
    if (a.subject.id != b.subject.id) return a.subject.id < b.subject.id ? -1 : 1;
    if (a.relation.id != b.relation.id) return a.relation.id < b.relation.id ? -1 : 1;
    return 0;
}

void classify(std::vector<Triplet>&& newer, const std::vector<Triplet>* older, DiffResult& out) {
    if (newer.size() > 1 || (older != nullptr && older->size() > 1)) {
        for (auto& t : newer) out.ambiguous.push_back(std::move(t));
        return;
    }
    auto& t = newer.front();
    if (older == nullptr) {
        out.changed_set.push_back(ChangedTriplet{std::move(t), ChangeKind::New, std::nullopt});
    } else if (object_key(older->front().object) == object_key(t.object)) {
        out.static_set.push_back(std::move(t));
    } else {
        out.changed_set.push_back(
            ChangedTriplet{std::move(t), ChangeKind::Modified, older->front().object});
    }
}

std::unique_ptr<Cursor> make_cursor(const TripletStore& store, const DiffOptions& options,
                                    const SpillDir* spill, const std::string& tag) {
    if (spill == nullptr) return std::make_unique<VectorCursor>(store.triplets());
    return std::make_unique<ExternalCursor>(store.triplets(), options.memory_threshold, spill->path(),
                                            tag);
}

}  // namespace

DiffResult diff_snapshots(const TripletStore& old_store, const TripletStore& new_store,
                          const DiffOptions& options) {
    std::unique_ptr<SpillDir> spill;
    if (old_store.size() > options.memory_threshold || new_store.size() > options.memory_threshold)
        spill = std::make_unique<SpillDir>(options.spill_dir);

    auto old_cursor = make_cursor(old_store, options, spill.get(), "old");
    auto new_cursor = make_cursor(new_store, options, spill.get(), "new");
    GroupReader olds(*old_cursor);
    GroupReader news(*new_cursor);

    DiffResult result;
    while (!news.done()) {
        // Keys present only in the old snapshot are deletions and are dropped.
        while (!olds.done() && compare_keys(olds.peek(), news.peek()) < 0) olds.take_group();
        if (!olds.done() && compare_keys(olds.peek(), news.peek()) == 0) {
            auto older = olds.take_group();
            classify(news.take_group(), &older, result);
        } else {
            classify(news.take_group(), nullptr, result);
        }
    }
    return result;
}

void write_diff_report(const DiffResult& diff, std::ostream& out) {
    for (const auto& c : diff.changed_set) out << changed_report_json(c).dump() << '\n';
}

}  // namespace editbench
