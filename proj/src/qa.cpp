#include "editbench/qa.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "editbench/embed.hpp"
#include "editbench/error.hpp"
#include "editbench/parallel.hpp"
#include "editbench/text.hpp"

namespace editbench {

namespace {

constexpr std::array<std::pair<QaKind, std::string_view>, 5> kKindNames{{
    {QaKind::Update, "update"},
    {QaKind::Locality, "locality"},
    {QaKind::Rephrase, "rephrase"},
    {QaKind::Persona, "persona"},
    {QaKind::Mhop, "mhop"},
}};

constexpr std::string_view kFormatReminder =
    "\n\nRespond with exactly two lines in this format:\nQ: <question>\nA: <answer>\n";
constexpr std::string_view kRephraseReminder =
    "\n\nRespond with exactly one line in this format:\nReformulated Question: <question>\n";

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    while (!text.empty()) {
        auto nl = text.find('\n');
        lines.push_back(text.substr(0, nl));
        if (nl == std::string_view::npos) break;
        text.remove_prefix(nl + 1);
    }
    return lines;
}

// Drops list markers and emphasis around a response line.
std::string clean_line(std::string_view line) {
    std::string s = text::trim(line);
    while (!s.empty() && (s.front() == '-' || s.front() == '*' || s.front() == '#' || s.front() == ' '))
        s.erase(s.begin());
    return s;
}

std::optional<std::string> field_value(const std::string& line, std::string_view label) {
    if (line.size() < label.size()) return std::nullopt;
    for (std::size_t i = 0; i < label.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(line[i])) != std::tolower(static_cast<unsigned char>(label[i])))
            return std::nullopt;
    }
    auto value = line.substr(label.size());
    while (!value.empty() && value.front() == '*') value.erase(value.begin());
    value = text::trim(value);
    while (!value.empty() && value.back() == '*') value.pop_back();
    return text::trim(value);
}

std::string casefold(std::string_view s) {
    auto cps = text::decode_utf8(text::trim(s));
    for (auto& c : cps) c = text::fold_case(c);
    return text::encode_utf8(cps);
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::string pad_index(std::size_t i) {
    std::string s = std::to_string(i);
    return std::string(s.size() < 6 ? 6 - s.size() : 0, '0') + s;
}

bool relation_present(const std::vector<std::string>& question_tokens, const std::vector<std::string>& rel) {
    for (const auto& r : rel)
        for (const auto& q : question_tokens)
            if (token_matches(q, r)) return true;
    return false;
}

}  // namespace

std::string_view to_string(QaKind kind) {
    for (const auto& [k, name] : kKindNames)
        if (k == kind) return name;
    return "update";
}

std::optional<QaKind> qa_kind_from_string(std::string_view name) {
    for (const auto& [k, n] : kKindNames)
        if (n == name) return k;
    return std::nullopt;
}

std::optional<std::pair<std::string, std::string>> parse_qa_response(std::string_view text) {
    std::optional<std::string> question;
    for (auto raw : split_lines(text)) {
        const auto line = clean_line(raw);
        if (!question) {
            if (auto q = field_value(line, "Q:"); q && !q->empty()) question = *q;
            continue;
        }
        if (auto a = field_value(line, "A:"); a && !a->empty()) return std::make_pair(*question, *a);
    }
    return std::nullopt;
}

std::optional<std::string> parse_rephrase_response(std::string_view text) {
    std::optional<std::string> fallback;
    for (auto raw : split_lines(text)) {
        const auto line = clean_line(raw);
        if (auto v = field_value(line, "Reformulated Question:"); v && !v->empty()) return *v;
        if (!fallback)
            if (auto q = field_value(line, "Q:"); q && !q->empty()) fallback = *q;
    }
    return fallback;
}

bool token_matches(std::string_view q, std::string_view r) {
    if (q == r) return true;
    const auto n = std::min(q.size(), r.size());
    std::size_t p = 0;
    while (p < n && q[p] == r[p]) ++p;
    if (p >= 5) return true;
    return p >= 4 && p == n;
}

ValidationResult validate_qa(const QaPair& qa, const QaSource& source) {
    std::string subject;
    std::string expected;
    std::vector<std::string> relation_tokens;
    if (const auto* t = std::get_if<Triplet>(&source)) {
        subject = t->subject.label;
        expected = object_text(t->object);
        relation_tokens = text::content_tokens(t->relation.label);
    } else {
        const auto& m = std::get<MhopQuintuple>(source);
        subject = m.e0.label;
        expected = m.e2.label;
        relation_tokens = text::content_tokens(m.r1.label);
        for (auto& tok : text::content_tokens(m.r2.label)) relation_tokens.push_back(std::move(tok));
    }
    ValidationResult result;
    if (!text::contains_phrase(qa.question, subject)) result.reasons.emplace_back(kMissingSubject);
    if (!relation_tokens.empty() && !relation_present(text::tokens(qa.question), relation_tokens))
        result.reasons.emplace_back(kMissingRelation);
    if (text::contains_phrase(qa.question, expected)) result.reasons.emplace_back(kAnswerLeak);
    if (text::normalize(qa.answer) != text::normalize(expected) || text::normalize(expected).empty())
        result.reasons.emplace_back(kAnswerMismatch);
    return result;
}

// ---- QaForge ------------------------------------------------------------------------

QaForge::QaForge(std::shared_ptr<GenerationProvider> provider, ForgeConfig config, TemplateRegistry templates)
    : provider_(std::move(provider)), config_(std::move(config)), templates_(std::move(templates)) {
    if (!provider_) throw ConfigError("qa.provider", "no generation provider configured");
}

std::optional<std::string> QaForge::call(QaKind kind, const std::string& prompt) {
    GenerationRequest req{config_.models.at(kind), prompt, config_.params};
    try {
        auto resp = with_retries(config_.retry, [&] { return provider_->generate(req); });
        return resp.text;
    } catch (const ProviderError&) {
        ++counter(kind).transport_failures;
        return std::nullopt;
    }
}

std::optional<std::pair<std::string, std::string>> QaForge::call_qa(QaKind kind, const std::string& prompt) {
    auto text = call(kind, prompt);
    if (!text) return std::nullopt;
    if (auto parsed = parse_qa_response(*text)) return parsed;
    text = call(kind, prompt + std::string(kFormatReminder));
    if (!text) return std::nullopt;
    if (auto parsed = parse_qa_response(*text)) return parsed;
    ++counter(kind).parse_failures;
    return std::nullopt;
}

std::optional<QaPair> QaForge::generate_qa(const Triplet& fact, QaKind kind) {
    if (kind != QaKind::Update && kind != QaKind::Locality)
        throw std::invalid_argument("generate_qa(Triplet) expects update or locality kind");
    ++counter(kind).attempted;
    auto parsed = call_qa(kind, render_prompt(templates_, fact));
    if (!parsed) return std::nullopt;
    QaPair qa;
    qa.kind = kind;
    qa.question = parsed->first;
    qa.answer = object_text(fact.object);
    qa.subject = fact.subject.label;
    qa.relation = fact.relation.label;
    qa.object = object_text(fact.object);
    qa.provenance = {triplet_id(fact)};
    return qa;
}

std::optional<QaPair> QaForge::generate_qa(const MhopQuintuple& tuple) {
    ++counter(QaKind::Mhop).attempted;
    auto parsed = call_qa(QaKind::Mhop, render_prompt(templates_, tuple));
    if (!parsed) return std::nullopt;
    QaPair qa;
    qa.kind = QaKind::Mhop;
    qa.question = parsed->first;
    qa.answer = parsed->second;
    qa.subject = tuple.e0.label;
    qa.relation = tuple.r1.label + " / " + tuple.r2.label;
    qa.object = tuple.e2.label;
    qa.provenance = {tuple.first_id, tuple.second_id};
    return qa;
}

std::optional<QaPair> QaForge::reword(const QaPair& parent, QaKind kind, const std::string& prompt) {
    ++counter(kind).attempted;
    bool echoed = false;
    for (int attempt = 0; attempt < 2; ++attempt) {
        auto text = call(kind, attempt == 0 ? prompt : prompt + std::string(kRephraseReminder));
        if (!text) return std::nullopt;
        auto question = parse_rephrase_response(*text);
        if (!question) continue;
        if (casefold(*question) == casefold(parent.question)) {
            echoed = true;
            continue;
        }
        QaPair qa = parent;
        qa.kind = kind;
        qa.question = *question;
        qa.parent_id = parent.id;
        qa.persona.reset();
        return qa;
    }
    ++(echoed ? counter(kind).unchanged_rephrase : counter(kind).parse_failures);
    return std::nullopt;
}

std::optional<QaPair> QaForge::generate_rephrase(const QaPair& parent) {
    if (parent.kind != QaKind::Update) throw std::invalid_argument("rephrase parent must be an update pair");
    auto qa = reword(parent, QaKind::Rephrase, render_prompt(templates_, parent));
    if (qa) qa->id = parent.id + "-rephrase";
    return qa;
}

std::optional<QaPair> QaForge::generate_persona(const QaPair& parent, const PersonaSpec& persona) {
    if (parent.kind != QaKind::Update) throw std::invalid_argument("persona parent must be an update pair");
    auto qa = reword(parent, QaKind::Persona, render_prompt(templates_, parent, persona));
    if (qa) {
        qa->id = parent.id + "-persona";
        qa->persona = persona.name;
    }
    return qa;
}

const PersonaSpec& QaForge::choose_persona(std::string_view parent_id) const {
    const auto& personas = default_personas();
    return personas[splitmix64(config_.seed ^ fnv1a(parent_id)) % personas.size()];
}

std::map<QaKind, KindCounters> QaForge::counters() const {
    std::map<QaKind, KindCounters> out;
    for (auto kind : kAllKinds) {
        const auto& c = counters_[static_cast<std::size_t>(kind)];
        out[kind] = KindCounters{c.attempted.load(),          c.emitted.load(),
                                 c.transport_failures.load(), c.parse_failures.load(),
                                 c.unchanged_rephrase.load(), c.invalid.load()};
    }
    return out;
}

ForgeOutput QaForge::forge(const ForgeInputs& in) {
    ForgeOutput out;
    const auto inflight = config_.max_inflight;
    auto keep_if_valid = [&](std::optional<QaPair>& qa, const QaSource& source, QaKind kind,
                             std::vector<QaPair>& sink) {
        if (!qa) return false;
        if (!validate_qa(*qa, source).pass()) {
            ++counter(kind).invalid;
            return false;
        }
        ++counter(kind).emitted;
        sink.push_back(std::move(*qa));
        return true;
    };

    // Update set.
    auto updates = parallel_map(in.changed, inflight, [&](const ChangedTriplet& c, std::size_t i) {
        auto qa = generate_qa(c.triplet, QaKind::Update);
        if (qa) {
            qa->id = in.timestep_id + "-update-" + pad_index(i);
            qa->timestep = in.timestep_id;
        }
        return qa;
    });
    std::unordered_map<std::string, const Triplet*> source_of;  // update id -> fact
    auto& update_set = out.sets[QaKind::Update];
    for (std::size_t i = 0; i < updates.size(); ++i) {
        if (keep_if_valid(updates[i], in.changed[i].triplet, QaKind::Update, update_set))
            source_of[update_set.back().id] = &in.changed[i].triplet;
    }

    // Locality set.
    auto locality = parallel_map(in.probes, inflight, [&](const LocalityProbe& p, std::size_t i) {
        auto qa = generate_qa(p.probe, QaKind::Locality);
        if (qa) {
            qa->id = in.timestep_id + "-locality-" + pad_index(i);
            qa->timestep = in.timestep_id;
            qa->provenance.push_back(p.changed_id);
        }
        return qa;
    });
    auto& locality_set = out.sets[QaKind::Locality];
    for (std::size_t i = 0; i < locality.size(); ++i)
        keep_if_valid(locality[i], in.probes[i].probe, QaKind::Locality, locality_set);

    // Rephrase and persona sets derive from validated updates.
    auto rephrased = parallel_map(update_set, inflight,
                                  [&](const QaPair& parent, std::size_t) { return generate_rephrase(parent); });
    auto personas = parallel_map(update_set, inflight, [&](const QaPair& parent, std::size_t) {
        return generate_persona(parent, choose_persona(parent.id));
    });
    auto& rephrase_set = out.sets[QaKind::Rephrase];
    auto& persona_set = out.sets[QaKind::Persona];
    for (std::size_t i = 0; i < update_set.size(); ++i) {
        const auto& fact = *source_of.at(update_set[i].id);
        keep_if_valid(rephrased[i], fact, QaKind::Rephrase, rephrase_set);
        keep_if_valid(personas[i], fact, QaKind::Persona, persona_set);
    }

    // Multi-hop pairs need both constituent facts in the validated update set.
    std::unordered_set<std::string> updated_facts;
    for (const auto& qa : update_set) updated_facts.insert(qa.provenance.front());
    std::vector<MhopQuintuple> eligible;
    for (const auto& m : in.mhop)
        if (updated_facts.count(m.first_id) != 0 && updated_facts.count(m.second_id) != 0) eligible.push_back(m);
    auto mhop = parallel_map(eligible, inflight, [&](const MhopQuintuple& m, std::size_t i) {
        auto qa = generate_qa(m);
        if (qa) {
            qa->id = in.timestep_id + "-mhop-" + pad_index(i);
            qa->timestep = in.timestep_id;
        }
        return qa;
    });
    auto& mhop_set = out.sets[QaKind::Mhop];
    for (std::size_t i = 0; i < mhop.size(); ++i) keep_if_valid(mhop[i], eligible[i], QaKind::Mhop, mhop_set);

    out.counters = counters();
    return out;
}

}  // namespace editbench
