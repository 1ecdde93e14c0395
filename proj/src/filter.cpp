#include "editbench/filter.hpp"

#include <array>
#include <unordered_map>

#include "editbench/error.hpp"
#include "editbench/text.hpp"

namespace editbench {

namespace {

constexpr std::array<std::pair<FilterRule, std::string_view>, 7> kRuleNames{{
    {FilterRule::Circular, "circular"},
    {FilterRule::NonRoman, "non_roman"},
    {FilterRule::SingleChar, "single_char"},
    {FilterRule::LongPhrase, "long_phrase"},
    {FilterRule::NonEntity, "non_entity"},
    {FilterRule::Unresolved, "unresolved"},
    {FilterRule::Ambiguous, "ambiguous"},
}};

const std::array<ScriptRange, 7> kScripts{{
    {"basic_latin", 0x0000, 0x007F},
    {"latin1_supplement", 0x0080, 0x00FF},
    {"latin_extended_a", 0x0100, 0x017F},
    {"latin_extended_b", 0x0180, 0x024F},
    {"general_punctuation", 0x2000, 0x206F},
    {"latin_extended_additional", 0x1E00, 0x1EFF},
    {"combining_diacritics", 0x0300, 0x036F},
}};

std::u32string fold(std::string_view s) {
    auto cps = text::decode_utf8(s);
    for (auto& c : cps) c = text::fold_case(c);
    return cps;
}

bool enabled(const FilterConfig& config, FilterRule rule) { return config.enabled.count(rule) != 0; }

}  // namespace

std::string_view rule_name(FilterRule rule) {
    for (const auto& [r, name] : kRuleNames)
        if (r == rule) return name;
    return "unknown";
}

std::optional<FilterRule> rule_from_name(std::string_view name) {
    for (const auto& [r, n] : kRuleNames)
        if (n == name) return r;
    return std::nullopt;
}

std::optional<ScriptRange> script_range(std::string_view name) {
    for (const auto& s : kScripts)
        if (s.name == name) return s;
    return std::nullopt;
}

const std::vector<std::string>& default_scripts() {
    static const std::vector<std::string> scripts{"basic_latin", "latin1_supplement", "latin_extended_a",
                                                  "latin_extended_b", "general_punctuation"};
    return scripts;
}

std::size_t FilterReport::removed() const {
    std::size_t n = 0;
    for (const auto& [rule, count] : removed_by_rule) n += count;
    return n;
}

FilterReport& FilterReport::operator+=(const FilterReport& other) {
    input_count += other.input_count;
    kept_count += other.kept_count;
    for (const auto& [rule, count] : other.removed_by_rule) removed_by_rule[rule] += count;
    return *this;
}

bool is_roman(std::string_view label, const std::vector<std::string>& scripts) {
    std::vector<ScriptRange> ranges;
    ranges.reserve(scripts.size());
    for (const auto& name : scripts) {
        auto r = script_range(name);
        if (!r) throw ConfigError("filters.allow_scripts", "unknown repertoire '" + name + "'");
        ranges.push_back(*r);
    }
    for (char32_t c : text::decode_utf8(label)) {
        bool ok = false;
        for (const auto& r : ranges) {
            if (c >= r.first && c <= r.last) {
                ok = true;
                break;
            }
        }
        if (!ok) return false;
    }
    return true;
}

std::optional<FilterRule> first_matching_rule(const Triplet& t, const FilterConfig& config) {
    const auto& subject_label = t.subject.label;
    const auto& object_label = object_text(t.object);

    if (enabled(config, FilterRule::Circular)) {
        const auto* obj = std::get_if<EntityRef>(&t.object);
        const bool same_id = obj != nullptr && obj->id == t.subject.id;
        const bool same_label = !subject_label.empty() && fold(subject_label) == fold(object_label);
        if (same_id || same_label) return FilterRule::Circular;
    }
    if (enabled(config, FilterRule::NonRoman)) {
        if (!is_roman(subject_label, config.allow_scripts) || !is_roman(object_label, config.allow_scripts))
            return FilterRule::NonRoman;
    }
    if (enabled(config, FilterRule::SingleChar)) {
        if (text::codepoint_count(subject_label) == 1 || text::codepoint_count(object_label) == 1)
            return FilterRule::SingleChar;
    }
    if (enabled(config, FilterRule::LongPhrase)) {
        if (text::word_count(subject_label) > config.max_phrase_words ||
            text::word_count(object_label) > config.max_phrase_words)
            return FilterRule::LongPhrase;
    }
    if (enabled(config, FilterRule::NonEntity) && !is_entity(t.object)) return FilterRule::NonEntity;
    if (enabled(config, FilterRule::Unresolved) && t.unresolved()) return FilterRule::Unresolved;
    return std::nullopt;
}

FilterOutcome apply_filters(const std::vector<Triplet>& triplets, const FilterConfig& config) {
    FilterOutcome out;
    out.report.input_count = triplets.size();
    for (auto rule : {FilterRule::Circular, FilterRule::NonRoman, FilterRule::SingleChar, FilterRule::LongPhrase,
                      FilterRule::NonEntity, FilterRule::Unresolved})
        out.report.removed_by_rule[std::string(rule_name(rule))] = 0;
    for (const auto& t : triplets) {
        if (auto rule = first_matching_rule(t, config)) {
            ++out.report.removed_by_rule[std::string(rule_name(*rule))];
        } else {
            out.kept.push_back(t);
        }
    }
    out.report.kept_count = out.kept.size();
    return out;
}

FilterOutcome drop_ambiguous(const std::vector<Triplet>& triplets,
                             const std::unordered_set<std::string>& flagged_keys) {
    std::unordered_map<std::string, std::pair<std::string, bool>> groups;  // key -> (first object, multi)
    for (const auto& t : triplets) {
        auto obj = object_key(t.object);
        auto [it, inserted] = groups.try_emplace(triplet_key(t), obj, false);
        if (!inserted && it->second.first != obj) it->second.second = true;
    }
    FilterOutcome out;
    out.report.input_count = triplets.size();
    for (const auto& t : triplets) {
        const auto key = triplet_key(t);
        if (groups.at(key).second || flagged_keys.count(key) != 0) {
            ++out.report.removed_by_rule[std::string(rule_name(FilterRule::Ambiguous))];
        } else {
            out.kept.push_back(t);
        }
    }
    out.report.kept_count = out.kept.size();
    return out;
}

}  // namespace editbench
