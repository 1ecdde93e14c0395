#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "editbench/types.hpp"

namespace editbench {

/// Quality rules in their fixed evaluation order.
enum class FilterRule { Circular, NonRoman, SingleChar, LongPhrase, NonEntity, Unresolved, Ambiguous };

std::string_view rule_name(FilterRule rule);
std::optional<FilterRule> rule_from_name(std::string_view name);

/// A named Unicode block accepted as "Roman" text.
struct ScriptRange {
    std::string name;
    char32_t first;
    char32_t last;
};

/// Known repertoire names: basic_latin, latin1_supplement, latin_extended_a,
/// latin_extended_b, general_punctuation, latin_extended_additional, combining_diacritics.
std::optional<ScriptRange> script_range(std::string_view name);
const std::vector<std::string>& default_scripts();

struct FilterConfig {
    std::size_t max_phrase_words = 5;
    std::vector<std::string> allow_scripts = default_scripts();
    std::set<FilterRule> enabled = {FilterRule::Circular,   FilterRule::NonRoman,  FilterRule::SingleChar,
                                    FilterRule::LongPhrase, FilterRule::NonEntity, FilterRule::Unresolved,
                                    FilterRule::Ambiguous};
};

struct FilterReport {
    std::size_t input_count = 0;
    std::size_t kept_count = 0;
    std::map<std::string, std::size_t> removed_by_rule;

    std::size_t removed() const;
    bool reconciles() const { return input_count == kept_count + removed(); }
    FilterReport& operator+=(const FilterReport& other);
    bool operator==(const FilterReport&) const = default;
};

struct FilterOutcome {
    std::vector<Triplet> kept;
    FilterReport report;
};

/// True when every code point of `label` lies in one of the named repertoires.
/// Throws ConfigError for unknown repertoire names.
bool is_roman(std::string_view label, const std::vector<std::string>& scripts);

/// First rule (i)-(vi) that removes `t`, honoring `config.enabled`.
std::optional<FilterRule> first_matching_rule(const Triplet& t, const FilterConfig& config);

/// Applies rules (i)-(vi) in order; each removal is attributed to its first matching rule.
FilterOutcome apply_filters(const std::vector<Triplet>& triplets, const FilterConfig& config = {});

/// Removes every triplet whose (subject.id, relation.id) key has more than one distinct
/// object within the collection, or whose key is listed in `flagged_keys`.
FilterOutcome drop_ambiguous(const std::vector<Triplet>& triplets,
                             const std::unordered_set<std::string>& flagged_keys = {});

}  // namespace editbench
