#pragma once

// Word timelines from phonemizer output and duration-predictor units.
//
// The phoneme sequence is cut into groups at blank and punctuation units and
// the groups are mapped monotonically onto the words. Where the phonemizer
// fused several words into one group, or fragmented one word into several
// groups, ordered rules say how durations are shared. Blank and punctuation
// units are split between the neighbouring groups; unit totals are finally
// scaled so the words tile the audio exactly.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "speechalign/core.hpp"
#include "speechalign/ingest.hpp"

namespace speechalign {

// ─── Phoneme sequences ───────────────────────────────────────────────────────

enum class UnitKind { phoneme, blank, punctuation };

inline std::string_view to_string(UnitKind k) noexcept {
    switch (k) {
        case UnitKind::phoneme: return "phoneme";
        case UnitKind::blank: return "blank";
        case UnitKind::punctuation: return "punctuation";
    }
    return "?";
}

inline UnitKind parse_unit_kind(std::string_view s) {
    if (s == "phoneme") return UnitKind::phoneme;
    if (s == "blank") return UnitKind::blank;
    if (s == "punctuation") return UnitKind::punctuation;
    throw ParseError("unknown unit kind '" + std::string(s) + "'");
}

struct PhonemeUnit {
    std::string symbol;
    std::uint64_t duration_units = 0;
    UnitKind kind = UnitKind::phoneme;

    friend bool operator==(const PhonemeUnit&, const PhonemeUnit&) = default;
};

class PhonemeSequence {
public:
    PhonemeSequence() = default;

    explicit PhonemeSequence(std::vector<PhonemeUnit> units) : units_(std::move(units)) {
        if (std::none_of(units_.begin(), units_.end(), [](const auto& u) { return u.kind == UnitKind::phoneme; })) {
            throw ValidationError("phoneme sequence contains no phoneme units");
        }
    }

    const std::vector<PhonemeUnit>& units() const noexcept { return units_; }

    std::uint64_t total_units() const noexcept {
        std::uint64_t s = 0;
        for (const auto& u : units_) s += u.duration_units;
        return s;
    }

    // Maximal runs of phoneme units, as [first, last) unit ranges.
    std::vector<TokenSpan> groups() const {
        std::vector<TokenSpan> out;
        for (std::size_t k = 0; k < units_.size(); ++k) {
            if (units_[k].kind != UnitKind::phoneme) continue;
            if (!out.empty() && out.back().end == k) {
                out.back().end = k + 1;
            } else {
                out.push_back({k, k + 1});
            }
        }
        return out;
    }

    friend bool operator==(const PhonemeSequence&, const PhonemeSequence&) = default;

private:
    std::vector<PhonemeUnit> units_;
};

inline PhonemeSequence parse_phoneme_sequence(std::string_view text) {
    const auto doc = detail::parse_json(text, "phonemes");
    const auto units_it = doc.find("units");
    if (!doc.is_object() || units_it == doc.end() || !units_it->is_array()) {
        throw ParseError("phonemes: missing array field 'units'");
    }
    std::vector<PhonemeUnit> units;
    for (std::size_t k = 0; k < units_it->size(); ++k) {
        const auto& u = (*units_it)[k];
        const std::string ctx = "phoneme unit " + std::to_string(k);
        PhonemeUnit unit;
        unit.symbol = detail::json_field<std::string>(u, "symbol", ctx);
        const auto& d = u.find("duration");
        if (d == u.end() || !d->is_number_integer() || d->get<std::int64_t>() < 0) {
            throw ParseError(ctx + ": 'duration' must be a non-negative integer");
        }
        unit.duration_units = d->get<std::uint64_t>();
        unit.kind = parse_unit_kind(detail::json_field<std::string>(u, "kind", ctx));
        units.push_back(std::move(unit));
    }
    return PhonemeSequence(std::move(units));
}

inline std::string serialize_phoneme_sequence(const PhonemeSequence& seq) {
    nlohmann::ordered_json doc;
    auto units = nlohmann::ordered_json::array();
    for (const auto& u : seq.units()) {
        units.push_back({{"symbol", u.symbol}, {"duration", u.duration_units}, {"kind", std::string(to_string(u.kind))}});
    }
    doc["units"] = std::move(units);
    return doc.dump(2) + "\n";
}

inline std::vector<std::string> parse_word_list(std::string_view text) {
    std::vector<std::string> words;
    for (const auto w : detail::split_ws(text)) words.emplace_back(w);
    return words;
}

// ─── Fusion / fragmentation rules ────────────────────────────────────────────

enum class SplitPolicy {
    proportional_split,  // one group shared by several words, by character count
    merge_all,           // several groups summed into one word
    merge_except_last,   // several groups: all but the last to the first word, the last to the second
};

inline SplitPolicy parse_split_policy(std::string_view s) {
    if (s == "proportional-split") return SplitPolicy::proportional_split;
    if (s == "merge-all") return SplitPolicy::merge_all;
    if (s == "merge-except-last") return SplitPolicy::merge_except_last;
    throw ParseError("unknown policy '" + std::string(s) + "'");
}

inline std::string_view to_string(SplitPolicy p) noexcept {
    switch (p) {
        case SplitPolicy::proportional_split: return "proportional-split";
        case SplitPolicy::merge_all: return "merge-all";
        case SplitPolicy::merge_except_last: return "merge-except-last";
    }
    return "?";
}

// A rule matches consecutive words, one full-match regex per word.
//   proportional-split: >= 2 patterns, consumes one phoneme group
//   merge-all:          1 pattern, consumes `fragments` groups (any count >= 2 if unset)
//   merge-except-last:  2 patterns, consumes `fragments` groups (any count >= 2 if unset)
class MatchRule {
public:
    MatchRule(std::string name, SplitPolicy policy, std::vector<std::string> patterns,
              std::optional<std::size_t> fragments = std::nullopt)
        : name_(std::move(name)), policy_(policy), pattern_text_(std::move(patterns)), fragments_(fragments) {
        const auto n = pattern_text_.size();
        if (policy_ == SplitPolicy::proportional_split && n < 2) {
            throw ValidationError("rule '" + name_ + "': proportional-split needs at least 2 word patterns");
        }
        if (policy_ == SplitPolicy::merge_all && n != 1) {
            throw ValidationError("rule '" + name_ + "': merge-all takes exactly 1 word pattern");
        }
        if (policy_ == SplitPolicy::merge_except_last && n != 2) {
            throw ValidationError("rule '" + name_ + "': merge-except-last takes exactly 2 word patterns");
        }
        if (fragments_ && (policy_ == SplitPolicy::proportional_split || *fragments_ < 2)) {
            throw ValidationError("rule '" + name_ + "': 'fragments' must be >= 2 and only for merge policies");
        }
        for (const auto& p : pattern_text_) {
            try {
                patterns_.emplace_back(p, std::regex::ECMAScript);
            } catch (const std::regex_error& e) {
                throw ParseError("rule '" + name_ + "': bad pattern '" + p + "': " + e.what());
            }
        }
    }

    const std::string& name() const noexcept { return name_; }
    SplitPolicy policy() const noexcept { return policy_; }
    const std::vector<std::string>& patterns() const noexcept { return pattern_text_; }
    std::optional<std::size_t> fragments() const noexcept { return fragments_; }
    std::size_t word_count() const noexcept { return patterns_.size(); }

    bool matches(const std::vector<std::string>& words, std::size_t at) const {
        if (at + patterns_.size() > words.size()) return false;
        for (std::size_t k = 0; k < patterns_.size(); ++k) {
            if (!std::regex_match(words[at + k], patterns_[k])) return false;
        }
        return true;
    }

private:
    std::string name_;
    SplitPolicy policy_;
    std::vector<std::string> pattern_text_;
    std::vector<std::regex> patterns_;
    std::optional<std::size_t> fragments_;
};

// Ordered; earlier rules are preferred.
using RuleSet = std::vector<MatchRule>;

inline RuleSet parse_rules(std::string_view text) {
    const auto doc = detail::parse_json(text, "rules");
    const auto rules_it = doc.find("rules");
    if (!doc.is_object() || rules_it == doc.end() || !rules_it->is_array()) {
        throw ParseError("rules: missing array field 'rules'");
    }
    RuleSet rules;
    for (std::size_t k = 0; k < rules_it->size(); ++k) {
        const auto& r = (*rules_it)[k];
        const std::string ctx = "rule " + std::to_string(k);
        rules.emplace_back(detail::json_optional<std::string>(r, "name", ctx).value_or(ctx),
                           parse_split_policy(detail::json_field<std::string>(r, "policy", ctx)),
                           detail::json_field<std::vector<std::string>>(r, "words", ctx),
                           detail::json_optional<std::size_t>(r, "fragments", ctx));
    }
    return rules;
}

inline std::string serialize_rules(const RuleSet& rules) {
    nlohmann::ordered_json doc;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : rules) {
        nlohmann::ordered_json o;
        o["name"] = r.name();
        o["policy"] = std::string(to_string(r.policy()));
        o["words"] = r.patterns();
        if (r.fragments()) o["fragments"] = *r.fragments();
        arr.push_back(std::move(o));
    }
    doc["rules"] = std::move(arr);
    return doc.dump(2) + "\n";
}

// ─── Phoneme-word matching ───────────────────────────────────────────────────

// A run of words matched to a run of phoneme groups. Direct matches pair one
// word with one group and carry no rule.
struct WordSegment {
    std::size_t first_word = 0;
    std::size_t word_count = 1;
    std::size_t first_group = 0;
    std::size_t group_count = 1;
    std::optional<SplitPolicy> policy;
    std::string rule;

    friend bool operator==(const WordSegment&, const WordSegment&) = default;
};

struct PhonemeWordMatch {
    std::vector<TokenSpan> groups;  // phoneme groups as unit ranges
    std::vector<WordSegment> segments;

    // Groups used by word k (shared with its neighbours for fused words).
    std::vector<std::size_t> groups_of_word(std::size_t k) const {
        std::vector<std::size_t> out;
        for (const auto& s : segments) {
            if (k < s.first_word || k >= s.first_word + s.word_count) continue;
            if (s.policy == SplitPolicy::merge_except_last) {
                if (k == s.first_word) {
                    for (std::size_t g = 0; g + 1 < s.group_count; ++g) out.push_back(s.first_group + g);
                } else {
                    out.push_back(s.first_group + s.group_count - 1);
                }
            } else {
                for (std::size_t g = 0; g < s.group_count; ++g) out.push_back(s.first_group + g);
            }
        }
        return out;
    }
};

class MatchError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Monotone mapping of blank-delimited phoneme groups onto words. Direct 1:1
// matches are tried first, then rules in order; the first complete mapping
// found is returned.
inline PhonemeWordMatch match_phonemes_to_words(const PhonemeSequence& seq, const std::vector<std::string>& words,
                                                const RuleSet& rules) {
    if (words.empty()) throw ValidationError("word list is empty");
    PhonemeWordMatch out;
    out.groups = seq.groups();
    const std::size_t n_words = words.size();
    const std::size_t n_groups = out.groups.size();

    std::set<std::pair<std::size_t, std::size_t>> dead;
    std::pair<std::size_t, std::size_t> furthest{0, 0};
    std::vector<WordSegment> path;

    auto search = [&](auto&& self, std::size_t wi, std::size_t gi) -> bool {
        if (wi == n_words && gi == n_groups) return true;
        if (wi + gi > furthest.first + furthest.second) furthest = {wi, gi};
        if (wi == n_words || gi == n_groups || dead.contains({wi, gi})) return false;

        auto attempt = [&](WordSegment seg) {
            path.push_back(seg);
            if (self(self, wi + seg.word_count, gi + seg.group_count)) return true;
            path.pop_back();
            return false;
        };

        if (attempt({wi, 1, gi, 1, std::nullopt, ""})) return true;
        for (const auto& rule : rules) {
            if (!rule.matches(words, wi)) continue;
            const std::size_t remaining = n_groups - gi;
            if (rule.policy() == SplitPolicy::proportional_split) {
                if (attempt({wi, rule.word_count(), gi, 1, rule.policy(), rule.name()})) return true;
                continue;
            }
            std::size_t lo = 2;
            std::size_t hi = remaining;
            if (rule.fragments()) lo = hi = std::min(*rule.fragments(), remaining + 1);
            for (std::size_t k = lo; k <= hi && k <= remaining; ++k) {
                if (attempt({wi, rule.word_count(), gi, k, rule.policy(), rule.name()})) return true;
            }
        }
        dead.insert({wi, gi});
        return false;
    };

    if (!search(search, 0, 0)) {
        throw MatchError("cannot match " + std::to_string(n_groups) + " phoneme groups to " + std::to_string(n_words) +
                         " words: furthest progress left " + std::to_string(n_words - furthest.first) +
                         " words and " + std::to_string(n_groups - furthest.second) +
                         " phoneme groups unmatched (at word " + std::to_string(furthest.first) + ", group " +
                         std::to_string(furthest.second) + ")");
    }
    out.segments = std::move(path);
    return out;
}

// ─── Duration arithmetic ─────────────────────────────────────────────────────

// Splits merged units over words in proportion to their character counts.
// Largest-remainder rounding (ties to the earlier word) keeps the sum exact.
inline std::vector<std::uint64_t> split_fused_duration(std::uint64_t merged_units, const std::vector<std::string>& words) {
    if (words.size() < 2) throw ValidationError("a fused group needs at least 2 words");
    std::vector<std::uint64_t> lengths;
    std::uint64_t total_len = 0;
    for (const auto& w : words) {
        lengths.push_back(std::max<std::uint64_t>(1, detail::utf8_length(w)));
        total_len += lengths.back();
    }
    std::vector<std::uint64_t> out(words.size());
    std::vector<std::pair<unsigned __int128, std::size_t>> remainders;
    std::uint64_t assigned = 0;
    for (std::size_t k = 0; k < words.size(); ++k) {
        const unsigned __int128 scaled = static_cast<unsigned __int128>(merged_units) * lengths[k];
        out[k] = static_cast<std::uint64_t>(scaled / total_len);
        remainders.emplace_back(scaled % total_len, k);
        assigned += out[k];
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::uint64_t r = 0; r < merged_units - assigned; ++r) ++out[remainders[r].second];
    return out;
}

struct MergedDuration {
    std::uint64_t head = 0;             // merged fragments
    std::optional<std::uint64_t> last;  // set for merge-except-last

    friend bool operator==(const MergedDuration&, const MergedDuration&) = default;
};

inline MergedDuration merge_fragmented_duration(const std::vector<std::uint64_t>& fragments, SplitPolicy policy) {
    if (fragments.empty()) throw ValidationError("nothing to merge: no fragments");
    if (policy == SplitPolicy::merge_all) {
        MergedDuration m;
        for (const auto f : fragments) m.head += f;
        return m;
    }
    if (policy == SplitPolicy::merge_except_last) {
        if (fragments.size() < 2) throw ValidationError("merge-except-last needs at least 2 fragments");
        MergedDuration m;
        for (std::size_t k = 0; k + 1 < fragments.size(); ++k) m.head += fragments[k];
        m.last = fragments.back();
        return m;
    }
    throw ValidationError("proportional-split is not a merge policy");
}

// Per-group unit totals with every blank or punctuation unit shared between
// the groups either side of it: half each, the odd unit to the preceding
// group, everything to the only neighbour at the edges.
inline std::vector<std::uint64_t> group_durations_units(const PhonemeWordMatch& match, const PhonemeSequence& seq) {
    const auto& units = seq.units();
    const auto& groups = match.groups;
    std::vector<std::uint64_t> totals(groups.size(), 0);
    std::size_t next_group = 0;  // first group starting after the current unit
    for (std::size_t u = 0; u < units.size(); ++u) {
        while (next_group < groups.size() && groups[next_group].begin <= u) ++next_group;
        const auto d = units[u].duration_units;
        if (units[u].kind == UnitKind::phoneme) {
            totals[next_group - 1] += d;
            continue;
        }
        const bool has_prev = next_group > 0;
        const bool has_next = next_group < groups.size();
        if (has_prev && has_next) {
            totals[next_group - 1] += d - d / 2;
            totals[next_group] += d / 2;
        } else if (has_prev) {
            totals[next_group - 1] += d;
        } else {
            totals[next_group] += d;
        }
    }
    return totals;
}

// Units per word; their sum equals the sequence total.
inline std::vector<std::uint64_t> word_durations_units(const PhonemeWordMatch& match, const PhonemeSequence& seq,
                                                       const std::vector<std::string>& words) {
    const auto group_totals = group_durations_units(match, seq);
    std::vector<std::uint64_t> out(words.size(), 0);
    for (const auto& s : match.segments) {
        std::vector<std::uint64_t> fragments(group_totals.begin() + static_cast<std::ptrdiff_t>(s.first_group),
                                             group_totals.begin() + static_cast<std::ptrdiff_t>(s.first_group + s.group_count));
        if (!s.policy) {
            out[s.first_word] = fragments.front();
        } else if (*s.policy == SplitPolicy::proportional_split) {
            const std::vector<std::string> fused(words.begin() + static_cast<std::ptrdiff_t>(s.first_word),
                                                 words.begin() + static_cast<std::ptrdiff_t>(s.first_word + s.word_count));
            const auto split = split_fused_duration(fragments.front(), fused);
            std::copy(split.begin(), split.end(), out.begin() + static_cast<std::ptrdiff_t>(s.first_word));
        } else {
            const auto merged = merge_fragmented_duration(fragments, *s.policy);
            out[s.first_word] = merged.head;
            if (merged.last) out[s.first_word + 1] = *merged.last;
        }
    }
    return out;
}

// Words tile [0, total_audio_s) in proportion to their units.
inline UtteranceTimeline units_to_seconds(const std::vector<std::string>& words, const std::vector<std::uint64_t>& word_units,
                                          double total_audio_s) {
    if (words.size() != word_units.size()) throw ValidationError("word and duration counts differ");
    if (!(total_audio_s > 0.0)) throw ValidationError("audio length must be positive");
    std::uint64_t total = 0;
    for (const auto u : word_units) total += u;
    if (total == 0) throw ValidationError("total duration in units is zero");
    for (std::size_t k = 0; k < word_units.size(); ++k) {
        if (word_units[k] == 0) throw ValidationError("word " + std::to_string(k) + " has zero duration units");
    }
    const double seconds_per_unit = total_audio_s / static_cast<double>(total);
    std::vector<WordTiming> timings;
    timings.reserve(words.size());
    std::uint64_t cum = 0;
    for (std::size_t k = 0; k < words.size(); ++k) {
        const double start = static_cast<double>(cum) * seconds_per_unit;
        cum += word_units[k];
        const double end = k + 1 == words.size() ? total_audio_s : static_cast<double>(cum) * seconds_per_unit;
        timings.push_back({words[k], start, end});
    }
    return UtteranceTimeline(std::move(timings), total_audio_s);
}

// ─── Substitutions ───────────────────────────────────────────────────────────

// Words rewritten into their spoken form before phonemization, e.g.
// "EU" -> "E U".
class SubstitutionTable {
public:
    SubstitutionTable() = default;

    explicit SubstitutionTable(const std::vector<std::pair<std::string, std::string>>& entries) {
        for (const auto& [word, spoken] : entries) {
            auto expansion = parse_word_list(spoken);
            if (expansion.empty()) throw ValidationError("substitution for '" + word + "' is empty");
            if (!table_.emplace(word, std::move(expansion)).second) {
                throw ValidationError("duplicate substitution key '" + word + "'");
            }
        }
    }

    const std::vector<std::string>* find(const std::string& word) const {
        const auto it = table_.find(word);
        return it == table_.end() ? nullptr : &it->second;
    }

    bool empty() const noexcept { return table_.empty(); }

private:
    std::map<std::string, std::vector<std::string>> table_;
};

// JSON object mapping words to spoken forms; duplicate keys are rejected.
inline SubstitutionTable parse_substitutions(std::string_view text) {
    std::vector<std::pair<std::string, std::string>> entries;
    std::set<std::string> keys;
    std::string duplicate;
    nlohmann::json::parser_callback_t cb = [&](int depth, nlohmann::json::parse_event_t event, nlohmann::json& parsed) {
        if (event == nlohmann::json::parse_event_t::key && depth == 1 && !keys.insert(parsed.get<std::string>()).second) {
            duplicate = parsed.get<std::string>();
        }
        return true;
    };
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text.begin(), text.end(), cb);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("substitutions: malformed JSON at byte offset " + std::to_string(e.byte));
    }
    if (!duplicate.empty()) throw ValidationError("duplicate substitution key '" + duplicate + "'");
    if (!doc.is_object()) throw ParseError("substitutions: top level must be an object");
    for (const auto& [k, v] : doc.items()) {
        if (!v.is_string()) throw ParseError("substitutions: value for '" + k + "' must be a string");
        entries.emplace_back(k, v.get<std::string>());
    }
    return SubstitutionTable(entries);
}

struct SubstitutionResult {
    std::vector<std::string> expanded;
    std::vector<std::vector<std::size_t>> back_map;  // original word -> expanded indices
};

inline SubstitutionResult apply_substitutions(const std::vector<std::string>& words, const SubstitutionTable& table) {
    SubstitutionResult out;
    for (const auto& w : words) {
        std::vector<std::size_t> idx;
        if (const auto* exp = table.find(w)) {
            for (const auto& e : *exp) {
                idx.push_back(out.expanded.size());
                out.expanded.push_back(e);
            }
        } else {
            idx.push_back(out.expanded.size());
            out.expanded.push_back(w);
        }
        out.back_map.push_back(std::move(idx));
    }
    return out;
}

// Sums the durations of expanded words back onto their original word.
inline std::vector<std::uint64_t> merge_substituted(const std::vector<std::uint64_t>& expanded_units,
                                                    const std::vector<std::vector<std::size_t>>& back_map) {
    std::vector<std::uint64_t> out;
    out.reserve(back_map.size());
    for (const auto& idx : back_map) {
        std::vector<std::uint64_t> fragments;
        for (const auto i : idx) fragments.push_back(expanded_units.at(i));
        out.push_back(merge_fragmented_duration(fragments, SplitPolicy::merge_all).head);
    }
    return out;
}

// ─── End to end ──────────────────────────────────────────────────────────────

struct BuiltTimeline {
    UtteranceTimeline timeline;
    PhonemeWordMatch match;            // against the substituted word list
    std::vector<std::uint64_t> units;  // per original word
};

inline BuiltTimeline build_timeline(const PhonemeSequence& seq, const std::vector<std::string>& words, double total_audio_s,
                                    const RuleSet& rules = {}, const SubstitutionTable& substitutions = {}) {
    const auto sub = apply_substitutions(words, substitutions);
    auto match = match_phonemes_to_words(seq, sub.expanded, rules);
    const auto expanded_units = word_durations_units(match, seq, sub.expanded);
    auto units = merge_substituted(expanded_units, sub.back_map);
    return {units_to_seconds(words, units, total_audio_s), std::move(match), std::move(units)};
}

}  // namespace speechalign
