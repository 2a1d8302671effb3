#pragma once

// Token-to-token contribution matrices to word-to-word maps.
//
// Speech sides map words to tokens by assuming tokens are spread linearly
// over the utterance: a word [start, end) covers tokens
// [ceil(start * n / T), floor(end * n / T)) where T is the end of the last
// word and n the token count read from the matrix. Text sides use explicit
// sub-word spans. Source tokens of a word are summed; target tokens of a word
// are averaged. Tokens falling in gaps between words are dropped, so output
// rows may sum to less than one.

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "speechalign/core.hpp"

namespace speechalign {

enum class EmptySpanMode {
    paper_faithful,  // empty spans give zero columns / rows plus a warning
    repair,          // empty spans fall back to the token nearest the word midpoint
};

inline EmptySpanMode parse_empty_span_mode(std::string_view s) {
    if (s == "paper-faithful") return EmptySpanMode::paper_faithful;
    if (s == "repair-empty-spans") return EmptySpanMode::repair;
    throw ParseError("unknown mode '" + std::string(s) + "' (expected paper-faithful or repair-empty-spans)");
}

inline std::string_view to_string(EmptySpanMode m) noexcept {
    return m == EmptySpanMode::paper_faithful ? "paper-faithful" : "repair-empty-spans";
}

// A speech side is described by its timeline, a text side by its token spans.
using SideDescriptor = std::variant<UtteranceTimeline, WordTokenSpans>;

enum class Side { source, target };

struct SpanWarning {
    Side side = Side::source;
    std::size_t word = 0;
    TokenSpan raw;                              // as computed from the timeline
    std::optional<std::size_t> repaired_token;  // set in repair mode

    std::string describe() const {
        std::string s = std::string(side == Side::source ? "source" : "target") + " word " +
                        std::to_string(word) + " covers no tokens (s_token=" + std::to_string(raw.begin) +
                        ", e_token=" + std::to_string(raw.end) + ")";
        if (repaired_token) {
            s += "; using token " + std::to_string(*repaired_token);
        } else {
            s += side == Side::source ? "; column left at zero" : "; row left at zero";
        }
        return s;
    }

    friend bool operator==(const SpanWarning&, const SpanWarning&) = default;
};

// Tokens of word `word_idx` under the linear token/time assumption. The
// result is clamped to [0, n_tokens] and may be empty (begin >= end).
inline TokenSpan token_span_for_word(const UtteranceTimeline& timeline, std::size_t word_idx, std::size_t n_tokens) {
    const auto& w = timeline.words().at(word_idx);
    const double max_duration = timeline.max_duration();
    const double n = static_cast<double>(n_tokens);
    auto clamp_token = [n_tokens](double v) {
        if (!(v > 0.0)) return std::size_t{0};
        if (v >= static_cast<double>(n_tokens)) return n_tokens;
        return static_cast<std::size_t>(v);
    };
    return {clamp_token(std::ceil(w.start_s * n / max_duration)), clamp_token(std::floor(w.end_s * n / max_duration))};
}

// Single-token fallback for an empty span: the token at the word midpoint.
inline std::size_t midpoint_token(const UtteranceTimeline& timeline, std::size_t word_idx, std::size_t n_tokens) {
    const auto& w = timeline.words().at(word_idx);
    const double pos = std::round((w.start_s + w.end_s) / 2.0 * static_cast<double>(n_tokens) / timeline.max_duration());
    if (!(pos > 0.0)) return 0;
    return std::min(static_cast<std::size_t>(pos), n_tokens - 1);
}

struct ResolvedSpans {
    std::vector<TokenSpan> spans;
    std::vector<SpanWarning> warnings;
};

// Token spans for every word of one side against an axis of n_tokens.
inline ResolvedSpans resolve_spans(const SideDescriptor& side, std::size_t n_tokens, EmptySpanMode mode, Side which) {
    if (n_tokens == 0) throw ValidationError("contribution matrix has an empty token axis");
    ResolvedSpans out;
    if (const auto* spans = std::get_if<WordTokenSpans>(&side)) {
        spans->check_coverage(n_tokens);
        out.spans = spans->spans;
        return out;
    }
    const auto& timeline = std::get<UtteranceTimeline>(side);
    out.spans.reserve(timeline.size());
    for (std::size_t w = 0; w < timeline.size(); ++w) {
        auto span = token_span_for_word(timeline, w, n_tokens);
        if (span.empty()) {
            SpanWarning warn{which, w, span, std::nullopt};
            if (mode == EmptySpanMode::repair) {
                const auto t = midpoint_token(timeline, w, n_tokens);
                warn.repaired_token = t;
                span = {t, t + 1};
            }
            out.warnings.push_back(warn);
        }
        out.spans.push_back(span);
    }
    return out;
}

// Column per source word: the sum of that word's token columns. Empty spans
// give a zero column.
inline TokenWordMatrix aggregate_source(const ContributionMatrix& c, const std::vector<TokenSpan>& src_spans) {
    for (std::size_t w = 0; w < src_spans.size(); ++w) {
        const auto& s = src_spans[w];
        if (!s.empty() && s.end > c.cols()) {
            throw ValidationError("source span [" + std::to_string(s.begin) + ", " + std::to_string(s.end) +
                                  ") of word " + std::to_string(w) + " exceeds " + std::to_string(c.cols()) +
                                  " source tokens");
        }
    }
    const std::size_t words = src_spans.size();
    std::vector<double> out(c.rows() * words, 0.0);
    for (std::size_t i = 0; i < c.rows(); ++i) {
        const auto row = c.row(i);
        for (std::size_t w = 0; w < words; ++w) {
            double sum = 0.0;
            for (std::size_t t = src_spans[w].begin; t < src_spans[w].end; ++t) sum += row[t];
            out[i * words + w] = sum;
        }
    }
    return {c.rows(), words, std::move(out)};
}

// Row per target word: the mean of that word's token rows. Empty spans give
// a zero row.
inline WordContributionMap aggregate_target(const TokenWordMatrix& m, const std::vector<TokenSpan>& tgt_spans) {
    for (std::size_t w = 0; w < tgt_spans.size(); ++w) {
        const auto& s = tgt_spans[w];
        if (!s.empty() && s.end > m.rows()) {
            throw ValidationError("target span [" + std::to_string(s.begin) + ", " + std::to_string(s.end) +
                                  ") of word " + std::to_string(w) + " exceeds " + std::to_string(m.rows()) +
                                  " target tokens");
        }
    }
    const std::size_t words = tgt_spans.size();
    const std::size_t cols = m.cols();
    std::vector<double> out(words * cols, 0.0);
    for (std::size_t w = 0; w < words; ++w) {
        const auto& s = tgt_spans[w];
        if (s.empty()) continue;
        for (std::size_t j = 0; j < cols; ++j) {
            double sum = 0.0;
            for (std::size_t t = s.begin; t < s.end; ++t) sum += m(t, j);
            out[w * cols + j] = sum / static_cast<double>(s.size());
        }
    }
    return {words, cols, std::move(out)};
}

struct WordMapResult {
    WordContributionMap map;
    std::vector<SpanWarning> warnings;
};

// Which side descriptors a task requires: speech sides carry timelines, text
// sides carry token spans.
inline void check_sides_for_task(TaskKind task, const SideDescriptor& src, const SideDescriptor& tgt) {
    const bool src_speech = std::holds_alternative<UtteranceTimeline>(src);
    const bool tgt_speech = std::holds_alternative<UtteranceTimeline>(tgt);
    const bool want_src_speech = task != TaskKind::t2t;
    const bool want_tgt_speech = task == TaskKind::s2st;
    if (src_speech != want_src_speech) {
        throw ValidationError(std::string(to_string(task)) + " needs a source " +
                              (want_src_speech ? "timeline" : "token-span file"));
    }
    if (tgt_speech != want_tgt_speech) {
        throw ValidationError(std::string(to_string(task)) + " needs a target " +
                              (want_tgt_speech ? "timeline" : "token-span file"));
    }
}

// Full conversion: source aggregation followed by target averaging. The
// result has one row per target word and one column per source word.
inline WordMapResult contributions_to_word_map(const ContributionMatrix& c, const SideDescriptor& src,
                                               const SideDescriptor& tgt, TaskKind task,
                                               EmptySpanMode mode = EmptySpanMode::paper_faithful) {
    check_sides_for_task(task, src, tgt);
    auto src_spans = resolve_spans(src, c.cols(), mode, Side::source);
    auto tgt_spans = resolve_spans(tgt, c.rows(), mode, Side::target);
    WordMapResult out;
    out.map = aggregate_target(aggregate_source(c, src_spans.spans), tgt_spans.spans);
    out.warnings = std::move(src_spans.warnings);
    out.warnings.insert(out.warnings.end(), tgt_spans.warnings.begin(), tgt_spans.warnings.end());
    return out;
}

struct HardAlignmentResult {
    HardAlignment alignment;
    std::vector<std::size_t> zero_rows;  // target words with no contribution, aligned to source 0
};

// Each target word links to its highest-contributing source word; ties go to
// the lowest source index.
inline HardAlignmentResult extract_hard_alignment(const WordContributionMap& w) {
    if (w.empty()) throw ValidationError("cannot extract a hard alignment from an empty word map");
    HardAlignmentResult out;
    std::vector<std::size_t> sources(w.rows(), 0);
    for (std::size_t i = 0; i < w.rows(); ++i) {
        const auto row = w.row(i);
        std::size_t best = 0;
        bool any_positive = row[0] > 0.0;
        for (std::size_t j = 1; j < row.size(); ++j) {
            if (row[j] > row[best]) best = j;
            any_positive = any_positive || row[j] > 0.0;
        }
        sources[i] = best;
        if (!any_positive) out.zero_rows.push_back(i);
    }
    out.alignment = HardAlignment(std::move(sources));
    return out;
}

}  // namespace speechalign
