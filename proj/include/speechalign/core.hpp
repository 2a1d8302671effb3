#pragma once

// Shared domain types for alignment evaluation: alignment points and gold
// sets, word timelines, dense contribution matrices, hard alignments and
// per-sample score reports. Everything here is immutable after construction.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "speechalign/detail/text.hpp"

namespace speechalign {

// ─── Errors ──────────────────────────────────────────────────────────────────

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input text or bytes. The message carries the location.
class ParseError : public Error {
public:
    using Error::Error;
};

// Well-formed input that violates a domain invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

// A score whose denominator is zero.
class UndefinedScoreError : public Error {
public:
    using Error::Error;
};

// ─── Alignment points ────────────────────────────────────────────────────────

// Word-level link, always serialized source first.
struct AlignmentPoint {
    std::size_t src_word = 0;
    std::size_t tgt_word = 0;

    friend auto operator<=>(const AlignmentPoint&, const AlignmentPoint&) = default;
};

using AlignmentSet = std::set<AlignmentPoint>;

class GoldAlignment {
public:
    GoldAlignment() = default;

    // Throws ValidationError unless sure ⊆ possible.
    GoldAlignment(AlignmentSet sure, AlignmentSet possible)
        : sure_(std::move(sure)), possible_(std::move(possible)) {
        for (const auto& p : sure_) {
            if (!possible_.contains(p)) {
                throw ValidationError("sure point (" + std::to_string(p.src_word) + ", " +
                                      std::to_string(p.tgt_word) + ") missing from possible set");
            }
        }
    }

    // Sure points are added to the possible set automatically.
    static GoldAlignment from_sure_and_extra(AlignmentSet sure, const AlignmentSet& possible_only) {
        AlignmentSet possible = possible_only;
        possible.insert(sure.begin(), sure.end());
        return GoldAlignment(std::move(sure), std::move(possible));
    }

    const AlignmentSet& sure() const noexcept { return sure_; }
    const AlignmentSet& possible() const noexcept { return possible_; }

    // One past the largest source/target index mentioned (0 when empty).
    std::size_t source_extent() const noexcept {
        std::size_t n = 0;
        for (const auto& p : possible_) n = std::max(n, p.src_word + 1);
        return n;
    }
    std::size_t target_extent() const noexcept {
        std::size_t n = 0;
        for (const auto& p : possible_) n = std::max(n, p.tgt_word + 1);
        return n;
    }

    friend bool operator==(const GoldAlignment&, const GoldAlignment&) = default;

private:
    AlignmentSet sure_;
    AlignmentSet possible_;
};

// ─── Timelines ───────────────────────────────────────────────────────────────

struct WordTiming {
    std::string word;
    double start_s = 0.0;
    double end_s = 0.0;

    double duration() const noexcept { return end_s - start_s; }
    friend bool operator==(const WordTiming&, const WordTiming&) = default;
};

class UtteranceTimeline {
public:
    UtteranceTimeline() = default;

    // Words must be non-empty, ordered and non-overlapping; throws ValidationError.
    UtteranceTimeline(std::vector<WordTiming> words, double total_duration_s)
        : words_(std::move(words)), total_duration_s_(total_duration_s) {
        if (words_.empty()) throw ValidationError("timeline has no words");
        if (!std::isfinite(total_duration_s_) || total_duration_s_ <= 0.0) {
            throw ValidationError("total_duration must be positive");
        }
        for (std::size_t k = 0; k < words_.size(); ++k) {
            const auto& w = words_[k];
            if (!std::isfinite(w.start_s) || !std::isfinite(w.end_s) || w.start_s < 0.0) {
                throw ValidationError("invalid time stamp at word " + std::to_string(k));
            }
            if (w.start_s >= w.end_s) {
                throw ValidationError("start >= end at word " + std::to_string(k));
            }
            if (k > 0 && words_[k - 1].end_s > w.start_s) {
                throw ValidationError("overlap between words " + std::to_string(k - 1) + " and " +
                                      std::to_string(k));
            }
        }
        if (words_.back().end_s > total_duration_s_) {
            throw ValidationError("word " + std::to_string(words_.size() - 1) +
                                  " ends after total_duration");
        }
    }

    const std::vector<WordTiming>& words() const noexcept { return words_; }
    std::size_t size() const noexcept { return words_.size(); }
    double total_duration() const noexcept { return total_duration_s_; }

    // End of the last word; the reference length for token/time conversion.
    double max_duration() const noexcept { return words_.back().end_s; }

    std::vector<double> durations() const {
        std::vector<double> d;
        d.reserve(words_.size());
        for (const auto& w : words_) d.push_back(w.duration());
        return d;
    }

    friend bool operator==(const UtteranceTimeline&, const UtteranceTimeline&) = default;

private:
    std::vector<WordTiming> words_;
    double total_duration_s_ = 0.0;
};

// ─── Dense matrices ──────────────────────────────────────────────────────────

// Row-major matrix of doubles. The tag keeps token-level and word-level
// matrices from being mixed up.
template <class Tag>
class DenseMatrix {
public:
    DenseMatrix() = default;

    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
        : rows_(rows), cols_(cols), values_(std::move(values)) {
        if (values_.size() != rows_ * cols_) {
            throw ValidationError("matrix data size " + std::to_string(values_.size()) +
                                  " does not match " + std::to_string(rows_) + "x" +
                                  std::to_string(cols_));
        }
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }

    double operator()(std::size_t i, std::size_t j) const noexcept { return values_[i * cols_ + j]; }

    std::span<const double> row(std::size_t i) const noexcept {
        return {values_.data() + i * cols_, cols_};
    }
    std::span<const double> values() const noexcept { return values_; }

    double row_sum(std::size_t i) const noexcept {
        double s = 0.0;
        for (const double v : row(i)) s += v;
        return s;
    }

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

struct TokenToTokenTag {};
struct TokenToWordTag {};
struct WordToWordTag {};

// Rows are target tokens, columns source tokens.
using ContributionMatrix = DenseMatrix<TokenToTokenTag>;
// Rows are target tokens, columns source words.
using TokenWordMatrix = DenseMatrix<TokenToWordTag>;
// Rows are target words, columns source words.
using WordContributionMap = DenseMatrix<WordToWordTag>;

// ─── Contribution matrix validation ──────────────────────────────────────────

inline constexpr double kRowSumWarnTolerance = 1e-4;
inline constexpr double kRowSumErrorTolerance = 1e-2;

enum class Severity { warning, error };

struct MatrixDiagnostic {
    enum class Kind { negative_entry, row_sum };

    Kind kind = Kind::row_sum;
    Severity severity = Severity::warning;
    std::size_t row = 0;
    std::optional<std::size_t> col;
    double magnitude = 0.0;  // |value| for negatives, |row_sum - 1| for sums

    std::string describe() const {
        std::string s = severity == Severity::error ? "error: " : "warning: ";
        if (kind == Kind::negative_entry) {
            s += "negative contribution " + detail::format_real(-magnitude) + " at (" +
                 std::to_string(row) + ", " + std::to_string(col.value_or(0)) + ")";
        } else {
            s += "row " + std::to_string(row) + " sum deviates from 1 by " +
                 detail::format_real(magnitude);
        }
        return s;
    }
};

// Pure check of the non-negativity and row-stochastic invariants. Row sums
// off by more than kRowSumWarnTolerance warn; by more than
// kRowSumErrorTolerance (or any negative entry) are errors.
template <class Tag>
std::vector<MatrixDiagnostic> validate_contribution_matrix(const DenseMatrix<Tag>& m) {
    std::vector<MatrixDiagnostic> out;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            const double v = m(i, j);
            if (v < 0.0 || std::isnan(v)) {
                out.push_back({MatrixDiagnostic::Kind::negative_entry, Severity::error, i, j,
                               std::isnan(v) ? v : -v});
            }
        }
        const double dev = std::abs(m.row_sum(i) - 1.0);
        if (dev > kRowSumWarnTolerance || std::isnan(dev)) {
            const auto sev = dev > kRowSumErrorTolerance || std::isnan(dev) ? Severity::error
                                                                             : Severity::warning;
            out.push_back({MatrixDiagnostic::Kind::row_sum, sev, i, std::nullopt, dev});
        }
    }
    return out;
}

inline bool has_errors(std::span<const MatrixDiagnostic> diags) {
    return std::any_of(diags.begin(), diags.end(),
                       [](const auto& d) { return d.severity == Severity::error; });
}

// ─── Token spans ─────────────────────────────────────────────────────────────

// Half-open token interval [begin, end).
struct TokenSpan {
    std::size_t begin = 0;
    std::size_t end = 0;

    bool empty() const noexcept { return begin >= end; }
    std::size_t size() const noexcept { return empty() ? 0 : end - begin; }
    friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

// Sub-word grouping of a text side: one span per word, in word order.
// Tokens not covered by any span must be declared special (BOS, EOS, ...).
struct WordTokenSpans {
    std::vector<TokenSpan> spans;
    std::set<std::size_t> special_tokens;

    std::size_t word_count() const noexcept { return spans.size(); }

    // Throws ValidationError if a span runs past n_tokens or an uncovered
    // token below n_tokens is not declared special.
    void check_coverage(std::size_t n_tokens) const {
        std::size_t next = 0;
        auto check_gap = [&](std::size_t from, std::size_t to) {
            for (std::size_t t = from; t < to; ++t) {
                if (!special_tokens.contains(t)) {
                    throw ValidationError("token " + std::to_string(t) +
                                          " is not covered by any word span and not declared special");
                }
            }
        };
        for (std::size_t w = 0; w < spans.size(); ++w) {
            if (spans[w].end > n_tokens) {
                throw ValidationError("span of word " + std::to_string(w) + " ends at token " +
                                      std::to_string(spans[w].end) + " but the matrix has " +
                                      std::to_string(n_tokens) + " tokens");
            }
            check_gap(next, spans[w].begin);
            next = spans[w].end;
        }
        check_gap(next, n_tokens);
    }

    friend bool operator==(const WordTokenSpans&, const WordTokenSpans&) = default;
};

// ─── Hard alignments ─────────────────────────────────────────────────────────

// Exactly one source word per target word.
class HardAlignment {
public:
    HardAlignment() = default;
    explicit HardAlignment(std::vector<std::size_t> source_for_target)
        : source_for_target_(std::move(source_for_target)) {}

    std::size_t size() const noexcept { return source_for_target_.size(); }
    std::size_t source_of(std::size_t tgt_word) const { return source_for_target_.at(tgt_word); }
    const std::vector<std::size_t>& sources() const noexcept { return source_for_target_; }

    AlignmentSet points() const {
        AlignmentSet s;
        for (std::size_t i = 0; i < source_for_target_.size(); ++i) {
            s.insert({source_for_target_[i], i});
        }
        return s;
    }

    friend bool operator==(const HardAlignment&, const HardAlignment&) = default;

private:
    std::vector<std::size_t> source_for_target_;
};

// ─── Tasks and reports ───────────────────────────────────────────────────────

enum class TaskKind { t2t, s2tt, s2st };

inline std::string_view to_string(TaskKind t) noexcept {
    switch (t) {
        case TaskKind::t2t: return "T2T";
        case TaskKind::s2tt: return "S2TT";
        case TaskKind::s2st: return "S2ST";
    }
    return "?";
}

inline TaskKind parse_task_kind(std::string_view s) {
    if (s == "T2T" || s == "t2t") return TaskKind::t2t;
    if (s == "S2TT" || s == "s2tt") return TaskKind::s2tt;
    if (s == "S2ST" || s == "s2st") return TaskKind::s2st;
    throw ParseError("unknown task '" + std::string(s) + "' (expected T2T, S2TT or S2ST)");
}

// Counts and duration-weighted areas behind one SAER / TW-SAER pair. Summing
// tallies across samples gives the pooled (micro) corpus score.
struct AlignmentTally {
    std::size_t hypothesis = 0;        // |A|
    std::size_t sure = 0;              // |S|
    std::size_t possible = 0;          // |P|
    std::size_t hyp_and_sure = 0;      // |A ∩ S|
    std::size_t hyp_and_possible = 0;  // |A ∩ P|
    double weight_hypothesis = 0.0;
    double weight_sure = 0.0;
    double weight_hyp_and_sure = 0.0;
    double weight_hyp_and_possible = 0.0;

    AlignmentTally& operator+=(const AlignmentTally& o) noexcept {
        hypothesis += o.hypothesis;
        sure += o.sure;
        possible += o.possible;
        hyp_and_sure += o.hyp_and_sure;
        hyp_and_possible += o.hyp_and_possible;
        weight_hypothesis += o.weight_hypothesis;
        weight_sure += o.weight_sure;
        weight_hyp_and_sure += o.weight_hyp_and_sure;
        weight_hyp_and_possible += o.weight_hyp_and_possible;
        return *this;
    }

    friend bool operator==(const AlignmentTally&, const AlignmentTally&) = default;
};

// Pooled (micro) and per-sample mean (macro) corpus scores.
struct CorpusScores {
    std::size_t n_samples = 0;
    double micro_saer = 0.0;
    double micro_tw_saer = 0.0;
    double macro_saer = 0.0;
    double macro_tw_saer = 0.0;

    friend bool operator==(const CorpusScores&, const CorpusScores&) = default;
};

struct ScoreReport {
    std::string sample_id;
    double saer = 0.0;
    double tw_saer = 0.0;
    AlignmentTally tally;

    friend bool operator==(const ScoreReport&, const ScoreReport&) = default;
};

}  // namespace speechalign
