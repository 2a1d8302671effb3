#pragma once

// Alignment error rates against Sure/Possible gold sets.
//
//   AER = SAER = 1 - (|A∩S| + |A∩P|) / (|A| + |S|)
//   TW-SAER    = 1 - (w(A∩S) + w(A∩P)) / (w(A) + w(S))
//
// where w sums per-point areas: source duration times target duration for
// speech-to-speech, source duration alone for speech-to-text, and 1 for
// text-to-text.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "speechalign/core.hpp"

namespace speechalign {

class WeightModel {
public:
    WeightModel() = default;

    static WeightModel text_to_text() { return WeightModel(TaskKind::t2t, {}, {}); }

    static WeightModel speech_to_text(std::vector<double> src_durations) {
        return WeightModel(TaskKind::s2tt, std::move(src_durations), {});
    }

    static WeightModel speech_to_speech(std::vector<double> src_durations, std::vector<double> tgt_durations) {
        return WeightModel(TaskKind::s2st, std::move(src_durations), std::move(tgt_durations));
    }

    TaskKind task() const noexcept { return task_; }
    const std::vector<double>& src_durations() const noexcept { return src_; }
    const std::vector<double>& tgt_durations() const noexcept { return tgt_; }

private:
    WeightModel(TaskKind task, std::vector<double> src, std::vector<double> tgt)
        : task_(task), src_(std::move(src)), tgt_(std::move(tgt)) {
        auto check = [](const std::vector<double>& d, const char* side) {
            for (std::size_t k = 0; k < d.size(); ++k) {
                if (!(d[k] > 0.0) || !std::isfinite(d[k])) {
                    throw ValidationError(std::string(side) + " duration of word " + std::to_string(k) +
                                          " must be positive");
                }
            }
        };
        check(src_, "source");
        check(tgt_, "target");
        if (task_ != TaskKind::t2t && src_.empty()) throw ValidationError("speech source needs word durations");
        if (task_ == TaskKind::s2st && tgt_.empty()) throw ValidationError("speech target needs word durations");
    }

    TaskKind task_ = TaskKind::t2t;
    std::vector<double> src_;
    std::vector<double> tgt_;
};

inline double alignment_weight(const AlignmentPoint& p, const WeightModel& wm) {
    auto lookup = [](const std::vector<double>& d, std::size_t idx, const char* side) {
        if (idx >= d.size()) {
            throw ValidationError(std::string(side) + " word " + std::to_string(idx) + " has no duration (" +
                                  std::to_string(d.size()) + " words)");
        }
        return d[idx];
    };
    switch (wm.task()) {
        case TaskKind::s2st:
            return lookup(wm.src_durations(), p.src_word, "source") * lookup(wm.tgt_durations(), p.tgt_word, "target");
        case TaskKind::s2tt:
            return lookup(wm.src_durations(), p.src_word, "source");
        case TaskKind::t2t:
            return 1.0;
    }
    return 1.0;
}

namespace detail {

inline double error_rate(double matched, double total) {
    if (total == 0.0) throw UndefinedScoreError("score undefined: hypothesis and sure sets are both empty");
    return 1.0 - matched / total;
}

struct WeightedSums {
    double hypothesis = 0.0;
    double sure = 0.0;
    double hyp_and_sure = 0.0;
    double hyp_and_possible = 0.0;
};

// Area sums with every weight divided by `unit`.
inline WeightedSums weighted_sums(const GoldAlignment& gold, const AlignmentSet& hyp, const WeightModel& wm,
                                  double unit) {
    WeightedSums s;
    for (const auto& p : hyp) {
        const double w = alignment_weight(p, wm) / unit;
        s.hypothesis += w;
        if (gold.sure().contains(p)) s.hyp_and_sure += w;
        if (gold.possible().contains(p)) s.hyp_and_possible += w;
    }
    for (const auto& p : gold.sure()) s.sure += alignment_weight(p, wm) / unit;
    return s;
}

}  // namespace detail

// Counts and raw areas (seconds, or seconds squared for speech-to-speech).
inline AlignmentTally tally_alignment(const GoldAlignment& gold, const AlignmentSet& hyp, const WeightModel& wm) {
    AlignmentTally t;
    t.hypothesis = hyp.size();
    t.sure = gold.sure().size();
    t.possible = gold.possible().size();
    for (const auto& p : hyp) {
        t.hyp_and_sure += gold.sure().contains(p) ? 1 : 0;
        t.hyp_and_possible += gold.possible().contains(p) ? 1 : 0;
    }
    const auto s = detail::weighted_sums(gold, hyp, wm, 1.0);
    t.weight_hypothesis = s.hypothesis;
    t.weight_sure = s.sure;
    t.weight_hyp_and_sure = s.hyp_and_sure;
    t.weight_hyp_and_possible = s.hyp_and_possible;
    return t;
}

inline double saer_from_tally(const AlignmentTally& t) {
    return detail::error_rate(static_cast<double>(t.hyp_and_sure + t.hyp_and_possible),
                              static_cast<double>(t.hypothesis + t.sure));
}

inline double tw_saer_from_tally(const AlignmentTally& t) {
    return detail::error_rate(t.weight_hyp_and_sure + t.weight_hyp_and_possible, t.weight_hypothesis + t.weight_sure);
}

// Classic alignment error rate of an arbitrary hypothesis set.
inline double aer(const GoldAlignment& gold, const AlignmentSet& hyp) {
    return saer_from_tally(tally_alignment(gold, hyp, WeightModel::text_to_text()));
}

// Same formula as aer, on word-level points derived from a contribution map.
inline double saer(const GoldAlignment& gold, const HardAlignment& hard) { return aer(gold, hard.points()); }

inline double tw_saer(const GoldAlignment& gold, const AlignmentSet& hyp, const WeightModel& wm) {
    // Weights in units of the largest weight involved.
    double unit = 0.0;
    for (const auto& p : hyp) unit = std::max(unit, alignment_weight(p, wm));
    for (const auto& p : gold.possible()) unit = std::max(unit, alignment_weight(p, wm));
    if (unit == 0.0) unit = 1.0;
    const auto s = detail::weighted_sums(gold, hyp, wm, unit);
    return detail::error_rate(s.hyp_and_sure + s.hyp_and_possible, s.hypothesis + s.sure);
}

inline double tw_saer(const GoldAlignment& gold, const HardAlignment& hard, const WeightModel& wm) {
    return tw_saer(gold, hard.points(), wm);
}

inline ScoreReport score_alignment(std::string sample_id, const GoldAlignment& gold, const HardAlignment& hard,
                                   const WeightModel& wm) {
    const auto points = hard.points();
    ScoreReport r;
    r.sample_id = std::move(sample_id);
    r.tally = tally_alignment(gold, points, wm);
    r.saer = saer_from_tally(r.tally);
    r.tw_saer = tw_saer(gold, points, wm);
    return r;
}

// Micro scores recompute the formulas on pooled counts and areas; macro
// scores average the per-sample values.
inline CorpusScores corpus_aggregate(std::span<const ScoreReport> reports) {
    if (reports.empty()) throw UndefinedScoreError("corpus aggregate of zero samples is undefined");
    AlignmentTally pooled;
    double saer_sum = 0.0;
    double tw_sum = 0.0;
    for (const auto& r : reports) {
        pooled += r.tally;
        saer_sum += r.saer;
        tw_sum += r.tw_saer;
    }
    CorpusScores c;
    c.n_samples = reports.size();
    c.micro_saer = saer_from_tally(pooled);
    c.micro_tw_saer = tw_saer_from_tally(pooled);
    c.macro_saer = saer_sum / static_cast<double>(reports.size());
    c.macro_tw_saer = tw_sum / static_cast<double>(reports.size());
    return c;
}

}  // namespace speechalign
