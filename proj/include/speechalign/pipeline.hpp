#pragma once

// Per-sample scoring (contribution map -> word map -> hard alignment ->
// SAER / TW-SAER) and corpus scoring over a manifest. The command-line tool
// is a thin layer over these functions.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "speechalign/core.hpp"
#include "speechalign/ingest.hpp"
#include "speechalign/metrics.hpp"
#include "speechalign/wordmap.hpp"

namespace speechalign {

struct SamplePaths {
    std::string id;
    TaskKind task = TaskKind::s2tt;
    std::string gold;
    std::string contrib;
    std::optional<std::string> src_timeline;
    std::optional<std::string> src_spans;
    std::optional<std::string> tgt_timeline;
    std::optional<std::string> tgt_spans;
    bool one_based = false;
};

struct SampleInputs {
    std::string id;
    TaskKind task = TaskKind::s2tt;
    GoldAlignment gold;
    SideDescriptor source;
    SideDescriptor target;
    ContributionMatrix matrix;
    std::vector<MatrixDiagnostic> diagnostics;
};

struct SampleOutcome {
    ScoreReport report;
    WordContributionMap word_map;
    HardAlignmentResult hard;
    std::vector<SpanWarning> span_warnings;
    std::vector<MatrixDiagnostic> matrix_diagnostics;
};

namespace detail {

// Runs `load` on the file contents, prefixing any error with the path.
template <class F>
auto with_file(const std::string& path, F&& load) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const std::exception& e) {
        throw ValidationError(e.what());
    }
    try {
        return load(text);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

inline SideDescriptor load_side(TaskKind task, Side side, const std::optional<std::string>& timeline,
                                const std::optional<std::string>& spans) {
    const bool speech = side == Side::source ? task != TaskKind::t2t : task == TaskKind::s2st;
    const char* name = side == Side::source ? "source" : "target";
    if (speech) {
        if (!timeline) {
            throw ValidationError(std::string(to_string(task)) + " sample needs a " + name + " timeline");
        }
        return with_file(*timeline, [](const std::string& t) { return SideDescriptor(parse_timeline(t)); });
    }
    if (!spans) throw ValidationError(std::string(to_string(task)) + " sample needs a " + name + " token-span file");
    return with_file(*spans, [](const std::string& t) { return SideDescriptor(parse_token_spans(t)); });
}

inline WeightModel weight_model_for(TaskKind task, const SideDescriptor& src, const SideDescriptor& tgt) {
    switch (task) {
        case TaskKind::t2t: return WeightModel::text_to_text();
        case TaskKind::s2tt: return WeightModel::speech_to_text(std::get<UtteranceTimeline>(src).durations());
        case TaskKind::s2st:
            return WeightModel::speech_to_speech(std::get<UtteranceTimeline>(src).durations(),
                                                 std::get<UtteranceTimeline>(tgt).durations());
    }
    return WeightModel::text_to_text();
}

}  // namespace detail

inline SampleInputs load_sample(const SamplePaths& paths) {
    SampleInputs in;
    in.id = paths.id;
    in.task = paths.task;
    in.gold = detail::with_file(paths.gold, [&](const std::string& t) {
        return parse_gold_alignment(t, GoldParseOptions{paths.one_based});
    });
    in.source = detail::load_side(paths.task, Side::source, paths.src_timeline, paths.src_spans);
    in.target = detail::load_side(paths.task, Side::target, paths.tgt_timeline, paths.tgt_spans);
    auto loaded = detail::with_file(paths.contrib, [](const std::string& t) { return read_contribution_matrix(t); });
    in.matrix = std::move(loaded.matrix);
    in.diagnostics = std::move(loaded.diagnostics);
    return in;
}

inline SampleOutcome score_sample(const SampleInputs& in, EmptySpanMode mode = EmptySpanMode::paper_faithful) {
    for (const auto& d : in.diagnostics) {
        if (d.severity == Severity::error) throw ValidationError("contribution matrix: " + d.describe());
    }
    SampleOutcome out;
    out.matrix_diagnostics = in.diagnostics;
    auto converted = contributions_to_word_map(in.matrix, in.source, in.target, in.task, mode);
    out.word_map = std::move(converted.map);
    out.span_warnings = std::move(converted.warnings);
    if (in.gold.source_extent() > out.word_map.cols() || in.gold.target_extent() > out.word_map.rows()) {
        throw ValidationError("gold alignment mentions source word " + std::to_string(in.gold.source_extent() - 1) +
                              " / target word " + std::to_string(in.gold.target_extent() - 1) + " but the sample has " +
                              std::to_string(out.word_map.cols()) + " source and " +
                              std::to_string(out.word_map.rows()) + " target words");
    }
    out.hard = extract_hard_alignment(out.word_map);
    const auto wm = detail::weight_model_for(in.task, in.source, in.target);
    out.report = score_alignment(in.id, in.gold, out.hard.alignment, wm);
    return out;
}

// ─── Corpus scoring ──────────────────────────────────────────────────────────

inline SamplePaths resolve_entry(const ManifestEntry& e, const std::filesystem::path& base_dir, bool one_based) {
    auto resolve = [&](const std::string& p) {
        const std::filesystem::path path(p);
        return (path.is_absolute() ? path : base_dir / path).lexically_normal().string();
    };
    auto resolve_opt = [&](const std::optional<std::string>& p) {
        return p ? std::optional<std::string>(resolve(*p)) : std::nullopt;
    };
    return {e.id,
            e.task,
            resolve(e.gold),
            resolve(e.contrib),
            resolve_opt(e.src_timeline),
            resolve_opt(e.src_spans),
            resolve_opt(e.tgt_timeline),
            resolve_opt(e.tgt_spans),
            one_based};
}

// Groups scored rows by (model, variant) in order of first appearance.
inline std::vector<ReportGroup> group_rows(const std::vector<ReportRow>& rows) {
    std::vector<ReportGroup> groups;
    std::vector<std::vector<ScoreReport>> members;
    for (const auto& r : rows) {
        auto it = std::find_if(groups.begin(), groups.end(),
                               [&](const ReportGroup& g) { return g.model == r.model && g.variant == r.variant; });
        if (it == groups.end()) {
            groups.push_back({r.model, r.variant, 0, std::nullopt});
            members.emplace_back();
            it = std::prev(groups.end());
        }
        const auto k = static_cast<std::size_t>(it - groups.begin());
        if (r.ok()) {
            members[k].push_back(*r.score);
        } else {
            ++it->n_failed;
        }
    }
    for (std::size_t k = 0; k < groups.size(); ++k) {
        if (!members[k].empty()) groups[k].scores = corpus_aggregate(members[k]);
    }
    return groups;
}

// Scores every entry; failures become error rows. Work is spread over `jobs`
// threads, but rows are always reported in manifest order.
inline CorpusReport score_corpus(const CorpusManifest& manifest, const std::filesystem::path& base_dir,
                                 EmptySpanMode mode = EmptySpanMode::paper_faithful, std::size_t jobs = 1) {
    CorpusReport report;
    report.best_of = manifest.best_of;
    const auto& entries = manifest.entries;
    report.rows.resize(entries.size());

    auto score_one = [&](std::size_t k) {
        const auto& e = entries[k];
        ReportRow row;
        row.sample_id = e.id;
        row.model = e.model;
        row.variant = e.variant;
        try {
            row.score = score_sample(load_sample(resolve_entry(e, base_dir, manifest.one_based)), mode).report;
        } catch (const std::exception& ex) {
            row.error = ex.what();
        }
        report.rows[k] = std::move(row);
    };

    jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(1, entries.size()));
    if (jobs == 1) {
        for (std::size_t k = 0; k < entries.size(); ++k) score_one(k);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        for (std::size_t w = 0; w < jobs; ++w) {
            workers.emplace_back([&] {
                for (std::size_t k = next++; k < entries.size(); k = next++) score_one(k);
            });
        }
        for (auto& t : workers) t.join();
    }
    report.groups = group_rows(report.rows);
    return report;
}

}  // namespace speechalign
