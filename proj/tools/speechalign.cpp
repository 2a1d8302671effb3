// speechalign: command-line front end.
//
//   speechalign score           score one sample (SAER / TW-SAER)
//   speechalign corpus-score    score every sample of a manifest
//   speechalign build-timeline  word timeline from phonemizer + duration dumps
//   speechalign render          SVG view of a contribution or word map
//
// Exit codes: 0 success, 2 input or validation error, 3 some corpus samples failed.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "speechalign/speechalign.hpp"

namespace sa = speechalign;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitPartial = 3;

sa::EmptySpanMode resolve_mode(const std::optional<std::string>& flag) {
    if (flag) return sa::parse_empty_span_mode(*flag);
    if (const char* env = std::getenv("SPEECHALIGN_MODE"); env && *env) return sa::parse_empty_span_mode(env);
    return sa::EmptySpanMode::paper_faithful;
}

void emit(const std::optional<std::string>& path, const std::string& contents) {
    if (path) {
        sa::detail::write_file(*path, contents);
    } else {
        std::cout << contents;
    }
}

std::string pct(double v) { return sa::detail::format_fixed(v * 100.0, 1); }

struct ScoreArgs {
    std::string task, gold, contrib;
    std::optional<std::string> src_timeline, src_spans, tgt_timeline, tgt_spans;
    std::optional<std::string> mode, out, id, dump_wordmap, dump_hard;
    bool one_based = false;
};

int run_score(const ScoreArgs& a) {
    sa::SamplePaths paths;
    paths.id = a.id.value_or(std::filesystem::path(a.contrib).stem().string());
    paths.task = sa::parse_task_kind(a.task);
    paths.gold = a.gold;
    paths.contrib = a.contrib;
    paths.src_timeline = a.src_timeline;
    paths.src_spans = a.src_spans;
    paths.tgt_timeline = a.tgt_timeline;
    paths.tgt_spans = a.tgt_spans;
    paths.one_based = a.one_based;

    const auto outcome = sa::score_sample(sa::load_sample(paths), resolve_mode(a.mode));
    for (const auto& d : outcome.matrix_diagnostics) std::cerr << a.contrib << ": " << d.describe() << '\n';
    for (const auto& w : outcome.span_warnings) std::cerr << "warning: " << w.describe() << '\n';
    for (const auto row : outcome.hard.zero_rows) {
        std::cerr << "warning: target word " << row << " has no contribution; aligned to source word 0\n";
    }
    if (a.dump_wordmap) sa::detail::write_file(*a.dump_wordmap, sa::write_csv_matrix(outcome.word_map));
    if (a.dump_hard) sa::detail::write_file(*a.dump_hard, sa::serialize_hard_alignment(outcome.hard.alignment));

    emit(a.out, sa::write_score_report(outcome.report));
    if (a.out) {
        std::cout << outcome.report.sample_id << "  SAER " << pct(outcome.report.saer) << "%  TW-SAER "
                  << pct(outcome.report.tw_saer) << "%\n";
    }
    return kExitOk;
}

struct CorpusArgs {
    std::string manifest;
    std::optional<std::string> out, table, mode;
    std::size_t jobs = 1;
};

int run_corpus(const CorpusArgs& a) {
    const auto manifest = sa::detail::with_file(a.manifest, [](const std::string& t) { return sa::parse_manifest(t); });
    const auto base = std::filesystem::path(a.manifest).parent_path();
    const auto report = sa::score_corpus(manifest, base, resolve_mode(a.mode), a.jobs);

    bool failed = false;
    for (const auto& row : report.rows) {
        if (!row.ok()) {
            failed = true;
            std::cerr << "sample " << row.sample_id << " failed: " << row.error << '\n';
        }
    }
    emit(a.out, sa::write_report(report));
    const auto table = sa::render_table(report);
    if (a.table) {
        sa::detail::write_file(*a.table, table);
    } else if (a.out) {
        std::cout << table;
    }
    return failed ? kExitPartial : kExitOk;
}

struct TimelineArgs {
    std::string phonemes, words;
    double audio_seconds = 0.0;
    std::optional<std::string> rules, substitutions, out;
};

int run_build_timeline(const TimelineArgs& a) {
    const auto seq = sa::detail::with_file(a.phonemes, [](const std::string& t) { return sa::parse_phoneme_sequence(t); });
    const auto words = sa::detail::with_file(a.words, [](const std::string& t) { return sa::parse_word_list(t); });
    const auto rules = a.rules ? sa::detail::with_file(*a.rules, [](const std::string& t) { return sa::parse_rules(t); })
                               : sa::RuleSet{};
    const auto subs = a.substitutions ? sa::detail::with_file(*a.substitutions,
                                                              [](const std::string& t) { return sa::parse_substitutions(t); })
                                      : sa::SubstitutionTable{};
    const auto built = sa::build_timeline(seq, words, a.audio_seconds, rules, subs);
    emit(a.out, sa::serialize_timeline(built.timeline));
    return kExitOk;
}

struct RenderArgs {
    std::optional<std::string> contrib, wordmap, gold, hard, src_timeline, tgt_timeline, title;
    std::string out;
    bool one_based = false;
};

int run_render(const RenderArgs& a) {
    if (a.contrib.has_value() == a.wordmap.has_value()) {
        throw sa::ValidationError("render needs exactly one of --contrib or --wordmap");
    }
    const auto& path = a.contrib ? *a.contrib : *a.wordmap;
    const auto loaded = sa::detail::with_file(path, [](const std::string& t) { return sa::read_contribution_matrix(t); });

    std::optional<sa::GoldAlignment> gold;
    if (a.gold) {
        gold = sa::detail::with_file(*a.gold, [&](const std::string& t) {
            return sa::parse_gold_alignment(t, sa::GoldParseOptions{a.one_based});
        });
    }
    std::optional<sa::AlignmentSet> hard;
    if (a.hard) {
        hard = sa::detail::with_file(*a.hard, [](const std::string& t) { return sa::parse_hard_alignment(t).points(); });
    }

    sa::RenderOptions opts;
    opts.title = a.title.value_or("");
    std::string svg;
    if (a.wordmap) {
        const sa::WordContributionMap map(loaded.matrix.rows(), loaded.matrix.cols(),
                                          {loaded.matrix.values().begin(), loaded.matrix.values().end()});
        if (!hard) hard = sa::extract_hard_alignment(map).alignment.points();
        auto labels = [](const std::optional<std::string>& p) {
            std::vector<std::string> out;
            if (!p) return out;
            const auto tl = sa::detail::with_file(*p, [](const std::string& t) { return sa::parse_timeline(t); });
            for (const auto& w : tl.words()) out.push_back(w.word);
            return out;
        };
        opts.source_labels = labels(a.src_timeline);
        opts.target_labels = labels(a.tgt_timeline);
        svg = sa::render_svg(map, gold ? &*gold : nullptr, hard ? &*hard : nullptr, opts);
    } else {
        svg = sa::render_svg(loaded.matrix, gold ? &*gold : nullptr, hard ? &*hard : nullptr, opts);
    }
    sa::detail::write_file(a.out, svg);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Alignment evaluation for speech translation: SAER / TW-SAER scoring, word timelines, rendering"};
    app.require_subcommand(1);

    const std::vector<std::string> modes{"paper-faithful", "repair-empty-spans"};

    ScoreArgs score;
    auto* score_cmd = app.add_subcommand("score", "Score one sample");
    score_cmd->add_option("--task", score.task, "T2T, S2TT or S2ST")->required();
    score_cmd->add_option("--gold", score.gold, "Gold alignment file")->required();
    score_cmd->add_option("--contrib", score.contrib, "Contribution matrix (SALN or CSV)")->required();
    score_cmd->add_option("--src-timeline", score.src_timeline, "Source word timeline (speech source)");
    score_cmd->add_option("--src-spans", score.src_spans, "Source token spans (text source)");
    score_cmd->add_option("--tgt-timeline", score.tgt_timeline, "Target word timeline (speech target)");
    score_cmd->add_option("--tgt-spans", score.tgt_spans, "Target token spans (text target)");
    score_cmd->add_option("--mode", score.mode, "Empty-span handling (default: $SPEECHALIGN_MODE or paper-faithful)")
        ->check(CLI::IsMember(modes));
    score_cmd->add_option("--out", score.out, "Score report (JSON); stdout when omitted");
    score_cmd->add_option("--id", score.id, "Sample id (default: matrix file stem)");
    score_cmd->add_option("--dump-wordmap", score.dump_wordmap, "Write the word-to-word map as CSV");
    score_cmd->add_option("--dump-hard", score.dump_hard, "Write the hard alignment");
    score_cmd->add_flag("--one-based", score.one_based, "Gold indices start at 1");

    CorpusArgs corpus;
    auto* corpus_cmd = app.add_subcommand("corpus-score", "Score every sample of a manifest");
    corpus_cmd->add_option("--manifest", corpus.manifest, "Corpus manifest (JSON)")->required();
    corpus_cmd->add_option("--out", corpus.out, "Corpus report (JSON); stdout when omitted");
    corpus_cmd->add_option("--jobs", corpus.jobs, "Worker threads")->check(CLI::PositiveNumber);
    corpus_cmd->add_option("--table", corpus.table, "Write the SAER / TW-SAER table here");
    corpus_cmd->add_option("--mode", corpus.mode, "Empty-span handling")->check(CLI::IsMember(modes));

    TimelineArgs tl;
    auto* tl_cmd = app.add_subcommand("build-timeline", "Build a word timeline from phoneme durations");
    tl_cmd->add_option("--phonemes", tl.phonemes, "Phoneme units with durations (JSON)")->required();
    tl_cmd->add_option("--words", tl.words, "Whitespace-separated words")->required();
    tl_cmd->add_option("--audio-seconds", tl.audio_seconds, "Audio length in seconds")->required()->check(
        CLI::PositiveNumber);
    tl_cmd->add_option("--rules", tl.rules, "Fusion / fragmentation rules (JSON)");
    tl_cmd->add_option("--substitutions", tl.substitutions, "Spoken-form substitutions (JSON)");
    tl_cmd->add_option("--out", tl.out, "Timeline output; stdout when omitted");

    RenderArgs render;
    auto* render_cmd = app.add_subcommand("render", "Render a map as SVG");
    render_cmd->add_option("--contrib", render.contrib, "Token-level contribution matrix");
    render_cmd->add_option("--wordmap", render.wordmap, "Word-level map (SALN or CSV)");
    render_cmd->add_option("--gold", render.gold, "Gold alignment to outline");
    render_cmd->add_option("--hard", render.hard, "Hard alignment to mark");
    render_cmd->add_option("--src-timeline", render.src_timeline, "Source words for column labels (word maps)");
    render_cmd->add_option("--tgt-timeline", render.tgt_timeline, "Target words for row labels (word maps)");
    render_cmd->add_option("--title", render.title, "Figure title");
    render_cmd->add_option("--out", render.out, "SVG output")->required();
    render_cmd->add_flag("--one-based", render.one_based, "Gold indices start at 1");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInput;
    }

    try {
        if (score_cmd->parsed()) return run_score(score);
        if (corpus_cmd->parsed()) return run_corpus(corpus);
        if (tl_cmd->parsed()) return run_build_timeline(tl);
        if (render_cmd->parsed()) return run_render(render);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
    return kExitInput;
}
