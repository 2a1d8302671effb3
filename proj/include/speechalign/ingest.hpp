#pragma once

// Readers and writers for every on-disk format:
//
//   gold alignment   text lines "<src> <tgt> <S|P>", '#' comments
//   timeline         JSON {"words":[{"w","start","end"}...], "total_duration"}
//   contribution     SALN binary (little-endian) or CSV, rows = target tokens
//   token spans      text lines "<word> <first> <last_excl>" and "special <tok>"
//   manifest         JSON corpus description
//   score reports    JSON, full precision
//
// Parsers are pure functions of their input text.

#include <bit>
#include <cstdint>
#include <cstring>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "speechalign/core.hpp"
#include "speechalign/detail/text.hpp"

namespace speechalign {

namespace detail {

inline std::string line_prefix(std::size_t line_no) { return "line " + std::to_string(line_no) + ": "; }

// Strips a trailing '#' comment and surrounding whitespace.
inline std::string_view strip_comment(std::string_view line) {
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    return trim(line);
}

inline nlohmann::json parse_json(std::string_view text, std::string_view what) {
    try {
        return nlohmann::json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string(what) + ": malformed JSON at byte offset " +
                         std::to_string(e.byte) + ": " + e.what());
    }
}

template <class T>
T json_field(const nlohmann::json& obj, std::string_view key, const std::string& ctx) {
    const auto it = obj.find(std::string(key));
    if (it == obj.end()) throw ParseError(ctx + ": missing field '" + std::string(key) + "'");
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ParseError(ctx + ": field '" + std::string(key) + "' has the wrong type");
    }
}

template <class T>
std::optional<T> json_optional(const nlohmann::json& obj, std::string_view key, const std::string& ctx) {
    const auto it = obj.find(std::string(key));
    if (it == obj.end() || it->is_null()) return std::nullopt;
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ParseError(ctx + ": field '" + std::string(key) + "' has the wrong type");
    }
}

inline double json_real(const nlohmann::json& obj, std::string_view key, const std::string& ctx) {
    const auto it = obj.find(std::string(key));
    if (it == obj.end()) throw ParseError(ctx + ": missing field '" + std::string(key) + "'");
    if (!it->is_number()) throw ParseError(ctx + ": field '" + std::string(key) + "' is not a number");
    return it->get<double>();
}

}  // namespace detail

// ─── Gold alignments ─────────────────────────────────────────────────────────

struct GoldParseOptions {
    bool one_based = false;  // legacy corpora number words from 1
};

inline GoldAlignment parse_gold_alignment(std::string_view text, GoldParseOptions opts = {}) {
    AlignmentSet sure;
    AlignmentSet possible_only;
    std::map<AlignmentPoint, std::size_t> seen;  // point -> line of first mention

    const auto lines = detail::split_lines(text);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        const std::size_t line_no = n + 1;
        const auto body = detail::strip_comment(lines[n]);
        if (body.empty()) continue;
        const auto fields = detail::split_ws(body);
        if (fields.size() != 3) {
            throw ParseError(detail::line_prefix(line_no) + "expected '<src> <tgt> <S|P>', got " +
                             std::to_string(fields.size()) + " fields");
        }
        auto src = detail::parse_uint(fields[0]);
        auto tgt = detail::parse_uint(fields[1]);
        if (!src || !tgt) throw ParseError(detail::line_prefix(line_no) + "indices must be non-negative integers");
        if (opts.one_based) {
            if (*src == 0 || *tgt == 0) {
                throw ParseError(detail::line_prefix(line_no) + "index 0 in one-based input");
            }
            --*src;
            --*tgt;
        }
        const AlignmentPoint p{static_cast<std::size_t>(*src), static_cast<std::size_t>(*tgt)};
        if (const auto it = seen.find(p); it != seen.end()) {
            throw ParseError(detail::line_prefix(line_no) + "point (" + std::string(fields[0]) + ", " +
                             std::string(fields[1]) + ") already listed on line " +
                             std::to_string(it->second));
        }
        seen.emplace(p, line_no);
        if (fields[2] == "S") {
            sure.insert(p);
        } else if (fields[2] == "P") {
            possible_only.insert(p);
        } else {
            throw ParseError(detail::line_prefix(line_no) + "invalid tag '" + std::string(fields[2]) +
                             "' (expected S or P)");
        }
    }
    return GoldAlignment::from_sure_and_extra(std::move(sure), possible_only);
}

// Possible-only points are written with tag P; sure points with S.
inline std::string serialize_gold_alignment(const GoldAlignment& gold, bool one_based = false) {
    const std::size_t off = one_based ? 1 : 0;
    std::string out;
    for (const auto& p : gold.possible()) {
        out += std::to_string(p.src_word + off) + ' ' + std::to_string(p.tgt_word + off) + ' ' +
               (gold.sure().contains(p) ? 'S' : 'P') + '\n';
    }
    return out;
}

// Hard alignments use "<src> <tgt>" lines, one per target word.
inline HardAlignment parse_hard_alignment(std::string_view text) {
    std::map<std::size_t, std::size_t> by_target;
    const auto lines = detail::split_lines(text);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        const auto body = detail::strip_comment(lines[n]);
        if (body.empty()) continue;
        const auto fields = detail::split_ws(body);
        const auto src = fields.size() == 2 ? detail::parse_uint(fields[0]) : std::nullopt;
        const auto tgt = fields.size() == 2 ? detail::parse_uint(fields[1]) : std::nullopt;
        if (!src || !tgt) throw ParseError(detail::line_prefix(n + 1) + "expected '<src> <tgt>'");
        if (!by_target.emplace(static_cast<std::size_t>(*tgt), static_cast<std::size_t>(*src)).second) {
            throw ParseError(detail::line_prefix(n + 1) + "target word " + std::string(fields[1]) + " aligned twice");
        }
    }
    std::vector<std::size_t> sources;
    for (const auto& [tgt, src] : by_target) {
        if (tgt != sources.size()) throw ValidationError("target word " + std::to_string(sources.size()) + " has no alignment");
        sources.push_back(src);
    }
    return HardAlignment(std::move(sources));
}

inline std::string serialize_hard_alignment(const HardAlignment& hard) {
    std::string out;
    for (std::size_t i = 0; i < hard.size(); ++i) {
        out += std::to_string(hard.source_of(i)) + ' ' + std::to_string(i) + '\n';
    }
    return out;
}

// ─── Timelines ───────────────────────────────────────────────────────────────

inline UtteranceTimeline parse_timeline(std::string_view text) {
    const auto doc = detail::parse_json(text, "timeline");
    if (!doc.is_object()) throw ParseError("timeline: top level must be an object");
    const auto words_it = doc.find("words");
    if (words_it == doc.end() || !words_it->is_array()) {
        throw ParseError("timeline: missing array field 'words'");
    }
    std::vector<WordTiming> words;
    words.reserve(words_it->size());
    for (std::size_t k = 0; k < words_it->size(); ++k) {
        const auto& w = (*words_it)[k];
        const std::string ctx = "timeline word " + std::to_string(k);
        if (!w.is_object()) throw ParseError(ctx + ": expected an object");
        words.push_back({detail::json_field<std::string>(w, "w", ctx), detail::json_real(w, "start", ctx),
                         detail::json_real(w, "end", ctx)});
    }
    return UtteranceTimeline(std::move(words), detail::json_real(doc, "total_duration", "timeline"));
}

inline std::string serialize_timeline(const UtteranceTimeline& tl) {
    nlohmann::ordered_json doc;
    auto words = nlohmann::ordered_json::array();
    for (const auto& w : tl.words()) {
        nlohmann::ordered_json o;
        o["w"] = w.word;
        o["start"] = w.start_s;
        o["end"] = w.end_s;
        words.push_back(std::move(o));
    }
    doc["words"] = std::move(words);
    doc["total_duration"] = tl.total_duration();
    return doc.dump(2) + "\n";
}

// ─── Contribution matrices ───────────────────────────────────────────────────

enum class MatrixFormat { binary, csv };

inline constexpr std::string_view kSalnMagic = "SALN";
inline constexpr std::uint32_t kSalnVersion = 1;
inline constexpr std::size_t kSalnHeaderBytes = 24;  // magic, u32 version, u64 rows, u64 cols

struct LoadedMatrix {
    ContributionMatrix matrix;
    std::vector<MatrixDiagnostic> diagnostics;
};

// Anything starting with the SALN magic is binary; everything else is CSV.
inline MatrixFormat detect_matrix_format(std::string_view bytes) noexcept {
    return bytes.substr(0, kSalnMagic.size()) == kSalnMagic ? MatrixFormat::binary : MatrixFormat::csv;
}

namespace detail {

inline std::uint64_t load_le(std::string_view bytes, std::size_t offset, std::size_t width) {
    std::uint64_t v = 0;
    for (std::size_t b = 0; b < width; ++b) {
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[offset + b])) << (8 * b);
    }
    return v;
}

inline void store_le(std::string& out, std::uint64_t v, std::size_t width) {
    for (std::size_t b = 0; b < width; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFFU));
}

inline ContributionMatrix read_saln(std::string_view bytes) {
    if (bytes.size() < kSalnMagic.size() || bytes.substr(0, kSalnMagic.size()) != kSalnMagic) {
        throw ParseError("bad magic at byte offset 0 (expected \"SALN\")");
    }
    if (bytes.size() < kSalnHeaderBytes) {
        throw ParseError("truncated header at byte offset " + std::to_string(bytes.size()) + ": expected " +
                         std::to_string(kSalnHeaderBytes) + " header bytes, got " +
                         std::to_string(bytes.size()));
    }
    const auto version = static_cast<std::uint32_t>(load_le(bytes, 4, 4));
    if (version != kSalnVersion) {
        throw ParseError("unsupported version " + std::to_string(version) + " at byte offset 4");
    }
    const std::uint64_t rows = load_le(bytes, 8, 8);
    const std::uint64_t cols = load_le(bytes, 16, 8);
    if (rows == 0 || cols == 0) {
        throw ParseError("empty matrix (" + std::to_string(rows) + "x" + std::to_string(cols) +
                         ") at byte offset 8");
    }
    constexpr std::uint64_t max_floats = std::numeric_limits<std::size_t>::max() / sizeof(float);
    if (rows > max_floats / cols) {
        throw ParseError("dimension overflow: " + std::to_string(rows) + "x" + std::to_string(cols) +
                         " at byte offset 8");
    }
    const std::uint64_t expected = rows * cols * sizeof(float);
    const std::size_t payload = bytes.size() - kSalnHeaderBytes;
    if (payload < expected) {
        throw ParseError("truncated payload at byte offset " + std::to_string(bytes.size()) + ": expected " +
                         std::to_string(expected) + " payload bytes, got " + std::to_string(payload));
    }
    if (payload > expected) {
        throw ParseError("trailing " + std::to_string(payload - expected) + " bytes at byte offset " +
                         std::to_string(kSalnHeaderBytes + expected));
    }
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(rows * cols));
    for (std::size_t k = 0; k < rows * cols; ++k) {
        const auto raw = static_cast<std::uint32_t>(load_le(bytes, kSalnHeaderBytes + 4 * k, 4));
        values.push_back(static_cast<double>(std::bit_cast<float>(raw)));
    }
    return {static_cast<std::size_t>(rows), static_cast<std::size_t>(cols), std::move(values)};
}

inline ContributionMatrix read_csv_matrix(std::string_view text) {
    std::vector<double> values;
    std::size_t rows = 0;
    std::size_t cols = 0;
    const auto lines = split_lines(text);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        const auto line = trim(lines[n]);
        if (line.empty()) continue;
        std::size_t count = 0;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            const auto field = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
            const auto v = parse_real(field);
            if (!v) {
                throw ParseError(line_prefix(n + 1) + "invalid number '" + std::string(trim(field)) + "' in column " +
                                 std::to_string(count));
            }
            values.push_back(*v);
            ++count;
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (rows == 0) {
            cols = count;
        } else if (count != cols) {
            throw ParseError(line_prefix(n + 1) + "expected " + std::to_string(cols) + " values, got " +
                             std::to_string(count));
        }
        ++rows;
    }
    if (rows == 0) throw ParseError("empty CSV matrix");
    return {rows, cols, std::move(values)};
}

}  // namespace detail

inline LoadedMatrix read_contribution_matrix(std::string_view bytes, MatrixFormat format) {
    LoadedMatrix out;
    out.matrix = format == MatrixFormat::binary ? detail::read_saln(bytes) : detail::read_csv_matrix(bytes);
    out.diagnostics = validate_contribution_matrix(out.matrix);
    return out;
}

inline LoadedMatrix read_contribution_matrix(std::string_view bytes) {
    return read_contribution_matrix(bytes, detect_matrix_format(bytes));
}

// Values are narrowed to float32 on disk.
template <class Tag>
std::string write_saln(const DenseMatrix<Tag>& m) {
    std::string out(kSalnMagic);
    detail::store_le(out, kSalnVersion, 4);
    detail::store_le(out, m.rows(), 8);
    detail::store_le(out, m.cols(), 8);
    out.reserve(kSalnHeaderBytes + 4 * m.values().size());
    for (const double v : m.values()) {
        detail::store_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)), 4);
    }
    return out;
}

template <class Tag>
std::string write_csv_matrix(const DenseMatrix<Tag>& m) {
    std::string out;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) out += ',';
            out += detail::format_real(m(i, j));
        }
        out += '\n';
    }
    return out;
}

inline std::string write_contribution_matrix(const ContributionMatrix& m, MatrixFormat format) {
    return format == MatrixFormat::binary ? write_saln(m) : write_csv_matrix(m);
}

// ─── Token spans ─────────────────────────────────────────────────────────────

inline WordTokenSpans parse_token_spans(std::string_view text) {
    WordTokenSpans out;
    const auto lines = detail::split_lines(text);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        const std::size_t line_no = n + 1;
        const auto body = detail::strip_comment(lines[n]);
        if (body.empty()) continue;
        const auto fields = detail::split_ws(body);
        if (fields.size() == 2 && fields[0] == "special") {
            const auto tok = detail::parse_uint(fields[1]);
            if (!tok) throw ParseError(detail::line_prefix(line_no) + "invalid special token index");
            out.special_tokens.insert(static_cast<std::size_t>(*tok));
            continue;
        }
        if (fields.size() != 3) {
            throw ParseError(detail::line_prefix(line_no) + "expected '<word> <first> <last_excl>'");
        }
        const auto word = detail::parse_uint(fields[0]);
        const auto first = detail::parse_uint(fields[1]);
        const auto last = detail::parse_uint(fields[2]);
        if (!word || !first || !last) {
            throw ParseError(detail::line_prefix(line_no) + "fields must be non-negative integers");
        }
        if (*word != out.spans.size()) {
            throw ParseError(detail::line_prefix(line_no) + "expected word index " +
                             std::to_string(out.spans.size()) + ", got " + std::string(fields[0]));
        }
        if (*first >= *last) {
            throw ParseError(detail::line_prefix(line_no) + "empty interval [" + std::string(fields[1]) + ", " +
                             std::string(fields[2]) + ") for word " + std::string(fields[0]));
        }
        const TokenSpan span{static_cast<std::size_t>(*first), static_cast<std::size_t>(*last)};
        if (!out.spans.empty()) {
            const auto& prev = out.spans.back();
            if (span.begin < prev.begin) {
                throw ParseError(detail::line_prefix(line_no) + "non-monotone span: word " +
                                 std::string(fields[0]) + " starts before word " +
                                 std::to_string(out.spans.size() - 1));
            }
            if (span.begin < prev.end) {
                throw ParseError(detail::line_prefix(line_no) + "overlap between words " +
                                 std::to_string(out.spans.size() - 1) + " and " + std::string(fields[0]));
            }
        }
        out.spans.push_back(span);
    }
    if (out.spans.empty()) throw ParseError("token span file declares no words");

    std::size_t next = 0;
    for (std::size_t w = 0; w < out.spans.size(); ++w) {
        for (std::size_t t = next; t < out.spans[w].begin; ++t) {
            if (!out.special_tokens.contains(t)) {
                throw ParseError("gap at token " + std::to_string(t) + " before word " + std::to_string(w) +
                                 " is not declared special");
            }
        }
        for (const auto t : out.special_tokens) {
            if (t >= out.spans[w].begin && t < out.spans[w].end) {
                throw ParseError("special token " + std::to_string(t) + " lies inside word " + std::to_string(w));
            }
        }
        next = out.spans[w].end;
    }
    return out;
}

inline std::string serialize_token_spans(const WordTokenSpans& spans) {
    std::string out;
    for (const auto t : spans.special_tokens) out += "special " + std::to_string(t) + '\n';
    for (std::size_t w = 0; w < spans.spans.size(); ++w) {
        out += std::to_string(w) + ' ' + std::to_string(spans.spans[w].begin) + ' ' +
               std::to_string(spans.spans[w].end) + '\n';
    }
    return out;
}

// ─── Corpus manifests ────────────────────────────────────────────────────────

// Paths are kept as written; relative ones resolve against the manifest's
// directory when the corpus is scored.
struct ManifestEntry {
    std::string id;
    TaskKind task = TaskKind::s2tt;
    std::string gold;
    std::string contrib;
    std::optional<std::string> src_timeline;
    std::optional<std::string> src_spans;
    std::optional<std::string> tgt_timeline;
    std::optional<std::string> tgt_spans;
    std::string model;    // grouping label for table output
    std::string variant;  // e.g. decoder layer; best_of picks the minimum over variants

    friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct CorpusManifest {
    std::optional<TaskKind> default_task;
    bool one_based = false;
    bool best_of = false;
    std::vector<ManifestEntry> entries;

    friend bool operator==(const CorpusManifest&, const CorpusManifest&) = default;
};

inline CorpusManifest parse_manifest(std::string_view text) {
    const auto doc = detail::parse_json(text, "manifest");
    if (!doc.is_object()) throw ParseError("manifest: top level must be an object");
    CorpusManifest m;
    if (const auto task = detail::json_optional<std::string>(doc, "task", "manifest")) {
        m.default_task = parse_task_kind(*task);
    }
    m.one_based = detail::json_optional<bool>(doc, "one_based", "manifest").value_or(false);
    m.best_of = detail::json_optional<bool>(doc, "best_of", "manifest").value_or(false);

    const auto entries_it = doc.find("entries");
    if (entries_it == doc.end()) return m;
    if (!entries_it->is_array()) throw ParseError("manifest: 'entries' must be an array");

    std::set<std::string> ids;
    for (std::size_t k = 0; k < entries_it->size(); ++k) {
        const auto& e = (*entries_it)[k];
        const std::string ctx = "manifest entry " + std::to_string(k);
        if (!e.is_object()) throw ParseError(ctx + ": expected an object");
        ManifestEntry entry;
        entry.id = detail::json_field<std::string>(e, "id", ctx);
        if (!ids.insert(entry.id).second) throw ValidationError(ctx + ": duplicate sample id '" + entry.id + "'");
        if (const auto task = detail::json_optional<std::string>(e, "task", ctx)) {
            entry.task = parse_task_kind(*task);
        } else if (m.default_task) {
            entry.task = *m.default_task;
        } else {
            throw ParseError(ctx + ": no task given and the manifest declares no default");
        }
        entry.gold = detail::json_field<std::string>(e, "gold", ctx);
        entry.contrib = detail::json_field<std::string>(e, "contrib", ctx);
        entry.src_timeline = detail::json_optional<std::string>(e, "src_timeline", ctx);
        entry.src_spans = detail::json_optional<std::string>(e, "src_spans", ctx);
        entry.tgt_timeline = detail::json_optional<std::string>(e, "tgt_timeline", ctx);
        entry.tgt_spans = detail::json_optional<std::string>(e, "tgt_spans", ctx);
        entry.model = detail::json_optional<std::string>(e, "model", ctx).value_or("");
        entry.variant = detail::json_optional<std::string>(e, "variant", ctx).value_or("");
        m.entries.push_back(std::move(entry));
    }
    return m;
}

inline std::string serialize_manifest(const CorpusManifest& m) {
    nlohmann::ordered_json doc;
    if (m.default_task) doc["task"] = std::string(to_string(*m.default_task));
    doc["one_based"] = m.one_based;
    doc["best_of"] = m.best_of;
    auto entries = nlohmann::ordered_json::array();
    for (const auto& e : m.entries) {
        nlohmann::ordered_json o;
        o["id"] = e.id;
        o["task"] = std::string(to_string(e.task));
        o["gold"] = e.gold;
        o["contrib"] = e.contrib;
        if (e.src_timeline) o["src_timeline"] = *e.src_timeline;
        if (e.src_spans) o["src_spans"] = *e.src_spans;
        if (e.tgt_timeline) o["tgt_timeline"] = *e.tgt_timeline;
        if (e.tgt_spans) o["tgt_spans"] = *e.tgt_spans;
        if (!e.model.empty()) o["model"] = e.model;
        if (!e.variant.empty()) o["variant"] = e.variant;
        entries.push_back(std::move(o));
    }
    doc["entries"] = std::move(entries);
    return doc.dump(2) + "\n";
}

// ─── Score reports ───────────────────────────────────────────────────────────

// One corpus row: a scored sample or the reason it could not be scored.
struct ReportRow {
    std::string sample_id;
    std::string model;
    std::string variant;
    std::optional<ScoreReport> score;
    std::string error;

    bool ok() const noexcept { return score.has_value(); }
    friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

// Aggregate over the scored samples sharing one (model, variant) label.
struct ReportGroup {
    std::string model;
    std::string variant;
    std::size_t n_failed = 0;
    std::optional<CorpusScores> scores;  // absent when nothing in the group scored

    friend bool operator==(const ReportGroup&, const ReportGroup&) = default;
};

struct CorpusReport {
    bool best_of = false;
    std::vector<ReportRow> rows;
    std::vector<ReportGroup> groups;

    friend bool operator==(const CorpusReport&, const CorpusReport&) = default;
};

namespace detail {

inline nlohmann::ordered_json score_to_json(const ScoreReport& r) {
    nlohmann::ordered_json o;
    o["id"] = r.sample_id;
    o["saer"] = r.saer;
    o["tw_saer"] = r.tw_saer;
    const auto& t = r.tally;
    o["n_hypothesis"] = t.hypothesis;
    o["n_sure"] = t.sure;
    o["n_possible"] = t.possible;
    o["n_hyp_sure"] = t.hyp_and_sure;
    o["n_hyp_possible"] = t.hyp_and_possible;
    o["w_hypothesis"] = t.weight_hypothesis;
    o["w_sure"] = t.weight_sure;
    o["w_hyp_sure"] = t.weight_hyp_and_sure;
    o["w_hyp_possible"] = t.weight_hyp_and_possible;
    return o;
}

inline ScoreReport score_from_json(const nlohmann::json& o, const std::string& ctx) {
    ScoreReport r;
    r.sample_id = json_field<std::string>(o, "id", ctx);
    r.saer = json_real(o, "saer", ctx);
    r.tw_saer = json_real(o, "tw_saer", ctx);
    auto& t = r.tally;
    t.hypothesis = json_field<std::size_t>(o, "n_hypothesis", ctx);
    t.sure = json_field<std::size_t>(o, "n_sure", ctx);
    t.possible = json_field<std::size_t>(o, "n_possible", ctx);
    t.hyp_and_sure = json_field<std::size_t>(o, "n_hyp_sure", ctx);
    t.hyp_and_possible = json_field<std::size_t>(o, "n_hyp_possible", ctx);
    t.weight_hypothesis = json_real(o, "w_hypothesis", ctx);
    t.weight_sure = json_real(o, "w_sure", ctx);
    t.weight_hyp_and_sure = json_real(o, "w_hyp_sure", ctx);
    t.weight_hyp_and_possible = json_real(o, "w_hyp_possible", ctx);
    return r;
}

inline nlohmann::ordered_json scores_to_json(const CorpusScores& s) {
    nlohmann::ordered_json o;
    o["n_samples"] = s.n_samples;
    o["micro"] = {{"saer", s.micro_saer}, {"tw_saer", s.micro_tw_saer}};
    o["macro"] = {{"saer", s.macro_saer}, {"tw_saer", s.macro_tw_saer}};
    return o;
}

}  // namespace detail

inline std::string write_score_report(const ScoreReport& r) { return detail::score_to_json(r).dump(2) + "\n"; }

inline ScoreReport parse_score_report(std::string_view text) {
    return detail::score_from_json(detail::parse_json(text, "score report"), "score report");
}

// Per-sample rows in manifest order followed by per-group micro/macro
// aggregates. Scores are written at full precision.
inline std::string write_report(const CorpusReport& report) {
    nlohmann::ordered_json doc;
    std::size_t failed = 0;
    for (const auto& r : report.rows) failed += r.ok() ? 0 : 1;
    doc["n_samples"] = report.rows.size();
    doc["n_failed"] = failed;
    doc["best_of"] = report.best_of;
    auto rows = nlohmann::ordered_json::array();
    for (const auto& r : report.rows) {
        nlohmann::ordered_json o;
        if (r.ok()) {
            o = detail::score_to_json(*r.score);
            o["status"] = "ok";
        } else {
            o["id"] = r.sample_id;
            o["status"] = "error";
            o["error"] = r.error;
        }
        if (!r.model.empty()) o["model"] = r.model;
        if (!r.variant.empty()) o["variant"] = r.variant;
        rows.push_back(std::move(o));
    }
    doc["samples"] = std::move(rows);
    auto groups = nlohmann::ordered_json::array();
    for (const auto& g : report.groups) {
        nlohmann::ordered_json o;
        o["model"] = g.model;
        o["variant"] = g.variant;
        o["n_failed"] = g.n_failed;
        o["scores"] = g.scores ? detail::scores_to_json(*g.scores) : nlohmann::ordered_json(nullptr);
        groups.push_back(std::move(o));
    }
    doc["groups"] = std::move(groups);
    return doc.dump(2) + "\n";
}

inline CorpusReport parse_report(std::string_view text) {
    const auto doc = detail::parse_json(text, "report");
    CorpusReport report;
    report.best_of = detail::json_optional<bool>(doc, "best_of", "report").value_or(false);
    for (const auto& o : detail::json_field<nlohmann::json>(doc, "samples", "report")) {
        ReportRow row;
        row.sample_id = detail::json_field<std::string>(o, "id", "report sample");
        row.model = detail::json_optional<std::string>(o, "model", "report sample").value_or("");
        row.variant = detail::json_optional<std::string>(o, "variant", "report sample").value_or("");
        if (detail::json_field<std::string>(o, "status", "report sample") == "ok") {
            row.score = detail::score_from_json(o, "report sample " + row.sample_id);
        } else {
            row.error = detail::json_field<std::string>(o, "error", "report sample");
        }
        report.rows.push_back(std::move(row));
    }
    for (const auto& o : detail::json_field<nlohmann::json>(doc, "groups", "report")) {
        ReportGroup g;
        g.model = detail::json_field<std::string>(o, "model", "report group");
        g.variant = detail::json_field<std::string>(o, "variant", "report group");
        g.n_failed = detail::json_field<std::size_t>(o, "n_failed", "report group");
        const auto& s = o.at("scores");
        if (!s.is_null()) {
            CorpusScores cs;
            cs.n_samples = s.at("n_samples").get<std::size_t>();
            cs.micro_saer = s.at("micro").at("saer").get<double>();
            cs.micro_tw_saer = s.at("micro").at("tw_saer").get<double>();
            cs.macro_saer = s.at("macro").at("saer").get<double>();
            cs.macro_tw_saer = s.at("macro").at("tw_saer").get<double>();
            g.scores = cs;
        }
        report.groups.push_back(std::move(g));
    }
    return report;
}

// Human-readable table: one row per model with SAER and TW-SAER as
// percentages to one decimal. With best_of, each model shows the lowest
// pooled score over its variants (the two minima may come from different
// variants).
inline std::string render_table(const CorpusReport& report) {
    std::size_t scored = 0;
    for (const auto& r : report.rows) scored += r.ok() ? 1 : 0;
    std::string out;
    if (report.rows.empty()) return "0 samples\n";

    struct Line {
        std::string label;
        std::optional<double> saer, tw_saer;
        std::string saer_from, tw_from;
    };
    std::vector<Line> lines;
    if (report.best_of) {
        for (const auto& g : report.groups) {
            auto it = std::find_if(lines.begin(), lines.end(), [&](const Line& l) { return l.label == g.model; });
            if (it == lines.end()) {
                lines.push_back({g.model, std::nullopt, std::nullopt, "", ""});
                it = std::prev(lines.end());
            }
            if (!g.scores) continue;
            if (!it->saer || g.scores->micro_saer < *it->saer) {
                it->saer = g.scores->micro_saer;
                it->saer_from = g.variant;
            }
            if (!it->tw_saer || g.scores->micro_tw_saer < *it->tw_saer) {
                it->tw_saer = g.scores->micro_tw_saer;
                it->tw_from = g.variant;
            }
        }
    } else {
        for (const auto& g : report.groups) {
            std::string label = g.model;
            if (!g.variant.empty()) label += (label.empty() ? "" : "/") + g.variant;
            Line l{label, std::nullopt, std::nullopt, "", ""};
            if (g.scores) {
                l.saer = g.scores->micro_saer;
                l.tw_saer = g.scores->micro_tw_saer;
            }
            lines.push_back(std::move(l));
        }
    }

    auto pct = [](const std::optional<double>& v, const std::string& from) {
        if (!v) return std::string("-");
        std::string s = detail::format_fixed(*v * 100.0, 1);
        if (!from.empty()) s += " (" + from + ")";
        return s;
    };
    auto pad = [](std::string s, std::size_t width) {
        const auto len = detail::utf8_length(s);
        if (len < width) s.append(width - len, ' ');
        return s;
    };
    std::size_t w0 = 5;
    std::size_t w1 = 8;
    for (auto& l : lines) {
        if (l.label.empty()) l.label = "all";
        w0 = std::max(w0, detail::utf8_length(l.label));
        w1 = std::max(w1, detail::utf8_length(pct(l.saer, l.saer_from)));
    }
    out += pad("Model", w0) + "  " + pad("SAER(%)", w1) + "  TW-SAER(%)\n";
    for (const auto& l : lines) {
        out += pad(l.label, w0) + "  " + pad(pct(l.saer, l.saer_from), w1) + "  " + pct(l.tw_saer, l.tw_from);
        while (!out.empty() && out.back() == ' ') out.pop_back();
        out += '\n';
    }
    out += std::to_string(report.rows.size()) + " samples, " + std::to_string(scored) + " scored, " +
           std::to_string(report.rows.size() - scored) + " failed\n";
    return out;
}

}  // namespace speechalign
