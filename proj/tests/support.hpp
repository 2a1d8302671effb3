#pragma once

// Random instance generators shared by the unit, property and acceptance tests.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "oracle/oracle.hpp"
#include "speechalign/speechalign.hpp"

namespace testsupport {

namespace sa = speechalign;
using Rng = std::mt19937_64;

inline std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline double uniform_real(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline bool coin(Rng& rng, double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

// A metric instance in both library and oracle form.
struct MetricCase {
    oracle::MetricInstance plain;
    sa::GoldAlignment gold;
    sa::AlignmentSet hyp;
    sa::WeightModel weights;
};

inline sa::WeightModel weight_model(const oracle::MetricInstance& m) {
    switch (m.task) {
        case oracle::Task::t2t: return sa::WeightModel::text_to_text();
        case oracle::Task::s2tt: return sa::WeightModel::speech_to_text(m.src_dur);
        case oracle::Task::s2st: return sa::WeightModel::speech_to_speech(m.src_dur, m.tgt_dur);
    }
    return sa::WeightModel::text_to_text();
}

// Up to max_words per side; |A| + |S| > 0 guaranteed.
inline MetricCase random_metric_case(Rng& rng, std::size_t max_words = 10) {
    MetricCase c;
    auto& m = c.plain;
    m.n_src = uniform_index(rng, 1, max_words);
    m.n_tgt = uniform_index(rng, 1, max_words);
    m.task = static_cast<oracle::Task>(uniform_index(rng, 0, 2));
    const double p_sure = uniform_real(rng, 0.0, 0.4);
    const double p_poss = uniform_real(rng, 0.0, 0.3);
    const double p_hyp = uniform_real(rng, 0.05, 0.5);
    sa::AlignmentSet sure, possible;
    for (std::size_t j = 0; j < m.n_src; ++j) {
        for (std::size_t i = 0; i < m.n_tgt; ++i) {
            if (coin(rng, p_sure)) {
                m.sure.push_back({j, i});
                m.possible.push_back({j, i});
                sure.insert({j, i});
                possible.insert({j, i});
            } else if (coin(rng, p_poss)) {
                m.possible.push_back({j, i});
                possible.insert({j, i});
            }
            if (coin(rng, p_hyp)) {
                m.hyp.push_back({j, i});
                c.hyp.insert({j, i});
            }
        }
    }
    if (m.hyp.empty() && m.sure.empty()) {
        m.hyp.push_back({0, 0});
        c.hyp.insert({0, 0});
    }
    for (std::size_t j = 0; j < m.n_src; ++j) m.src_dur.push_back(uniform_real(rng, 0.05, 2.0));
    for (std::size_t i = 0; i < m.n_tgt; ++i) m.tgt_dur.push_back(uniform_real(rng, 0.05, 2.0));
    c.gold = sa::GoldAlignment(std::move(sure), std::move(possible));
    c.weights = weight_model(m);
    return c;
}

// Row-stochastic matrix with a few exact zeros.
inline sa::ContributionMatrix random_stochastic(Rng& rng, std::size_t rows, std::size_t cols) {
    std::vector<double> v(rows * cols);
    std::exponential_distribution<double> expo(1.0);
    for (std::size_t i = 0; i < rows; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            v[i * cols + j] = coin(rng, 0.1) ? 0.0 : expo(rng);
            sum += v[i * cols + j];
        }
        if (sum == 0.0) {
            v[i * cols] = 1.0;
            sum = 1.0;
        }
        for (std::size_t j = 0; j < cols; ++j) v[i * cols + j] /= sum;
    }
    return {rows, cols, std::move(v)};
}

inline oracle::Matrix to_rows(const sa::ContributionMatrix& m) {
    oracle::Matrix out(m.rows(), std::vector<double>(m.cols()));
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
    }
    return out;
}

// Ordered words with optional silences between them.
inline sa::UtteranceTimeline random_timeline(Rng& rng, std::size_t n_words, bool gaps) {
    std::vector<sa::WordTiming> words;
    double t = gaps && coin(rng) ? uniform_real(rng, 0.0, 0.3) : 0.0;
    for (std::size_t k = 0; k < n_words; ++k) {
        const double d = uniform_real(rng, 0.02, 0.8);
        words.push_back({"w" + std::to_string(k), t, t + d});
        t += d;
        if (gaps && coin(rng, 0.4)) t += uniform_real(rng, 0.01, 0.3);
    }
    const double total = words.back().end_s + (coin(rng) ? uniform_real(rng, 0.0, 0.5) : 0.0);
    return {std::move(words), total};
}

inline std::vector<oracle::Word> plain_words(const sa::UtteranceTimeline& tl) {
    std::vector<oracle::Word> out;
    for (const auto& w : tl.words()) out.push_back({w.start_s, w.end_s});
    return out;
}

// n_words non-empty spans that partition [0, n_tokens) exactly.
inline sa::WordTokenSpans random_partition(Rng& rng, std::size_t n_tokens, std::size_t n_words) {
    std::vector<std::size_t> cuts;
    for (std::size_t t = 1; t < n_tokens; ++t) cuts.push_back(t);
    std::shuffle(cuts.begin(), cuts.end(), rng);
    cuts.resize(n_words - 1);
    std::sort(cuts.begin(), cuts.end());
    sa::WordTokenSpans out;
    std::size_t prev = 0;
    for (const auto c : cuts) {
        out.spans.push_back({prev, c});
        prev = c;
    }
    out.spans.push_back({prev, n_tokens});
    return out;
}

// Spans with declared special tokens in the gaps (e.g. BOS / EOS).
inline sa::WordTokenSpans random_spans_with_specials(Rng& rng, std::size_t n_tokens) {
    sa::WordTokenSpans out;
    std::size_t t = 0;
    while (t < n_tokens) {
        if (coin(rng, 0.2)) {
            out.special_tokens.insert(t++);
            continue;
        }
        const std::size_t len = std::min(n_tokens - t, uniform_index(rng, 1, 3));
        out.spans.push_back({t, t + len});
        t += len;
    }
    if (out.spans.empty()) {
        out.special_tokens.clear();
        out.spans.push_back({0, n_tokens});
    }
    return out;
}

inline std::vector<std::pair<std::size_t, std::size_t>> plain_spans(const sa::WordTokenSpans& s) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (const auto& sp : s.spans) out.emplace_back(sp.begin, sp.end);
    return out;
}

// Phoneme sequence with n_words groups separated by blanks, optional leading
// and trailing blanks and punctuation.
inline sa::PhonemeSequence random_phonemes(Rng& rng, std::size_t n_words) {
    std::vector<sa::PhonemeUnit> units;
    auto non_phoneme = [&] {
        const bool punct = coin(rng, 0.3);
        return sa::PhonemeUnit{punct ? "," : " ", uniform_index(rng, 0, 9),
                               punct ? sa::UnitKind::punctuation : sa::UnitKind::blank};
    };
    if (coin(rng, 0.3)) units.push_back(non_phoneme());
    for (std::size_t w = 0; w < n_words; ++w) {
        if (w > 0) {
            units.push_back(non_phoneme());
            if (coin(rng, 0.2)) units.push_back(non_phoneme());
        }
        const std::size_t len = uniform_index(rng, 1, 6);
        for (std::size_t k = 0; k < len; ++k) {
            units.push_back({"p", uniform_index(rng, 1, 12), sa::UnitKind::phoneme});
        }
    }
    if (coin(rng, 0.4)) units.push_back(non_phoneme());
    return sa::PhonemeSequence(std::move(units));
}

inline std::vector<oracle::Unit> plain_units(const sa::PhonemeSequence& seq) {
    std::vector<oracle::Unit> out;
    for (const auto& u : seq.units()) out.push_back({u.duration_units, u.kind == sa::UnitKind::phoneme});
    return out;
}

// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("speechalign-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::string file(const std::string& name, const std::string& contents) const {
        const auto p = path_ / name;
        std::filesystem::create_directories(p.parent_path());
        sa::detail::write_file(p.string(), contents);
        return p.string();
    }
    std::string operator/(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

}  // namespace testsupport
