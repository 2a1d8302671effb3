#include <gtest/gtest.h>

#include "support.hpp"

namespace sa = speechalign;
using testsupport::Rng;

namespace {

const sa::GoldAlignment kDiagonal({{0, 0}, {1, 1}}, {{0, 0}, {1, 1}});

// ─── aer / saer ──────────────────────────────────────────────────────────────

TEST(Aer, PerfectMatch) { EXPECT_EQ(sa::aer(kDiagonal, {{0, 0}, {1, 1}}), 0.0); }

TEST(Aer, Disjoint) { EXPECT_EQ(sa::aer(kDiagonal, {{1, 0}, {0, 1}}), 1.0); }

TEST(Aer, HalfRight) { EXPECT_EQ(sa::aer(kDiagonal, {{0, 0}, {0, 1}}), 0.5); }

TEST(Aer, UndefinedWhenEverythingEmpty) {
    EXPECT_THROW(sa::aer(sa::GoldAlignment(), {}), sa::UndefinedScoreError);
    EXPECT_EQ(sa::aer(sa::GoldAlignment({}, {{0, 0}}), {{0, 0}}), 0.0);
}

TEST(Saer, HardEqualsSure) {
    const sa::GoldAlignment g({{0, 0}, {2, 1}}, {{0, 0}, {2, 1}});
    EXPECT_EQ(sa::saer(g, sa::HardAlignment({0, 2})), 0.0);
}

TEST(Saer, DisjointFromPossible) {
    const sa::GoldAlignment g({{0, 0}}, {{0, 0}, {0, 1}});
    EXPECT_EQ(sa::saer(g, sa::HardAlignment({1, 1})), 1.0);
}

TEST(Saer, PossibleHitsCount) {
    // A = {(0,0), (1,0)} is not a function of the target word, so it goes
    // through aer; saer on HardAlignment shares the same formula.
    const sa::GoldAlignment g({{0, 0}}, {{0, 0}, {1, 0}});
    EXPECT_EQ(sa::aer(g, {{0, 0}, {1, 0}}), 0.0);
}

// ─── Weights ─────────────────────────────────────────────────────────────────

TEST(AlignmentWeight, SpeechToText) {
    EXPECT_EQ(sa::alignment_weight({1, 0}, sa::WeightModel::speech_to_text({1.0, 2.0})), 2.0);
}

TEST(AlignmentWeight, SpeechToSpeech) {
    EXPECT_EQ(sa::alignment_weight({1, 1}, sa::WeightModel::speech_to_speech({1.0, 2.0}, {0.5, 0.5})), 1.0);
}

TEST(AlignmentWeight, TextToText) {
    EXPECT_EQ(sa::alignment_weight({7, 3}, sa::WeightModel::text_to_text()), 1.0);
}

TEST(AlignmentWeight, OutOfRange) {
    EXPECT_THROW(sa::alignment_weight({2, 0}, sa::WeightModel::speech_to_text({1.0, 2.0})), sa::ValidationError);
    EXPECT_THROW(sa::alignment_weight({0, 2}, sa::WeightModel::speech_to_speech({1.0}, {1.0, 1.0})),
                 sa::ValidationError);
}

TEST(WeightModel, RejectsNonPositiveDurations) {
    EXPECT_THROW(sa::WeightModel::speech_to_text({1.0, 0.0}), sa::ValidationError);
    EXPECT_THROW(sa::WeightModel::speech_to_speech({1.0}, {-1.0}), sa::ValidationError);
    EXPECT_THROW(sa::WeightModel::speech_to_text({}), sa::ValidationError);
}

// ─── tw_saer ─────────────────────────────────────────────────────────────────

TEST(TwSaer, UniformDurationsEqualSaer) {
    const sa::GoldAlignment g({{0, 0}}, {{0, 0}, {1, 1}});
    const sa::HardAlignment h({0, 0});
    EXPECT_EQ(sa::tw_saer(g, h, sa::WeightModel::speech_to_speech({1.0, 1.0}, {1.0, 1.0})), sa::saer(g, h));
}

TEST(TwSaer, SpeechToTextWorkedCase) {
    EXPECT_NEAR(sa::tw_saer(kDiagonal, sa::AlignmentSet{{0, 0}, {0, 1}}, sa::WeightModel::speech_to_text({1.0, 2.0})),
                0.6, 1e-15);
}

TEST(TwSaer, SureSetIsPerfectRegardlessOfDurations) {
    EXPECT_EQ(sa::tw_saer(kDiagonal, sa::HardAlignment({0, 1}), sa::WeightModel::speech_to_speech({0.3, 7.1}, {2.2, 0.01})),
              0.0);
}

// ─── Corpus aggregation ──────────────────────────────────────────────────────

sa::ScoreReport scored(const sa::GoldAlignment& g, const sa::AlignmentSet& a) {
    sa::ScoreReport r;
    r.tally = sa::tally_alignment(g, a, sa::WeightModel::text_to_text());
    r.saer = sa::saer_from_tally(r.tally);
    r.tw_saer = sa::tw_saer_from_tally(r.tally);
    return r;
}

TEST(CorpusAggregate, SingleSample) {
    const auto r = sa::score_alignment("s", kDiagonal, sa::HardAlignment({0, 0}), sa::WeightModel::speech_to_text({1.0, 2.0}));
    const std::vector<sa::ScoreReport> v{r};
    const auto c = sa::corpus_aggregate(v);
    EXPECT_EQ(c.n_samples, 1U);
    EXPECT_EQ(c.micro_saer, r.saer);
    EXPECT_EQ(c.macro_saer, r.saer);
    EXPECT_EQ(c.macro_tw_saer, r.tw_saer);
    EXPECT_NEAR(c.micro_tw_saer, r.tw_saer, 1e-15);
}

TEST(CorpusAggregate, MacroIsMean) {
    const std::vector<sa::ScoreReport> v{scored(kDiagonal, {{0, 0}, {1, 1}}), scored(kDiagonal, {{1, 0}, {0, 1}})};
    EXPECT_EQ(v[0].saer, 0.0);
    EXPECT_EQ(v[1].saer, 1.0);
    EXPECT_EQ(sa::corpus_aggregate(v).macro_saer, 0.5);
}

TEST(CorpusAggregate, MicroPoolsCounts) {
    // Matched/total (2, 4) and (4, 4).
    const std::vector<sa::ScoreReport> v{scored(kDiagonal, {{0, 0}, {0, 1}}), scored(kDiagonal, {{0, 0}, {1, 1}})};
    EXPECT_EQ(v[0].tally.hyp_and_sure + v[0].tally.hyp_and_possible, 2U);
    EXPECT_EQ(v[0].tally.hypothesis + v[0].tally.sure, 4U);
    EXPECT_EQ(v[1].tally.hyp_and_sure + v[1].tally.hyp_and_possible, 4U);
    EXPECT_EQ(sa::corpus_aggregate(v).micro_saer, 0.25);
}

TEST(CorpusAggregate, EmptyIsAnError) {
    EXPECT_THROW(sa::corpus_aggregate(std::vector<sa::ScoreReport>{}), sa::UndefinedScoreError);
}

// ─── Properties ──────────────────────────────────────────────────────────────

TEST(MetricsProperty, MatchesBruteForce) {
    Rng rng(31);
    for (int n = 0; n < 1000; ++n) {
        const auto c = testsupport::random_metric_case(rng);
        const auto expected = oracle::brute_force_metrics(c.plain);
        ASSERT_NEAR(sa::aer(c.gold, c.hyp), expected.aer, 1e-12);
        ASSERT_NEAR(sa::tw_saer(c.gold, c.hyp, c.weights), expected.tw, 1e-12);
        const auto t = sa::tally_alignment(c.gold, c.hyp, c.weights);
        ASSERT_NEAR(sa::tw_saer_from_tally(t), expected.tw, 1e-12);
    }
}

TEST(MetricsProperty, SaerOfHardAlignmentMatchesBruteForce) {
    Rng rng(32);
    for (int n = 0; n < 500; ++n) {
        auto c = testsupport::random_metric_case(rng);
        std::vector<std::size_t> src(c.plain.n_tgt);
        c.plain.hyp.clear();
        for (std::size_t i = 0; i < src.size(); ++i) {
            src[i] = testsupport::uniform_index(rng, 0, c.plain.n_src - 1);
            c.plain.hyp.push_back({src[i], i});
        }
        const sa::HardAlignment hard(src);
        const auto expected = oracle::brute_force_metrics(c.plain);
        if (c.gold.sure().empty() && hard.size() == 0) continue;
        ASSERT_NEAR(sa::saer(c.gold, hard), expected.aer, 1e-12);
        ASSERT_EQ(sa::saer(c.gold, hard), sa::aer(c.gold, hard.points()));
        ASSERT_NEAR(sa::tw_saer(c.gold, hard, c.weights), expected.tw, 1e-12);
    }
}

TEST(MetricsProperty, ScoresWithinUnitInterval) {
    Rng rng(33);
    for (int n = 0; n < 1000; ++n) {
        const auto c = testsupport::random_metric_case(rng);
        const double a = sa::aer(c.gold, c.hyp);
        const double t = sa::tw_saer(c.gold, c.hyp, c.weights);
        ASSERT_GE(a, 0.0);
        ASSERT_LE(a, 1.0);
        ASSERT_GE(t, 0.0);
        ASSERT_LE(t, 1.0);
    }
}

// Bound holds even when P is much larger than S.
TEST(MetricsProperty, PermissivePossibleStaysBounded) {
    Rng rng(34);
    for (int n = 0; n < 300; ++n) {
        auto c = testsupport::random_metric_case(rng);
        sa::AlignmentSet possible = c.gold.possible();
        for (std::size_t j = 0; j < c.plain.n_src; ++j) {
            for (std::size_t i = 0; i < c.plain.n_tgt; ++i) possible.insert({j, i});
        }
        const sa::GoldAlignment g(c.gold.sure(), possible);
        if (c.hyp.empty() && g.sure().empty()) continue;
        const double t = sa::tw_saer(g, c.hyp, c.weights);
        ASSERT_GE(t, 0.0);
        ASSERT_LE(t, 1.0);
    }
}

TEST(MetricsProperty, AddingSurePointNeverHurts) {
    Rng rng(35);
    for (int n = 0; n < 500; ++n) {
        const auto c = testsupport::random_metric_case(rng);
        for (const auto& p : c.gold.sure()) {
            if (c.hyp.contains(p)) continue;
            auto more = c.hyp;
            more.insert(p);
            ASSERT_LE(sa::aer(c.gold, more), sa::aer(c.gold, c.hyp));
        }
    }
}

TEST(MetricsProperty, EqualDurationsGiveSaerExactly) {
    Rng rng(36);
    for (int n = 0; n < 500; ++n) {
        const auto c = testsupport::random_metric_case(rng);
        const double d = testsupport::uniform_real(rng, 0.01, 10.0);
        const std::vector<double> src(c.plain.n_src, d), tgt(c.plain.n_tgt, d);
        const auto wm = c.plain.task == oracle::Task::s2st ? sa::WeightModel::speech_to_speech(src, tgt)
                                                           : sa::WeightModel::speech_to_text(src);
        ASSERT_EQ(sa::tw_saer(c.gold, c.hyp, wm), sa::aer(c.gold, c.hyp));
    }
}

TEST(MetricsProperty, DurationScaleInvariance) {
    Rng rng(37);
    for (int n = 0; n < 500; ++n) {
        const auto c = testsupport::random_metric_case(rng);
        const double k = 100.0 - testsupport::uniform_real(rng, 0.0, 100.0);  // (0, 100]
        auto src = c.plain.src_dur;
        auto tgt = c.plain.tgt_dur;
        for (auto& d : src) d *= k;
        for (auto& d : tgt) d *= k;
        const auto wm = testsupport::weight_model({c.plain.n_src, c.plain.n_tgt, {}, {}, {}, src, tgt, c.plain.task});
        ASSERT_NEAR(sa::tw_saer(c.gold, c.hyp, wm), sa::tw_saer(c.gold, c.hyp, c.weights), 1e-9);
    }
}

TEST(MetricsProperty, MicroOverOneSampleEqualsSample) {
    Rng rng(38);
    for (int n = 0; n < 200; ++n) {
        const auto c = testsupport::random_metric_case(rng);
        sa::ScoreReport r;
        r.tally = sa::tally_alignment(c.gold, c.hyp, c.weights);
        r.saer = sa::aer(c.gold, c.hyp);
        r.tw_saer = sa::tw_saer(c.gold, c.hyp, c.weights);
        const std::vector<sa::ScoreReport> v{r};
        const auto agg = sa::corpus_aggregate(v);
        ASSERT_EQ(agg.micro_saer, r.saer);
        ASSERT_NEAR(agg.micro_tw_saer, r.tw_saer, 1e-12);
        ASSERT_EQ(agg.macro_tw_saer, r.tw_saer);
    }
}

}  // namespace
