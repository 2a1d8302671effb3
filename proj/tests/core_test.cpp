#include <gtest/gtest.h>

#include "speechalign/core.hpp"

namespace sa = speechalign;

namespace {

sa::ContributionMatrix matrix(std::size_t r, std::size_t c, std::vector<double> v) { return {r, c, std::move(v)}; }

TEST(ValidateContributionMatrix, StochasticRowsPass) {
    EXPECT_TRUE(sa::validate_contribution_matrix(matrix(2, 2, {0.5, 0.5, 1.0, 0.0})).empty());
}

TEST(ValidateContributionMatrix, RowSumDeviation) {
    const auto d = sa::validate_contribution_matrix(matrix(1, 2, {0.6, 0.6}));
    ASSERT_EQ(d.size(), 1U);
    EXPECT_EQ(d[0].kind, sa::MatrixDiagnostic::Kind::row_sum);
    EXPECT_EQ(d[0].row, 0U);
    EXPECT_NEAR(d[0].magnitude, 0.2, 1e-12);
    EXPECT_EQ(d[0].severity, sa::Severity::error);
}

TEST(ValidateContributionMatrix, NegativeEntry) {
    const auto d = sa::validate_contribution_matrix(matrix(1, 2, {-0.1, 1.1}));
    ASSERT_EQ(d.size(), 1U);
    EXPECT_EQ(d[0].kind, sa::MatrixDiagnostic::Kind::negative_entry);
    EXPECT_EQ(d[0].row, 0U);
    EXPECT_EQ(d[0].col, 0U);
    EXPECT_NEAR(d[0].magnitude, 0.1, 1e-12);
}

TEST(ValidateContributionMatrix, TwoTierTolerance) {
    const auto warn = sa::validate_contribution_matrix(matrix(1, 2, {0.5, 0.5005}));
    ASSERT_EQ(warn.size(), 1U);
    EXPECT_EQ(warn[0].severity, sa::Severity::warning);
    EXPECT_FALSE(sa::has_errors(warn));

    EXPECT_TRUE(sa::validate_contribution_matrix(matrix(1, 2, {0.5, 0.50005})).empty());
    EXPECT_TRUE(sa::has_errors(sa::validate_contribution_matrix(matrix(1, 2, {0.5, 0.52}))));
}

TEST(ValidateContributionMatrix, Pure) {
    const auto m = matrix(2, 3, {0.2, -0.3, 0.9, 0.4, 0.4, 0.4});
    const auto a = sa::validate_contribution_matrix(m);
    const auto b = sa::validate_contribution_matrix(m);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a[k].describe(), b[k].describe());
}

TEST(GoldAlignment, SureMustBeSubsetOfPossible) {
    EXPECT_THROW(sa::GoldAlignment({{0, 0}, {1, 1}}, {{0, 0}}), sa::ValidationError);
    EXPECT_NO_THROW(sa::GoldAlignment({{0, 0}}, {{0, 0}, {1, 0}}));
}

TEST(GoldAlignment, Extents) {
    const sa::GoldAlignment g({{0, 0}}, {{0, 0}, {3, 1}});
    EXPECT_EQ(g.source_extent(), 4U);
    EXPECT_EQ(g.target_extent(), 2U);
    EXPECT_EQ(sa::GoldAlignment().source_extent(), 0U);
}

TEST(UtteranceTimeline, RejectsOverlap) {
    try {
        sa::UtteranceTimeline({{"a", 0.0, 0.6}, {"b", 0.5, 1.0}}, 1.0);
        FAIL();
    } catch (const sa::ValidationError& e) {
        EXPECT_STREQ(e.what(), "overlap between words 0 and 1");
    }
}

TEST(UtteranceTimeline, RejectsReversedWord) {
    try {
        sa::UtteranceTimeline({{"a", 0.5, 0.4}}, 1.0);
        FAIL();
    } catch (const sa::ValidationError& e) {
        EXPECT_STREQ(e.what(), "start >= end at word 0");
    }
}

TEST(UtteranceTimeline, RejectsWordPastTotal) {
    EXPECT_THROW(sa::UtteranceTimeline({{"a", 0.0, 1.5}}, 1.0), sa::ValidationError);
    EXPECT_THROW(sa::UtteranceTimeline({}, 1.0), sa::ValidationError);
}

TEST(UtteranceTimeline, AdjacentWordsAndGapsAllowed) {
    const sa::UtteranceTimeline tl({{"a", 0.0, 0.5}, {"b", 0.5, 0.7}, {"c", 0.9, 1.0}}, 1.2);
    EXPECT_DOUBLE_EQ(tl.max_duration(), 1.0);
    EXPECT_DOUBLE_EQ(tl.total_duration(), 1.2);
    EXPECT_NEAR(tl.durations()[1], 0.2, 1e-15);
}

TEST(HardAlignment, OnePointPerTargetWord) {
    const sa::HardAlignment h({2, 0, 2});
    EXPECT_EQ(h.size(), 3U);
    const auto pts = h.points();
    EXPECT_EQ(pts.size(), 3U);
    EXPECT_TRUE(pts.contains({2, 0}));
    EXPECT_TRUE(pts.contains({0, 1}));
    EXPECT_TRUE(pts.contains({2, 2}));
}

TEST(WordTokenSpans, Coverage) {
    sa::WordTokenSpans s{{{1, 3}, {3, 4}}, {0, 4}};
    EXPECT_NO_THROW(s.check_coverage(5));
    EXPECT_THROW(s.check_coverage(6), sa::ValidationError);  // token 5 uncovered
    EXPECT_THROW(s.check_coverage(3), sa::ValidationError);  // span past the axis
}

TEST(TaskKind, ParseAndPrint) {
    for (const auto t : {sa::TaskKind::t2t, sa::TaskKind::s2tt, sa::TaskKind::s2st}) {
        EXPECT_EQ(sa::parse_task_kind(sa::to_string(t)), t);
    }
    EXPECT_THROW(sa::parse_task_kind("S2T"), sa::ParseError);
}

}  // namespace
