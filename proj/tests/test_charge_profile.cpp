#include "rctlab/charge_profile.hpp"
#include "rctlab/error.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace rctlab;

namespace {

ChargeProfile two_step() { return ChargeProfile({{0.0, 0.5, 1.0}, {0.5, 0.8, 0.5}}); }

OcvCurve linear_ocv() { return OcvCurve({{0.0, 3.0}, {1.0, 4.2}}); }

// Adjacent segments sharing a rate collapse into one.
std::vector<Segment> merged(const Partitioning& p) {
    std::vector<Segment> out;
    for (const auto& s : p.segments) {
        if (!out.empty() && out.back().c_rate == s.c_rate)
            out.back().delta_soc += s.delta_soc;
        else
            out.push_back(s);
    }
    return out;
}

} // namespace

TEST(ChargeProfile, Validation) {
    EXPECT_THROW(ChargeProfile({}), DomainError);
    EXPECT_THROW(ChargeProfile({{0.0, 0.5, 1.0}, {0.6, 1.0, 0.5}}), DomainError);
    EXPECT_THROW(ChargeProfile({{0.0, 0.5, 1.0}, {0.5, 1.0, 1.5}}), DomainError);
    EXPECT_THROW(ChargeProfile({{0.0, 0.5, 0.0}}), DomainError);
    EXPECT_THROW(ChargeProfile({{0.5, 0.5, 1.0}}), DomainError);
    EXPECT_THROW(ChargeProfile({{0.0, 1.2, 1.0}}), DomainError);
    EXPECT_NO_THROW(ChargeProfile({{0.0, 0.5, 1.0}, {0.5, 1.0, 1.0}}));
}

TEST(ChargeProfile, CommandedRateHalfOpenSteps) {
    auto p = two_step();
    EXPECT_EQ(p.commanded_c_rate(0.0), 1.0);
    EXPECT_EQ(p.commanded_c_rate(0.4999), 1.0);
    EXPECT_EQ(p.commanded_c_rate(0.5), 0.5);
    EXPECT_EQ(p.commanded_c_rate(0.8), 0.5);
    EXPECT_THROW(p.commanded_c_rate(0.81), DomainError);
}

TEST(ChargeProfile, CsvRoundTripAndFiles) {
    std::stringstream s;
    default_charge_profile().save(s);
    auto back = ChargeProfile::parse(s);
    ASSERT_EQ(back.steps().size(), default_charge_profile().steps().size());

    auto check = [](const ChargeProfile& a, const ChargeProfile& b) {
        ASSERT_EQ(a.steps().size(), b.steps().size());
        for (std::size_t i = 0; i < a.steps().size(); ++i) {
            EXPECT_EQ(a.steps()[i].soc_from, b.steps()[i].soc_from);
            EXPECT_EQ(a.steps()[i].soc_to, b.steps()[i].soc_to);
            EXPECT_EQ(a.steps()[i].c_rate, b.steps()[i].c_rate);
        }
    };
    check(back, default_charge_profile());
    check(ChargeProfile::load(RCTLAB_DATA_DIR "/profile_default.csv"), default_charge_profile());
    check(ChargeProfile::load(RCTLAB_DATA_DIR "/profile_fast.csv"), fast_charge_profile());
}

TEST(ChargeProfile, NonContiguousFileIsConfigError) {
    std::istringstream in("soc_from,soc_to,c_rate\n0,0.5,1\n0.6,1,0.5\n");
    EXPECT_THROW(ChargeProfile::parse(in, "p.csv"), ConfigError);
}

TEST(PartitionCc, Examples) {
    auto p = partition_cc(two_step(), 0.1, 0.7);
    ASSERT_EQ(p.count(), 2u);
    EXPECT_NEAR(p.segments[0].delta_soc, 0.4, 1e-15);
    EXPECT_EQ(p.segments[0].c_rate, 1.0);
    EXPECT_NEAR(p.segments[1].delta_soc, 0.2, 1e-15);
    EXPECT_EQ(p.segments[1].c_rate, 0.5);

    auto one = partition_cc(two_step(), 0.1, 0.4);
    ASSERT_EQ(one.count(), 1u);
    EXPECT_NEAR(one.segments[0].delta_soc, 0.3, 1e-15);

    EXPECT_THROW(partition_cc(two_step(), 0.5, 0.5), DomainError);
    EXPECT_THROW(partition_cc(two_step(), 0.1, 0.9), DomainError);
}

TEST(PartitionCc, EndingOnABoundaryAddsNoEmptySegment) {
    auto p = partition_cc(two_step(), 0.1, 0.5);
    ASSERT_EQ(p.count(), 1u);
    auto q = partition_cc(two_step(), 0.5, 0.8);
    ASSERT_EQ(q.count(), 1u);
    EXPECT_EQ(q.segments[0].c_rate, 0.5);
}

TEST(PartitionCc, ReconstructsSpanAndConcatenates) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto& profile = default_charge_profile();
    for (int i = 0; i < 2000; ++i) {
        double a = u(rng), b = u(rng), c = u(rng);
        if (a > b)
            std::swap(a, b);
        if (b > c)
            std::swap(b, c);
        if (a > b)
            std::swap(a, b);
        if (!(a < b && b < c))
            continue;
        auto ab = partition_cc(profile, a, b);
        auto bc = partition_cc(profile, b, c);
        auto ac = partition_cc(profile, a, c);

        double sum = 0.0;
        for (const auto& s : ac.segments) {
            EXPECT_GT(s.delta_soc, 0.0);
            sum += s.delta_soc;
        }
        EXPECT_NEAR(sum, c - a, 1e-12);

        Partitioning joined = ab;
        joined.segments.insert(joined.segments.end(), bc.segments.begin(), bc.segments.end());
        auto lhs = merged(joined);
        auto rhs = merged(ac);
        ASSERT_EQ(lhs.size(), rhs.size());
        for (std::size_t k = 0; k < lhs.size(); ++k) {
            EXPECT_EQ(lhs[k].c_rate, rhs[k].c_rate);
            EXPECT_NEAR(lhs[k].delta_soc, rhs[k].delta_soc, 1e-12);
        }
    }
}

TEST(CvTurningSoc, ZeroResistanceTurnsAtFull) {
    ChargeProfile p({{0.0, 1.0, 1.0}});
    double s = cv_turning_soc(p, BatteryParams{}, linear_ocv(), [](double) { return 0.0; });
    EXPECT_NEAR(s, 1.0, kTurningSocTolerance);
}

TEST(CvTurningSoc, ClosedFormLinearCase) {
    ChargeProfile p({{0.0, 1.0, 1.0}});
    BatteryParams b;
    double s = cv_turning_soc(p, b, linear_ocv(), [](double) { return 0.05; });
    // Oracle: 3.0 + 1.2 soc + R * 1C * capacity = cutoff.
    double expected = (b.cutoff_voltage_v - 3.0 - 0.05 * b.capacity_ah) / 1.2;
    EXPECT_NEAR(expected, 0.8, 1e-12);
    EXPECT_GE(s, expected - 1e-12);
    EXPECT_LE(s, expected + kTurningSocTolerance);
}

TEST(CvTurningSoc, NeverReachedReturnsOne) {
    ChargeProfile p({{0.0, 0.9, 0.01}});
    OcvCurve flat({{0.0, 3.0}, {1.0, 3.5}});
    EXPECT_EQ(cv_turning_soc(p, BatteryParams{}, flat, [](double) { return 0.05; }), 1.0);
}

TEST(CvTurningSoc, AlreadyReachedAtProfileStart) {
    ChargeProfile p({{0.3, 1.0, 1.0}});
    double s = cv_turning_soc(p, BatteryParams{}, linear_ocv(), [](double) { return 1.0; });
    EXPECT_EQ(s, 0.3);
}

TEST(ClassifyScenario, FigureExamples) {
    auto a = classify_scenario(0.1, 0.6, 0.8);
    EXPECT_EQ(a.kind, ScenarioKind::CcOnly);
    ASSERT_TRUE(a.cc_span);
    EXPECT_FALSE(a.cv_span);

    auto b = classify_scenario(0.85, 0.95, 0.8);
    EXPECT_EQ(b.kind, ScenarioKind::CvOnly);
    EXPECT_FALSE(b.cc_span);
    ASSERT_TRUE(b.cv_span);

    auto c = classify_scenario(0.1, 0.95, 0.8);
    EXPECT_EQ(c.kind, ScenarioKind::CcThenCv);
    ASSERT_TRUE(c.cc_span && c.cv_span);
    EXPECT_EQ(c.cc_span->to, 0.8);
    EXPECT_EQ(c.cv_span->from, 0.8);
    EXPECT_EQ(c.cc_span->from, 0.1);
    EXPECT_EQ(c.cv_span->to, 0.95);
}

TEST(ClassifyScenario, Ties) {
    EXPECT_EQ(classify_scenario(0.1, 0.8, 0.8).kind, ScenarioKind::CcOnly);
    EXPECT_EQ(classify_scenario(0.8, 0.9, 0.8).kind, ScenarioKind::CvOnly);
    EXPECT_THROW(classify_scenario(0.5, 0.5, 0.8), DomainError);
    EXPECT_THROW(classify_scenario(0.6, 0.5, 0.8), DomainError);
}

TEST(ClassifyScenario, RandomTriplesAreExclusiveAndCoverTheSpan) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 100000; ++i) {
        double cur = u(rng), tgt = u(rng), turn = u(rng);
        if (cur >= tgt)
            std::swap(cur, tgt);
        if (cur == tgt)
            continue;
        auto s = classify_scenario(cur, tgt, turn);
        double width = (s.cc_span ? s.cc_span->width() : 0.0) + (s.cv_span ? s.cv_span->width() : 0.0);
        EXPECT_NEAR(width, tgt - cur, 1e-15);
        switch (s.kind) {
        case ScenarioKind::CcOnly:
            EXPECT_TRUE(s.cc_span && !s.cv_span);
            break;
        case ScenarioKind::CvOnly:
            EXPECT_TRUE(!s.cc_span && s.cv_span);
            break;
        case ScenarioKind::CcThenCv:
            ASSERT_TRUE(s.cc_span && s.cv_span);
            EXPECT_EQ(s.cc_span->to, turn);
            EXPECT_EQ(s.cv_span->from, turn);
            EXPECT_GT(s.cc_span->width(), 0.0);
            EXPECT_GT(s.cv_span->width(), 0.0);
            break;
        }
    }
}

TEST(Stage, StringRoundTrip) {
    for (auto s : {Stage::CC, Stage::CV, Stage::DONE})
        EXPECT_EQ(stage_from_string(to_string(s)), s);
    EXPECT_THROW(stage_from_string("cc"), ConfigError);
}
