#include "rctlab/error.hpp"
#include "rctlab/sim_harness.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace rctlab;

namespace {

SessionSetup ideal_cc(double start, double target, double c_rate) {
    SessionSetup s;
    s.profile = ChargeProfile({{0.0, 1.0, c_rate}});
    s.start_soc = start;
    s.target_soc = target;
    s.law.r_base_ohm = 1e-4;
    s.law.end_rise_gain = 1e-6;
    s.charger.max_current_a = 1000.0;
    return s;
}

std::size_t count_stage(const SessionTrace& t, Stage st) {
    std::size_t n = 0;
    for (const auto& r : t.rows)
        n += r.stage == st;
    return n;
}

} // namespace

TEST(Simulate, IdealCcTakesDeltaSocOverRate) {
    auto t = simulate_session(ideal_cc(0.2, 0.6, 1.0));
    EXPECT_EQ(count_stage(t, Stage::CV), 0u);
    EXPECT_NEAR(t.end_time_s(), 0.4 * 3600.0, 1e-6);
    EXPECT_NEAR(true_rct(t, 0.0), 24.0, 1e-8);
    EXPECT_EQ(t.rows.back().stage, Stage::DONE);
    EXPECT_EQ(t.rows.back().soc, 0.6);

    auto half = simulate_session(ideal_cc(0.2, 0.6, 0.5));
    EXPECT_NEAR(half.end_time_s(), 0.8 * 3600.0, 1e-6);
}

TEST(Simulate, AccuracyStretchesCcTime) {
    auto s = ideal_cc(0.1, 0.5, 1.0);
    s.charger.schedule = {{0.0, kCcScenarioAccuracy}};
    auto t = simulate_session(s);
    EXPECT_NEAR(t.end_time_s(), 0.4 * 3600.0 / kCcScenarioAccuracy, 1e-6);
    EXPECT_NEAR(overall_cc_accuracy(t), kCcScenarioAccuracy, 1e-12);
}

TEST(Simulate, ChargerLimitCapsCurrent) {
    auto s = ideal_cc(0.1, 0.5, 1.0);
    s.charger.max_current_a = s.battery.capacity_ah / 2.0;
    auto t = simulate_session(s);
    EXPECT_NEAR(t.end_time_s(), 0.8 * 3600.0, 1e-6);
}

TEST(Simulate, CvDurationScalesWithAging) {
    auto s = paper_scenario_cv(11);
    s.charger.aux_load_fraction = 0.0;
    s.dt_s = 0.25;
    auto base = simulate_session(s);
    ASSERT_EQ(count_stage(base, Stage::CC), 0u);
    s.law.aging_scale = 2.0;
    auto aged = simulate_session(s);
    EXPECT_NEAR(aged.end_time_s() / base.end_time_s(), 2.0, 2e-3);
}

TEST(Simulate, ResistanceRecoveredFromCvRows) {
    auto s = paper_scenario_cv(11);
    auto t = simulate_session(s);
    std::size_t checked = 0;
    for (const auto& r : t.rows) {
        if (r.stage != Stage::CV)
            continue;
        double measured = resistance_from_measurement(r.v_term_v, ocv_at(s.ocv, r.soc), r.i_recv_a);
        double truth = s.law.resistance(r.soc, s.start_soc, r.temp_c);
        EXPECT_NEAR(measured, truth, 1e-9 * truth);
        ++checked;
    }
    EXPECT_GT(checked, 100u);
}

TEST(Simulate, CvCurrentNonIncreasing) {
    for (auto s : training_sessions(6, 9)) {
        s.temperature = TemperatureSchedule::constant(25.0);
        auto t = simulate_session(s);
        double prev = std::numeric_limits<double>::infinity();
        for (const auto& r : t.rows) {
            if (r.stage != Stage::CV)
                continue;
            EXPECT_LE(r.i_recv_a, prev * (1.0 + 1e-12));
            prev = r.i_recv_a;
        }
    }
}

TEST(Simulate, StagesOnlyMoveForward) {
    for (const auto& s : training_sessions(10, 3)) {
        auto t = simulate_session(s);
        for (std::size_t i = 1; i < t.rows.size(); ++i) {
            EXPECT_GE(static_cast<int>(t.rows[i].stage), static_cast<int>(t.rows[i - 1].stage));
            EXPECT_GT(t.rows[i].time_s, t.rows[i - 1].time_s);
            EXPECT_GE(t.rows[i].soc, t.rows[i - 1].soc);
        }
    }
}

TEST(Simulate, WarmerCellTurnsLater) {
    auto turning = [](double temp) {
        SessionSetup s;
        s.profile = fast_charge_profile();
        s.start_soc = 0.1;
        s.target_soc = 0.95;
        s.temperature = TemperatureSchedule::constant(temp);
        auto t = simulate_session(s);
        for (const auto& r : t.rows)
            if (r.stage == Stage::CV)
                return r.soc;
        return 1.0;
    };
    double prev = 0.0;
    for (double temp : {5.0, 15.0, 25.0, 35.0, 45.0}) {
        double soc = turning(temp);
        EXPECT_GT(soc, prev) << temp;
        prev = soc;
    }
}

TEST(Simulate, DeterministicForSeed) {
    auto s = paper_scenario_cc(7);
    auto a = simulate_session(s);
    auto b = simulate_session(s);
    std::ostringstream sa, sb;
    a.save_csv(sa);
    b.save_csv(sb);
    EXPECT_EQ(sa.str(), sb.str());
    EXPECT_EQ(a.metadata.config_hash, b.metadata.config_hash);
    s.charger.seed = 8;
    auto c = simulate_session(s);
    std::ostringstream sc;
    c.save_csv(sc);
    EXPECT_NE(sa.str(), sc.str());
    EXPECT_NE(a.metadata.config_hash, c.metadata.config_hash);
}

TEST(Simulate, EndsAtCutoffWhenTargetUnreachable) {
    SessionSetup s;
    s.profile = fast_charge_profile();
    s.start_soc = 0.5;
    s.target_soc = 1.0;
    s.law.aging_scale = 3.0;
    auto t = simulate_session(s);
    EXPECT_TRUE(t.metadata.ended_at_cutoff);
    EXPECT_LT(t.rows.back().soc, 1.0);
}

TEST(Simulate, RejectsBadSetups) {
    SessionSetup s;
    s.start_soc = 0.9;
    s.target_soc = 0.5;
    EXPECT_THROW(simulate_session(s), DomainError);
    s = {};
    s.dt_s = 0.0;
    EXPECT_THROW(simulate_session(s), DomainError);
    s = {};
    s.charger.schedule = {{0.0, 1.0}, {0.0, 0.9}};
    EXPECT_THROW(simulate_session(s), DomainError);
    s = {};
    s.charger.noise_amplitude = 1.0;
    EXPECT_THROW(simulate_session(s), DomainError);
}

TEST(TraceCsv, RoundTripIsBitExact) {
    auto t = simulate_session(paper_scenario_cc(7));
    std::stringstream ss;
    t.save_csv(ss);
    auto back = SessionTrace::parse_csv(ss);
    ASSERT_EQ(back.rows.size(), t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        EXPECT_EQ(back.rows[i].time_s, t.rows[i].time_s);
        EXPECT_EQ(back.rows[i].soc, t.rows[i].soc);
        EXPECT_EQ(back.rows[i].stage, t.rows[i].stage);
        EXPECT_EQ(back.rows[i].i_recv_a, t.rows[i].i_recv_a);
        EXPECT_EQ(back.rows[i].v_term_v, t.rows[i].v_term_v);
    }
}

TEST(TraceCsv, BadRowNamesTheLine) {
    std::istringstream in("time_s,soc,stage,i_cmd_a,i_recv_a,v_term_v,temp_c\n"
                          "0,0.1,CC,1,1,4,25\n"
                          "1,0.1,XX,1,1,4,25\n");
    try {
        SessionTrace::parse_csv(in, "t.csv");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("t.csv:3"), std::string::npos) << e.what();
    }
}

TEST(TrueRct, Examples) {
    auto t = simulate_session(ideal_cc(0.2, 0.6, 1.0));
    EXPECT_NEAR(true_rct(t, 600.0), 14.0, 1e-8);
    EXPECT_EQ(true_rct(t, t.end_time_s()), 0.0);
    EXPECT_THROW(true_rct(t, -1.0), DomainError);
    EXPECT_THROW(true_rct(t, t.end_time_s() + 1.0), DomainError);
}

TEST(TrueLaw, Properties) {
    TrueResistanceLaw law;
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 2000; ++k) {
        double soc = u(rng), start = u(rng), temp = -10.0 + 60.0 * u(rng);
        double r = law.resistance(soc, start, temp);
        EXPECT_GT(r, 0.0);
        EXPECT_LT(law.resistance(soc, start, temp + 1.0), r);
        EXPECT_GT(law.resistance(soc + 0.01, start, temp), r);
        EXPECT_GT(law.resistance(soc, start + 0.01, temp), r);
        double h = 0.01;
        double second = law.resistance(soc + h, start, temp) - 2 * r + law.resistance(soc - h, start, temp);
        EXPECT_GT(second, 0.0);
    }
    EXPECT_DOUBLE_EQ(law.resistance(1.0, 0.0, 25.0), 0.05 * 6.0);
    EXPECT_THROW(law.resistance(0.5, 0.5, 130.0), DomainError);
    law.aging_scale = 0.9;
    EXPECT_THROW(law.validate(), DomainError);
}

TEST(Scenarios, CcScenarioShape) {
    auto s = paper_scenario_cc(7);
    auto t = simulate_session(s);
    EXPECT_EQ(count_stage(t, Stage::CV), 0u);
    EXPECT_NEAR(overall_cc_accuracy(t), kCcScenarioAccuracy, 5e-3);
    EXPECT_EQ(s.charger.scheduled_accuracy(38.0 * 60.0), 0.55);
    EXPECT_EQ(s.charger.scheduled_accuracy(41.0 * 60.0), 0.763);
}

TEST(Scenarios, CvScenarioIsAllCv) {
    auto t = simulate_session(paper_scenario_cv(11));
    EXPECT_EQ(count_stage(t, Stage::CC), 0u);
    EXPECT_FALSE(t.metadata.ended_at_cutoff);
    EXPECT_EQ(t.rows.back().soc, 0.90);
}

TEST(Scenarios, AgingCyclesUseTheAgedPack) {
    auto cycles = paper_scenario_aging(13);
    ASSERT_EQ(cycles.size(), 3u);
    for (const auto& c : cycles)
        EXPECT_EQ(c.law.aging_scale, kAgedPackScale);
}

TEST(Scenarios, TrainingSessionsSpanStartAndTemperature) {
    auto sessions = training_sessions(10, 101);
    ASSERT_EQ(sessions.size(), 10u);
    double lo_start = 1, hi_start = 0, lo_t = 100, hi_t = -100;
    for (const auto& s : sessions) {
        lo_start = std::min(lo_start, s.start_soc);
        hi_start = std::max(hi_start, s.start_soc);
        lo_t = std::min(lo_t, s.temperature.at(0.0));
        hi_t = std::max(hi_t, s.temperature.at(0.0));
        EXPECT_NEAR(s.temperature.at(1e6) - s.temperature.at(0.0), 10.0, 1e-12);
        auto t = simulate_session(s);
        EXPECT_GT(count_stage(t, Stage::CV), 0u);
    }
    EXPECT_NEAR(lo_start, 0.05, 1e-12);
    EXPECT_NEAR(hi_start, 0.75, 1e-12);
    EXPECT_GT(hi_t - lo_t, 20.0);
}
