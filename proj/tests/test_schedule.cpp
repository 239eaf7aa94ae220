#include <doctest.h>

#include <cmath>

#include "bridgekit/runlog.hpp"
#include "bridgekit/schedule.hpp"

using namespace bridgekit;

namespace {

// central finite difference of the weight triple, the independent oracle for
// the analytic derivatives
ScheduleDerivatives fd_derivatives(const Schedule& s, double t, double h = 1e-6) {
    const ScheduleWeights p = s.eval(t + h);
    const ScheduleWeights m = s.eval(t - h);
    return {(p.alpha - m.alpha) / (2 * h), (p.beta - m.beta) / (2 * h),
            (p.gamma - m.gamma) / (2 * h), false};
}

}  // namespace

TEST_SUITE("schedule") {

TEST_CASE("boundary identities hold to 1e-12 for all kinds") {
    const Schedule schedules[] = {Schedule::linear_bridge(0.1), Schedule::snr_bridge(),
                                  Schedule::rectified_flow()};
    for (const Schedule& s : schedules) {
        const ScheduleWeights w0 = s.eval(0.0);
        CHECK(std::abs(w0.alpha - 1.0) <= 1e-12);
        CHECK(std::abs(w0.beta) <= 1e-12);
        CHECK(std::abs(w0.gamma) <= 1e-12);
        const ScheduleWeights w1 = s.eval(1.0);
        CHECK(std::abs(w1.gamma) <= 1e-12);
        if (s.kind() != ScheduleKind::RectifiedFlow) {
            CHECK(std::abs(w1.alpha) <= 1e-12);
            CHECK(std::abs(w1.beta - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("linear bridge midpoint weights") {
    const Schedule s = Schedule::linear_bridge(0.1);
    const ScheduleWeights w = s.eval(0.5);
    CHECK(w.alpha == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(w.beta == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(w.gamma == doctest::Approx(0.05).epsilon(1e-14));
}

TEST_CASE("snr bridge endpoint from the variance-preserving integral") {
    // independent evaluation: a_1 = exp(-1/2 (beta_min + (beta_max-beta_min)/2)),
    // SNR_T / SNR_T = 1, so alpha = gamma = 0 and beta = 1
    const Schedule s = Schedule::snr_bridge(0.1, 20.0);
    const double a1 = std::exp(-0.5 * (0.1 + 0.5 * (20.0 - 0.1)));
    CHECK(s.vp_a(1.0) == doctest::Approx(a1).epsilon(1e-14));
    const ScheduleWeights w = s.eval(1.0);
    CHECK(std::abs(w.alpha) <= 1e-12);
    CHECK(w.beta == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(w.gamma) <= 1e-12);
}

TEST_CASE("derivative examples") {
    const Schedule lb = Schedule::linear_bridge(0.1);
    const ScheduleDerivatives d05 = lb.eval_derivatives(0.5);
    CHECK(d05.alpha_dot == doctest::Approx(-1.0));
    CHECK(d05.beta_dot == doctest::Approx(1.0));
    CHECK(d05.gamma_dot == doctest::Approx(0.0));

    const Schedule rf = Schedule::rectified_flow();
    for (double t : {0.0, 0.25, 0.77, 1.0})
        CHECK(rf.eval_derivatives(t).gamma_dot == 0.0);

    // gamma_dot(0.25) = 0.1 (1-2t) / (2 sqrt(t(1-t))), checked against the
    // finite-difference oracle
    const ScheduleDerivatives d25 = lb.eval_derivatives(0.25);
    CHECK(d25.gamma_dot == doctest::Approx(0.057735026918962581).epsilon(1e-12));
    CHECK(d25.gamma_dot == doctest::Approx(fd_derivatives(lb, 0.25).gamma_dot).epsilon(1e-8));
}

TEST_CASE("analytic derivatives match finite differences on a 1000-point grid") {
    const Schedule schedules[] = {Schedule::linear_bridge(0.1), Schedule::snr_bridge(),
                                  Schedule::rectified_flow()};
    const double eps = Schedule::kClipEps;
    for (const Schedule& s : schedules) {
        for (int i = 0; i < 1000; ++i) {
            // interior grid: central differences need t +- h inside [0, 1]
            const double t = 2e-6 + (1.0 - 4e-6) * i / 999.0;
            if (s.needs_clip() && (t < eps + 1e-5 || t > 1.0 - eps - 1e-5)) continue;
            const ScheduleDerivatives a = s.eval_derivatives(t);
            const ScheduleDerivatives f = fd_derivatives(s, t);
            CHECK(std::abs(a.alpha_dot - f.alpha_dot) <= 1e-5);
            CHECK(std::abs(a.beta_dot - f.beta_dot) <= 1e-5);
            CHECK(std::abs(a.gamma_dot - f.gamma_dot) <= 1e-5);
        }
    }
}

TEST_CASE("snr ratio is strictly decreasing on (0,1)") {
    const Schedule s = Schedule::snr_bridge();
    double prev = s.snr(1e-4);
    for (int i = 1; i <= 200; ++i) {
        const double t = 1e-4 + (1.0 - 2e-4) * i / 200.0;
        const double cur = s.snr(t);
        CHECK(cur < prev);
        prev = cur;
    }
}

TEST_CASE("linear bridge gamma is nonnegative everywhere") {
    const Schedule s = Schedule::linear_bridge(0.1);
    for (int i = 0; i <= 500; ++i)
        CHECK(s.eval(i / 500.0).gamma >= 0.0);
    const Schedule snr = Schedule::snr_bridge();
    for (int i = 0; i <= 500; ++i)
        CHECK(snr.eval(i / 500.0).gamma >= 0.0);
}

TEST_CASE("t outside [0,1] is a domain error") {
    const Schedule s = Schedule::linear_bridge(0.1);
    CHECK_THROWS_AS(s.eval(-0.01), std::domain_error);
    CHECK_THROWS_AS(s.eval(1.01), std::domain_error);
    CHECK_THROWS_AS(s.eval_derivatives(1.5), std::domain_error);
}

TEST_CASE("derivatives in the clip zone clamp and record a warning") {
    runlog::reset();
    const Schedule s = Schedule::linear_bridge(0.1);
    const ScheduleDerivatives d = s.eval_derivatives(1e-5);
    CHECK(d.clamped);
    CHECK(std::isfinite(d.gamma_dot));
    CHECK(d.gamma_dot == doctest::Approx(s.eval_derivatives(Schedule::kClipEps).gamma_dot));
    CHECK(runlog::warning_count() >= 1);
    runlog::reset();
    // rectified flow never clips
    CHECK_FALSE(Schedule::rectified_flow().eval_derivatives(0.0).clamped);
    CHECK(runlog::warning_count() == 0);
}

}  // TEST_SUITE
