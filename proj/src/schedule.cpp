#include "bridgekit/schedule.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "bridgekit/runlog.hpp"

namespace bridgekit {

Schedule::Schedule(ScheduleKind kind, double gamma_max, double beta_min, double beta_max)
    : kind_(kind), gamma_max_(gamma_max), beta_min_(beta_min), beta_max_(beta_max) {
    if (kind_ == ScheduleKind::LinearBridge && gamma_max_ < 0.0)
        throw std::invalid_argument("Schedule: gamma_max must be nonnegative");
    if (kind_ == ScheduleKind::SnrBridge && (beta_min_ <= 0.0 || beta_max_ <= 0.0))
        throw std::invalid_argument("Schedule: beta_min and beta_max must be positive");
    a_T_ = vp_a(kHorizon);
    const double s2 = 1.0 - a_T_ * a_T_;
    snr_T_ = a_T_ * a_T_ / s2;
}

Schedule Schedule::linear_bridge(double gamma_max) {
    return Schedule(ScheduleKind::LinearBridge, gamma_max, 0.1, 20.0);
}

Schedule Schedule::snr_bridge(double beta_min, double beta_max) {
    return Schedule(ScheduleKind::SnrBridge, 0.0, beta_min, beta_max);
}

Schedule Schedule::rectified_flow() {
    return Schedule(ScheduleKind::RectifiedFlow, 0.0, 0.1, 20.0);
}

Schedule Schedule::from_kind(const std::string& kind, double gamma_max,
                             double beta_min, double beta_max) {
    if (kind == "linear") return linear_bridge(gamma_max);
    if (kind == "snr") return snr_bridge(beta_min, beta_max);
    if (kind == "rectified_flow" || kind == "rf") return rectified_flow();
    throw std::invalid_argument("Schedule: unknown kind '" + kind +
                                "' (expected linear, snr, or rectified_flow)");
}

std::string Schedule::kind_name() const {
    switch (kind_) {
        case ScheduleKind::LinearBridge: return "linear";
        case ScheduleKind::SnrBridge: return "snr";
        case ScheduleKind::RectifiedFlow: return "rectified_flow";
    }
    return "unknown";
}

double Schedule::vp_a(double t) const {
    // a_t = exp(-1/2 int_0^t beta(s) ds) with linear noise rate.
    const double integral = beta_min_ * t + 0.5 * (beta_max_ - beta_min_) * t * t;
    return std::exp(-0.5 * integral);
}

double Schedule::vp_sigma2(double t) const {
    const double a = vp_a(t);
    return 1.0 - a * a;
}

double Schedule::snr(double t) const {
    const double a = vp_a(t);
    const double s2 = 1.0 - a * a;
    if (s2 <= 0.0) return std::numeric_limits<double>::infinity();
    return a * a / s2;
}

double Schedule::snr_ratio(double t) const {
    // SNR_T / SNR_t = SNR_T * sigma_t^2 / a_t^2; finite at t=0 where it is 0.
    const double a = vp_a(t);
    return snr_T_ * (1.0 - a * a) / (a * a);
}

bool Schedule::needs_clip() const {
    switch (kind_) {
        case ScheduleKind::LinearBridge: return gamma_max_ > 0.0;
        case ScheduleKind::SnrBridge: return true;
        case ScheduleKind::RectifiedFlow: return false;
    }
    return false;
}

double Schedule::clamp_time(double t) const {
    if (!needs_clip()) return t;
    if (t < kClipEps) return kClipEps;
    if (t > kHorizon - kClipEps) return kHorizon - kClipEps;
    return t;
}

ScheduleWeights Schedule::eval(double t) const {
    if (!(t >= 0.0 && t <= kHorizon)) {
        std::ostringstream msg;
        msg << "Schedule::eval: t=" << t << " outside [0, " << kHorizon << "]";
        throw std::domain_error(msg.str());
    }
    switch (kind_) {
        case ScheduleKind::RectifiedFlow:
            return {1.0 - t, t, 0.0};
        case ScheduleKind::LinearBridge:
            return {1.0 - t, t, gamma_max_ * std::sqrt(t * (1.0 - t))};
        case ScheduleKind::SnrBridge: {
            const double a = vp_a(t);
            const double s2 = 1.0 - a * a;
            const double r = snr_ratio(t);
            const double alpha = a * (1.0 - r);
            const double beta = (a / a_T_) * r;
            const double g2 = s2 * (1.0 - r);
            return {alpha, beta, std::sqrt(std::max(0.0, g2))};
        }
    }
    throw std::logic_error("Schedule::eval: unreachable");
}

ScheduleDerivatives Schedule::eval_derivatives(double t) const {
    if (!(t >= 0.0 && t <= kHorizon)) {
        std::ostringstream msg;
        msg << "Schedule::eval_derivatives: t=" << t << " outside [0, " << kHorizon << "]";
        throw std::domain_error(msg.str());
    }
    bool clamped = false;
    if (needs_clip()) {
        const double tc = clamp_time(t);
        if (tc != t) {
            clamped = true;
            std::ostringstream msg;
            msg << "schedule " << kind_name() << ": derivative at t=" << t
                << " clamped to t=" << tc;
            runlog::record(msg.str());
            t = tc;
        }
    }
    switch (kind_) {
        case ScheduleKind::RectifiedFlow:
            return {-1.0, 1.0, 0.0, clamped};
        case ScheduleKind::LinearBridge: {
            double gdot = 0.0;
            if (gamma_max_ > 0.0)
                gdot = gamma_max_ * (1.0 - 2.0 * t) / (2.0 * std::sqrt(t * (1.0 - t)));
            return {-1.0, 1.0, gdot, clamped};
        }
        case ScheduleKind::SnrBridge: {
            const double a = vp_a(t);
            const double s2 = 1.0 - a * a;
            const double rate = noise_rate(t);
            const double a_dot = -0.5 * rate * a;
            const double s2_dot = rate * a * a;
            const double r = snr_ratio(t);
            const double r_dot = snr_T_ * rate / (a * a);
            const double alpha_dot = a_dot * (1.0 - r) - a * r_dot;
            const double beta_dot = (a_dot / a_T_) * r + (a / a_T_) * r_dot;
            const double g2 = s2 * (1.0 - r);
            const double g2_dot = s2_dot * (1.0 - r) - s2 * r_dot;
            const double gamma = std::sqrt(std::max(0.0, g2));
            const double gamma_dot = g2_dot / (2.0 * gamma);
            return {alpha_dot, beta_dot, gamma_dot, clamped};
        }
    }
    throw std::logic_error("Schedule::eval_derivatives: unreachable");
}

}  // namespace bridgekit
