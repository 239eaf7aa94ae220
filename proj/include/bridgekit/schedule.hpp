#ifndef BRIDGEKIT_SCHEDULE_HPP
#define BRIDGEKIT_SCHEDULE_HPP

#include <string>

namespace bridgekit {

enum class ScheduleKind {
    LinearBridge,   // alpha = 1-t, beta = t, gamma^2 = gamma_max^2 t(1-t)
    SnrBridge,      // SNR-parameterized weights over a variance-preserving base
    RectifiedFlow,  // alpha = 1-t, beta = t, gamma == 0
};

struct ScheduleWeights {
    double alpha;
    double beta;
    double gamma;
};

struct ScheduleDerivatives {
    double alpha_dot;
    double beta_dot;
    double gamma_dot;
    bool clamped = false;  // t fell in an endpoint clip zone and was clamped
};

// Interpolant weight schedule (alpha_t, beta_t, gamma_t) on the unit horizon,
// with analytic time derivatives. gamma_dot diverges like 1/sqrt(t) at the
// endpoints for the bridge schedules, so derivative evaluations clamp t into
// [clip_eps, 1-clip_eps] and record a warning instead of returning infinities.
class Schedule {
  public:
    static constexpr double kHorizon = 1.0;
    static constexpr double kClipEps = 1e-3;

    static Schedule linear_bridge(double gamma_max);
    static Schedule snr_bridge(double beta_min = 0.1, double beta_max = 20.0);
    static Schedule rectified_flow();
    static Schedule from_kind(const std::string& kind, double gamma_max,
                              double beta_min, double beta_max);

    ScheduleKind kind() const { return kind_; }
    double gamma_max() const { return gamma_max_; }
    double beta_min() const { return beta_min_; }
    double beta_max() const { return beta_max_; }
    std::string kind_name() const;

    // Weights at t in [0, 1]; throws std::domain_error outside.
    ScheduleWeights eval(double t) const;

    // Analytic derivatives; clamps into the clipped interval when gamma_dot
    // would diverge at the requested t.
    ScheduleDerivatives eval_derivatives(double t) const;

    // True when this schedule's gamma_dot diverges at the endpoints.
    bool needs_clip() const;

    // Clamp a time into [clip_eps, 1-clip_eps] when needs_clip().
    double clamp_time(double t) const;

    // Variance-preserving base quantities (SnrBridge only).
    double vp_a(double t) const;
    double vp_sigma2(double t) const;
    double snr(double t) const;

  private:
    Schedule(ScheduleKind kind, double gamma_max, double beta_min, double beta_max);

    double noise_rate(double t) const { return beta_min_ + (beta_max_ - beta_min_) * t; }
    double snr_ratio(double t) const;  // SNR_T / SNR_t

    ScheduleKind kind_;
    double gamma_max_;
    double beta_min_;
    double beta_max_;
    double a_T_;      // cached vp_a(1)
    double snr_T_;    // cached snr(1)
};

}  // namespace bridgekit

#endif
