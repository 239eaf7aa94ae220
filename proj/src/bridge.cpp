#include "bridgekit/bridge.hpp"

#include <sstream>
#include <stdexcept>

namespace bridgekit {

namespace {

void check_dims(const Vector& a, const Vector& b, const char* where) {
    if (a.size() != b.size()) {
        std::ostringstream msg;
        msg << where << ": dimension mismatch (" << a.size() << " vs " << b.size() << ")";
        throw std::invalid_argument(msg.str());
    }
}

}  // namespace

InterpolantSample sample_zt(const Vector& z0, const Vector& zT, double t,
                            const Schedule& schedule, const Vector& noise) {
    check_dims(z0, zT, "sample_zt");
    check_dims(z0, noise, "sample_zt");
    const ScheduleWeights w = schedule.eval(t);
    InterpolantSample out;
    out.zt = w.alpha * z0 + w.beta * zT + w.gamma * noise;
    out.eps_used = noise;
    return out;
}

Vector velocity_target(const Vector& z0, const Vector& zT, double t,
                       const Schedule& schedule, const Vector& eps) {
    check_dims(z0, zT, "velocity_target");
    check_dims(z0, eps, "velocity_target");
    const ScheduleDerivatives d = schedule.eval_derivatives(t);
    return d.alpha_dot * z0 + d.beta_dot * zT + d.gamma_dot * eps;
}

Vector noise_mean_from_score(const Vector& score, double t, const Schedule& schedule) {
    const double gamma = schedule.eval(t).gamma;
    if (gamma == 0.0)
        throw std::domain_error(
            "noise_mean_from_score: gamma_t = 0, raw-score conversion is singular");
    return -gamma * score;
}

Vector score_to_velocity(const Vector& posterior_mean, const Vector& noise_mean,
                         const Vector& zT, double t, const Schedule& schedule) {
    check_dims(posterior_mean, zT, "score_to_velocity");
    check_dims(posterior_mean, noise_mean, "score_to_velocity");
    const ScheduleDerivatives d = schedule.eval_derivatives(t);
    return d.alpha_dot * posterior_mean + d.beta_dot * zT + d.gamma_dot * noise_mean;
}

Vector reverse_sde_drift(const Vector& velocity, const Vector& score, double g_t) {
    if (g_t < 0.0) throw std::domain_error("reverse_sde_drift: g_t must be nonnegative");
    if (g_t == 0.0) return velocity;
    check_dims(velocity, score, "reverse_sde_drift");
    return velocity - g_t * score;
}

bool field_output_consistent(const FieldOutput& out, double gamma, double tol) {
    if (!out.score || !out.noise_mean) return true;
    if (gamma == 0.0) return false;  // score must not be populated at gamma = 0
    return ((*out.score) + (*out.noise_mean) / gamma).lpNorm<Eigen::Infinity>() <= tol;
}

}  // namespace bridgekit
