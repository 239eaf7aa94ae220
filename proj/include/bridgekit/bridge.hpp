#ifndef BRIDGEKIT_BRIDGE_HPP
#define BRIDGEKIT_BRIDGE_HPP

#include <optional>

#include <Eigen/Core>

#include "bridgekit/schedule.hpp"

namespace bridgekit {

using Vector = Eigen::VectorXd;

// A latent state on the bridge, tagged with its time and pinned endpoint.
struct BridgeState {
    Vector z;
    double t = 0.0;
    Vector z_T;
};

// What a velocity field knows at one (t, z, z_T) point. velocity is always
// present; the rest is populated when the field can provide it. Whenever
// score and noise_mean are both present, score == -noise_mean / gamma_t.
struct FieldOutput {
    Vector velocity;
    std::optional<Vector> score;
    std::optional<Vector> posterior_mean;  // E[z_0 | z_t, z_T]
    std::optional<Vector> noise_mean;      // E[eps | z_t, z_T]
};

struct InterpolantSample {
    Vector zt;
    Vector eps_used;
};

// Forward interpolant draw: z_t = alpha z_0 + beta z_T + gamma * noise.
// Returns the noise actually used so the matching training target couples
// z_t and eps through one draw.
InterpolantSample sample_zt(const Vector& z0, const Vector& zT, double t,
                            const Schedule& schedule, const Vector& noise);

// Flow-matching regression target: alpha_dot z_0 + beta_dot z_T + gamma_dot eps.
Vector velocity_target(const Vector& z0, const Vector& zT, double t,
                       const Schedule& schedule, const Vector& eps);

// Tweedie conversion at the module boundary: a raw conditional score becomes
// a noise posterior mean, u = -gamma * score. Downstream code never divides
// by gamma. Throws when gamma_t == 0.
Vector noise_mean_from_score(const Vector& score, double t, const Schedule& schedule);

// Velocity consistent with the supplied conditional means:
// v = alpha_dot z0_hat + beta_dot z_T + gamma_dot u_hat.
Vector score_to_velocity(const Vector& posterior_mean, const Vector& noise_mean,
                         const Vector& zT, double t, const Schedule& schedule);

// Reverse-SDE drift v - g_t * s (diffusion sqrt(2 g_t) handled by the sampler).
// g_t = 0 recovers the PF-ODE drift. Throws on negative g_t.
Vector reverse_sde_drift(const Vector& velocity, const Vector& score, double g_t);

// Checks the score == -noise_mean / gamma invariant when both are populated.
bool field_output_consistent(const FieldOutput& out, double gamma, double tol = 0.0);

}  // namespace bridgekit

#endif
