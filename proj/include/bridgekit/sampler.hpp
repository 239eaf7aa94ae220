#ifndef BRIDGEKIT_SAMPLER_HPP
#define BRIDGEKIT_SAMPLER_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "bridgekit/field.hpp"

namespace bridgekit {

// Reverse-time integrator configuration. The default grid is uniform from
// T = 1 down to 0 with t_k = (N - k) * T / N; velocity evaluation times are
// clamped into [clip_eps, 1 - clip_eps] (clip_eps = 0 disables clamping, for
// hand-specified fields with no schedule singularity).
struct SamplerConfig {
    int n_steps = 256;
    std::vector<double> grid;    // optional custom strictly-decreasing grid T..0
    double guidance_s = 1.0;     // CFG scale, applied by guided fields
    double cfg_t_min = 0.0;      // CFG window
    double cfg_t_max = 1.0;
    double t_end = 1.0;          // mixed-drift cutoff; eta_t = (1-t) 1[t > t_end]
    double g = 0.0;              // SDE diffusion coefficient; 0 = PF-ODE
    std::uint64_t seed = 0;
    double clip_eps = 1e-3;
    // When the grid drops below clip_eps and the field provides a posterior
    // mean, finish with one analytic step instead of Euler through the
    // diverging gamma_dot zone. Disabled for pure-Euler analysis runs.
    bool analytic_final_step = true;

    std::vector<double> make_grid() const;   // resolves grid or builds uniform
    std::vector<double> forward_grid() const;  // ascending 0..T, for inversion
};

struct Trajectory {
    std::vector<double> times;            // grid, first entry is T
    std::vector<Vector> states;           // states[k] at times[k]; states[0] = z_T
    std::vector<Vector> drifts;           // drift used on step k (size N)

    const Vector& terminal() const { return states.back(); }
    const Vector& endpoint() const { return states.front(); }
    BridgeState at(std::size_t k) const { return {states[k], times[k], endpoint()}; }
};

// Euler PF-ODE solved backward in time from the pinned endpoint z_T.
Trajectory reverse_ode(const VelocityField& field, const Vector& zT,
                       const SamplerConfig& cfg);

// Euler-Maruyama on drift v - g s with diffusion sqrt(2g); requires a field
// that provides scores when g > 0, and degenerates to reverse_ode at g = 0.
// noise is drawn from stream (seed, trajectory_index) so ensembles are
// independent of scheduling order.
Trajectory reverse_sde(const VelocityField& field, const Vector& zT,
                       const SamplerConfig& cfg, std::uint64_t trajectory_index = 0);

// PF-ODE inversion: forward Euler of the same field from t = 0 to T.
// Endpoint-conditioned fields require an explicit fixed conditioning vector.
Vector invert(const VelocityField& field, const Vector& z0, const SamplerConfig& cfg,
              const Vector& zT_cond = Vector());

// eta_t = (1 - t) * 1[t > t_end].
double mixed_drift_eta(double t, double t_end);

struct TranslateResult {
    Vector output;                       // final latent (mixed when source given)
    Trajectory target;
    std::optional<Trajectory> source;
    std::optional<Trajectory> mixed;
};

// Conditional translation: runs the target reverse ODE from the shared
// endpoint y and, when a source field is given, the source reverse ODE plus
// the mixed trajectory d_mixed = d_tgt + eta_t (d_src - d_tgt). With no
// source field (or t_end >= 1) the output equals plain reverse_ode on the
// target field.
TranslateResult translate(const VelocityField* source_field,
                          const VelocityField& target_field, const Vector& y,
                          const SamplerConfig& cfg);

}  // namespace bridgekit

#endif
