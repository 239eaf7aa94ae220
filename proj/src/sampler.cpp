#include "bridgekit/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "bridgekit/rng.hpp"

namespace bridgekit {

namespace {

constexpr double kHorizon = Schedule::kHorizon;

void validate_grid(const std::vector<double>& grid) {
    if (grid.size() < 2) throw std::invalid_argument("sampler: grid needs at least 2 points");
    for (std::size_t k = 0; k + 1 < grid.size(); ++k)
        if (!(grid[k] > grid[k + 1]))
            throw std::invalid_argument("sampler: grid must be strictly decreasing");
}

double clamp_eval_time(double t, double eps) {
    if (eps <= 0.0) return t;
    if (t < eps) return eps;
    if (t > kHorizon - eps) return kHorizon - eps;
    return t;
}

[[noreturn]] void throw_nonfinite(const char* where, std::size_t step, double t) {
    std::ostringstream msg;
    msg << where << ": non-finite state at step " << step << " (t=" << t << ")";
    throw std::runtime_error(msg.str());
}

// One reverse step shared by reverse_ode/reverse_sde/translate. Returns true
// when the trajectory finalized analytically (posterior-mean jump).
struct StepResult {
    Vector z;
    Vector drift;
    bool frozen = false;
};

StepResult advance(const VelocityField& field, const Vector& z, const Vector& zT,
                   double t, double t_next, const SamplerConfig& cfg) {
    const double te = clamp_eval_time(t, cfg.clip_eps);
    const FieldOutput out = field.eval(te, z, zT);
    StepResult r;
    if (cfg.analytic_final_step && cfg.clip_eps > 0.0 && t_next < cfg.clip_eps &&
        field.provides_posterior_mean() && out.posterior_mean) {
        r.z = *out.posterior_mean;
        r.drift = out.velocity;
        r.frozen = true;
        return r;
    }
    r.z = z + (t_next - t) * out.velocity;
    r.drift = out.velocity;
    return r;
}

}  // namespace

std::vector<double> SamplerConfig::make_grid() const {
    if (!grid.empty()) {
        validate_grid(grid);
        return grid;
    }
    if (n_steps < 1) throw std::invalid_argument("sampler: n_steps must be >= 1");
    std::vector<double> g(static_cast<std::size_t>(n_steps) + 1);
    for (int k = 0; k <= n_steps; ++k)
        g[static_cast<std::size_t>(k)] =
            static_cast<double>(n_steps - k) * kHorizon / static_cast<double>(n_steps);
    return g;
}

std::vector<double> SamplerConfig::forward_grid() const {
    std::vector<double> g = make_grid();
    std::reverse(g.begin(), g.end());
    return g;
}

double mixed_drift_eta(double t, double t_end) {
    return t > t_end ? 1.0 - t : 0.0;
}

Trajectory reverse_ode(const VelocityField& field, const Vector& zT,
                       const SamplerConfig& cfg) {
    if (cfg.g != 0.0)
        throw std::invalid_argument("reverse_ode: g must be 0 (use reverse_sde)");
    return reverse_sde(field, zT, cfg, 0);
}

Trajectory reverse_sde(const VelocityField& field, const Vector& zT,
                       const SamplerConfig& cfg, std::uint64_t trajectory_index) {
    if (cfg.g < 0.0) throw std::domain_error("reverse_sde: g must be nonnegative");
    if (zT.size() != field.dim())
        throw std::invalid_argument("reverse_sde: endpoint dimension mismatch");
    const bool stochastic = cfg.g > 0.0;
    if (stochastic && !field.provides_score())
        throw std::invalid_argument("reverse_sde: field provides no score and g > 0");

    const std::vector<double> grid = cfg.make_grid();
    const std::size_t n = grid.size() - 1;
    Rng rng(cfg.seed, trajectory_index);

    Trajectory traj;
    traj.times = grid;
    traj.states.resize(grid.size());
    traj.drifts.resize(n);
    traj.states[0] = zT;

    Vector z = zT;
    bool frozen = false;
    const double noise_scale = stochastic ? std::sqrt(2.0 * cfg.g) : 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (frozen) {
            traj.states[k + 1] = z;
            traj.drifts[k] = Vector::Zero(field.dim());
            continue;
        }
        const double t = grid[k];
        const double tn = grid[k + 1];
        if (!stochastic) {
            StepResult r = advance(field, z, zT, t, tn, cfg);
            z = std::move(r.z);
            frozen = r.frozen;
            traj.drifts[k] = std::move(r.drift);
        } else {
            const double te = clamp_eval_time(t, cfg.clip_eps);
            const FieldOutput out = field.eval(te, z, zT);
            if (cfg.analytic_final_step && cfg.clip_eps > 0.0 && tn < cfg.clip_eps &&
                field.provides_posterior_mean() && out.posterior_mean) {
                z = *out.posterior_mean;
                frozen = true;
                traj.drifts[k] = out.velocity;
            } else {
                if (!out.score)
                    throw std::invalid_argument("reverse_sde: field returned no score");
                const Vector drift = reverse_sde_drift(out.velocity, *out.score, cfg.g);
                z += (tn - t) * drift;
                z += (noise_scale * std::sqrt(std::abs(tn - t))) *
                     rng.normal_vector(field.dim());
                traj.drifts[k] = drift;
            }
        }
        if (!z.allFinite()) throw_nonfinite("reverse_sde", k, t);
        traj.states[k + 1] = z;
    }
    return traj;
}

Vector invert(const VelocityField& field, const Vector& z0, const SamplerConfig& cfg,
              const Vector& zT_cond) {
    if (cfg.g != 0.0) throw std::invalid_argument("invert: g must be 0");
    if (z0.size() != field.dim())
        throw std::invalid_argument("invert: state dimension mismatch");
    if (field.needs_endpoint() && zT_cond.size() == 0)
        throw std::invalid_argument(
            "invert: field is endpoint-conditioned; supply a fixed conditioning vector");
    const std::vector<double> grid = cfg.forward_grid();
    Vector z = z0;
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        const double t = grid[k];
        const double tn = grid[k + 1];
        const double te = clamp_eval_time(t, cfg.clip_eps);
        z += (tn - t) * field.eval(te, z, zT_cond).velocity;
        if (!z.allFinite()) throw_nonfinite("invert", k, t);
    }
    return z;
}

TranslateResult translate(const VelocityField* source_field,
                          const VelocityField& target_field, const Vector& y,
                          const SamplerConfig& cfg) {
    if (cfg.g != 0.0)
        throw std::invalid_argument("translate: g must be 0 (Algorithm uses the PF-ODE)");
    if (cfg.t_end < 0.0 || cfg.t_end > 1.0)
        throw std::invalid_argument("translate: t_end must be in [0, 1]");
    if (y.size() != target_field.dim())
        throw std::invalid_argument("translate: endpoint dimension mismatch");

    TranslateResult result;
    if (source_field == nullptr) {
        result.target = reverse_ode(target_field, y, cfg);
        result.output = result.target.terminal();
        return result;
    }
    if (source_field->dim() != target_field.dim())
        throw std::invalid_argument("translate: source/target dimension mismatch");

    const std::vector<double> grid = cfg.make_grid();
    const std::size_t n = grid.size() - 1;
    Trajectory tgt, src, mix;
    for (Trajectory* tr : {&tgt, &src, &mix}) {
        tr->times = grid;
        tr->states.resize(grid.size());
        tr->drifts.resize(n);
        tr->states[0] = y;
    }

    Vector z_i = y, z_j = y, z_m = y;
    bool frozen_i = false, frozen_j = false, frozen_m = false;
    const Vector zero = Vector::Zero(target_field.dim());
    for (std::size_t k = 0; k < n; ++k) {
        const double t = grid[k];
        const double tn = grid[k + 1];
        const double te = clamp_eval_time(t, cfg.clip_eps);
        const double eta = mixed_drift_eta(t, cfg.t_end);

        Vector d_i = zero, d_j = zero;
        const bool stepped_i = !frozen_i;
        if (!frozen_i) {
            StepResult r = advance(target_field, z_i, y, t, tn, cfg);
            d_i = r.drift;
            z_i = std::move(r.z);
            frozen_i = r.frozen;
        } else if (!frozen_m && eta != 0.0) {
            d_i = target_field.eval(te, z_i, y).velocity;
        }
        const bool stepped_j = !frozen_j;
        if (!frozen_j) {
            StepResult r = advance(*source_field, z_j, y, t, tn, cfg);
            d_j = r.drift;
            z_j = std::move(r.z);
            frozen_j = r.frozen;
        } else if (!frozen_m && eta != 0.0) {
            d_j = source_field->eval(te, z_j, y).velocity;
        }
        if (!frozen_m) {
            if (eta == 0.0) {
                // Mixed trajectory is governed purely by the target field here,
                // so it follows the exact same stepping policy at its own state.
                StepResult r = advance(target_field, z_m, y, t, tn, cfg);
                z_m = std::move(r.z);
                frozen_m = r.frozen;
                mix.drifts[k] = std::move(r.drift);
            } else {
                const bool fin_window = cfg.analytic_final_step && cfg.clip_eps > 0.0 &&
                                        tn < cfg.clip_eps;
                if (fin_window && target_field.provides_posterior_mean() &&
                    source_field->provides_posterior_mean()) {
                    // finalize with the eta-mixture of the two posterior means,
                    // the t -> 0 limit of the mixed drift
                    const FieldOutput oi = target_field.eval(te, z_m, y);
                    const FieldOutput oj = source_field->eval(te, z_m, y);
                    mix.drifts[k] = oi.velocity + eta * (oj.velocity - oi.velocity);
                    z_m = *oi.posterior_mean +
                          eta * (*oj.posterior_mean - *oi.posterior_mean);
                    frozen_m = true;
                } else {
                    const Vector d_m = d_i + eta * (d_j - d_i);
                    z_m += (tn - t) * d_m;
                    mix.drifts[k] = d_m;
                }
            }
        } else {
            mix.drifts[k] = zero;
        }
        if (!z_i.allFinite() || !z_j.allFinite() || !z_m.allFinite())
            throw_nonfinite("translate", k, t);
        tgt.states[k + 1] = z_i;
        src.states[k + 1] = z_j;
        mix.states[k + 1] = z_m;
        tgt.drifts[k] = stepped_i ? d_i : zero;
        src.drifts[k] = stepped_j ? d_j : zero;
    }
    result.output = z_m;
    result.target = std::move(tgt);
    result.source = std::move(src);
    result.mixed = std::move(mix);
    return result;
}

}  // namespace bridgekit
