#ifndef BRIDGEKIT_ANALYSIS_HPP
#define BRIDGEKIT_ANALYSIS_HPP

#include <vector>

#include "bridgekit/domains.hpp"
#include "bridgekit/field.hpp"
#include "bridgekit/sampler.hpp"

namespace bridgekit {

// Empirical regularity estimates of a velocity field along trajectories:
// per-time Lipschitz constants (Jacobian spectral norms, max over probe
// states) and a bound on the solution's second time derivative.
struct LipschitzEstimate {
    std::vector<double> times;   // ascending
    std::vector<double> values;  // L_v(t)
    double integral = 0.0;       // trapezoid of L over [times.front(), times.back()]
    double b_hat = 0.0;          // max ||z''(t)|| over reference trajectories

    // Trapezoid of L over [times.front(), t].
    double integral_up_to(double t) const;
};

// L_v(t) from finite-difference Jacobians (probe radius 1e-4) whose spectral
// norms come from 8 power iterations; probe states are trajectory states at
// the nearest recorded times. B-hat from second divided differences of z(t).
LipschitzEstimate estimate_lipschitz(const VelocityField& field,
                                     const std::vector<Trajectory>& trajectories,
                                     const std::vector<double>& t_grid);

// The four measured terms of the translation-error bound plus the actual
// error. bound_holds compares against the plain sum; the with-slack flag
// multiplies the bound by 1.10 to absorb Lipschitz-estimation error and is
// reported separately.
struct ErrorBudget {
    double encoder_term = 0.0;    // W(T) ||Delta(T)||
    double field_term = 0.0;      // sqrt(W E / delta), or int W ||e|| dt
    double disc_term = 0.0;       // C tau^2
    double decoder_term = 0.0;    // eps_D
    double measured_total = 0.0;  // ||x_target - x_translated||
    double delta = 0.0;
    double encoder_delta = 0.0;   // realized ||Delta(T)||
    double q_realized = 0.0;      // realized int ||e||^2 dt
    bool bound_holds = false;
    bool bound_holds_with_slack = false;

    double bound() const { return encoder_term + field_term + disc_term + decoder_term; }
};

// Injected vector-field perturbation e(t) = m * u, with u a random unit
// direction per trial and m either fixed (deterministic route, field term
// int W ||e|| dt) or m^2 = scale^2 * Exp(1) (stochastic route, Markov term
// sqrt(W E / delta) with E = scale^2).
struct FieldErrorSpec {
    bool enabled = false;
    bool stochastic = false;
    double scale = 0.0;
};

struct BoundConfig {
    SamplerConfig sampler;        // grid and step count; forced to pure Euler
    Schedule schedule = Schedule::linear_bridge(0.1);
    int source_index = 1;
    int target_index = 2;
    double delta = 0.1;
    int trials = 100;
    std::uint64_t seed = 0;
    FieldErrorSpec field_error;
    int probe_trajectories = 8;   // reference runs for constant estimation
};

struct BoundSummary {
    int trials = 0;
    int violations = 0;
    int violations_with_slack = 0;
    double violation_rate = 0.0;
    double w_T = 0.0;        // W(T)
    double c_const = 0.0;    // C
    double w_sq_integral = 0.0;  // int W^2
    double w_integral = 0.0;     // int W
    double b_hat = 0.0;
    double lipschitz_integral = 0.0;
    double mean_measured = 0.0;
    double mean_bound = 0.0;
};

struct BoundReport {
    std::vector<ErrorBudget> budgets;
    BoundSummary summary;
};

// Bound verification on a toy world with the exact oracle bridge field
// (optionally perturbed by a known e(t)). Every bound term is computed from
// constructed or estimated quantities; configurations whose terms cannot be
// measured are refused with an explanatory error.
BoundReport verify_bound(const ToyWorld& world, const EncoderHandle& handle,
                         const ToyDecoder& decoder, const BoundConfig& cfg);

struct ConvergenceResult {
    std::vector<int> n_values;
    std::vector<double> taus;
    std::vector<double> errors;
    double slope = 0.0;
};

// Terminal-error convergence against a fine reference run (default N = 2^14).
// Throws when fewer than 3 points are usable for the log-log fit.
ConvergenceResult convergence_study(const VelocityField& field, const Vector& zT,
                                    const std::vector<int>& n_list,
                                    const SamplerConfig& base_cfg, int n_ref = 16384);

struct AlignmentMetrics {
    double cosine_mean = 0.0;
    double cknna = 0.0;
    int excluded_rows = 0;  // zero vectors skipped by the cosine average
};

// Row-wise mean cosine similarity plus CKNNA@k (centered linear-kernel HSIC
// restricted to mutual k-nearest-neighbor pairs). Rows are samples; the two
// sets must have equal size and k < n. delta_cosim is assembled by the
// caller from two cosine calls.
AlignmentMetrics alignment_metrics(const Eigen::MatrixXd& features_a,
                                   const Eigen::MatrixXd& features_b, int k);

// Energy distance between two ensembles (rows are samples):
// 2 E||X-Y|| - E||X-X'|| - E||Y-Y'||.
double energy_distance(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

}  // namespace bridgekit

#endif
