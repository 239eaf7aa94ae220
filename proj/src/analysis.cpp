#include "bridgekit/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "bridgekit/rng.hpp"

namespace bridgekit {

namespace {

constexpr double kProbeRadius = 1e-4;
constexpr int kPowerIterations = 8;
constexpr double kEstimatorSlack = 1.10;

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i)
        acc += 0.5 * (y[i] + y[i + 1]) * (x[i + 1] - x[i]);
    return acc;
}

// Finite-difference Jacobian spectral norm at (t, z, zT).
double jacobian_spectral_norm(const VelocityField& field, double t, const Vector& z,
                              const Vector& zT, Rng& rng) {
    const Eigen::Index d = z.size();
    Eigen::MatrixXd jac(d, d);
    for (Eigen::Index j = 0; j < d; ++j) {
        Vector zp = z, zm = z;
        zp[j] += kProbeRadius;
        zm[j] -= kProbeRadius;
        const Vector vp = field.eval(t, zp, zT).velocity;
        const Vector vm = field.eval(t, zm, zT).velocity;
        jac.col(j) = (vp - vm) / (2.0 * kProbeRadius);
    }
    if (!jac.allFinite())
        throw std::runtime_error("estimate_lipschitz: non-finite probe derivatives");
    if (d == 1) return std::abs(jac(0, 0));
    Vector u = rng.unit_vector(d);
    double norm = 0.0;
    for (int it = 0; it < kPowerIterations; ++it) {
        Vector w = jac.transpose() * (jac * u);
        norm = std::sqrt(w.norm());
        if (w.norm() == 0.0) return 0.0;
        u = w / w.norm();
    }
    return norm;
}

}  // namespace

double LipschitzEstimate::integral_up_to(double t) const {
    if (times.size() < 2) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < times.size(); ++i) {
        if (times[i + 1] <= t) {
            acc += 0.5 * (values[i] + values[i + 1]) * (times[i + 1] - times[i]);
        } else if (times[i] < t) {
            const double frac = (t - times[i]) / (times[i + 1] - times[i]);
            const double v_t = values[i] + frac * (values[i + 1] - values[i]);
            acc += 0.5 * (values[i] + v_t) * (t - times[i]);
            break;
        } else {
            break;
        }
    }
    return acc;
}

LipschitzEstimate estimate_lipschitz(const VelocityField& field,
                                     const std::vector<Trajectory>& trajectories,
                                     const std::vector<double>& t_grid) {
    if (trajectories.empty())
        throw std::invalid_argument("estimate_lipschitz: no probe trajectories");
    LipschitzEstimate est;
    est.times = t_grid;
    std::sort(est.times.begin(), est.times.end());
    est.values.resize(est.times.size(), 0.0);
    Rng rng(0xA11CE, 17);

    for (std::size_t ti = 0; ti < est.times.size(); ++ti) {
        const double t = est.times[ti];
        double lmax = 0.0;
        for (const Trajectory& traj : trajectories) {
            // nearest recorded state to this probe time
            std::size_t best = 0;
            double bestdist = std::abs(traj.times[0] - t);
            for (std::size_t k = 1; k < traj.times.size(); ++k) {
                const double dd = std::abs(traj.times[k] - t);
                if (dd < bestdist) {
                    bestdist = dd;
                    best = k;
                }
            }
            const Vector& zT = traj.states.front();
            lmax = std::max(lmax, jacobian_spectral_norm(field, t, traj.states[best], zT, rng));
        }
        est.values[ti] = lmax;
    }
    est.integral = trapezoid(est.times, est.values);

    // second divided differences of z(t) along the reference trajectories
    double bmax = 0.0;
    for (const Trajectory& traj : trajectories) {
        for (std::size_t k = 1; k + 1 < traj.states.size(); ++k) {
            const double dt1 = traj.times[k] - traj.times[k - 1];
            const double dt2 = traj.times[k + 1] - traj.times[k];
            if (dt1 == 0.0 || dt2 == 0.0) continue;
            const Vector second =
                2.0 * (traj.states[k + 1] / (dt2 * (dt1 + dt2)) - traj.states[k] / (dt1 * dt2) +
                       traj.states[k - 1] / (dt1 * (dt1 + dt2)));
            bmax = std::max(bmax, second.norm());
        }
    }
    est.b_hat = bmax;
    return est;
}

BoundReport verify_bound(const ToyWorld& world, const EncoderHandle& handle,
                         const ToyDecoder& decoder, const BoundConfig& cfg) {
    if (cfg.trials < 1) throw std::invalid_argument("verify_bound: trials must be >= 1");
    if (cfg.delta <= 0.0 || cfg.delta >= 1.0)
        throw std::invalid_argument("verify_bound: delta must be in (0, 1)");
    if (world.noise(cfg.target_index) > 0.0)
        throw std::invalid_argument(
            "verify_bound: refused - target-domain appearance noise makes the paired ground "
            "truth a random realization, so the measured total is not the bound's error "
            "term; use a noiseless target domain");
    if (cfg.field_error.enabled && cfg.field_error.scale < 0.0)
        throw std::invalid_argument("verify_bound: field error scale must be >= 0");

    // The bound covers the plain Euler scheme.
    SamplerConfig sampler = cfg.sampler;
    sampler.analytic_final_step = false;
    sampler.g = 0.0;

    auto base_field =
        std::make_shared<WorldBridgeField>(world, cfg.target_index, cfg.schedule);

    // --- constants from probe trajectories --------------------------------
    std::vector<Trajectory> probes;
    {
        auto pairs = sample_pair(world, cfg.probe_trajectories,
                                 cfg.seed ^ 0x9E3779B97F4A7C15ULL);
        Rng enc_rng(cfg.seed, 101);
        for (const auto& pr : pairs) {
            const Vector& x_src = cfg.source_index == 1 ? pr.x1 : pr.x2;
            const Vector y = encode(handle, world, x_src, cfg.source_index, enc_rng);
            probes.push_back(reverse_ode(*base_field, y, sampler));
        }
    }
    std::vector<double> probe_grid;
    {
        const auto grid = sampler.make_grid();
        // subsample the step grid for Jacobian probes; full resolution for W
        const std::size_t stride = std::max<std::size_t>(1, grid.size() / 64);
        for (std::size_t i = 0; i < grid.size(); i += stride) probe_grid.push_back(grid[i]);
        if (probe_grid.back() != grid.back()) probe_grid.push_back(grid.back());
    }
    const LipschitzEstimate lip = estimate_lipschitz(*base_field, probes, probe_grid);

    const double l_decoder = decoder.lipschitz();
    auto w_of = [&](double t) { return l_decoder * std::exp(lip.integral_up_to(t)); };

    // integrals of W and W^2 over [0, T] on the ascending probe grid
    std::vector<double> w_vals(lip.times.size()), w2_vals(lip.times.size());
    for (std::size_t i = 0; i < lip.times.size(); ++i) {
        w_vals[i] = w_of(lip.times[i]);
        w2_vals[i] = w_vals[i] * w_vals[i];
    }
    const double w_T = l_decoder * std::exp(lip.integral);
    const double w_int = trapezoid(lip.times, w_vals);
    const double w2_int = trapezoid(lip.times, w2_vals);

    // C = (B/2) sum_i exp(sum_{j>i} tau_j L(t_j)) on the descending step grid
    const std::vector<double> grid = sampler.make_grid();
    const std::size_t n_steps = grid.size() - 1;
    const double tau = Schedule::kHorizon / static_cast<double>(n_steps);
    double c_const = 0.0;
    {
        std::vector<double> l_at(n_steps);
        for (std::size_t j = 0; j < n_steps; ++j) {
            // interpolate L at grid[j] from the estimate
            const double t = grid[j];
            const auto& ts = lip.times;
            std::size_t lo = 0;
            while (lo + 1 < ts.size() && ts[lo + 1] < t) ++lo;
            double l = lip.values[lo];
            if (lo + 1 < ts.size() && ts[lo + 1] > ts[lo]) {
                const double frac = (t - ts[lo]) / (ts[lo + 1] - ts[lo]);
                l = lip.values[lo] + std::clamp(frac, 0.0, 1.0) *
                                         (lip.values[lo + 1] - lip.values[lo]);
            }
            l_at[j] = l;
        }
        // sum_i exp(sum_{j=i+1}^{N-1} tau_j L(t_j)), accumulated from i = N-1 down
        double inner = 0.0;
        double total = 0.0;
        for (std::size_t i = n_steps; i-- > 0;) {
            total += std::exp(inner);
            inner += (grid[i] - grid[i + 1]) * l_at[i];
        }
        c_const = 0.5 * lip.b_hat * total;
    }

    // --- trials ------------------------------------------------------------
    BoundReport report;
    report.budgets.reserve(static_cast<std::size_t>(cfg.trials));
    const auto pairs = sample_pair(world, cfg.trials, cfg.seed);
    int violations = 0, violations_slack = 0;
    double sum_measured = 0.0, sum_bound = 0.0;

    for (int trial = 0; trial < cfg.trials; ++trial) {
        Rng trial_rng(cfg.seed, 1000 + static_cast<std::uint64_t>(trial));
        const PairedSample& pr = pairs[static_cast<std::size_t>(trial)];

        // injected field error e(t) = m * u
        double q_realized = 0.0;
        std::shared_ptr<const VelocityField> field = base_field;
        double field_term = 0.0;
        if (cfg.field_error.enabled) {
            double magnitude = cfg.field_error.scale;
            if (cfg.field_error.stochastic) {
                // m^2 = scale^2 * Exp(1), so E int ||e||^2 = scale^2
                const double expo = -std::log(1.0 - trial_rng.uniform());
                magnitude = cfg.field_error.scale * std::sqrt(expo);
            }
            const Vector dir = trial_rng.unit_vector(world.latent_dim);
            const Vector e_vec = magnitude * dir;
            q_realized = magnitude * magnitude;  // int over [0,1] of ||e||^2
            field = std::make_shared<PerturbedField>(
                base_field, [e_vec](double) { return e_vec; });
            if (cfg.field_error.stochastic) {
                const double e_expected = cfg.field_error.scale * cfg.field_error.scale;
                field_term = std::sqrt(w2_int * e_expected / cfg.delta);
            } else {
                field_term = w_int * magnitude;  // deterministic: int W ||e|| dt
            }
        }

        TranslationOutcome outcome =
            translate_pipeline(world, *field, handle, pr, cfg.source_index,
                               cfg.target_index, decoder, sampler, trial_rng);
        const double delta_T = (outcome.y_estimate - pr.y).norm();

        ErrorBudget budget;
        budget.encoder_term = w_T * delta_T;
        budget.field_term = field_term;
        budget.disc_term = c_const * tau * tau;
        budget.decoder_term = decoder.reconstruction_error();
        budget.measured_total = (outcome.x_translated - outcome.x_target_truth).norm();
        budget.delta = cfg.delta;
        budget.encoder_delta = delta_T;
        budget.q_realized = q_realized;
        budget.bound_holds = budget.measured_total <= budget.bound();
        budget.bound_holds_with_slack =
            budget.measured_total <= kEstimatorSlack * budget.bound();
        if (!budget.bound_holds) ++violations;
        if (!budget.bound_holds_with_slack) ++violations_slack;
        sum_measured += budget.measured_total;
        sum_bound += budget.bound();
        report.budgets.push_back(budget);
    }

    report.summary.trials = cfg.trials;
    report.summary.violations = violations;
    report.summary.violations_with_slack = violations_slack;
    report.summary.violation_rate = static_cast<double>(violations) / cfg.trials;
    report.summary.w_T = w_T;
    report.summary.c_const = c_const;
    report.summary.w_sq_integral = w2_int;
    report.summary.w_integral = w_int;
    report.summary.b_hat = lip.b_hat;
    report.summary.lipschitz_integral = lip.integral;
    report.summary.mean_measured = sum_measured / cfg.trials;
    report.summary.mean_bound = sum_bound / cfg.trials;
    return report;
}

ConvergenceResult convergence_study(const VelocityField& field, const Vector& zT,
                                    const std::vector<int>& n_list,
                                    const SamplerConfig& base_cfg, int n_ref) {
    // the study measures the plain Euler scheme, the one the error analysis
    // covers; the analytic last step would mask it (and collapses entirely on
    // Dirac-conditional fields)
    SamplerConfig ref_cfg = base_cfg;
    ref_cfg.analytic_final_step = false;
    ref_cfg.n_steps = n_ref;
    ref_cfg.grid.clear();
    const Vector ref = reverse_ode(field, zT, ref_cfg).terminal();

    ConvergenceResult result;
    for (int n : n_list) {
        if (n >= n_ref) continue;
        SamplerConfig cfg = ref_cfg;
        cfg.n_steps = n;
        cfg.grid.clear();
        const Vector z = reverse_ode(field, zT, cfg).terminal();
        const double err = (z - ref).norm();
        if (!std::isfinite(err) || err <= 0.0) continue;
        result.n_values.push_back(n);
        result.taus.push_back(Schedule::kHorizon / n);
        result.errors.push_back(err);
    }
    if (result.errors.size() < 3)
        throw std::runtime_error("convergence_study: fewer than 3 usable points for the fit");

    // least-squares slope of log(err) on log(tau)
    const std::size_t m = result.errors.size();
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double x = std::log(result.taus[i]);
        const double y = std::log(result.errors[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    result.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    return result;
}

AlignmentMetrics alignment_metrics(const Eigen::MatrixXd& features_a,
                                   const Eigen::MatrixXd& features_b, int k) {
    const Eigen::Index n = features_a.rows();
    if (features_b.rows() != n)
        throw std::invalid_argument("alignment_metrics: set sizes differ");
    if (k < 1 || k >= n)
        throw std::invalid_argument("alignment_metrics: need 1 <= k < set size");

    AlignmentMetrics out;

    // row-wise cosine, zero vectors excluded
    double cos_sum = 0.0;
    int cos_count = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double na = features_a.row(i).norm();
        const double nb = features_b.row(i).norm();
        if (na == 0.0 || nb == 0.0) {
            ++out.excluded_rows;
            continue;
        }
        cos_sum += features_a.row(i).dot(features_b.row(i)) / (na * nb);
        ++cos_count;
    }
    out.cosine_mean = cos_count > 0 ? cos_sum / cos_count : 0.0;

    // linear kernels, double-centered
    const Eigen::MatrixXd K = features_a * features_a.transpose();
    const Eigen::MatrixXd L = features_b * features_b.transpose();
    auto center = [n](const Eigen::MatrixXd& M) {
        const Eigen::VectorXd row_mean = M.rowwise().mean();
        const double total_mean = M.mean();
        Eigen::MatrixXd C = M;
        C.colwise() -= row_mean;
        C.rowwise() -= row_mean.transpose();
        C.array() += total_mean;
        return C;
    };
    const Eigen::MatrixXd Kc = center(K);
    const Eigen::MatrixXd Lc = center(L);

    // top-k neighbor masks from the raw kernels, diagonal excluded
    auto topk_mask = [n, k](const Eigen::MatrixXd& M) {
        Eigen::MatrixXi mask = Eigen::MatrixXi::Zero(n, n);
        std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) {
            idx.clear();
            for (Eigen::Index j = 0; j < n; ++j)
                if (j != i) idx.push_back(j);
            std::partial_sort(idx.begin(), idx.begin() + k, idx.end(),
                              [&](Eigen::Index a, Eigen::Index b) {
                                  return M(i, a) > M(i, b);
                              });
            for (int j = 0; j < k; ++j) mask(i, idx[static_cast<std::size_t>(j)]) = 1;
        }
        return mask;
    };
    const Eigen::MatrixXi mask_k = topk_mask(K);
    const Eigen::MatrixXi mask_l = topk_mask(L);

    auto hsic_masked = [n](const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           const Eigen::MatrixXi& mask) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                if (i != j && mask(i, j)) acc += A(i, j) * B(i, j);
        const double denom = static_cast<double>(n - 1) * static_cast<double>(n - 1);
        return acc / denom;
    };
    const Eigen::MatrixXi mask_kl = (mask_k.array() * mask_l.array()).matrix();
    const double hsic_kl = hsic_masked(Kc, Lc, mask_kl);
    const double hsic_kk = hsic_masked(Kc, Kc, mask_k);
    const double hsic_ll = hsic_masked(Lc, Lc, mask_l);
    if (hsic_kk <= 0.0 || hsic_ll <= 0.0)
        throw std::runtime_error("alignment_metrics: degenerate kernel (zero self-HSIC)");
    out.cknna = hsic_kl / std::sqrt(hsic_kk * hsic_ll);
    return out;
}

double energy_distance(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    const Eigen::Index nx = x.rows(), ny = y.rows();
    if (nx < 1 || ny < 1) throw std::invalid_argument("energy_distance: empty ensemble");
    double dxy = 0.0;
    for (Eigen::Index i = 0; i < nx; ++i)
        for (Eigen::Index j = 0; j < ny; ++j)
            dxy += (x.row(i) - y.row(j)).norm();
    dxy /= static_cast<double>(nx) * static_cast<double>(ny);
    auto self_dist = [](const Eigen::MatrixXd& m) {
        const Eigen::Index n = m.rows();
        if (n < 2) return 0.0;
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i + 1; j < n; ++j)
                acc += (m.row(i) - m.row(j)).norm();
        return 2.0 * acc / (static_cast<double>(n) * static_cast<double>(n));
    };
    return 2.0 * dxy - self_dist(x) - self_dist(y);
}

}  // namespace bridgekit
