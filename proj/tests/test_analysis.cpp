#include <doctest.h>

#include <cmath>

#include "bridgekit/analysis.hpp"
#include "bridgekit/gaussian.hpp"

using namespace bridgekit;

namespace {

Vector vec1(double x) { return Vector::Constant(1, x); }

ToyWorld bound_world() {
    ToyWorld w;
    w.latent_dim = 1;
    w.map1 = DomainMap::identity(1);
    w.map2 = DomainMap::affine(Eigen::MatrixXd::Constant(1, 1, 1.3),
                               Vector::Constant(1, 0.4));
    w.prior = LatentPrior::gaussian(Vector::Zero(1), Vector::Ones(1));
    return w;
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("lipschitz estimate recovers the spectral norm of a linear field") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
    a(0, 0) = 1.0;
    a(1, 1) = 3.0;
    const CallableField field(2, [a](double, const Vector& z) { return Vector(a * z); });
    SamplerConfig cfg;
    cfg.n_steps = 64;
    cfg.clip_eps = 0.0;
    Vector zT(2);
    zT << 0.5, -0.5;
    std::vector<Trajectory> trajs{reverse_ode(field, zT, cfg)};
    const LipschitzEstimate est =
        estimate_lipschitz(field, trajs, {0.1, 0.3, 0.5, 0.7, 0.9});
    for (double v : est.values) CHECK(v == doctest::Approx(3.0).epsilon(1e-3));
    CHECK(est.integral == doctest::Approx(3.0 * 0.8).epsilon(1e-3));

    const CallableField zero(2, [](double, const Vector&) { return Vector::Zero(2); });
    std::vector<Trajectory> ztrajs{reverse_ode(zero, zT, cfg)};
    const LipschitzEstimate zest = estimate_lipschitz(zero, ztrajs, {0.2, 0.5, 0.8});
    for (double v : zest.values) CHECK(v <= 1e-12);
}

TEST_CASE("1d oracle lipschitz matches the closed-form derivative") {
    // d v / d z = (alpha_dot alpha s0^2 + gamma_dot gamma) / (alpha^2 s0^2 + gamma^2)
    const Schedule s = Schedule::linear_bridge(0.1);
    const GaussianBridgeField field(GaussianDomain::isotropic(vec1(0.0), 1.0), s);
    SamplerConfig cfg;
    cfg.n_steps = 256;
    std::vector<Trajectory> trajs{reverse_ode(field, vec1(0.3), cfg)};
    for (double t : {0.2, 0.5, 0.8}) {
        const LipschitzEstimate est = estimate_lipschitz(field, trajs, {t});
        const ScheduleWeights w = s.eval(t);
        const ScheduleDerivatives d = s.eval_derivatives(t);
        const double S = w.alpha * w.alpha + w.gamma * w.gamma;
        const double closed =
            std::abs((d.alpha_dot * w.alpha + d.gamma_dot * w.gamma) / S);
        CHECK(est.values[0] == doctest::Approx(closed).epsilon(1e-4));
    }
}

TEST_CASE("b_hat picks up the curvature of a quadratic-in-time path") {
    // field v(t, z) = 2t gives z(t) = z_T - (1 - t^2), so z'' = 2
    const CallableField field(1, [](double t, const Vector&) {
        return Vector(Vector::Constant(1, 2.0 * t));
    });
    SamplerConfig cfg;
    cfg.n_steps = 128;
    cfg.clip_eps = 0.0;
    std::vector<Trajectory> trajs{reverse_ode(field, vec1(0.0), cfg)};
    const LipschitzEstimate est = estimate_lipschitz(field, trajs, {0.5});
    CHECK(est.b_hat == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("deterministic bound configuration never violates") {
    BoundConfig bc;
    bc.sampler.n_steps = 1024;
    bc.trials = 100;
    bc.seed = 5;
    const BoundReport report =
        verify_bound(bound_world(), EncoderHandle{}, ToyDecoder::identity(1), bc);
    CHECK(report.summary.violations == 0);
    CHECK(report.summary.violations_with_slack == 0);
    // all terms except discretization were constructed to vanish
    for (const ErrorBudget& b : report.budgets) {
        CHECK(b.encoder_term <= 1e-10);
        CHECK(b.field_term == 0.0);
        CHECK(b.decoder_term == 0.0);
        CHECK(b.disc_term > 0.0);
        CHECK(b.measured_total <= b.disc_term);
    }
}

TEST_CASE("encoder-error sweep grows linearly and stays inside the budget") {
    auto run = [&](double delta_scale) {
        BoundConfig bc;
        bc.sampler.n_steps = 1024;
        bc.trials = 50;
        bc.seed = 11;
        EncoderHandle h;
        h.mode = EncoderMode::Perturbed;
        h.delta_scale = delta_scale;
        return verify_bound(bound_world(), h, ToyDecoder::identity(1), bc);
    };
    double prev_measured = 0.0;
    for (double ds : {0.05, 0.1, 0.2}) {
        const BoundReport r = run(ds);
        CHECK(r.summary.violations == 0);
        CHECK(r.summary.mean_measured >= prev_measured);
        // encoder term uses the exact realized Delta(T)
        for (const ErrorBudget& b : r.budgets)
            CHECK(b.encoder_delta == doctest::Approx(ds).epsilon(1e-9));
        CHECK(r.summary.mean_measured <= r.summary.mean_bound);
        prev_measured = r.summary.mean_measured;
    }
}

TEST_CASE("decoder term covers a biased decoder") {
    BoundConfig bc;
    bc.sampler.n_steps = 1024;
    bc.trials = 50;
    bc.seed = 13;
    const ToyDecoder decoder = ToyDecoder::biased(1, 0.05, 3);
    const BoundReport r = verify_bound(bound_world(), EncoderHandle{}, decoder, bc);
    CHECK(r.summary.violations == 0);
    for (const ErrorBudget& b : r.budgets) CHECK(b.decoder_term == 0.05);
}

TEST_CASE("injected deterministic field error uses the int W ||e|| route") {
    BoundConfig bc;
    bc.sampler.n_steps = 1024;
    bc.trials = 50;
    bc.seed = 17;
    bc.field_error.enabled = true;
    bc.field_error.stochastic = false;
    bc.field_error.scale = 0.05;
    const BoundReport r =
        verify_bound(bound_world(), EncoderHandle{}, ToyDecoder::identity(1), bc);
    CHECK(r.summary.violations == 0);
    for (const ErrorBudget& b : r.budgets) {
        CHECK(b.q_realized == doctest::Approx(0.05 * 0.05));
        CHECK(b.field_term == doctest::Approx(r.summary.w_integral * 0.05).epsilon(1e-9));
        CHECK(b.measured_total <= b.bound());
    }
}

TEST_CASE("stochastic field error obeys the Markov guarantee") {
    BoundConfig bc;
    bc.sampler.n_steps = 512;
    bc.trials = 200;
    bc.seed = 19;
    bc.delta = 0.1;
    bc.field_error.enabled = true;
    bc.field_error.stochastic = true;
    bc.field_error.scale = 0.1;
    const BoundReport r =
        verify_bound(bound_world(), EncoderHandle{}, ToyDecoder::identity(1), bc);
    const double se = std::sqrt(0.1 * 0.9 / bc.trials);
    CHECK(r.summary.violation_rate <= bc.delta + 3.0 * se);
    // realized Q varies across trials with mean ~ scale^2
    double mean_q = 0.0;
    for (const ErrorBudget& b : r.budgets) mean_q += b.q_realized;
    mean_q /= r.budgets.size();
    CHECK(std::abs(mean_q - 0.01) <= 0.003);
}

TEST_CASE("target-domain appearance noise is refused") {
    ToyWorld w = bound_world();
    w.appearance_noise2 = 0.1;
    BoundConfig bc;
    CHECK_THROWS_WITH_AS(verify_bound(w, EncoderHandle{}, ToyDecoder::identity(1), bc),
                         doctest::Contains("refused"), std::invalid_argument);
}

TEST_CASE("gronwall amplification: endpoint perturbations stay inside exp(int L)") {
    const Schedule s = Schedule::linear_bridge(0.1);
    const ToyWorld w = bound_world();
    const WorldBridgeField field(w, 2, s);
    SamplerConfig cfg;
    cfg.n_steps = 512;
    cfg.analytic_final_step = false;

    std::vector<Trajectory> probes;
    Rng rng(23, 0);
    for (int i = 0; i < 4; ++i)
        probes.push_back(reverse_ode(field, vec1(rng.normal()), cfg));
    std::vector<double> grid;
    for (int i = 0; i <= 32; ++i) grid.push_back(i / 32.0);
    const LipschitzEstimate est = estimate_lipschitz(field, probes, grid);
    const double amp = std::exp(est.integral);

    int ok = 0, total = 0;
    for (double delta : {0.05, 0.1, 0.2}) {
        for (int i = 0; i < 67; ++i) {
            const double y = rng.normal();
            const double dir = rng.normal() > 0 ? 1.0 : -1.0;
            const Vector out1 = reverse_ode(field, vec1(y), cfg).terminal();
            const Vector out2 = reverse_ode(field, vec1(y + dir * delta), cfg).terminal();
            const double dev = (out1 - out2).norm();
            if (dev <= amp * delta * 1.10) ++ok;
            ++total;
        }
    }
    CHECK(static_cast<double>(ok) / total >= 0.99);
}

TEST_CASE("convergence study: slope, closed form, and halving ratios") {
    const CallableField lin(1, [](double, const Vector& z) { return Vector(-z); });
    SamplerConfig cfg;
    cfg.n_steps = 64;
    cfg.clip_eps = 0.0;
    const std::vector<int> ns{64, 128, 256, 512, 1024, 2048, 4096};
    const ConvergenceResult res = convergence_study(lin, vec1(1.0), ns, cfg);
    CHECK(std::abs(res.slope - 1.0) <= 0.15);
    // asymptotic regime: away from the reference run, whose own bias skews the
    // last doubling toward (2^k - 1)/(2^{k-1} - 1)
    for (std::size_t i = 0; i + 1 < res.errors.size(); ++i) {
        if (res.n_values[i + 1] > 16384 / 8) continue;
        const double ratio = res.errors[i] / res.errors[i + 1];
        CHECK(ratio >= 1.7);
        CHECK(ratio <= 2.3);
    }
    // per-N error matches |e - (1+tau)^N| |z_T| because the reference run is
    // itself Euler at N_ref: error_N = |(1+tau)^N - (1+tau_ref)^{N_ref}|
    for (std::size_t i = 0; i < res.errors.size(); ++i) {
        const int n = res.n_values[i];
        const double tau = 1.0 / n;
        double pw = 1.0;
        for (int k = 0; k < n; ++k) pw *= 1.0 + tau;
        double pw_ref = 1.0;
        const int n_ref = 16384;
        const double tau_ref = 1.0 / n_ref;
        for (int k = 0; k < n_ref; ++k) pw_ref *= 1.0 + tau_ref;
        CHECK(std::abs(res.errors[i] - std::abs(pw - pw_ref)) <= 1e-12);
    }

    // degenerate fit errors out
    CHECK_THROWS_AS(convergence_study(lin, vec1(1.0), {64, 128}, cfg),
                    std::runtime_error);
}

TEST_CASE("alignment metrics: self, rotation, and the delta-cosim ceiling") {
    Rng rng(29, 0);
    const int n = 64, d = 8;
    Eigen::MatrixXd a(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) a(i, j) = rng.normal();

    const AlignmentMetrics self = alignment_metrics(a, a, 10);
    CHECK(self.cosine_mean == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(self.cknna == doctest::Approx(1.0).epsilon(1e-12));

    // common orthogonal rotation: cosines drop, kernels unchanged
    Eigen::MatrixXd q = Eigen::MatrixXd::Random(d, d);
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(q);
    const Eigen::MatrixXd rot = qr.householderQ();
    const Eigen::MatrixXd b = a * rot;
    const AlignmentMetrics rm = alignment_metrics(a, b, 10);
    CHECK(rm.cosine_mean < 0.9);
    CHECK(rm.cknna == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(std::abs(rm.cknna) <= 1.0 + 1e-12);

    // delta_cosim when gen == gt equals 1 - cosim(src, gt)
    const Eigen::MatrixXd gt = a;
    const Eigen::MatrixXd gen = gt;
    const Eigen::MatrixXd src = b;
    const double d_cosim = alignment_metrics(gen, gt, 10).cosine_mean -
                           alignment_metrics(src, gt, 10).cosine_mean;
    const double x = alignment_metrics(src, gt, 10).cosine_mean;
    CHECK(d_cosim == doctest::Approx(1.0 - x).epsilon(1e-12));

    // zero rows are excluded and reported
    Eigen::MatrixXd with_zero = a;
    with_zero.row(3).setZero();
    const AlignmentMetrics ze = alignment_metrics(with_zero, a, 10);
    CHECK(ze.excluded_rows == 1);

    CHECK_THROWS_AS(alignment_metrics(a, a, n), std::invalid_argument);
    CHECK_THROWS_AS(alignment_metrics(a, Eigen::MatrixXd::Zero(n + 1, d), 10),
                    std::invalid_argument);
}

TEST_CASE("cknna stays in [-1, 1] across random feature pairs") {
    Rng rng(37, 0);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 24 + static_cast<int>(rng.uniform(0.0, 40.0));
        const int da = 2 + static_cast<int>(rng.uniform(0.0, 10.0));
        const int db = 2 + static_cast<int>(rng.uniform(0.0, 10.0));
        Eigen::MatrixXd a(n, da), b(n, db);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < da; ++j) a(i, j) = rng.normal();
            for (int j = 0; j < db; ++j) b(i, j) = rng.normal();
        }
        const AlignmentMetrics m = alignment_metrics(a, b, 5);
        CHECK(m.cknna <= 1.0 + 1e-12);
        CHECK(m.cknna >= -1.0 - 1e-12);
        CHECK(alignment_metrics(a, a, 5).cknna == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("energy distance separates distributions and vanishes on equals") {
    Rng rng(31, 0);
    const int n = 400;
    Eigen::MatrixXd x(n, 2), y(n, 2), z(n, 2);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < 2; ++j) {
            x(i, j) = rng.normal();
            y(i, j) = rng.normal();
            z(i, j) = rng.normal() + 3.0;
        }
    CHECK(std::abs(energy_distance(x, y)) <= 0.05);
    CHECK(energy_distance(x, z) > 1.0);
}

}  // TEST_SUITE
