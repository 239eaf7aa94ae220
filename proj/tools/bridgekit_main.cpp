#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>
#include <json.hpp>

#include "bridgekit/analysis.hpp"
#include "bridgekit/config.hpp"
#include "bridgekit/csv.hpp"
#include "bridgekit/domains.hpp"
#include "bridgekit/encoder.hpp"
#include "bridgekit/gaussian.hpp"
#include "bridgekit/model.hpp"
#include "bridgekit/runlog.hpp"
#include "bridgekit/sampler.hpp"

namespace fs = std::filesystem;
using namespace bridgekit;

namespace {

bool g_strict = true;

// Every run echoes its resolved config and drains warnings into run.log.
void finish_run(const ExperimentConfig& cfg, const fs::path& outdir) {
    fs::create_directories(outdir);
    cfg.write((outdir / "config.toml").string());
    const auto warnings = runlog::drain();
    std::ofstream log(outdir / "run.log");
    log << "warnings=" << warnings.size() << "\n";
    for (const auto& w : warnings) log << w << "\n";
}

int invariant_failure(const std::string& what) {
    std::cerr << "invariant violation: " << what << "\n";
    return g_strict ? 1 : 0;
}

void append_vector(std::vector<double>& row, const Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) row.push_back(v[i]);
}

std::vector<std::string> vector_header(const std::string& prefix, Eigen::Index dim) {
    std::vector<std::string> names;
    for (Eigen::Index i = 0; i < dim; ++i)
        names.push_back(prefix + std::to_string(i));
    return names;
}

std::unique_ptr<VelocityField> build_field(const ExperimentConfig& cfg,
                                           const ToyWorld& world) {
    if (cfg.model.oracle)
        return std::make_unique<WorldBridgeField>(world, cfg.analysis.target_index,
                                                  cfg.schedule.build());
    if (cfg.model.checkpoint.empty())
        throw std::runtime_error("config: model.oracle = false requires model.checkpoint");
    auto net = std::make_unique<VelocityNet>(VelocityNet::load(cfg.model.checkpoint));
    // leak-free ownership of both net and field
    struct OwningField : VelocityField {
        std::unique_ptr<VelocityNet> net;
        std::unique_ptr<TrainedField> field;
        Eigen::Index dim() const override { return field->dim(); }
        bool provides_posterior_mean() const override {
            return field->provides_posterior_mean();
        }
        bool provides_score() const override { return field->provides_score(); }
        FieldOutput eval(double t, const Vector& z, const Vector& zT) const override {
            return field->eval(t, z, zT);
        }
    };
    auto owning = std::make_unique<OwningField>();
    owning->field = std::make_unique<TrainedField>(
        *net, Vector::Zero(net->cond_dim()), cfg.sampler.guidance_s, cfg.sampler.cfg_t_min,
        cfg.sampler.cfg_t_max);
    owning->net = std::move(net);
    return owning;
}

int cmd_schedule_dump(const std::string& kind, double gamma_max, double beta_min,
                      double beta_max, int points, const std::string& out) {
    const Schedule sched = Schedule::from_kind(kind, gamma_max, beta_min, beta_max);
    std::ofstream file;
    std::ostream* os = &std::cout;
    if (!out.empty()) {
        file.open(out);
        if (!file) throw std::runtime_error("cannot open " + out);
        os = &file;
    }
    csv::Writer w(*os, {"t", "alpha", "beta", "gamma", "alpha_dot", "beta_dot", "gamma_dot"});
    for (int i = 0; i < points; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(points - 1);
        const ScheduleWeights sw = sched.eval(t);
        const ScheduleDerivatives sd = sched.eval_derivatives(t);
        w.row({t, sw.alpha, sw.beta, sw.gamma, sd.alpha_dot, sd.beta_dot, sd.gamma_dot});
    }
    // boundary identities are hard invariants
    const ScheduleWeights w0 = sched.eval(0.0);
    const ScheduleWeights w1 = sched.eval(1.0);
    const bool rf = sched.kind() == ScheduleKind::RectifiedFlow;
    const double err =
        std::max({std::abs(w0.alpha - 1.0), std::abs(w0.beta), std::abs(w0.gamma),
                  rf ? 0.0 : std::abs(w1.alpha), rf ? 0.0 : std::abs(w1.beta - 1.0),
                  std::abs(w1.gamma)});
    if (err > 1e-12) return invariant_failure("schedule boundary identities off by " +
                                              csv::format(err));
    for (const auto& msg : runlog::drain()) std::cerr << "warning: " << msg << "\n";
    return 0;
}

int cmd_train(const ExperimentConfig& cfg) {
    const fs::path outdir(cfg.output_dir);
    fs::create_directories(outdir);
    const ToyWorld world = cfg.world.build();
    const Schedule sched = cfg.schedule.build();
    const int target = cfg.analysis.target_index;
    const int source = cfg.analysis.source_index;
    const int cond_dim = cfg.model.cond_dim;
    if (cond_dim != 0 && cond_dim != world.latent_dim)
        throw std::runtime_error(
            "config: model.cond_dim must be 0 or latent_dim (condition = source sample)");

    VelocityNet net(world.latent_dim, cond_dim, cfg.model.hidden_width,
                    cfg.model.parameterization == "posterior_mean"
                        ? Parameterization::PosteriorMean
                        : Parameterization::Velocity,
                    sched, cfg.seed);
    DomainSampler sampler = [&world, target, source, cond_dim](Rng& rng) {
        TrainSample s;
        const Vector y = world.prior.sample(rng);
        Vector x_t = world.map(target).apply(y);
        if (world.noise(target) > 0.0)
            x_t += world.noise(target) * rng.normal_vector(x_t.size());
        s.z0 = x_t;
        s.zT = y;
        if (cond_dim > 0) {
            Vector x_s = world.map(source).apply(y);
            if (world.noise(source) > 0.0)
                x_s += world.noise(source) * rng.normal_vector(x_s.size());
            s.cond = x_s;
        }
        return s;
    };
    TrainConfig tc;
    tc.batch = cfg.model.batch;
    tc.steps = cfg.model.train_steps;
    tc.learn_rate = cfg.model.learn_rate;
    tc.cond_dropout = cfg.model.cond_dropout;
    tc.seed = cfg.seed;
    const TrainTrace trace = train(net, sampler, tc);

    net.save((outdir / "model.ckpt").string(), cfg.seed);
    csv::Writer w((outdir / "loss.csv").string(), {"step", "train_loss", "validation_loss"});
    for (std::size_t i = 0; i < trace.train_loss.size(); ++i) {
        const double vl = i < trace.validation_loss.size() ? trace.validation_loss[i]
                                                           : trace.validation_loss.back();
        w.row({static_cast<double>(i), trace.train_loss[i], vl});
    }
    finish_run(cfg, outdir);
    std::cout << "final train loss " << csv::format(trace.train_loss.back()) << "\n";
    return 0;
}

int cmd_sample(const ExperimentConfig& cfg, int n_trajectories, bool dump_trajectories) {
    const fs::path outdir(cfg.output_dir);
    fs::create_directories(outdir);
    const ToyWorld world = cfg.world.build();
    const SamplerConfig scfg = cfg.sampler.build(cfg.seed);
    auto field = build_field(cfg, world);

    const auto pairs = sample_pair(world, n_trajectories, cfg.seed);
    Rng enc_rng(cfg.seed, 3);
    const EncoderHandle oracle_handle;

    csv::Writer terminal((outdir / "samples.csv").string(),
                         [&] {
                             std::vector<std::string> h{"trajectory"};
                             auto ys = vector_header("y", world.latent_dim);
                             auto zs = vector_header("z0_", world.latent_dim);
                             h.insert(h.end(), ys.begin(), ys.end());
                             h.insert(h.end(), zs.begin(), zs.end());
                             return h;
                         }());
    std::unique_ptr<csv::Writer> traj_writer;
    if (dump_trajectories) {
        std::vector<std::string> h{"trajectory", "step", "t"};
        auto zs = vector_header("z", world.latent_dim);
        h.insert(h.end(), zs.begin(), zs.end());
        traj_writer =
            std::make_unique<csv::Writer>((outdir / "trajectories.csv").string(), h);
    }
    for (int i = 0; i < n_trajectories; ++i) {
        const Vector y = encode(oracle_handle, world, pairs[i].x1, 1, enc_rng);
        const Trajectory traj =
            scfg.g > 0.0 ? reverse_sde(*field, y, scfg, static_cast<std::uint64_t>(i))
                         : reverse_ode(*field, y, scfg);
        std::vector<double> row{static_cast<double>(i)};
        append_vector(row, y);
        append_vector(row, traj.terminal());
        terminal.row(row);
        if (traj_writer)
            for (std::size_t k = 0; k < traj.states.size(); ++k) {
                std::vector<double> trow{static_cast<double>(i), static_cast<double>(k),
                                         traj.times[k]};
                append_vector(trow, traj.states[k]);
                traj_writer->row(trow);
            }
    }
    finish_run(cfg, outdir);
    return 0;
}

int cmd_translate(const ExperimentConfig& cfg, int n) {
    const fs::path outdir(cfg.output_dir);
    fs::create_directories(outdir);
    const ToyWorld world = cfg.world.build();
    const SamplerConfig scfg = cfg.sampler.build(cfg.seed);
    auto field = build_field(cfg, world);
    const ToyDecoder decoder =
        cfg.analysis.decoder_bias > 0.0
            ? ToyDecoder::biased(world.latent_dim, cfg.analysis.decoder_bias, cfg.seed)
            : ToyDecoder::identity(world.latent_dim);
    const EncoderHandle handle;

    const auto pairs = sample_pair(world, n, cfg.seed);
    // t_end < 1 switches on the mixed source/target drift; the source bridge
    // is the oracle field of the source domain, conditioned on the shared y
    std::unique_ptr<WorldBridgeField> source_field;
    if (cfg.sampler.t_end < 1.0)
        source_field = std::make_unique<WorldBridgeField>(
            world, cfg.analysis.source_index, cfg.schedule.build());
    std::vector<std::string> h{"trial"};
    for (const auto& p : {"y", "y_est", "x_out", "x_true"}) {
        auto v = vector_header(std::string(p) + "_", world.latent_dim);
        h.insert(h.end(), v.begin(), v.end());
    }
    h.push_back("error");
    csv::Writer w((outdir / "translate.csv").string(), h);
    Rng rng(cfg.seed, 5);
    for (int i = 0; i < n; ++i) {
        const TranslationOutcome out = translate_pipeline(
            world, *field, handle, pairs[i], cfg.analysis.source_index,
            cfg.analysis.target_index, decoder, scfg, rng, source_field.get());
        std::vector<double> row{static_cast<double>(i)};
        append_vector(row, pairs[i].y);
        append_vector(row, out.y_estimate);
        append_vector(row, out.x_translated);
        append_vector(row, out.x_target_truth);
        row.push_back((out.x_translated - out.x_target_truth).norm());
        w.row(row);
    }
    finish_run(cfg, outdir);
    return 0;
}

int cmd_invert(const ExperimentConfig& cfg, int n) {
    const fs::path outdir(cfg.output_dir);
    fs::create_directories(outdir);
    if (cfg.world.prior != "gaussian")
        throw std::runtime_error(
            "invert: the encoder-decoder round-trip demo needs a gaussian world prior");
    const ToyWorld world = cfg.world.build();
    const Schedule sched = cfg.schedule.build();
    SamplerConfig scfg = cfg.sampler.build(cfg.seed);

    // Marginal (endpoint-free) field with independent endpoints: z0 from the
    // target-domain observation marginal, z_T standard normal.
    const int target = cfg.analysis.target_index;
    const DomainMap& map = world.map(target);
    const Vector mu_y = [&] {
        Vector m(world.latent_dim);
        for (int i = 0; i < world.latent_dim; ++i) m[i] = world.prior.means[0][i];
        return m;
    }();
    if (map.warp_amp != 0.0)
        throw std::runtime_error("invert: demo requires an affine (no-warp) domain map");
    const Vector mu0 = map.apply(mu_y);
    const double scale2 = map.lipschitz() * map.lipschitz();
    const double var0 = scale2 * cfg.world.prior_var +
                        world.noise(target) * world.noise(target);
    GaussianMarginalField field(mu0, var0, Vector::Zero(world.latent_dim), 1.0, sched);

    Rng rng(cfg.seed, 13);
    std::vector<std::string> h{"trial"};
    for (const auto& p : {"z0", "zT_inv", "z0_back"}) {
        auto v = vector_header(std::string(p) + "_", world.latent_dim);
        h.insert(h.end(), v.begin(), v.end());
    }
    h.push_back("roundtrip_error");
    csv::Writer w((outdir / "invert.csv").string(), h);
    for (int i = 0; i < n; ++i) {
        Vector z0 = mu0 + std::sqrt(var0) * rng.normal_vector(world.latent_dim);
        const Vector zT_inv = invert(field, z0, scfg);
        const Vector back = reverse_ode(field, zT_inv, scfg).terminal();
        std::vector<double> row{static_cast<double>(i)};
        append_vector(row, z0);
        append_vector(row, zT_inv);
        append_vector(row, back);
        row.push_back((back - z0).norm());
        w.row(row);
    }
    finish_run(cfg, outdir);
    return 0;
}

int cmd_domains_dump(const ExperimentConfig& cfg, int n) {
    const fs::path outdir(cfg.output_dir);
    fs::create_directories(outdir);
    const ToyWorld world = cfg.world.build();
    const auto pairs = sample_pair(world, n, cfg.seed);
    std::vector<std::string> h;
    for (const auto& p : {"y", "x1", "x2"}) {
        auto v = vector_header(std::string(p) + "_", world.latent_dim);
        h.insert(h.end(), v.begin(), v.end());
    }
    csv::Writer w((outdir / "pairs.csv").string(), h);
    for (const auto& pr : pairs) {
        std::vector<double> row;
        append_vector(row, pr.y);
        append_vector(row, pr.x1);
        append_vector(row, pr.x2);
        w.row(row);
    }
    finish_run(cfg, outdir);
    return 0;
}

int cmd_verify_bound(const ExperimentConfig& cfg) {
    const fs::path outdir(cfg.output_dir);
    fs::create_directories(outdir);
    if (!cfg.model.oracle)
        throw std::runtime_error(
            "verify-bound: refused - the field-approximation term is only measurable for "
            "the oracle field with an injected perturbation of known magnitude; estimating "
            "it for trained fields is out of scope");
    const ToyWorld world = cfg.world.build();
    BoundConfig bc;
    bc.sampler = cfg.sampler.build(cfg.seed);
    bc.schedule = cfg.schedule.build();
    bc.source_index = cfg.analysis.source_index;
    bc.target_index = cfg.analysis.target_index;
    bc.delta = cfg.analysis.delta;
    bc.trials = cfg.analysis.trials;
    bc.seed = cfg.seed;
    bc.field_error.enabled = cfg.analysis.inject_field_error;
    bc.field_error.stochastic = cfg.analysis.stochastic_field_error;
    bc.field_error.scale = cfg.analysis.field_error_scale;
    bc.probe_trajectories = cfg.analysis.probe_trajectories;
    EncoderHandle handle;
    if (cfg.analysis.field_error_scale == 0.0 && cfg.analysis.inject_field_error)
        throw std::runtime_error("verify-bound: injected field error has zero scale");

    // encoder perturbation comes through the analysis config of the world spec
    const ToyDecoder decoder =
        cfg.analysis.decoder_bias > 0.0
            ? ToyDecoder::biased(world.latent_dim, cfg.analysis.decoder_bias, cfg.seed)
            : ToyDecoder::identity(world.latent_dim);

    const BoundReport report = verify_bound(world, handle, decoder, bc);

    csv::Writer w((outdir / "bound_trials.csv").string(),
                  {"trial", "encoder_term", "field_term", "disc_term", "decoder_term",
                   "bound", "measured", "delta_T", "q_realized", "holds", "holds_slack"});
    for (std::size_t i = 0; i < report.budgets.size(); ++i) {
        const ErrorBudget& b = report.budgets[i];
        w.row({static_cast<double>(i), b.encoder_term, b.field_term, b.disc_term,
               b.decoder_term, b.bound(), b.measured_total, b.encoder_delta, b.q_realized,
               b.bound_holds ? 1.0 : 0.0, b.bound_holds_with_slack ? 1.0 : 0.0});
    }
    nlohmann::json summary;
    summary["trials"] = report.summary.trials;
    summary["violations"] = report.summary.violations;
    summary["violations_with_slack"] = report.summary.violations_with_slack;
    summary["violation_rate"] = report.summary.violation_rate;
    summary["W_T"] = report.summary.w_T;
    summary["C"] = report.summary.c_const;
    summary["W_sq_integral"] = report.summary.w_sq_integral;
    summary["W_integral"] = report.summary.w_integral;
    summary["B_hat"] = report.summary.b_hat;
    summary["lipschitz_integral"] = report.summary.lipschitz_integral;
    summary["mean_measured"] = report.summary.mean_measured;
    summary["mean_bound"] = report.summary.mean_bound;
    summary["delta"] = cfg.analysis.delta;
    std::ofstream js(outdir / "bound_summary.json");
    js << summary.dump(2) << "\n";
    finish_run(cfg, outdir);
    std::cout << summary.dump(2) << "\n";

    if (!cfg.analysis.inject_field_error || !cfg.analysis.stochastic_field_error) {
        // deterministic budgets admit no violations; any one is a defect
        if (report.summary.violations_with_slack > 0)
            return invariant_failure("deterministic bound violated in " +
                                     std::to_string(report.summary.violations_with_slack) +
                                     " trials");
    } else {
        const double n = report.summary.trials;
        const double se = std::sqrt(cfg.analysis.delta * (1.0 - cfg.analysis.delta) / n);
        if (report.summary.violation_rate > cfg.analysis.delta + 3.0 * se)
            return invariant_failure("violation rate exceeds delta + 3 SE");
    }
    return 0;
}

int cmd_convergence(const ExperimentConfig& cfg) {
    const fs::path outdir(cfg.output_dir);
    fs::create_directories(outdir);
    const ToyWorld world = cfg.world.build();
    const Schedule sched = cfg.schedule.build();
    if (cfg.world.prior != "gaussian")
        throw std::runtime_error("convergence: the study needs a gaussian world prior");
    const int target = cfg.analysis.target_index;
    if (world.map(target).warp_amp != 0.0)
        throw std::runtime_error("convergence: the study needs an affine (no-warp) map");
    // Gaussian bridge whose prior is the target-domain observation marginal.
    // A noiseless world's own conditional field is Dirac with a linear mean
    // path, on which Euler is superconvergent and the order unmeasurable.
    const double lip = world.map(target).lipschitz();
    const double var0 = lip * lip * cfg.world.prior_var +
                        world.noise(target) * world.noise(target);
    const Vector mu_y = world.prior.means[0];
    GaussianBridgeField field(
        GaussianDomain::isotropic(world.map(target).apply(mu_y), var0), sched);
    const auto pairs = sample_pair(world, 1, cfg.seed);
    Rng rng(cfg.seed, 3);
    const EncoderHandle handle;
    const Vector y = encode(handle, world, pairs[0].x1, 1, rng);

    SamplerConfig scfg = cfg.sampler.build(cfg.seed);
    const ConvergenceResult res =
        convergence_study(field, y, cfg.analysis.n_list, scfg);
    csv::Writer w((outdir / "convergence.csv").string(), {"n", "tau", "error"});
    for (std::size_t i = 0; i < res.errors.size(); ++i)
        w.row({static_cast<double>(res.n_values[i]), res.taus[i], res.errors[i]});
    nlohmann::json summary;
    summary["slope"] = res.slope;
    summary["points"] = res.errors.size();
    std::ofstream js(outdir / "convergence_summary.json");
    js << summary.dump(2) << "\n";
    std::cout << summary.dump(2) << "\n";
    finish_run(cfg, outdir);
    return 0;
}

int cmd_metrics(const std::string& path_a, const std::string& path_b, int k,
                const std::string& out) {
    const Eigen::MatrixXd a = csv::read_matrix(path_a);
    const Eigen::MatrixXd b = csv::read_matrix(path_b);
    const AlignmentMetrics m = alignment_metrics(a, b, k);
    nlohmann::json j;
    j["cosine_mean"] = m.cosine_mean;
    j["cknna"] = m.cknna;
    j["k"] = k;
    j["excluded_rows"] = m.excluded_rows;
    if (!out.empty()) {
        std::ofstream f(out);
        f << j.dump(2) << "\n";
    }
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_encoder_fit(const std::string& features_path, int components,
                    const std::string& out) {
    const Eigen::MatrixXd feats = csv::read_matrix(features_path);
    const PcaProjector proj = pca_fit(feats, components);
    proj.save(out);
    std::cout << "fitted " << components << " components on " << feats.rows()
              << " samples\n";
    return 0;
}

int cmd_encoder_apply(const std::string& projector_path, const std::string& features_path,
                      double b, int pool_groups, std::uint64_t seed,
                      const std::string& out) {
    const PcaProjector proj = PcaProjector::load(projector_path);
    const Eigen::MatrixXd feats = csv::read_matrix(features_path);
    EndpointSpec spec;
    spec.b = b;
    spec.pooling = pool_groups > 0 ? Pooling::ChannelAverage : Pooling::None;
    spec.pool_groups = pool_groups > 0 ? pool_groups : 4;
    Rng rng(seed, 2);
    const Eigen::Index out_dim =
        spec.pooling == Pooling::ChannelAverage ? spec.pool_groups : proj.components();
    csv::Writer w(out, vector_header("z", out_dim));
    for (Eigen::Index i = 0; i < feats.rows(); ++i) {
        const Eigen::VectorXd z =
            build_endpoint(feats.row(i).transpose(), proj, spec, rng);
        std::vector<double> row;
        append_vector(row, z);
        w.row(row);
    }
    return 0;
}

int cmd_encoder_features(int n, int size, int grid, std::uint64_t seed,
                         const std::string& out) {
    // synthetic smooth blob images -> retina-filtered patch features
    RetinaFilter filter;
    Rng rng(seed, 4);
    std::vector<Eigen::VectorXd> rows;
    for (int s = 0; s < n; ++s) {
        Image img(size, size);
        const double cx = rng.uniform(0.25, 0.75) * size;
        const double cy = rng.uniform(0.25, 0.75) * size;
        const double sx = rng.uniform(0.08, 0.22) * size;
        const double sy = rng.uniform(0.08, 0.22) * size;
        const double amp = rng.uniform(0.5, 1.5);
        for (int r = 0; r < size; ++r)
            for (int c = 0; c < size; ++c) {
                const double dx = (c - cx) / sx;
                const double dy = (r - cy) / sy;
                img(r, c) = amp * std::exp(-0.5 * (dx * dx + dy * dy));
            }
        rows.push_back(patch_features(filter, img, grid));
    }
    csv::Writer w(out, vector_header("f", rows[0].size()));
    for (const auto& r : rows) {
        std::vector<double> row;
        append_vector(row, r);
        w.row(row);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bridgekit: endpoint-conditioned diffusion-bridge translation toolkit"};
    app.require_subcommand(1);
    app.add_flag("!--no-strict", g_strict, "do not fail on invariant violations");

    std::string config_path, out_override;
    auto add_config = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "experiment config (TOML)")->required();
        cmd->add_option("--output", out_override, "override output directory");
    };
    auto load_config = [&]() {
        ExperimentConfig cfg = ExperimentConfig::from_file(config_path);
        if (!out_override.empty()) cfg.output_dir = out_override;
        return cfg;
    };

    // schedule dump
    auto* schedule_cmd = app.add_subcommand("schedule", "schedule utilities");
    auto* dump_cmd = schedule_cmd->add_subcommand("dump", "emit (t, weights, derivatives) CSV");
    std::string sk_kind = "linear", sk_out;
    double sk_gamma = 0.1, sk_bmin = 0.1, sk_bmax = 20.0;
    int sk_points = 101;
    dump_cmd->add_option("--kind", sk_kind, "linear | snr | rectified_flow");
    dump_cmd->add_option("--gamma-max", sk_gamma);
    dump_cmd->add_option("--beta-min", sk_bmin);
    dump_cmd->add_option("--beta-max", sk_bmax);
    dump_cmd->add_option("--points", sk_points);
    dump_cmd->add_option("--out", sk_out);

    auto* train_cmd = app.add_subcommand("train", "flow-matching training");
    add_config(train_cmd);

    auto* sample_cmd = app.add_subcommand("sample", "reverse ODE/SDE sampling");
    add_config(sample_cmd);
    int sample_n = 16;
    bool sample_dump = false;
    sample_cmd->add_option("--n", sample_n, "number of trajectories");
    sample_cmd->add_flag("--dump-trajectories", sample_dump);

    auto* translate_cmd = app.add_subcommand("translate", "cross-domain translation");
    add_config(translate_cmd);
    int translate_n = 16;
    translate_cmd->add_option("--n", translate_n);

    auto* invert_cmd = app.add_subcommand("invert", "PF-ODE inversion round trip");
    add_config(invert_cmd);
    int invert_n = 8;
    invert_cmd->add_option("--n", invert_n);

    auto* domains_cmd = app.add_subcommand("domains", "toy world utilities");
    auto* ddump_cmd = domains_cmd->add_subcommand("dump", "emit paired samples CSV");
    add_config(ddump_cmd);
    int domains_n = 100;
    ddump_cmd->add_option("--n", domains_n);

    auto* bound_cmd = app.add_subcommand("verify-bound", "translation-error bound harness");
    add_config(bound_cmd);

    auto* conv_cmd = app.add_subcommand("convergence", "Euler convergence study");
    add_config(conv_cmd);

    auto* metrics_cmd = app.add_subcommand("metrics", "representation alignment metrics");
    std::string ma, mb, mout;
    int mk = 10;
    metrics_cmd->add_option("--features-a", ma)->required();
    metrics_cmd->add_option("--features-b", mb)->required();
    metrics_cmd->add_option("--k", mk);
    metrics_cmd->add_option("--out", mout);

    auto* encoder_cmd = app.add_subcommand("encoder", "shared-latent encoder utilities");
    auto* efit_cmd = encoder_cmd->add_subcommand("fit", "fit a PCA projector");
    std::string ef_features, ef_out = "projector.bin";
    int ef_components = 16;
    efit_cmd->add_option("--features", ef_features)->required();
    efit_cmd->add_option("--components", ef_components);
    efit_cmd->add_option("--out", ef_out);
    auto* eapply_cmd = encoder_cmd->add_subcommand("apply", "project features to endpoints");
    std::string ea_proj, ea_features, ea_out = "endpoints.csv";
    double ea_b = 0.0;
    int ea_pool = 0;
    std::uint64_t ea_seed = 0;
    eapply_cmd->add_option("--projector", ea_proj)->required();
    eapply_cmd->add_option("--features", ea_features)->required();
    eapply_cmd->add_option("--b", ea_b);
    eapply_cmd->add_option("--pool-groups", ea_pool);
    eapply_cmd->add_option("--seed", ea_seed);
    eapply_cmd->add_option("--out", ea_out);
    auto* efeat_cmd =
        encoder_cmd->add_subcommand("features", "synthetic toy patch features");
    int eg_n = 64, eg_size = 64, eg_grid = 8;
    std::uint64_t eg_seed = 0;
    std::string eg_out = "features.csv";
    efeat_cmd->add_option("--n", eg_n);
    efeat_cmd->add_option("--size", eg_size);
    efeat_cmd->add_option("--grid", eg_grid);
    efeat_cmd->add_option("--seed", eg_seed);
    efeat_cmd->add_option("--out", eg_out);

    CLI11_PARSE(app, argc, argv);

    try {
        if (dump_cmd->parsed())
            return cmd_schedule_dump(sk_kind, sk_gamma, sk_bmin, sk_bmax, sk_points, sk_out);
        if (train_cmd->parsed()) return cmd_train(load_config());
        if (sample_cmd->parsed()) return cmd_sample(load_config(), sample_n, sample_dump);
        if (translate_cmd->parsed()) return cmd_translate(load_config(), translate_n);
        if (invert_cmd->parsed()) return cmd_invert(load_config(), invert_n);
        if (ddump_cmd->parsed()) return cmd_domains_dump(load_config(), domains_n);
        if (bound_cmd->parsed()) return cmd_verify_bound(load_config());
        if (conv_cmd->parsed()) return cmd_convergence(load_config());
        if (metrics_cmd->parsed()) return cmd_metrics(ma, mb, mk, mout);
        if (efit_cmd->parsed()) return cmd_encoder_fit(ef_features, ef_components, ef_out);
        if (eapply_cmd->parsed())
            return cmd_encoder_apply(ea_proj, ea_features, ea_b, ea_pool, ea_seed, ea_out);
        if (efeat_cmd->parsed())
            return cmd_encoder_features(eg_n, eg_size, eg_grid, eg_seed, eg_out);
        std::cerr << "no subcommand\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
