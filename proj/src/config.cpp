#include "bridgekit/config.hpp"

#include <stdexcept>

namespace bridgekit {

namespace {

Vector to_vector(const std::vector<double>& v, int dim, double fill = 0.0) {
    if (v.empty()) return Vector::Constant(dim, fill);
    if (static_cast<int>(v.size()) != dim)
        throw std::runtime_error("config: vector field has wrong dimension");
    Vector out(dim);
    for (int i = 0; i < dim; ++i) out[i] = v[static_cast<std::size_t>(i)];
    return out;
}

toml::Array to_array(const std::vector<double>& v) {
    toml::Array a;
    for (double d : v) a.emplace_back(d);
    return a;
}

toml::Array to_array(const std::vector<int>& v) {
    toml::Array a;
    for (int d : v) a.emplace_back(static_cast<std::int64_t>(d));
    return a;
}

}  // namespace

Schedule ScheduleSpec::build() const {
    return Schedule::from_kind(kind, gamma_max, beta_min, beta_max);
}

DomainMap MapSpec::build(int dim) const {
    if (kind == "identity") {
        DomainMap m = DomainMap::identity(dim);
        if (warp_amp > 0.0 || scale != 1.0 || !shift.empty())
            m = DomainMap::affine(scale * Eigen::MatrixXd::Identity(dim, dim),
                                  to_vector(shift, dim), warp_amp);
        return m;
    }
    if (kind == "rotation") {
        if (dim != 2) throw std::runtime_error("config: rotation map needs latent_dim = 2");
        return DomainMap::rotation_scale_shift(angle, scale, to_vector(shift, 2), warp_amp);
    }
    if (kind == "affine_diag") {
        if (diag.empty()) throw std::runtime_error("config: affine_diag needs 'diag'");
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
        if (static_cast<int>(diag.size()) != dim)
            throw std::runtime_error("config: diag has wrong dimension");
        for (int i = 0; i < dim; ++i) a(i, i) = diag[static_cast<std::size_t>(i)];
        return DomainMap::affine(a, to_vector(shift, dim), warp_amp);
    }
    throw std::runtime_error("config: unknown map kind '" + kind + "'");
}

ToyWorld WorldSpec::build() const {
    ToyWorld w;
    w.latent_dim = latent_dim;
    w.map1 = map1.build(latent_dim);
    w.map2 = map2.build(latent_dim);
    if (prior == "gaussian") {
        w.prior = LatentPrior::gaussian(to_vector(prior_mean, latent_dim),
                                        Vector::Constant(latent_dim, prior_var));
    } else if (prior == "mixture2") {
        w.prior = LatentPrior::two_mixture(to_vector(mixture_mean_a, latent_dim),
                                           to_vector(mixture_mean_b, latent_dim),
                                           prior_var);
    } else {
        throw std::runtime_error("config: unknown prior '" + prior + "'");
    }
    w.appearance_noise1 = noise1;
    w.appearance_noise2 = noise2;
    return w;
}

SamplerConfig SamplerSpec::build(std::uint64_t seed) const {
    SamplerConfig cfg;
    cfg.n_steps = n_steps;
    cfg.guidance_s = guidance_s;
    cfg.cfg_t_min = cfg_t_min;
    cfg.cfg_t_max = cfg_t_max;
    cfg.t_end = t_end;
    cfg.g = g;
    cfg.seed = seed;
    cfg.clip_eps = clip_eps;
    cfg.analytic_final_step = analytic_final_step;
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    return from_toml(toml::parse_file(path));
}

ExperimentConfig ExperimentConfig::from_toml(const toml::Table& root) {
    using namespace toml;
    ExperimentConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(get_int_or(root, "seed", 0));
    cfg.output_dir = get_string_or(root, "output_dir", "out");

    if (const Table* t = find_table(root, "schedule")) {
        cfg.schedule.kind = get_string_or(*t, "kind", "linear");
        cfg.schedule.gamma_max = get_number_or(*t, "gamma_max", 0.1);
        cfg.schedule.beta_min = get_number_or(*t, "beta_min", 0.1);
        cfg.schedule.beta_max = get_number_or(*t, "beta_max", 20.0);
    }
    if (const Table* t = find_table(root, "world")) {
        cfg.world.latent_dim = static_cast<int>(get_int_or(*t, "latent_dim", 1));
        cfg.world.prior = get_string_or(*t, "prior", "gaussian");
        cfg.world.prior_mean = get_number_array_or(*t, "prior_mean", {});
        cfg.world.prior_var = get_number_or(*t, "prior_var", 1.0);
        cfg.world.mixture_mean_a = get_number_array_or(*t, "mixture_mean_a", {-2.0, 0.0});
        cfg.world.mixture_mean_b = get_number_array_or(*t, "mixture_mean_b", {2.0, 0.0});
        cfg.world.noise1 = get_number_or(*t, "noise1", 0.0);
        cfg.world.noise2 = get_number_or(*t, "noise2", 0.0);
        auto load_map = [&](const char* name, MapSpec& spec) {
            if (const Table* mt = find_table(*t, name)) {
                spec.kind = get_string_or(*mt, "kind", "identity");
                spec.angle = get_number_or(*mt, "angle", 0.0);
                spec.scale = get_number_or(*mt, "scale", 1.0);
                spec.shift = get_number_array_or(*mt, "shift", {});
                spec.diag = get_number_array_or(*mt, "diag", {});
                spec.warp_amp = get_number_or(*mt, "warp_amp", 0.0);
            }
        };
        load_map("map1", cfg.world.map1);
        load_map("map2", cfg.world.map2);
    }
    if (const Table* t = find_table(root, "model")) {
        cfg.model.oracle = get_bool_or(*t, "oracle", true);
        cfg.model.checkpoint = get_string_or(*t, "checkpoint", "");
        cfg.model.hidden_width = static_cast<int>(get_int_or(*t, "hidden_width", 128));
        cfg.model.parameterization = get_string_or(*t, "parameterization", "velocity");
        cfg.model.cond_dim = static_cast<int>(get_int_or(*t, "cond_dim", 0));
        cfg.model.train_steps = static_cast<int>(get_int_or(*t, "train_steps", 2000));
        cfg.model.batch = static_cast<int>(get_int_or(*t, "batch", 128));
        cfg.model.learn_rate = get_number_or(*t, "learn_rate", 1e-3);
        cfg.model.cond_dropout = get_number_or(*t, "cond_dropout", 0.2);
    }
    if (const Table* t = find_table(root, "sampler")) {
        cfg.sampler.n_steps = static_cast<int>(get_int_or(*t, "n_steps", 256));
        cfg.sampler.guidance_s = get_number_or(*t, "guidance_s", 1.0);
        cfg.sampler.cfg_t_min = get_number_or(*t, "cfg_t_min", 0.0);
        cfg.sampler.cfg_t_max = get_number_or(*t, "cfg_t_max", 1.0);
        cfg.sampler.t_end = get_number_or(*t, "t_end", 1.0);
        cfg.sampler.g = get_number_or(*t, "g", 0.0);
        cfg.sampler.clip_eps = get_number_or(*t, "clip_eps", 1e-3);
        cfg.sampler.analytic_final_step = get_bool_or(*t, "analytic_final_step", true);
    }
    if (const Table* t = find_table(root, "analysis")) {
        cfg.analysis.delta = get_number_or(*t, "delta", 0.1);
        cfg.analysis.trials = static_cast<int>(get_int_or(*t, "trials", 100));
        std::vector<double> ns = get_number_array_or(
            *t, "n_list", {64, 128, 256, 512, 1024, 2048, 4096});
        cfg.analysis.n_list.clear();
        for (double n : ns) cfg.analysis.n_list.push_back(static_cast<int>(n));
        cfg.analysis.source_index = static_cast<int>(get_int_or(*t, "source_index", 1));
        cfg.analysis.target_index = static_cast<int>(get_int_or(*t, "target_index", 2));
        cfg.analysis.inject_field_error = get_bool_or(*t, "inject_field_error", false);
        cfg.analysis.stochastic_field_error =
            get_bool_or(*t, "stochastic_field_error", false);
        cfg.analysis.field_error_scale = get_number_or(*t, "field_error_scale", 0.0);
        cfg.analysis.decoder_bias = get_number_or(*t, "decoder_bias", 0.0);
        cfg.analysis.probe_trajectories =
            static_cast<int>(get_int_or(*t, "probe_trajectories", 8));
        cfg.analysis.metrics_k = static_cast<int>(get_int_or(*t, "metrics_k", 10));
    }
    return cfg;
}

toml::Table ExperimentConfig::to_toml() const {
    using namespace toml;
    Table root;
    root.emplace("seed", Value(static_cast<std::int64_t>(seed)));
    root.emplace("output_dir", Value(output_dir));

    Table sched;
    sched.emplace("kind", Value(schedule.kind));
    sched.emplace("gamma_max", Value(schedule.gamma_max));
    sched.emplace("beta_min", Value(schedule.beta_min));
    sched.emplace("beta_max", Value(schedule.beta_max));
    root.emplace("schedule", Value(std::move(sched)));

    Table world_t;
    world_t.emplace("latent_dim", Value(static_cast<std::int64_t>(world.latent_dim)));
    world_t.emplace("prior", Value(world.prior));
    if (!world.prior_mean.empty())
        world_t.emplace("prior_mean", Value(to_array(world.prior_mean)));
    world_t.emplace("prior_var", Value(world.prior_var));
    world_t.emplace("mixture_mean_a", Value(to_array(world.mixture_mean_a)));
    world_t.emplace("mixture_mean_b", Value(to_array(world.mixture_mean_b)));
    world_t.emplace("noise1", Value(world.noise1));
    world_t.emplace("noise2", Value(world.noise2));
    auto map_table = [](const MapSpec& m) {
        Table t;
        t.emplace("kind", Value(m.kind));
        t.emplace("angle", Value(m.angle));
        t.emplace("scale", Value(m.scale));
        if (!m.shift.empty()) t.emplace("shift", Value(to_array(m.shift)));
        if (!m.diag.empty()) t.emplace("diag", Value(to_array(m.diag)));
        t.emplace("warp_amp", Value(m.warp_amp));
        return t;
    };
    world_t.emplace("map1", Value(map_table(world.map1)));
    world_t.emplace("map2", Value(map_table(world.map2)));
    root.emplace("world", Value(std::move(world_t)));

    Table model_t;
    model_t.emplace("oracle", Value(model.oracle));
    if (!model.checkpoint.empty()) model_t.emplace("checkpoint", Value(model.checkpoint));
    model_t.emplace("hidden_width", Value(static_cast<std::int64_t>(model.hidden_width)));
    model_t.emplace("parameterization", Value(model.parameterization));
    model_t.emplace("cond_dim", Value(static_cast<std::int64_t>(model.cond_dim)));
    model_t.emplace("train_steps", Value(static_cast<std::int64_t>(model.train_steps)));
    model_t.emplace("batch", Value(static_cast<std::int64_t>(model.batch)));
    model_t.emplace("learn_rate", Value(model.learn_rate));
    model_t.emplace("cond_dropout", Value(model.cond_dropout));
    root.emplace("model", Value(std::move(model_t)));

    Table sampler_t;
    sampler_t.emplace("n_steps", Value(static_cast<std::int64_t>(sampler.n_steps)));
    sampler_t.emplace("guidance_s", Value(sampler.guidance_s));
    sampler_t.emplace("cfg_t_min", Value(sampler.cfg_t_min));
    sampler_t.emplace("cfg_t_max", Value(sampler.cfg_t_max));
    sampler_t.emplace("t_end", Value(sampler.t_end));
    sampler_t.emplace("g", Value(sampler.g));
    sampler_t.emplace("clip_eps", Value(sampler.clip_eps));
    sampler_t.emplace("analytic_final_step", Value(sampler.analytic_final_step));
    root.emplace("sampler", Value(std::move(sampler_t)));

    Table analysis_t;
    analysis_t.emplace("delta", Value(analysis.delta));
    analysis_t.emplace("trials", Value(static_cast<std::int64_t>(analysis.trials)));
    analysis_t.emplace("n_list", Value(to_array(analysis.n_list)));
    analysis_t.emplace("source_index",
                       Value(static_cast<std::int64_t>(analysis.source_index)));
    analysis_t.emplace("target_index",
                       Value(static_cast<std::int64_t>(analysis.target_index)));
    analysis_t.emplace("inject_field_error", Value(analysis.inject_field_error));
    analysis_t.emplace("stochastic_field_error", Value(analysis.stochastic_field_error));
    analysis_t.emplace("field_error_scale", Value(analysis.field_error_scale));
    analysis_t.emplace("decoder_bias", Value(analysis.decoder_bias));
    analysis_t.emplace("probe_trajectories",
                       Value(static_cast<std::int64_t>(analysis.probe_trajectories)));
    analysis_t.emplace("metrics_k", Value(static_cast<std::int64_t>(analysis.metrics_k)));
    root.emplace("analysis", Value(std::move(analysis_t)));
    return root;
}

void ExperimentConfig::write(const std::string& path) const {
    toml::write_file(to_toml(), path);
}

}  // namespace bridgekit
