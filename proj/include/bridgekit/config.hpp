#ifndef BRIDGEKIT_CONFIG_HPP
#define BRIDGEKIT_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "bridgekit/analysis.hpp"
#include "bridgekit/domains.hpp"
#include "bridgekit/sampler.hpp"
#include "bridgekit/schedule.hpp"
#include "bridgekit/tomlio.hpp"

namespace bridgekit {

struct ScheduleSpec {
    std::string kind = "linear";
    double gamma_max = 0.1;
    double beta_min = 0.1;
    double beta_max = 20.0;

    Schedule build() const;
};

struct MapSpec {
    std::string kind = "identity";  // identity | rotation | affine_diag
    double angle = 0.0;             // rotation
    double scale = 1.0;
    std::vector<double> shift;      // defaults to zeros
    std::vector<double> diag;       // affine_diag: per-axis scales
    double warp_amp = 0.0;

    DomainMap build(int dim) const;
};

struct WorldSpec {
    int latent_dim = 1;
    std::string prior = "gaussian";  // gaussian | mixture2
    std::vector<double> prior_mean;  // defaults to zeros
    double prior_var = 1.0;
    std::vector<double> mixture_mean_a{-2.0, 0.0};
    std::vector<double> mixture_mean_b{2.0, 0.0};
    MapSpec map1, map2;
    double noise1 = 0.0;
    double noise2 = 0.0;

    ToyWorld build() const;
};

struct ModelSpec {
    bool oracle = true;             // use the closed-form field
    std::string checkpoint;         // trained model path when oracle = false
    int hidden_width = 128;
    std::string parameterization = "velocity";  // velocity | posterior_mean
    int cond_dim = 0;
    int train_steps = 2000;
    int batch = 128;
    double learn_rate = 1e-3;
    double cond_dropout = 0.2;
};

struct SamplerSpec {
    int n_steps = 256;
    double guidance_s = 1.0;
    double cfg_t_min = 0.0;
    double cfg_t_max = 1.0;
    double t_end = 1.0;
    double g = 0.0;
    double clip_eps = 1e-3;
    bool analytic_final_step = true;

    SamplerConfig build(std::uint64_t seed) const;
};

struct AnalysisSpec {
    double delta = 0.1;
    int trials = 100;
    std::vector<int> n_list{64, 128, 256, 512, 1024, 2048, 4096};
    int source_index = 1;
    int target_index = 2;
    bool inject_field_error = false;
    bool stochastic_field_error = false;
    double field_error_scale = 0.0;
    double decoder_bias = 0.0;
    int probe_trajectories = 8;
    int metrics_k = 10;
};

// Everything one run needs: fully serializable, lossless through TOML, and
// echoed into the output directory next to the results.
struct ExperimentConfig {
    ScheduleSpec schedule;
    WorldSpec world;
    ModelSpec model;
    SamplerSpec sampler;
    AnalysisSpec analysis;
    std::uint64_t seed = 0;
    std::string output_dir = "out";

    static ExperimentConfig from_toml(const toml::Table& root);
    static ExperimentConfig from_file(const std::string& path);
    toml::Table to_toml() const;
    void write(const std::string& path) const;
};

}  // namespace bridgekit

#endif
