#ifndef BRIDGEKIT_DOMAINS_HPP
#define BRIDGEKIT_DOMAINS_HPP

#include <memory>
#include <vector>

#include "bridgekit/field.hpp"
#include "bridgekit/gaussian.hpp"
#include "bridgekit/rng.hpp"
#include "bridgekit/sampler.hpp"

namespace bridgekit {

// Invertible observation map x = warp(A y + c) with an optional coordinatewise
// tanh warp w(u) = u + warp_amp tanh(u), warp_amp in [0, 1) so w' in [1, 2).
struct DomainMap {
    Eigen::MatrixXd A;
    Vector c;
    double warp_amp = 0.0;

    static DomainMap identity(int dim);
    static DomainMap affine(Eigen::MatrixXd A, Vector c, double warp_amp = 0.0);
    // 2D rotation by angle, uniform scale, shift.
    static DomainMap rotation_scale_shift(double angle, double scale, Vector shift,
                                          double warp_amp = 0.0);

    Vector apply(const Vector& y) const;
    Vector invert(const Vector& x) const;  // Newton solve for the warp

    double lipschitz() const;      // (1 + warp_amp) * ||A||_2
    double inv_lipschitz() const;  // ||A^-1||_2
};

// Shared-latent prior over y: single Gaussian or a 2-component mixture.
struct LatentPrior {
    std::vector<double> weights;         // sums to 1
    std::vector<Vector> means;
    std::vector<Vector> variances;       // diagonal

    static LatentPrior gaussian(Vector mean, Vector var);
    static LatentPrior two_mixture(Vector mean_a, Vector mean_b, double var = 1.0);

    Eigen::Index dim() const { return means.empty() ? 0 : means[0].size(); }
    Vector sample(Rng& rng) const;
};

// Two observed domains factoring through one latent: x_i = D_i(y) + noise_i.
struct ToyWorld {
    int latent_dim = 1;
    DomainMap map1, map2;
    LatentPrior prior;
    double appearance_noise1 = 0.0;
    double appearance_noise2 = 0.0;

    static ToyWorld gaussian_1d(double prior_mean = 0.0, double prior_var = 1.0);

    const DomainMap& map(int domain_index) const;
    double noise(int domain_index) const;
};

struct PairedSample {
    Vector y;
    Vector x1;
    Vector x2;
};

std::vector<PairedSample> sample_pair(const ToyWorld& world, int n, std::uint64_t seed);

enum class EncoderMode { Oracle, Perturbed };

// Oracle: exact inverse map. Perturbed: inverse map plus a random direction of
// exact length delta_scale, a controlled encoder error for bound sweeps.
struct EncoderHandle {
    EncoderMode mode = EncoderMode::Oracle;
    double delta_scale = 0.0;
};

Vector encode(const EncoderHandle& handle, const ToyWorld& world, const Vector& x,
              int domain_index, Rng& rng);

// Decoder applied to bridge outputs. Identity by default; the biased variant
// is D(z) = A z + c + bias_eps * u * tanh(mean(z)) with known reconstruction
// error bias_eps and Lipschitz constant ||A||_2 + bias_eps/sqrt(d).
struct ToyDecoder {
    Eigen::MatrixXd A;
    Vector c;
    Vector bias_dir;       // unit vector
    double bias_eps = 0.0;

    static ToyDecoder identity(int dim);
    static ToyDecoder biased(int dim, double bias_eps, std::uint64_t seed);

    Vector decode(const Vector& z) const;
    Vector exact_decode(const Vector& z) const;  // A z + c, no bias
    double lipschitz() const;
    double reconstruction_error() const { return bias_eps; }
};

// Oracle bridge field for one domain of a toy world: the conditional prior of
// z0 = x_i given the pinned endpoint is N(D_i(z_T), noise_i^2 I).
class WorldBridgeField final : public VelocityField {
  public:
    WorldBridgeField(const ToyWorld& world, int domain_index, Schedule schedule);

    Eigen::Index dim() const override { return world_->latent_dim; }
    bool provides_posterior_mean() const override { return true; }
    bool provides_score() const override { return true; }

    FieldOutput eval(double t, const Vector& z, const Vector& zT) const override;

  private:
    const ToyWorld* world_;
    int domain_index_;
    Schedule schedule_;
};

struct TranslationOutcome {
    Vector y_estimate;      // encoder output used as the endpoint
    Vector x_translated;    // decoded output
    Vector x_target_truth;  // paired ground truth from the generator
    Vector z_terminal;      // latent before decoding
    double encoder_delta = 0.0;  // ||y_estimate - y_true||
};

// encode -> translate -> decode, with paired ground truth recorded for
// error measurement. The target field is evaluated conditioned on the
// encoder output. A source field switches on the mixed-drift route with the
// cutoff taken from cfg.t_end.
TranslationOutcome translate_pipeline(const ToyWorld& world,
                                      const VelocityField& target_field,
                                      const EncoderHandle& handle,
                                      const PairedSample& pair, int source_index,
                                      int target_index, const ToyDecoder& decoder,
                                      const SamplerConfig& cfg, Rng& rng,
                                      const VelocityField* source_field = nullptr);

}  // namespace bridgekit

#endif
