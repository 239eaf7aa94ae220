#ifndef BRIDGEKIT_MODEL_HPP
#define BRIDGEKIT_MODEL_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bridgekit/field.hpp"
#include "bridgekit/rng.hpp"

namespace bridgekit {

enum class Parameterization {
    Velocity,       // net regresses the stochastic velocity target
    PosteriorMean,  // net regresses z_0; velocity reconstructed at evaluation
};

// Two-hidden-layer tanh MLP on concat(z, time_embedding(t), z_T) with a
// zero-initialized, scalar-scaled conditioning branch added to the first
// hidden pre-activation:
//   h1 = tanh(W1 x + b1 + cond_scale * (Wc (w (.) cond)))
//   h2 = tanh(W2 h1 + b2)
//   out = W3 h2 + b3
// With cond_scale = 0 the output is invariant to the condition input.
class VelocityNet {
  public:
    static constexpr int kTimeFeatures = 8;  // Fourier features of t

    VelocityNet(Eigen::Index latent_dim, Eigen::Index cond_dim, int hidden_width,
                Parameterization parameterization, const Schedule& schedule,
                std::uint64_t init_seed);

    Eigen::Index latent_dim() const { return latent_dim_; }
    Eigen::Index cond_dim() const { return cond_dim_; }
    int hidden_width() const { return width_; }
    Parameterization parameterization() const { return parameterization_; }
    const Schedule& schedule() const { return schedule_; }

    // Raw network output for one sample (velocity or z0_hat depending on the
    // parameterization). cond may be empty when cond_dim == 0; a zero vector
    // stands for "no condition".
    Vector forward(double t, const Vector& z, const Vector& zT, const Vector& cond) const;

    // Velocity at (t, z, zT), converting a PosteriorMean head through the
    // score<->velocity correspondence.
    Vector velocity(double t, const Vector& z, const Vector& zT, const Vector& cond) const;

    // Named parameter access for training, checkpoints, and gradient checks.
    struct ParamRef {
        std::string name;
        Eigen::MatrixXd* value;
        Eigen::MatrixXd* grad;
    };
    std::vector<ParamRef> params();
    std::vector<const Eigen::MatrixXd*> param_values() const;

    static Vector time_embedding(double t);

    // Batched forward + backward for the mean-squared loss
    //   L = (1/B) sum_b || out_b - target_b ||^2.
    // Rows of the matrices are samples. Fills parameter gradients and returns
    // the loss. cond_mask scales each sample's condition (0 = dropped).
    double loss_and_gradients(const Eigen::MatrixXd& z, const Vector& t,
                              const Eigen::MatrixXd& zT, const Eigen::MatrixXd& cond,
                              const Vector& cond_mask, const Eigen::MatrixXd& target);

    double loss_only(const Eigen::MatrixXd& z, const Vector& t, const Eigen::MatrixXd& zT,
                     const Eigen::MatrixXd& cond, const Vector& cond_mask,
                     const Eigen::MatrixXd& target) const;

    void save(const std::string& path, std::uint64_t seed) const;
    static VelocityNet load(const std::string& path);

    Eigen::MatrixXd w1, b1, wc, cond_scale, w2, b2, w3, b3;

  private:
    Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& z, const Vector& t,
                                  const Eigen::MatrixXd& zT, const Eigen::MatrixXd& cond,
                                  const Vector& cond_mask, Eigen::MatrixXd* h1,
                                  Eigen::MatrixXd* h2, Eigen::MatrixXd* crow) const;

    Eigen::Index latent_dim_;
    Eigen::Index cond_dim_;
    int width_;
    Parameterization parameterization_;
    Schedule schedule_;

    Eigen::MatrixXd g_w1, g_b1, g_wc, g_cond_scale, g_w2, g_b2, g_w3, g_b3;
};

struct TrainConfig {
    int batch = 128;
    int steps = 2000;
    double learn_rate = 1e-3;
    bool cosine_decay = true;   // anneal the step size to zero over training
    double cond_dropout = 0.2;  // p_w: probability the condition is dropped
    std::uint64_t seed = 0;
    int validation_batch = 256;
    int validation_every = 1;  // record validation loss every k steps
};

struct TrainSample {
    Vector z0;
    Vector zT;
    Vector cond;  // empty when unconditioned
};

using DomainSampler = std::function<TrainSample(Rng&)>;

struct TrainTrace {
    std::vector<double> train_loss;
    std::vector<double> validation_loss;
};

// Flow-matching training of the net (adaptive-moment gradient descent,
// moment decays 0.9/0.999). t is drawn uniformly on the clipped interval.
// Throws on NaN loss with the offending step and learning rate.
TrainTrace train(VelocityNet& net, const DomainSampler& sampler, const TrainConfig& cfg);

// Classifier-free-guidance evaluation:
//   cfg_on = (s > 1) and t in [t_min, t_max]
//   d = v_uncond + s (v_cond - v_uncond) when cfg_on, else v_cond.
// The unconditional branch uses a zeroed condition vector.
Vector eval_cfg(const VelocityNet& net, double t, const Vector& z, const Vector& zT,
                const Vector& cond, double s, double t_min, double t_max);

// Field adapter so trained nets plug into the samplers. Holds the condition
// and the CFG settings; the gate is applied per evaluation time.
class TrainedField final : public VelocityField {
  public:
    TrainedField(const VelocityNet& net, Vector cond, double guidance_s = 1.0,
                 double cfg_t_min = 0.0, double cfg_t_max = 1.0)
        : net_(&net), cond_(std::move(cond)), s_(guidance_s), t_min_(cfg_t_min),
          t_max_(cfg_t_max) {}

    Eigen::Index dim() const override { return net_->latent_dim(); }
    bool provides_posterior_mean() const override {
        return net_->parameterization() == Parameterization::PosteriorMean;
    }
    bool provides_score() const override {
        return net_->parameterization() == Parameterization::PosteriorMean;
    }

    FieldOutput eval(double t, const Vector& z, const Vector& zT) const override;

  private:
    const VelocityNet* net_;
    Vector cond_;
    double s_, t_min_, t_max_;
};

}  // namespace bridgekit

#endif
