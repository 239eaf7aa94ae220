#ifndef BRIDGEKIT_GAUSSIAN_HPP
#define BRIDGEKIT_GAUSSIAN_HPP

#include <Eigen/Dense>

#include "bridgekit/field.hpp"

namespace bridgekit {

// Gaussian prior over z_0, conditioned on a pinned z_T. Diagonal covariances
// take a componentwise fast path; full covariances go through an LDLT solve.
class GaussianDomain {
  public:
    GaussianDomain(Vector mean, Eigen::MatrixXd cov);
    static GaussianDomain diagonal(Vector mean, Vector var);
    static GaussianDomain isotropic(Vector mean, double var);

    Eigen::Index dim() const { return mean_.size(); }
    const Vector& mean() const { return mean_; }
    bool is_diagonal() const { return diagonal_; }
    const Vector& diag_var() const { return diag_var_; }
    const Eigen::MatrixXd& cov() const { return cov_; }

    // E[z_0 | z_t, z_T] = mu0 + Sigma0 alpha (alpha^2 Sigma0 + gamma^2 I)^-1 m,
    // m = z_t - alpha mu0 - beta z_T.
    Vector posterior_mean(const Vector& zt, const Vector& zT, double t,
                          const Schedule& schedule) const;

    // Fully populated, mutually consistent field output at (t, z_t, z_T).
    FieldOutput oracle_field(const Vector& zt, const Vector& zT, double t,
                             const Schedule& schedule) const;

    // Closed-form marginal of z_t | z_T: mean alpha mu0 + beta z_T and
    // covariance alpha^2 Sigma0 + gamma^2 I (diagonal returned as a vector).
    void marginal_moments(const Vector& zT, double t, const Schedule& schedule,
                          Vector* out_mean, Vector* out_var_diag) const;

  private:
    // Solves (alpha^2 Sigma0 + gamma^2 I) x = m with tiny-gamma jitter.
    Vector solve_system(const Vector& m, double alpha, double gamma) const;

    Vector mean_;
    Eigen::MatrixXd cov_;
    Vector diag_var_;
    bool diagonal_ = false;
};

// Endpoint-conditioned oracle drift for a fixed Gaussian domain.
class GaussianBridgeField final : public VelocityField {
  public:
    GaussianBridgeField(GaussianDomain domain, Schedule schedule)
        : domain_(std::move(domain)), schedule_(std::move(schedule)) {}

    Eigen::Index dim() const override { return domain_.dim(); }
    bool provides_posterior_mean() const override { return true; }
    bool provides_score() const override { return true; }

    FieldOutput eval(double t, const Vector& z, const Vector& zT) const override {
        return domain_.oracle_field(z, zT, t, schedule_);
    }

    const GaussianDomain& domain() const { return domain_; }
    const Schedule& schedule() const { return schedule_; }

  private:
    GaussianDomain domain_;
    Schedule schedule_;
};

// Marginal (endpoint-free) PF-ODE drift for independent Gaussian endpoints
// z_0 ~ N(mu0, s0^2 I), z_T ~ N(muT, sT^2 I):
//   v(t, z) = E[alpha_dot z_0 + beta_dot z_T + gamma_dot eps | z_t = z].
// This is the unconditional field whose forward/backward integration forms
// the deterministic encoder-decoder pair.
class GaussianMarginalField final : public VelocityField {
  public:
    GaussianMarginalField(Vector mu0, double var0, Vector muT, double varT,
                          Schedule schedule);

    Eigen::Index dim() const override { return mu0_.size(); }
    bool needs_endpoint() const override { return false; }

    FieldOutput eval(double t, const Vector& z, const Vector&) const override;

  private:
    Vector mu0_, muT_;
    double var0_, varT_;
    Schedule schedule_;
};

}  // namespace bridgekit

#endif
