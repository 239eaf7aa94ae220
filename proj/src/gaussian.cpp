#include "bridgekit/gaussian.hpp"

#include <cmath>
#include <stdexcept>

namespace bridgekit {

namespace {
constexpr double kJitter = 1e-10;
}

GaussianDomain::GaussianDomain(Vector mean, Eigen::MatrixXd cov)
    : mean_(std::move(mean)), cov_(std::move(cov)) {
    if (cov_.rows() != cov_.cols() || cov_.rows() != mean_.size())
        throw std::invalid_argument("GaussianDomain: covariance shape mismatch");
    if (!cov_.isApprox(cov_.transpose(), 1e-12))
        throw std::invalid_argument("GaussianDomain: covariance must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov_);
    if (es.eigenvalues().minCoeff() < -1e-10)
        throw std::invalid_argument("GaussianDomain: covariance must be positive semidefinite");
    diagonal_ = cov_.isDiagonal(1e-14);
    if (diagonal_) diag_var_ = cov_.diagonal();
}

GaussianDomain GaussianDomain::diagonal(Vector mean, Vector var) {
    if (var.minCoeff() < 0.0)
        throw std::invalid_argument("GaussianDomain: variances must be nonnegative");
    GaussianDomain d(std::move(mean), var.asDiagonal());
    return d;
}

GaussianDomain GaussianDomain::isotropic(Vector mean, double var) {
    const Eigen::Index n = mean.size();
    return diagonal(std::move(mean), Vector::Constant(n, var));
}

Vector GaussianDomain::solve_system(const Vector& m, double alpha, double gamma) const {
    double g2 = gamma * gamma;
    if (g2 < kJitter) g2 += kJitter;  // conditioning degrades as gamma -> 0
    if (diagonal_) {
        return m.array() / (alpha * alpha * diag_var_.array() + g2);
    }
    Eigen::MatrixXd sys = alpha * alpha * cov_;
    sys.diagonal().array() += g2;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(sys);
    if (ldlt.info() != Eigen::Success)
        throw std::runtime_error("GaussianDomain: singular conditioning system");
    return ldlt.solve(m);
}

Vector GaussianDomain::posterior_mean(const Vector& zt, const Vector& zT, double t,
                                      const Schedule& schedule) const {
    if (zt.size() != dim() || zT.size() != dim())
        throw std::invalid_argument("GaussianDomain::posterior_mean: dimension mismatch");
    const ScheduleWeights w = schedule.eval(t);
    const Vector m = zt - w.alpha * mean_ - w.beta * zT;
    const Vector x = solve_system(m, w.alpha, w.gamma);
    if (diagonal_) return mean_ + w.alpha * (diag_var_.array() * x.array()).matrix();
    return mean_ + w.alpha * (cov_ * x);
}

FieldOutput GaussianDomain::oracle_field(const Vector& zt, const Vector& zT, double t,
                                         const Schedule& schedule) const {
    if (zt.size() != dim() || zT.size() != dim())
        throw std::invalid_argument("GaussianDomain::oracle_field: dimension mismatch");
    const ScheduleWeights w = schedule.eval(t);
    const ScheduleDerivatives d = schedule.eval_derivatives(t);
    const Vector m = zt - w.alpha * mean_ - w.beta * zT;
    const Vector x = solve_system(m, w.alpha, w.gamma);  // (a^2 S0 + g^2 I)^-1 m

    FieldOutput out;
    Vector z0_hat;
    if (diagonal_)
        z0_hat = mean_ + w.alpha * (diag_var_.array() * x.array()).matrix();
    else
        z0_hat = mean_ + w.alpha * (cov_ * x);
    const Vector u_hat = w.gamma * x;  // E[eps | z_t, z_T]
    out.velocity = d.alpha_dot * z0_hat + d.beta_dot * zT + d.gamma_dot * u_hat;
    out.posterior_mean = z0_hat;
    out.noise_mean = u_hat;
    // score = -u_hat / gamma, exact by construction; undefined at gamma = 0.
    if (w.gamma > 0.0) out.score = -u_hat / w.gamma;
    return out;
}

void GaussianDomain::marginal_moments(const Vector& zT, double t, const Schedule& schedule,
                                      Vector* out_mean, Vector* out_var_diag) const {
    const ScheduleWeights w = schedule.eval(t);
    if (out_mean) *out_mean = w.alpha * mean_ + w.beta * zT;
    if (out_var_diag) {
        if (!diagonal_)
            throw std::invalid_argument(
                "GaussianDomain::marginal_moments: diagonal variance requested for a full "
                "covariance domain");
        *out_var_diag =
            (w.alpha * w.alpha * diag_var_.array() + w.gamma * w.gamma).matrix();
    }
}

GaussianMarginalField::GaussianMarginalField(Vector mu0, double var0, Vector muT,
                                             double varT, Schedule schedule)
    : mu0_(std::move(mu0)), muT_(std::move(muT)), var0_(var0), varT_(varT),
      schedule_(std::move(schedule)) {
    if (mu0_.size() != muT_.size())
        throw std::invalid_argument("GaussianMarginalField: endpoint dimension mismatch");
    if (var0_ < 0.0 || varT_ < 0.0)
        throw std::invalid_argument("GaussianMarginalField: variances must be nonnegative");
}

FieldOutput GaussianMarginalField::eval(double t, const Vector& z, const Vector&) const {
    const ScheduleWeights w = schedule_.eval(t);
    const ScheduleDerivatives d = schedule_.eval_derivatives(t);
    // z_t = alpha z0 + beta zT + gamma eps with independent Gaussian factors.
    const Vector mbar = w.alpha * mu0_ + w.beta * muT_;
    double s2 = w.alpha * w.alpha * var0_ + w.beta * w.beta * varT_ + w.gamma * w.gamma;
    if (s2 < kJitter) s2 += kJitter;
    const Vector r = (z - mbar) / s2;
    const Vector z0_hat = mu0_ + w.alpha * var0_ * r;
    const Vector zT_hat = muT_ + w.beta * varT_ * r;
    const Vector eps_hat = w.gamma * r;
    FieldOutput out;
    out.velocity = d.alpha_dot * z0_hat + d.beta_dot * zT_hat + d.gamma_dot * eps_hat;
    return out;
}

}  // namespace bridgekit
