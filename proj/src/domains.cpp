#include "bridgekit/domains.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace bridgekit {

DomainMap DomainMap::identity(int dim) {
    return affine(Eigen::MatrixXd::Identity(dim, dim), Vector::Zero(dim));
}

DomainMap DomainMap::affine(Eigen::MatrixXd A, Vector c, double warp_amp) {
    if (A.rows() != A.cols() || A.rows() != c.size())
        throw std::invalid_argument("DomainMap: A must be square and match c");
    if (warp_amp < 0.0 || warp_amp >= 1.0)
        throw std::invalid_argument("DomainMap: warp_amp must be in [0, 1)");
    if (std::abs(A.determinant()) < 1e-12)
        throw std::invalid_argument("DomainMap: A must be invertible");
    DomainMap m;
    m.A = std::move(A);
    m.c = std::move(c);
    m.warp_amp = warp_amp;
    return m;
}

DomainMap DomainMap::rotation_scale_shift(double angle, double scale, Vector shift,
                                          double warp_amp) {
    if (shift.size() != 2)
        throw std::invalid_argument("DomainMap: rotation map is 2-D");
    Eigen::MatrixXd r(2, 2);
    r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    return affine(scale * r, std::move(shift), warp_amp);
}

namespace {

double warp_scalar(double u, double amp) { return u + amp * std::tanh(u); }

double unwarp_scalar(double v, double amp) {
    // w(u) = u + amp tanh(u) is strictly increasing with w' >= 1; Newton from
    // a bracketing-safe start converges in a few iterations.
    double u = v;
    for (int it = 0; it < 64; ++it) {
        const double th = std::tanh(u);
        const double f = u + amp * th - v;
        const double fp = 1.0 + amp * (1.0 - th * th);
        const double step = f / fp;
        u -= step;
        if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(u))) break;
    }
    return u;
}

}  // namespace

Vector DomainMap::apply(const Vector& y) const {
    if (y.size() != A.rows()) throw std::invalid_argument("DomainMap::apply: dim mismatch");
    Vector u = A * y + c;
    if (warp_amp > 0.0)
        for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = warp_scalar(u[i], warp_amp);
    return u;
}

Vector DomainMap::invert(const Vector& x) const {
    if (x.size() != A.rows()) throw std::invalid_argument("DomainMap::invert: dim mismatch");
    Vector u = x;
    if (warp_amp > 0.0)
        for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = unwarp_scalar(u[i], warp_amp);
    return A.partialPivLu().solve(u - c);
}

double DomainMap::lipschitz() const {
    const double a_norm = A.jacobiSvd().singularValues()[0];
    return (1.0 + warp_amp) * a_norm;
}

double DomainMap::inv_lipschitz() const {
    const auto sv = A.jacobiSvd().singularValues();
    return 1.0 / sv[sv.size() - 1];  // unwarp slope is at most 1
}

LatentPrior LatentPrior::gaussian(Vector mean, Vector var) {
    LatentPrior p;
    p.weights = {1.0};
    p.means = {std::move(mean)};
    p.variances = {std::move(var)};
    return p;
}

LatentPrior LatentPrior::two_mixture(Vector mean_a, Vector mean_b, double var) {
    if (mean_a.size() != mean_b.size())
        throw std::invalid_argument("LatentPrior: component dimension mismatch");
    LatentPrior p;
    p.weights = {0.5, 0.5};
    p.means = {mean_a, mean_b};
    p.variances = {Vector::Constant(mean_a.size(), var),
                   Vector::Constant(mean_b.size(), var)};
    return p;
}

Vector LatentPrior::sample(Rng& rng) const {
    if (means.empty()) throw std::logic_error("LatentPrior: empty prior");
    std::size_t k = 0;
    if (weights.size() > 1) {
        const double u = rng.uniform();
        double acc = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            if (u < acc) {
                k = i;
                break;
            }
            k = i;
        }
    }
    Vector y = means[k];
    for (Eigen::Index i = 0; i < y.size(); ++i)
        y[i] += std::sqrt(variances[k][i]) * rng.normal();
    return y;
}

ToyWorld ToyWorld::gaussian_1d(double prior_mean, double prior_var) {
    ToyWorld w;
    w.latent_dim = 1;
    w.map1 = DomainMap::identity(1);
    w.map2 = DomainMap::identity(1);
    w.prior = LatentPrior::gaussian(Vector::Constant(1, prior_mean),
                                    Vector::Constant(1, prior_var));
    return w;
}

const DomainMap& ToyWorld::map(int domain_index) const {
    if (domain_index == 1) return map1;
    if (domain_index == 2) return map2;
    throw std::invalid_argument("ToyWorld: domain index must be 1 or 2");
}

double ToyWorld::noise(int domain_index) const {
    if (domain_index == 1) return appearance_noise1;
    if (domain_index == 2) return appearance_noise2;
    throw std::invalid_argument("ToyWorld: domain index must be 1 or 2");
}

std::vector<PairedSample> sample_pair(const ToyWorld& world, int n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample_pair: n must be >= 1");
    Rng rng(seed, 7);
    std::vector<PairedSample> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        PairedSample s;
        s.y = world.prior.sample(rng);
        s.x1 = world.map1.apply(s.y);
        s.x2 = world.map2.apply(s.y);
        if (world.appearance_noise1 > 0.0)
            s.x1 += world.appearance_noise1 * rng.normal_vector(s.x1.size());
        if (world.appearance_noise2 > 0.0)
            s.x2 += world.appearance_noise2 * rng.normal_vector(s.x2.size());
        out.push_back(std::move(s));
    }
    return out;
}

Vector encode(const EncoderHandle& handle, const ToyWorld& world, const Vector& x,
              int domain_index, Rng& rng) {
    Vector y = world.map(domain_index).invert(x);
    if (handle.mode == EncoderMode::Perturbed && handle.delta_scale > 0.0)
        y += handle.delta_scale * rng.unit_vector(y.size());
    return y;
}

ToyDecoder ToyDecoder::identity(int dim) {
    ToyDecoder d;
    d.A = Eigen::MatrixXd::Identity(dim, dim);
    d.c = Vector::Zero(dim);
    d.bias_dir = Vector::Zero(dim);
    d.bias_eps = 0.0;
    return d;
}

ToyDecoder ToyDecoder::biased(int dim, double bias_eps, std::uint64_t seed) {
    if (bias_eps < 0.0) throw std::invalid_argument("ToyDecoder: bias_eps must be >= 0");
    Rng rng(seed, 11);
    ToyDecoder d;
    d.A = Eigen::MatrixXd::Identity(dim, dim);
    d.c = Vector::Zero(dim);
    d.bias_dir = rng.unit_vector(dim);
    d.bias_eps = bias_eps;
    return d;
}

Vector ToyDecoder::decode(const Vector& z) const {
    Vector out = A * z + c;
    if (bias_eps > 0.0) out += bias_eps * std::tanh(z.mean()) * bias_dir;
    return out;
}

Vector ToyDecoder::exact_decode(const Vector& z) const { return A * z + c; }

double ToyDecoder::lipschitz() const {
    const double a_norm = A.jacobiSvd().singularValues()[0];
    if (bias_eps == 0.0) return a_norm;
    return a_norm + bias_eps / std::sqrt(static_cast<double>(A.rows()));
}

WorldBridgeField::WorldBridgeField(const ToyWorld& world, int domain_index,
                                   Schedule schedule)
    : world_(&world), domain_index_(domain_index), schedule_(std::move(schedule)) {
    world.map(domain_index);  // validates the index
}

FieldOutput WorldBridgeField::eval(double t, const Vector& z, const Vector& zT) const {
    const double noise = world_->noise(domain_index_);
    GaussianDomain domain = GaussianDomain::isotropic(
        world_->map(domain_index_).apply(zT), noise * noise);
    return domain.oracle_field(z, zT, t, schedule_);
}

TranslationOutcome translate_pipeline(const ToyWorld& world,
                                      const VelocityField& target_field,
                                      const EncoderHandle& handle,
                                      const PairedSample& pair, int source_index,
                                      int target_index, const ToyDecoder& decoder,
                                      const SamplerConfig& cfg, Rng& rng,
                                      const VelocityField* source_field) {
    const Vector& x_source = source_index == 1 ? pair.x1 : pair.x2;
    const Vector& x_target = target_index == 1 ? pair.x1 : pair.x2;
    TranslationOutcome out;
    out.y_estimate = encode(handle, world, x_source, source_index, rng);
    out.encoder_delta = (out.y_estimate - world.map(source_index).invert(x_source)).norm();
    TranslateResult tr = translate(source_field, target_field, out.y_estimate, cfg);
    out.z_terminal = tr.output;
    out.x_translated = decoder.decode(tr.output);
    out.x_target_truth = x_target;
    return out;
}

}  // namespace bridgekit
