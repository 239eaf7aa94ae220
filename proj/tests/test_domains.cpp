#include <doctest.h>

#include <cmath>

#include "bridgekit/domains.hpp"

using namespace bridgekit;

namespace {
Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

ToyWorld affine_1d_world(double noise1 = 0.0, double noise2 = 0.0) {
    ToyWorld w;
    w.latent_dim = 1;
    w.map1 = DomainMap::identity(1);
    w.map2 = DomainMap::affine(Eigen::MatrixXd::Constant(1, 1, 1.3), vec({0.4}));
    w.prior = LatentPrior::gaussian(vec({0.0}), vec({1.0}));
    w.appearance_noise1 = noise1;
    w.appearance_noise2 = noise2;
    return w;
}
}  // namespace

TEST_SUITE("domains") {

TEST_CASE("noiseless affine pairs invert to one shared latent") {
    ToyWorld w;
    w.latent_dim = 2;
    w.map1 = DomainMap::rotation_scale_shift(0.6, 1.4, vec({0.2, -0.1}));
    w.map2 = DomainMap::rotation_scale_shift(-0.3, 0.8, vec({1.0, 0.5}), 0.4);
    w.prior = LatentPrior::gaussian(Vector::Zero(2), Vector::Ones(2));
    const auto pairs = sample_pair(w, 50, 3);
    for (const auto& p : pairs) {
        CHECK((w.map1.invert(p.x1) - p.y).norm() <= 1e-10);
        CHECK((w.map2.invert(p.x2) - p.y).norm() <= 1e-10);
    }
}

TEST_CASE("identity maps give x = y, rotation by 90 degrees maps (1,0) to (0,1)") {
    ToyWorld w;
    w.latent_dim = 2;
    w.map1 = DomainMap::identity(2);
    w.map2 = DomainMap::rotation_scale_shift(3.14159265358979323846 / 2.0, 1.0,
                                             Vector::Zero(2));
    w.prior = LatentPrior::gaussian(Vector::Zero(2), Vector::Ones(2));
    const auto pairs = sample_pair(w, 10, 1);
    for (const auto& p : pairs) CHECK((p.x1 - p.y).norm() == 0.0);
    const Vector rotated = w.map2.apply(vec({1.0, 0.0}));
    CHECK(std::abs(rotated[0]) <= 1e-15);
    CHECK(rotated[1] == doctest::Approx(1.0));
}

TEST_CASE("sample_pair is reproducible per seed") {
    const ToyWorld w = affine_1d_world(0.1, 0.2);
    const auto a = sample_pair(w, 20, 77);
    const auto b = sample_pair(w, 20, 77);
    const auto c = sample_pair(w, 20, 78);
    for (int i = 0; i < 20; ++i) {
        CHECK((a[i].y - b[i].y).norm() == 0.0);
        CHECK((a[i].x1 - b[i].x1).norm() == 0.0);
        CHECK((a[i].x2 - b[i].x2).norm() == 0.0);
    }
    CHECK((a[0].y - c[0].y).norm() > 0.0);
}

TEST_CASE("encoder handle: oracle and controlled perturbation") {
    const ToyWorld w = affine_1d_world();
    const auto pairs = sample_pair(w, 5, 9);
    Rng rng(4, 0);
    const EncoderHandle oracle;
    for (const auto& p : pairs) {
        CHECK((encode(oracle, w, p.x1, 1, rng) - p.y).norm() <= 1e-12);
        CHECK((encode(oracle, w, p.x2, 2, rng) - p.y).norm() <= 1e-12);
    }
    EncoderHandle pert;
    pert.mode = EncoderMode::Perturbed;
    pert.delta_scale = 0.1;
    for (const auto& p : pairs) {
        const Vector e = encode(pert, w, p.x1, 1, rng);
        CHECK((e - p.y).norm() == doctest::Approx(0.1).epsilon(1e-12));
    }
    pert.delta_scale = 0.0;
    CHECK((encode(pert, w, pairs[0].x1, 1, rng) - pairs[0].y).norm() <= 1e-12);
}

TEST_CASE("recorded lipschitz constants bound observed stretch") {
    DomainMap warped =
        DomainMap::rotation_scale_shift(0.8, 1.7, vec({0.1, 0.2}), 0.5);
    const double lip = warped.lipschitz();
    const double inv_lip = warped.inv_lipschitz();
    Rng rng(7, 0);
    for (int i = 0; i < 10000; ++i) {
        const Vector y1 = 2.0 * rng.normal_vector(2);
        const Vector y2 = 2.0 * rng.normal_vector(2);
        const double stretch = (warped.apply(y1) - warped.apply(y2)).norm();
        CHECK(stretch <= lip * (y1 - y2).norm() * (1.0 + 1e-9));
        const Vector x1 = warped.apply(y1);
        const Vector x2 = warped.apply(y2);
        CHECK((y1 - y2).norm() <= inv_lip * (x1 - x2).norm() * (1.0 + 1e-9));
    }
}

TEST_CASE("warped maps invert to machine precision") {
    DomainMap warped = DomainMap::affine(Eigen::MatrixXd::Identity(3, 3) * 0.9,
                                         vec({0.1, -0.2, 0.3}), 0.7);
    Rng rng(11, 0);
    for (int i = 0; i < 100; ++i) {
        const Vector y = 3.0 * rng.normal_vector(3);
        CHECK((warped.invert(warped.apply(y)) - y).lpNorm<Eigen::Infinity>() <= 1e-10);
    }
}

TEST_CASE("mixture prior hits both components") {
    const LatentPrior prior = LatentPrior::two_mixture(vec({-2.0, 0.0}), vec({2.0, 0.0}));
    Rng rng(13, 0);
    int left = 0, right = 0;
    for (int i = 0; i < 2000; ++i) {
        const Vector y = prior.sample(rng);
        (y[0] < 0 ? left : right)++;
    }
    CHECK(left > 800);
    CHECK(right > 800);
}

TEST_CASE("translation with oracle everything is discretization-limited") {
    const ToyWorld w = affine_1d_world();
    const Schedule s = Schedule::linear_bridge(0.1);
    const WorldBridgeField field(w, 2, s);
    SamplerConfig cfg;
    cfg.n_steps = 4096;
    const ToyDecoder decoder = ToyDecoder::identity(1);
    const EncoderHandle handle;
    Rng rng(15, 0);
    const auto pairs = sample_pair(w, 10, 21);
    for (const auto& p : pairs) {
        const TranslationOutcome out =
            translate_pipeline(w, field, handle, p, 1, 2, decoder, cfg, rng);
        CHECK((out.x_translated - out.x_target_truth).norm() <= 5e-3);
        CHECK(out.encoder_delta <= 1e-12);
    }
}

TEST_CASE("encoder error dominates the translation error, roughly linearly") {
    const ToyWorld w = affine_1d_world();
    const Schedule s = Schedule::linear_bridge(0.1);
    const WorldBridgeField field(w, 2, s);
    SamplerConfig cfg;
    cfg.n_steps = 2048;
    const ToyDecoder decoder = ToyDecoder::identity(1);
    const auto pairs = sample_pair(w, 40, 33);

    auto mean_error = [&](double delta_scale) {
        EncoderHandle h;
        h.mode = delta_scale > 0.0 ? EncoderMode::Perturbed : EncoderMode::Oracle;
        h.delta_scale = delta_scale;
        Rng rng(17, 0);
        double acc = 0.0;
        for (const auto& p : pairs) {
            const TranslationOutcome out =
                translate_pipeline(w, field, h, p, 1, 2, decoder, cfg, rng);
            acc += (out.x_translated - out.x_target_truth).norm();
        }
        return acc / pairs.size();
    };
    const double e1 = mean_error(0.1);
    const double e2 = mean_error(0.5);
    CHECK(e2 / e1 >= 1.0);
    // the map is affine with |D'| = 1.3, so error ~ 1.3 * delta + O(tau)
    CHECK(std::abs(e1 - 0.13) <= 0.02);
    CHECK(std::abs(e2 - 0.65) <= 0.10);
}

TEST_CASE("identical domains degenerate translation into reconstruction") {
    ToyWorld w;
    w.latent_dim = 1;
    w.map1 = DomainMap::affine(Eigen::MatrixXd::Constant(1, 1, 1.1), vec({0.2}));
    w.map2 = w.map1;
    w.prior = LatentPrior::gaussian(vec({0.0}), vec({1.0}));
    const Schedule s = Schedule::linear_bridge(0.1);
    const WorldBridgeField field(w, 2, s);
    SamplerConfig cfg;
    cfg.n_steps = 2048;
    const ToyDecoder decoder = ToyDecoder::identity(1);
    const EncoderHandle handle;
    Rng rng(19, 0);
    const auto pairs = sample_pair(w, 10, 41);
    for (const auto& p : pairs) {
        CHECK((p.x1 - p.x2).norm() == 0.0);
        const TranslationOutcome out =
            translate_pipeline(w, field, handle, p, 1, 2, decoder, cfg, rng);
        CHECK((out.x_translated - p.x1).norm() <= 5e-3);
    }
}

TEST_CASE("pipeline with a source field and t_end = 1 matches the target-only route") {
    const ToyWorld w = affine_1d_world();
    const Schedule s = Schedule::linear_bridge(0.1);
    const WorldBridgeField target(w, 2, s);
    const WorldBridgeField source(w, 1, s);
    SamplerConfig cfg;
    cfg.n_steps = 256;
    const ToyDecoder decoder = ToyDecoder::identity(1);
    const EncoderHandle handle;
    const auto pairs = sample_pair(w, 5, 51);
    Rng r1(2, 0), r2(2, 0), r3(2, 0);
    for (const auto& p : pairs) {
        cfg.t_end = 1.0;
        const auto target_only =
            translate_pipeline(w, target, handle, p, 1, 2, decoder, cfg, r1);
        const auto mixed_off =
            translate_pipeline(w, target, handle, p, 1, 2, decoder, cfg, r2, &source);
        CHECK((target_only.x_translated - mixed_off.x_translated).norm() == 0.0);
        // an active mixing window pulls the output toward the source drift
        cfg.t_end = 0.3;
        const auto mixed_on =
            translate_pipeline(w, target, handle, p, 1, 2, decoder, cfg, r3, &source);
        CHECK((mixed_on.x_translated - target_only.x_translated).norm() > 0.0);
    }
}

TEST_CASE("biased decoder has the documented reconstruction error and lipschitz") {
    const ToyDecoder d = ToyDecoder::biased(3, 0.05, 7);
    CHECK(d.reconstruction_error() == 0.05);
    CHECK(d.lipschitz() == doctest::Approx(1.0 + 0.05 / std::sqrt(3.0)));
    Rng rng(23, 0);
    for (int i = 0; i < 200; ++i) {
        const Vector z = 2.0 * rng.normal_vector(3);
        CHECK((d.decode(z) - d.exact_decode(z)).norm() <= 0.05 + 1e-12);
        const Vector z2 = 2.0 * rng.normal_vector(3);
        CHECK((d.decode(z) - d.decode(z2)).norm() <=
              d.lipschitz() * (z - z2).norm() * (1.0 + 1e-9));
    }
}

}  // TEST_SUITE
