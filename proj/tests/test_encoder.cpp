#include <doctest.h>

#include <cmath>

#include "bridgekit/encoder.hpp"

using namespace bridgekit;

TEST_SUITE("encoder") {

TEST_CASE("gaussian kernels are unit-sum and 4-sigma truncated") {
    for (double sigma : {0.7, 1.0, 2.5}) {
        const Eigen::VectorXd k = gaussian_kernel(sigma);
        CHECK(k.sum() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(k.size() == 2 * static_cast<int>(std::ceil(4.0 * sigma)) + 1);
        CHECK(k.minCoeff() > 0.0);
    }
    CHECK_THROWS_AS(gaussian_kernel(0.0), std::invalid_argument);
}

TEST_CASE("constant image gives a zero response when w_s = 1") {
    RetinaFilter f;  // sigma_c = 1, w_s = 1, 2 iterations
    const Image img = Image::Constant(48, 48, 3.7);
    const Image r = retina_apply(f, img);
    CHECK(r.cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("response is invariant to a global intensity offset") {
    RetinaFilter f;
    Rng rng(31, 0);
    Image img(48, 48);
    for (int r = 0; r < 48; ++r)
        for (int c = 0; c < 48; ++c) img(r, c) = rng.normal();
    const Image base = retina_apply(f, img);
    const Image shifted = retina_apply(f, Image(img.array() + 11.5));
    CHECK((base - shifted).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("single bright pixel reproduces the center-surround profile") {
    // independent oracle: analytic truncated-renormalized gaussian taps
    auto taps = [](double sigma) {
        const int radius = static_cast<int>(std::ceil(4.0 * sigma));
        std::vector<double> k(2 * radius + 1);
        double sum = 0.0;
        for (int i = -radius; i <= radius; ++i) {
            k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
            sum += k[i + radius];
        }
        for (double& v : k) v /= sum;
        return k;
    };
    RetinaFilter f;
    f.iterations = 1;  // single pass: response is the kernel itself
    const int n = 41, mid = 20;
    Image img = Image::Zero(n, n);
    img(mid, mid) = 1.0;
    const Image r = retina_apply(f, img);

    const auto kc = taps(f.sigma_c);
    const auto ks = taps(f.sigma_s(1));
    const int rc = static_cast<int>(kc.size() / 2), rs = static_cast<int>(ks.size() / 2);
    for (int dy = -6; dy <= 6; ++dy)
        for (int dx = -6; dx <= 6; ++dx) {
            const double center = (std::abs(dx) <= rc && std::abs(dy) <= rc)
                                      ? kc[dx + rc] * kc[dy + rc]
                                      : 0.0;
            const double surround = (std::abs(dx) <= rs && std::abs(dy) <= rs)
                                        ? ks[dx + rs] * ks[dy + rs]
                                        : 0.0;
            CHECK(r(mid + dy, mid + dx) ==
                  doctest::Approx(center - f.w_s * surround).epsilon(1e-9));
        }
    // positive center, negative ring
    CHECK(r(mid, mid) > 0.0);
    CHECK(r(mid, mid + 4) < 0.0);
}

TEST_CASE("images smaller than the kernel support are rejected") {
    RetinaFilter f;  // widest sigma_s(2) = 5 -> support 41
    CHECK_THROWS_AS(retina_apply(f, Image::Zero(16, 16)), std::invalid_argument);
}

TEST_CASE("pca on a low-rank affine subspace reconstructs exactly") {
    Rng rng(17, 0);
    const int n = 200, d = 10, rank = 3;
    Eigen::MatrixXd basis(d, rank);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < rank; ++j) basis(i, j) = rng.normal();
    Eigen::VectorXd offset = rng.normal_vector(d);
    Eigen::MatrixXd data(n, d);
    for (int i = 0; i < n; ++i)
        data.row(i) = (offset + basis * rng.normal_vector(rank)).transpose();

    const PcaProjector p = pca_fit(data, rank);
    for (int i = 0; i < 20; ++i) {
        const Eigen::VectorXd x = data.row(i).transpose();
        const Eigen::VectorXd rec = p.reconstruct(p.project(x));
        CHECK((rec - x).lpNorm<Eigen::Infinity>() <= 1e-8);
    }
    // rank-deficient request errors and reports the achieved rank
    CHECK_THROWS_WITH_AS(pca_fit(data, rank + 2), doctest::Contains("rank 3"),
                         std::invalid_argument);
}

TEST_CASE("pca components are orthonormal and sign-fixed") {
    Rng rng(23, 0);
    const int n = 300, d = 8, B = 5;
    Eigen::MatrixXd data(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) data(i, j) = rng.normal() * (1.0 + j);
    const PcaProjector p = pca_fit(data, B);
    const Eigen::MatrixXd gram = p.basis().transpose() * p.basis();
    CHECK((gram - Eigen::MatrixXd::Identity(B, B)).cwiseAbs().maxCoeff() <= 1e-10);
    for (int j = 0; j < B; ++j) {
        Eigen::Index arg;
        p.basis().col(j).cwiseAbs().maxCoeff(&arg);
        CHECK(p.basis()(arg, j) >= 0.0);
    }
    // projection is idempotent through reconstruct
    const Eigen::VectorXd x = data.row(0).transpose();
    const Eigen::VectorXd y = p.project(x);
    CHECK((p.project(p.reconstruct(y)) - y).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("isotropic cloud spreads variance evenly") {
    Rng rng(29, 0);
    const int n = 20000, d = 8, B = 4;
    Eigen::MatrixXd data(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) data(i, j) = rng.normal();
    const PcaProjector p = pca_fit(data, B);
    const double total = p.explained_variance().sum();
    // each retained eigenvalue is about 1 (sampling noise ~ sqrt(2/n) + spread)
    for (int j = 0; j < B; ++j)
        CHECK(std::abs(p.explained_variance()[j] - 1.0) <= 0.06);
    CHECK(std::abs(total / d - static_cast<double>(B) / d) <= 0.03);
}

TEST_CASE("dominant direction of a stretched 2d cloud") {
    Rng rng(37, 0);
    const int n = 5000;
    Eigen::MatrixXd data(n, 2);
    for (int i = 0; i < n; ++i) {
        const double s = rng.normal();
        data(i, 0) = s + 1e-3 * rng.normal();
        data(i, 1) = s + 1e-3 * rng.normal();
    }
    const PcaProjector p = pca_fit(data, 1);
    const Eigen::VectorXd v = p.basis().col(0);
    const double angle = std::acos(std::min(1.0, std::abs(v.dot(Eigen::Vector2d(1, 1).normalized()))));
    CHECK(angle <= 1.0 * 3.14159265358979323846 / 180.0);
}

TEST_CASE("projector serialization round trip") {
    Rng rng(41, 0);
    Eigen::MatrixXd data(50, 6);
    for (int i = 0; i < 50; ++i)
        for (int j = 0; j < 6; ++j) data(i, j) = rng.normal();
    const PcaProjector p = pca_fit(data, 4);
    p.save("/tmp/bridgekit_test_proj.bin");
    const PcaProjector q = PcaProjector::load("/tmp/bridgekit_test_proj.bin");
    CHECK(q.components() == 4);
    CHECK((p.mean() - q.mean()).lpNorm<Eigen::Infinity>() <= 1e-6);
    CHECK((p.basis() - q.basis()).lpNorm<Eigen::Infinity>() <= 1e-6);
}

TEST_CASE("endpoint construction: deterministic branch, pooling, and noise scale") {
    Rng rng(43, 0);
    Eigen::MatrixXd data(400, 20);
    for (int i = 0; i < 400; ++i)
        for (int j = 0; j < 20; ++j) data(i, j) = rng.normal() * (j < 4 ? 3.0 : 1.0);
    const PcaProjector p = pca_fit(data, 16);
    const Eigen::VectorXd f = data.row(7).transpose();

    EndpointSpec det;  // b = 0
    Rng r1(1, 0), r2(1, 0);
    const Eigen::VectorXd a = build_endpoint(f, p, det, r1);
    const Eigen::VectorXd b = build_endpoint(f, p, det, r2);
    CHECK((a - b).norm() == 0.0);
    CHECK((a - p.project(f)).norm() == 0.0);

    EndpointSpec pooled;
    pooled.pooling = Pooling::ChannelAverage;
    pooled.pool_groups = 4;
    Rng r3(1, 0);
    const Eigen::VectorXd c = build_endpoint(f, p, pooled, r3);
    REQUIRE(c.size() == 4);
    const Eigen::VectorXd proj = p.project(f);
    for (int g = 0; g < 4; ++g)
        CHECK(c[g] == doctest::Approx(proj.segment(4 * g, 4).mean()).epsilon(1e-14));

    // b = 1: component-wise variance of the added noise within [0.99, 1.01]
    EndpointSpec noisy;
    noisy.b = 1.0;
    Rng r4(2, 0);
    const int n = 100000;
    const Eigen::VectorXd center = p.project(f);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(16), sumsq = Eigen::VectorXd::Zero(16);
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd z = build_endpoint(f, p, noisy, r4) - center;
        sum += z;
        sumsq += z.cwiseProduct(z);
    }
    const Eigen::VectorXd mean = sum / n;
    const Eigen::VectorXd var = sumsq / n - mean.cwiseProduct(mean);
    // pooled variance within 1% (SE 0.11%); per-component within 4.5 SE
    CHECK(std::abs(var.mean() - 1.0) <= 0.01);
    const double se_comp = std::sqrt(2.0 / n);
    for (int j = 0; j < 16; ++j) CHECK(std::abs(var[j] - 1.0) <= 4.5 * se_comp);
}

TEST_CASE("endpoint residuals pass a component-wise normality check") {
    Rng rng(47, 0);
    Eigen::MatrixXd data(60, 6);
    for (int i = 0; i < 60; ++i)
        for (int j = 0; j < 6; ++j) data(i, j) = rng.normal();
    const PcaProjector p = pca_fit(data, 4);
    const Eigen::VectorXd f = data.row(3).transpose();
    EndpointSpec spec;
    spec.b = 0.7;
    Rng r(5, 0);
    const int n = 100000;
    const Eigen::VectorXd center = p.project(f);
    Eigen::MatrixXd resid(n, 4);
    for (int i = 0; i < n; ++i)
        resid.row(i) = ((build_endpoint(f, p, spec, r) - center) / spec.b).transpose();
    // skewness SE = sqrt(6/n); excess kurtosis SE = sqrt(24/n)
    for (int j = 0; j < 4; ++j) {
        const double m = resid.col(j).mean();
        double m2 = 0, m3 = 0, m4 = 0;
        for (int i = 0; i < n; ++i) {
            const double d = resid(i, j) - m;
            m2 += d * d;
            m3 += d * d * d;
            m4 += d * d * d * d;
        }
        m2 /= n;
        m3 /= n;
        m4 /= n;
        const double skew = m3 / std::pow(m2, 1.5);
        const double kurt = m4 / (m2 * m2) - 3.0;
        CHECK(std::abs(skew) <= 5.0 * std::sqrt(6.0 / n));
        CHECK(std::abs(kurt) <= 5.0 * std::sqrt(24.0 / n));
    }
}

TEST_CASE("patch features have the documented layout") {
    RetinaFilter f;
    Rng rng(53, 0);
    Image img(64, 64);
    for (int r = 0; r < 64; ++r)
        for (int c = 0; c < 64; ++c)
            img(r, c) = std::sin(0.3 * r) + 0.2 * rng.normal();
    const Eigen::VectorXd feats = patch_features(f, img, 8);
    CHECK(feats.size() == 6 * 8 * 8);
    // orientation histograms are normalized to unit sum (or all-zero)
    for (int patch = 0; patch < 64; ++patch) {
        const double hsum = feats.segment(6 * patch + 2, 4).sum();
        CHECK((std::abs(hsum - 1.0) <= 1e-9 || hsum == 0.0));
    }
    CHECK_THROWS_AS(channel_average(Eigen::VectorXd::Zero(10), 3), std::invalid_argument);
}

}  // TEST_SUITE
