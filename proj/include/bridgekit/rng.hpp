#ifndef BRIDGEKIT_RNG_HPP
#define BRIDGEKIT_RNG_HPP

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace bridgekit {

// Deterministic RNG with explicit stream splitting. Every stochastic piece of
// the library draws from one of these, seeded as (seed, stream), so ensemble
// runs are independent of scheduling order. Normal variates use Box-Muller
// rather than std::normal_distribution, whose algorithm is
// implementation-defined.
class Rng {
  public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : engine_(mix(seed, stream)) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    Eigen::VectorXd normal_vector(Eigen::Index n) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
        return v;
    }

    // Uniformly distributed direction on the unit sphere.
    Eigen::VectorXd unit_vector(Eigen::Index n) {
        Eigen::VectorXd v = normal_vector(n);
        double norm = v.norm();
        while (norm == 0.0) {
            v = normal_vector(n);
            norm = v.norm();
        }
        return v / norm;
    }

    int bernoulli(double p) { return uniform() < p ? 1 : 0; }

  private:
    // splitmix64 over the (seed, stream) pair; decorrelates nearby streams.
    static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
        x ^= x >> 30;
        x *= 0xbf58476d1ce4e5b9ULL;
        x ^= x >> 27;
        x *= 0x94d049bb133111ebULL;
        x ^= x >> 31;
        return x;
    }

    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace bridgekit

#endif
