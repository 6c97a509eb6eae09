#pragma once

// Seedable random streams. The engine is std::mt19937_64; each stream is
// seeded from (master seed, purpose tag, index) through SplitMix64 so that
// independent purposes (coefficients, offers, responses, one stream per
// customer in the sampler) never share state and adding customers does not
// perturb draws made for earlier ones.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace offerlab {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose,
                                 std::uint64_t index = 0) {
    std::uint64_t tag = 0xcbf29ce484222325ULL;  // FNV-1a offset basis
    for (unsigned char c : purpose) {
        tag ^= c;
        tag *= 0x100000001b3ULL;
    }
    return splitmix64(splitmix64(seed ^ tag) + index);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}
    Rng(std::uint64_t seed, std::string_view purpose, std::uint64_t index = 0)
        : engine_(derive_seed(seed, purpose, index)) {}

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }
    long uniform_int(long lo, long hi) {
        return std::uniform_int_distribution<long>(lo, hi)(engine_);
    }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
    double gamma(double shape) { return std::gamma_distribution<double>(shape, 1.0)(engine_); }
    double chi_squared(double df) { return std::chi_squared_distribution<double>(df)(engine_); }
    bool bernoulli(double p) { return uniform() < p; }

    Eigen::VectorXd normal_vector(Eigen::Index n) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
        return v;
    }

    /// Index drawn with probability proportional to weights (need not sum to 1).
    std::size_t categorical(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        if (!(total > 0.0)) throw InvalidArgument("categorical: weights sum to zero");
        double u = uniform() * total;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (u < weights[i]) return i;
            u -= weights[i];
        }
        // floating-point remainder: last positive weight
        for (std::size_t i = weights.size(); i-- > 0;)
            if (weights[i] > 0.0) return i;
        return weights.size() - 1;
    }

    Eigen::VectorXd dirichlet(const Eigen::VectorXd& alpha) {
        Eigen::VectorXd g(alpha.size());
        for (Eigen::Index i = 0; i < alpha.size(); ++i) g[i] = gamma(alpha[i]);
        return g / g.sum();
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace offerlab
