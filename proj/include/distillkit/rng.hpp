#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string_view>
#include <vector>

#include "distillkit/errors.hpp"

namespace distillkit {

// splitmix64 finalizer; used to derive decorrelated stream seeds.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_tag(std::string_view tag) {
    // FNV-1a
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

// Deterministic sub-seed for a named stream, e.g. ("extractor", iter).
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
    std::uint64_t h = mix64(master ^ hash_tag(tag));
    h = mix64(h ^ (a * 0x9e3779b97f4a7c15ull + 1));
    h = mix64(h ^ (b * 0xc2b2ae3d27d4eb4full + 1));
    return h;
}

// Seeded generator with hand-rolled distributions so that streams are
// reproducible across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). Modulo bias is negligible for desk-scale n.
    std::int64_t uniform_int(std::int64_t n) {
        if (n <= 0) throw ContractError("Rng::uniform_int: n must be positive");
        return static_cast<std::int64_t>(engine_() % static_cast<std::uint64_t>(n));
    }

    bool bernoulli(double p = 0.5) { return uniform() < p; }

    // Standard normal via Box-Muller; second variate is cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double two_pi = 6.283185307179586476925286766559;
        spare_ = r * std::sin(two_pi * u2);
        have_spare_ = true;
        return r * std::cos(two_pi * u2);
    }

    template <typename It>
    void shuffle(It first, It last) {
        const auto n = static_cast<std::int64_t>(last - first);
        for (std::int64_t i = n - 1; i > 0; --i) {
            std::swap(first[i], first[uniform_int(i + 1)]);
        }
    }

    // k distinct indices drawn from [0, n), in draw order.
    std::vector<int> sample_without_replacement(int n, int k) {
        if (k > n) throw ContractError("sample_without_replacement: k > n");
        std::vector<int> pool(n);
        std::iota(pool.begin(), pool.end(), 0);
        std::vector<int> out;
        out.reserve(k);
        for (int i = 0; i < k; ++i) {
            const auto j = uniform_int(n - i);
            out.push_back(pool[j]);
            std::swap(pool[j], pool[n - 1 - i]);
        }
        return out;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace distillkit
