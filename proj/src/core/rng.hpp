#pragma once

#include <cstdint>
#include <cmath>
#include <random>
#include <string>
#include <string_view>

namespace sbdc {

// Stream splitting: stream_seed = splitmix64(master ^ fnv1a64(name)).
// Distributions are hand-rolled on top of the raw mt19937_64 output so that
// sequences are bit-identical across standard library implementations.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

class RngStream {
public:
    RngStream() : gen_(0) {}
    RngStream(std::uint64_t master_seed, std::string_view name)
        : gen_(splitmix64(master_seed ^ fnv1a64(name))) {}

    // [0, 1) with 53 random bits
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    double exponential(double mean) { return -mean * std::log1p(-uniform01()); }

    // Sum-of-exponentials inversion; exact and O(lambda) draws.
    std::uint64_t poisson(double lambda) {
        if (lambda <= 0.0) return 0;
        std::uint64_t count = 0;
        double acc = exponential(1.0);
        while (acc <= lambda) {
            ++count;
            acc += exponential(1.0);
        }
        return count;
    }

    // [0, n)
    std::uint64_t uniform_int(std::uint64_t n) {
        if (n == 0) return 0;
        // rejection sampling to avoid modulo bias
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t r;
        do {
            r = gen_();
        } while (r >= limit);
        return r % n;
    }

private:
    std::mt19937_64 gen_;
};

// Independent named streams per the determinism contract: consuming one
// stream never perturbs another.
struct RngStreams {
    RngStream traffic;
    RngStream outages;
    RngStream seu;
    RngStream tid_tolerance;

    explicit RngStreams(std::uint64_t master_seed)
        : traffic(master_seed, "traffic"),
          outages(master_seed, "outages"),
          seu(master_seed, "seu"),
          tid_tolerance(master_seed, "tid_tolerance") {}

    static const char* algorithm() { return "mt19937_64+splitmix64-streams/v1"; }
};

}  // namespace sbdc
