#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace soil {

// Deterministic splitmix64 generator. std:: distributions are
// implementation-defined, so all randomness in the project goes through
// this class to keep outputs bit-identical across platforms and runs.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    float next_float() { return float(next_u64() >> 40) * 0x1.0p-24f; }

    // uniform integer in [0, n), n >= 1
    uint64_t next_below(uint64_t n) { return next_u64() % n; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // inclusive bounds
    int uniform_int(int lo, int hi) {
        return lo + int(next_below(uint64_t(hi - lo + 1)));
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[size_t(next_below(i))]);
        }
    }

private:
    uint64_t state_;
};

// Child stream derivation so per-item generators are independent of
// evaluation order (parallel output must equal serial output).
inline uint64_t derive_seed(uint64_t seed, uint64_t index) {
    uint64_t z = seed ^ (0x9e3779b97f4a7c15ull * (index + 0x100000001b3ull));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace soil
