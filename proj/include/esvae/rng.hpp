#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

namespace esvae {

// Deterministic splittable generator. All randomness in the project flows from
// one root seed through named substreams so that results do not depend on the
// order in which components draw.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(splitmix(seed ^ 0x9e3779b97f4a7c15ull)) {}

    // Derive an independent stream from (this seed, name, index).
    Rng substream(std::string_view name, std::uint64_t index = 0) const {
        std::uint64_t h = seed_of_state_;
        for (char c : name) h = (h ^ static_cast<std::uint64_t>(static_cast<unsigned char>(c))) * 0x100000001b3ull;
        h ^= splitmix(index + 0x632be59bd9b4e019ull);
        return Rng(h);
    }

    std::uint64_t next_u64() {
        state_ = splitmix(state_);
        return state_;
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller (one draw per call; the spare is cached).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // Integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Rejection-free modulo is fine here: n is always far below 2^64.
        return next_u64() % n;
    }

private:
    static std::uint64_t splitmix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    std::uint64_t state_;
    std::uint64_t seed_of_state_ = state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace esvae
