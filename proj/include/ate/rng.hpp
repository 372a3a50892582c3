#ifndef ATE_RNG_HPP
#define ATE_RNG_HPP

#include <cmath>
#include <cstdint>

namespace ate {

// Counter-style generator built on the SplitMix64 finalizer. Streams are keyed
// by up to four 64-bit values (seed, replicate, unit, ...), so parallel
// replicates produce identical output regardless of scheduling.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(mix(seed)) {}

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static Rng keyed(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0,
                     std::uint64_t c = 0) {
        std::uint64_t s = mix(seed);
        s = mix(s ^ mix(a ^ 0xd1b54a32d192ed03ULL));
        s = mix(s ^ mix(b ^ 0x8cb92ba72f3d8dd7ULL));
        s = mix(s ^ mix(c ^ 0xa24baed4963ee407ULL));
        Rng r(0);
        r.state_ = s;
        return r;
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform on (0,1); never returns an exact endpoint
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586477 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    // Marsaglia-Tsang; shape a > 0, unit scale.
    double gamma(double a) {
        if (a < 1.0) {
            double u = uniform();
            return gamma(a + 1.0) * std::pow(u, 1.0 / a);
        }
        double d = a - 1.0 / 3.0;
        double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            double u = uniform();
            if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
                return d * v;
            }
        }
    }

    double chi_squared(double nu) { return 2.0 * gamma(0.5 * nu); }

    // bounded integer in [0, n)
    int uniform_int(int n) { return static_cast<int>(uniform() * n) % n; }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace ate

#endif
