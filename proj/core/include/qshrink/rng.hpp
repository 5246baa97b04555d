#ifndef QSHRINK_RNG_HPP
#define QSHRINK_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace qshrink {

// splitmix64 step; used to key independent substreams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic random stream.  All sampling routines are implemented on top
// of mt19937_64 (whose output sequence is fixed by the standard) so that runs
// are bitwise reproducible across platforms and thread counts.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Substream keyed by (seed, index): replicate i draws from stream_for(seed, i)
    // regardless of scheduling, so parallel and serial runs agree.
    static Rng stream_for(std::uint64_t seed, std::uint64_t index) {
        std::uint64_t s = seed;
        (void)splitmix64(s);
        s ^= 0xd1342543de82ef95ULL * (index + 1);
        std::uint64_t mixed = splitmix64(s);
        return Rng(mixed ^ splitmix64(s));
    }

    std::uint64_t next_u64() { return gen_(); }

    // Uniform on (0,1); never returns 0 or 1.
    double uniform() {
        const double u = (next_u64() >> 11) * 0x1.0p-53;
        return u > 0.0 ? u : 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // Box–Muller with a cached spare.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    double cauchy() { return std::tan(M_PI * (uniform() - 0.5)); }

    // Marsaglia–Tsang; valid for shape > 0.
    double gamma(double shape) {
        if (shape < 1.0) {
            const double u = uniform();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    double chi_squared(double df) { return df <= 0.0 ? 0.0 : 2.0 * gamma(0.5 * df); }

    // Non-central draw via chi2(df-1) + (Z + sqrt(lambda))^2, df >= 1.
    double chi_squared_noncentral(double df, double lambda) {
        const double z = normal() + std::sqrt(lambda);
        return chi_squared(df - 1.0) + z * z;
    }

    // Fisher–Yates over [0, n); fills `out` with a permutation.
    template <typename IndexVec>
    void shuffle_indices(IndexVec& out, std::size_t n) {
        out.resize(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<typename IndexVec::value_type>(i);
        for (std::size_t i = n; i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(next_u64() % i);
            std::swap(out[i - 1], out[j]);
        }
    }

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace qshrink

#endif
