#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace geoctx {

/// Seeded generator with portable draws. The std distributions are
/// implementation-defined, so uniform and normal samples are derived from
/// raw mt19937_64 output here to keep synthetic data and training runs
/// bit-reproducible across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Independent sub-stream derived from a base seed and a name
    /// ("shuffle", "dropout", "init", "synth", ...).
    static Rng stream(std::uint64_t seed, std::string_view name);

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);
    double normal();
    bool bernoulli(double p) { return uniform() < p; }

    template <typename T>
    void shuffle(std::vector<T> &v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace geoctx
