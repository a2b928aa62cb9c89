#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace pqn {

/// Seeded uniform RNG. Every random draw in the library goes through this
/// wrapper so that results depend only on the seed, not on the standard
/// library's distribution implementations.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform double in [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi). Returns lo exactly when lo == hi.
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    /// Uniform index in [0, n). n must be positive.
    std::size_t uniform_index(std::size_t n) {
        auto idx = static_cast<std::size_t>(uniform() * static_cast<double>(n));
        return idx < n ? idx : n - 1;
    }

    /// k distinct indices drawn uniformly from [0, population), partial
    /// Fisher-Yates. k must not exceed population.
    std::vector<std::size_t> sample_without_replacement(std::size_t population,
                                                        std::size_t k) {
        std::vector<std::size_t> pool(population);
        for (std::size_t i = 0; i < population; ++i)
            pool[i] = i;
        for (std::size_t i = 0; i < k; ++i) {
            std::size_t j = i + uniform_index(population - i);
            std::swap(pool[i], pool[j]);
        }
        pool.resize(k);
        return pool;
    }

  private:
    std::mt19937_64 engine_;
};

} // namespace pqn
