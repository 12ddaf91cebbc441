#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace capsent {

// Mixes a base seed with a stream id (domain index, vocab row, fold number...)
// so derived generators are decorrelated but fully reproducible.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// mt19937_64 with hand-rolled draws. std::uniform_*_distribution is
// implementation-defined, which would tie frozen test values and byte-identical
// artifacts to one standard library; these draws are pinned.
class rng {
  public:
    explicit rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // [0, n); n must be > 0. Modulo bias is ~2^-53 at our scales.
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

    // Fisher-Yates
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = below(i);
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::mt19937_64 gen_;
};

}  // namespace capsent
