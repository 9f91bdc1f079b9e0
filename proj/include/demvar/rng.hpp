#pragma once

#include <cstdint>

namespace demvar {

// Counter-based generator: output depends only on (seed, stream, counter),
// so sharded consumers draw identical values no matter how many workers
// run. Mixing is the splitmix64 finalizer applied to a keyed counter.
class CounterRng {
public:
    CounterRng(uint64_t seed, uint64_t stream)
        : key_(mix(seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1)))) {}

    uint64_t next_u64() { return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

    // uniform in [0, 1)
    double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

    // uniform in [0, n)
    uint64_t next_below(uint64_t n) { return next_u64() % n; }

private:
    static uint64_t mix(uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ULL;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return z;
    }
    uint64_t key_;
    uint64_t counter_ = 0;
};

}  // namespace demvar
