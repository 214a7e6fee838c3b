#pragma once

#include <cstdint>
#include <random>

#include "viewfusion/grid.hpp"

namespace viewfusion {

/// Deterministic seeded random stream. A (seed, stream) pair always yields the
/// same draw sequence; distinct streams of one seed are decorrelated. The
/// standard-normal path is hand-rolled (Marsaglia polar) because the stdlib
/// distributions are not pinned down across implementations.
class SeededRng {
public:
    explicit SeededRng(uint64_t seed, uint64_t stream = 0);

    double uniform();                 // [0, 1), 53-bit
    double normal();                  // standard normal
    uint64_t next_u64();
    int uniform_int(int n);           // [0, n)

    void fill_normal(ImageGrid& g);
    ImageGrid normal_grid(int height, int width, int channels);

    uint64_t seed() const { return seed_; }
    uint64_t stream() const { return stream_; }

private:
    uint64_t seed_ = 0;
    uint64_t stream_ = 0;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Stream layout for a generation run: each auto-regressive stage owns one
// noise stream (x_T, per-step shared eps') and one selection stream so that
// condition picking never perturbs the noise sequence.
inline uint64_t stage_noise_stream(int stage) { return 2 * static_cast<uint64_t>(stage); }
inline uint64_t stage_select_stream(int stage) { return 2 * static_cast<uint64_t>(stage) + 1; }

}  // namespace viewfusion
