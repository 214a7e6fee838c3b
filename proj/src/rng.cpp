#include "viewfusion/rng.hpp"

#include <cmath>

namespace viewfusion {

namespace {

// splitmix64, used to spread (seed, stream) into a well-mixed engine seed.
uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

SeededRng::SeededRng(uint64_t seed, uint64_t stream)
    : seed_(seed), stream_(stream), engine_(splitmix64(splitmix64(seed) ^ splitmix64(~stream))) {}

uint64_t SeededRng::next_u64() { return engine_(); }

double SeededRng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double SeededRng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double scale = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * scale;
    has_spare_ = true;
    return u * scale;
}

int SeededRng::uniform_int(int n) {
    return static_cast<int>(next_u64() % static_cast<uint64_t>(n));
}

void SeededRng::fill_normal(ImageGrid& g) {
    for (double& v : g.data) v = normal();
}

ImageGrid SeededRng::normal_grid(int height, int width, int channels) {
    ImageGrid g(height, width, channels);
    fill_normal(g);
    return g;
}

}  // namespace viewfusion
