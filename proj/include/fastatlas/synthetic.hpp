#pragma once

// Seeded heavy-tailed box sets. Uses only the engine's raw output (whose sequence the
// standard fixes) so instances are identical across standard libraries.

#include "fastatlas/packing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace fastatlas {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1).
    double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [lo, hi].
    std::uint64_t range(std::uint64_t lo, std::uint64_t hi) { return lo + engine_() % (hi - lo + 1); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

struct SyntheticOptions {
    std::uint32_t min_count = 1;
    std::uint32_t max_count = 400;
    double pareto_alpha = 1.1; // tail index
    double pareto_scale = 3.0; // smallest typical side, texels
};

/// Pareto-distributed sizes capped to [1, omega], aspect ratios within [1/4, 4].
inline std::vector<ChartBox> heavy_tailed_boxes(Rng& rng, std::uint32_t omega, const SyntheticOptions& opt = {})
{
    const auto count = static_cast<std::uint32_t>(rng.range(opt.min_count, opt.max_count));
    std::vector<ChartBox> boxes;
    boxes.reserve(count);
    const auto side = [&](double v) {
        return static_cast<std::uint32_t>(std::clamp(std::floor(v), 1.0, double(omega)));
    };
    std::uint32_t tri = 0;
    for (std::uint32_t i = 0; i < count; ++i) {
        const double u = 1.0 - rng.uniform(); // (0, 1]
        const double size = opt.pareto_scale / std::pow(u, 1.0 / opt.pareto_alpha);
        const double aspect = std::exp2(rng.uniform() * 4.0 - 2.0);
        const double s = std::sqrt(aspect);
        tri += static_cast<std::uint32_t>(rng.range(1, 64));
        boxes.push_back({side(size * s), side(size / s), i, tri});
    }
    return boxes;
}

} // namespace fastatlas
