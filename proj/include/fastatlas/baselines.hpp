#pragma once

// Reference packers used for comparison and as test oracles:
//   sequential_pack     classic one-box-at-a-time folding with exact row switches
//   superblock_pack     superblock-like grid allocator with chart capping and halving
//   exhaustive_optimal  exact best candidate scale for tiny instances

#include "fastatlas/error.hpp"
#include "fastatlas/packing.hpp"

#include <algorithm>
#include <bit>
#include <bitset>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

namespace fastatlas {

/// Places boxes one at a time, starting a new row (L, R, R pattern) exactly when the
/// next box would cross the atlas edge, then pushes up like pack_at_scale.
inline std::optional<AtlasLayout> sequential_pack(std::span<const OrientedBox> ordered, ScaleFactor s,
                                                  std::uint32_t omega, std::uint32_t min_dim = 1,
                                                  std::uint32_t padding = 0)
{
    if (!is_power_of_two(omega))
        throw Error("atlas size must be a power of two");
    const std::size_t n = ordered.size();
    std::vector<std::uint32_t> widths(n), heights(n);
    FoldResult placed;
    placed.row_of_box.resize(n);
    placed.x_of_box.resize(n);

    std::uint64_t row = 0, cursor = 0;
    for (std::size_t i = 0; i < n; ++i) {
        widths[i] = scaled_extent(ordered[i].w, s, min_dim, padding);
        heights[i] = scaled_extent(ordered[i].h, s, min_dim, padding);
        if (widths[i] > omega || heights[i] > omega)
            return std::nullopt;
        if (cursor + widths[i] > omega) {
            ++row;
            cursor = 0;
        }
        placed.row_of_box[i] = row;
        placed.x_of_box[i] = row_direction(row) == RowDirection::left_start
                                 ? std::int64_t(cursor)
                                 : std::int64_t(omega - cursor - widths[i]);
        cursor += widths[i];
    }
    if (n) {
        placed.row_direction.resize(row + 1);
        for (std::uint64_t r = 0; r <= row; ++r)
            placed.row_direction[r] = row_direction(r);
    }

    const PushResult pushed = push_up(placed, widths, heights, omega);
    if (pushed.height_used > omega)
        return std::nullopt;
    AtlasLayout layout{omega, s.num, s.den, s.value(), padding, {}};
    for (std::size_t i = 0; i < n; ++i) {
        const OrientedBox& b = ordered[i];
        layout.placements.push_back({b.source.chart_id, static_cast<std::uint32_t>(placed.x_of_box[i]),
                                     pushed.y_of_box[i], widths[i], heights[i], b.rotated, b.source.target_w,
                                     b.source.target_h});
    }
    return layout;
}

/// Sequential baseline with the same candidate grid as pack: largest k / n_scales that
/// sequential_pack accepts. Throws PackFailure when none does.
inline AtlasLayout sequential_search(std::span<const ChartBox> boxes, std::uint32_t omega, const PackOptions& opt = {})
{
    if (opt.n_scales == 0)
        throw Error("need at least one candidate scale");
    if (boxes.empty())
        return AtlasLayout{omega, opt.n_scales, opt.n_scales, 1.0, opt.padding, {}};
    const std::vector<OrientedBox> ordered = orient_and_order(boxes);
    for (std::uint32_t k = opt.n_scales; k >= 1; --k)
        if (auto layout = sequential_pack(ordered, {k, opt.n_scales}, omega, opt.min_dim, opt.padding))
            return std::move(*layout);
    throw PackFailure("sequential packer: no candidate scale fits");
}

struct SuperblockConfig {
    std::uint32_t block_size = 256;
    bool halving_enabled = true;
    std::uint32_t min_block_size = 16;
};

struct SuperblockResult {
    AtlasLayout layout;
    std::uint32_t block_size = 0; // block size that finally succeeded
    std::uint32_t halvings = 0;
    std::vector<double> downscale; // per placement; 1 when the chart fit its block
};

namespace detail {

    struct Shelf {
        std::uint32_t block = 0;
        std::uint32_t y = 0;
        std::uint32_t height = 0;
        std::uint32_t used = 0;
    };

    inline std::optional<SuperblockResult> superblock_attempt(std::span<const ChartBox> boxes, std::uint32_t omega,
                                                              std::uint32_t block)
    {
        const std::size_t n = boxes.size();
        std::vector<std::uint32_t> w(n), h(n);
        std::vector<double> factor(n, 1.0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint32_t longest = std::max(boxes[i].target_w, boxes[i].target_h);
            if (longest > block) {
                factor[i] = double(block) / double(longest);
                const auto shrink = [&](std::uint32_t v) {
                    return std::clamp<std::uint32_t>(static_cast<std::uint32_t>(std::ceil(v * factor[i] - 1e-9)), 1,
                                                     block);
                };
                w[i] = shrink(boxes[i].target_w);
                h[i] = shrink(boxes[i].target_h);
            } else {
                w[i] = boxes[i].target_w;
                h[i] = boxes[i].target_h;
            }
        }

        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i)
            idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            if (h[a] != h[b])
                return h[a] > h[b];
            return boxes[a].chart_id < boxes[b].chart_id;
        });

        const std::uint32_t per_side = omega / block;
        const std::uint32_t blocks = per_side * per_side;
        std::vector<std::uint32_t> block_used(blocks, 0);
        std::uint32_t first_open_block = 0;
        // Open shelves per power-of-two height class.
        std::vector<std::vector<Shelf>> shelves(std::bit_width(block) + 1);

        SuperblockResult result;
        result.block_size = block;
        result.layout = AtlasLayout{omega, 1, 1, 1.0, 0, {}};
        result.layout.placements.reserve(n);
        result.downscale.reserve(n);
        for (std::size_t i : idx) {
            const std::uint32_t cls_h = std::bit_ceil(h[i]);
            auto& open = shelves[std::bit_width(cls_h) - 1];
            Shelf* target = nullptr;
            for (Shelf& s : open)
                if (s.used + w[i] <= block) {
                    target = &s;
                    break;
                }
            if (!target) {
                while (first_open_block < blocks && block_used[first_open_block] == block)
                    ++first_open_block;
                for (std::uint32_t b = first_open_block; b < blocks; ++b)
                    if (block_used[b] + cls_h <= block) {
                        open.push_back({b, block_used[b], cls_h, 0});
                        block_used[b] += cls_h;
                        target = &open.back();
                        break;
                    }
            }
            if (!target)
                return std::nullopt;
            const std::uint32_t bx = (target->block % per_side) * block;
            const std::uint32_t by = (target->block / per_side) * block;
            result.layout.placements.push_back({boxes[i].chart_id, bx + target->used, by + target->y, w[i], h[i],
                                                false, boxes[i].target_w, boxes[i].target_h});
            result.downscale.push_back(factor[i]);
            target->used += w[i];
        }
        return result;
    }

} // namespace detail

/// Superblock-like baseline: charts larger than a block are scaled down to fit it, then
/// allocated first-fit into power-of-two shelves inside fixed blocks. On failure the
/// block size is halved (down to min_block_size) when enabled.
inline std::optional<SuperblockResult> superblock_pack(std::span<const ChartBox> boxes, std::uint32_t omega,
                                                       const SuperblockConfig& cfg = {})
{
    if (!is_power_of_two(omega) || !is_power_of_two(cfg.block_size) || cfg.block_size > omega)
        throw Error("superblock size must be a power of two no larger than the atlas");
    for (const ChartBox& b : boxes)
        if (b.target_w == 0 || b.target_h == 0)
            throw Error("box of chart " + std::to_string(b.chart_id) + " has a zero dimension");

    std::uint32_t halvings = 0;
    for (std::uint32_t block = cfg.block_size;; block /= 2, ++halvings) {
        if (auto r = detail::superblock_attempt(boxes, omega, block)) {
            r->halvings = halvings;
            return r;
        }
        if (!cfg.halving_enabled || block / 2 < cfg.min_block_size)
            return std::nullopt;
    }
}

namespace detail {

    /// Exact rectangle packing feasibility on a small grid (omega <= 32). Places boxes in
    /// decreasing area order at normal-pattern corners (sums of other boxes' sides), which
    /// covers every packing up to left/top justification. Identical boxes are placed in
    /// increasing corner order. Failed states are memoized.
    class GridPacker {
    public:
        struct Dims {
            std::uint32_t w, h;
        };

        GridPacker(std::uint32_t omega, std::vector<Dims> boxes)
            : omega_(omega), rows_(omega, 0), boxes_(std::move(boxes))
        {
            std::sort(boxes_.begin(), boxes_.end(), [](Dims a, Dims b) {
                if (a.w * a.h != b.w * b.h)
                    return a.w * a.h > b.w * b.h;
                return std::max(a.w, a.h) != std::max(b.w, b.h) ? std::max(a.w, a.h) > std::max(b.w, b.h)
                                                                : a.w > b.w;
            });
            std::bitset<64> normal;
            normal.set(0);
            for (Dims d : boxes_) {
                const std::bitset<64> prev = normal;
                normal |= prev << d.w;
                normal |= prev << d.h;
            }
            for (std::uint32_t c = 0; c < omega_; ++c)
                if (normal[c])
                    coords_.push_back(c);
            for (Dims d : boxes_)
                remaining_area_ += d.w * d.h;
        }

        bool feasible()
        {
            if (remaining_area_ > omega_ * omega_)
                return false;
            for (Dims d : boxes_)
                if (std::min(d.w, d.h) > omega_ || std::max(d.w, d.h) > omega_)
                    return false;
            return search(0, 0);
        }

    private:
        bool fits(std::uint32_t x, std::uint32_t y, std::uint32_t w, std::uint32_t h) const
        {
            if (x + w > omega_ || y + h > omega_)
                return false;
            const std::uint32_t mask = span_mask(x, w);
            for (std::uint32_t r = y; r < y + h; ++r)
                if (rows_[r] & mask)
                    return false;
            return true;
        }

        static std::uint32_t span_mask(std::uint32_t x, std::uint32_t w)
        {
            return static_cast<std::uint32_t>(((std::uint64_t(1) << w) - 1) << x);
        }

        void toggle(std::uint32_t x, std::uint32_t y, std::uint32_t w, std::uint32_t h)
        {
            const std::uint32_t mask = span_mask(x, w);
            for (std::uint32_t r = y; r < y + h; ++r)
                rows_[r] ^= mask;
        }

        std::string key(std::size_t i, std::uint32_t min_corner) const
        {
            std::string k(reinterpret_cast<const char*>(rows_.data()), rows_.size() * sizeof(std::uint32_t));
            k.push_back(static_cast<char>(i));
            k.append(reinterpret_cast<const char*>(&min_corner), sizeof(min_corner));
            return k;
        }

        // min_corner is the first admissible corner index when boxes_[i] repeats boxes_[i - 1].
        bool search(std::size_t i, std::uint32_t min_corner)
        {
            if (i == boxes_.size())
                return true;
            std::string k = key(i, min_corner);
            if (failed_.count(k))
                return false;

            const Dims d = boxes_[i];
            const Dims orientations[2] = {d, {d.h, d.w}};
            const bool repeats_next = i + 1 < boxes_.size() && boxes_[i + 1].w == d.w && boxes_[i + 1].h == d.h;
            for (std::uint32_t y : coords_)
                for (std::uint32_t x : coords_) {
                    const std::uint32_t corner = y * omega_ + x;
                    if (corner < min_corner)
                        continue;
                    for (int o = 0; o < (d.w == d.h ? 1 : 2); ++o) {
                        const Dims e = orientations[o];
                        if (!fits(x, y, e.w, e.h))
                            continue;
                        toggle(x, y, e.w, e.h);
                        const bool ok = search(i + 1, repeats_next ? corner + 1 : 0);
                        toggle(x, y, e.w, e.h);
                        if (ok)
                            return true;
                    }
                }
            failed_.insert(std::move(k));
            return false;
        }

        std::uint32_t omega_;
        std::vector<std::uint32_t> rows_;
        std::vector<Dims> boxes_;
        std::vector<std::uint32_t> coords_;
        std::uint32_t remaining_area_ = 0;
        std::unordered_set<std::string> failed_;
    };

} // namespace detail

/// Whether the boxes scaled by `scale` (ceil, min 1, 90 degree rotations allowed) admit
/// any non-overlapping placement in omega x omega.
inline bool exhaustive_feasible(std::span<const ChartBox> boxes, double scale, std::uint32_t omega)
{
    std::vector<detail::GridPacker::Dims> dims;
    for (const ChartBox& b : boxes)
        dims.push_back({scaled_extent(b.target_w, scale, 1, 0), scaled_extent(b.target_h, scale, 1, 0)});
    return detail::GridPacker(omega, std::move(dims)).feasible();
}

/// Largest candidate scale with a feasible placement, or nullopt if none. Feasibility is
/// monotone in the scale, so candidates are bisected.
inline std::optional<double> exhaustive_optimal(std::span<const ChartBox> boxes, std::uint32_t omega,
                                                std::span<const double> candidate_scales)
{
    if (boxes.size() > 6 || omega > 32 || omega == 0)
        throw Error("exhaustive search is limited to 6 boxes and a 32x32 atlas");
    std::vector<double> scales(candidate_scales.begin(), candidate_scales.end());
    std::sort(scales.begin(), scales.end());
    scales.erase(std::unique(scales.begin(), scales.end()), scales.end());
    if (boxes.empty())
        return scales.empty() ? std::nullopt : std::optional<double>(scales.back());

    std::size_t lo = 0, hi = scales.size(); // answer index in [lo, hi); hi = none yet
    std::optional<double> best;
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (exhaustive_feasible(boxes, scales[mid], omega)) {
            best = scales[mid];
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    return best;
}

} // namespace fastatlas
