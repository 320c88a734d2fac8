#pragma once

// Deterministic uniform-scale packing of chart boxes into a fixed power-of-two atlas.
//
// Boxes are oriented tall, ordered by (height desc, min_tri asc), folded into rows with
// one prefix sum, shrunk until no row overflows, and pushed up against an advancing
// front. Every candidate scale k/n is evaluated independently; the largest accepted
// one wins.

#include "fastatlas/error.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace fastatlas {

struct ChartBox {
    std::uint32_t target_w = 1, target_h = 1; // texels, before scaling
    std::uint32_t chart_id = 0;
    std::uint32_t min_tri = 0; // unique within one pack request

    friend bool operator==(const ChartBox&, const ChartBox&) = default;
};

struct OrientedBox {
    std::uint32_t w = 1, h = 1; // h >= w
    bool rotated = false;
    ChartBox source;

    friend bool operator==(const OrientedBox&, const OrientedBox&) = default;
};

inline OrientedBox orient(const ChartBox& b)
{
    if (b.target_w > b.target_h)
        return {b.target_h, b.target_w, true, b};
    return {b.target_w, b.target_h, false, b};
}

struct Placement {
    std::uint32_t chart_id = 0;
    std::uint32_t x = 0, y = 0; // top-left corner, texels
    std::uint32_t w = 0, h = 0; // occupied extent including padding
    bool rotated = false;
    std::uint32_t target_w = 0, target_h = 0; // unrotated request

    friend bool operator==(const Placement&, const Placement&) = default;
};

struct AtlasLayout {
    std::uint32_t omega = 0;
    std::uint32_t scale_num = 1, scale_den = 1; // chosen candidate
    double scale = 1.0;                         // effective scale after overflow correction
    std::uint32_t padding = 0;
    std::vector<Placement> placements;

    friend bool operator==(const AtlasLayout&, const AtlasLayout&) = default;
};

enum class RowDirection : std::uint8_t { left_start, right_start };

/// Rows cycle L, R, R starting with a left-start row.
inline RowDirection row_direction(std::uint64_t row)
{
    return row % 3 == 0 ? RowDirection::left_start : RowDirection::right_start;
}

struct FoldResult {
    std::vector<std::uint64_t> row_of_box;
    std::vector<std::int64_t> x_of_box;
    std::vector<RowDirection> row_direction; // one entry per row
    std::uint64_t overflow_m = 0;

    std::size_t row_count() const { return row_direction.size(); }
};

inline bool is_power_of_two(std::uint64_t v) { return std::has_single_bit(v); }

/// Sorts boxes by (height desc, min_tri asc) through per-height buckets.
inline std::vector<OrientedBox> order(std::span<const OrientedBox> boxes, std::uint32_t max_h)
{
    std::vector<std::size_t> start(std::size_t(max_h) + 2, 0);
    for (const OrientedBox& b : boxes) {
        if (b.h > max_h)
            throw HeightOverflow("box of chart " + std::to_string(b.source.chart_id) + " has height " +
                                 std::to_string(b.h) + " > " + std::to_string(max_h));
        ++start[max_h - b.h + 1];
    }
    // Bucket 0 holds height max_h, so a forward scan gives descending heights.
    for (std::size_t i = 1; i < start.size(); ++i)
        start[i] += start[i - 1];
    std::vector<OrientedBox> out(boxes.size());
    std::vector<std::size_t> cursor(start.begin(), start.end() - 1);
    for (const OrientedBox& b : boxes)
        out[cursor[max_h - b.h]++] = b;
    for (std::size_t bucket = 0; bucket + 1 < start.size(); ++bucket) {
        const auto first = out.begin() + std::ptrdiff_t(start[bucket]);
        const auto last = out.begin() + std::ptrdiff_t(start[bucket + 1]);
        if (last - first > 1)
            std::sort(first, last, [](const OrientedBox& a, const OrientedBox& b) {
                if (a.source.min_tri != b.source.min_tri)
                    return a.source.min_tri < b.source.min_tri;
                if (a.source.chart_id != b.source.chart_id)
                    return a.source.chart_id < b.source.chart_id;
                return a.w < b.w;
            });
    }
    return out;
}

/// Prefix-sum folding: box i starts at p_i = sum of earlier widths, its row is p_i >> k
/// and its in-row offset p_i & (omega - 1), mirrored on right-start rows.
inline FoldResult fold(std::span<const std::uint32_t> widths, std::uint32_t omega)
{
    if (!is_power_of_two(omega))
        throw Error("atlas size must be a power of two");
    const int k = std::countr_zero(omega);
    const std::uint64_t mask = omega - 1;

    FoldResult r;
    r.row_of_box.resize(widths.size());
    r.x_of_box.resize(widths.size());
    std::uint64_t prefix = 0;
    std::uint64_t rows = 0;
    for (std::size_t i = 0; i < widths.size(); ++i) {
        const std::uint64_t row = prefix >> k;
        const std::uint64_t q = prefix & mask;
        const std::uint64_t w = widths[i];
        r.row_of_box[i] = row;
        r.x_of_box[i] = row_direction(row) == RowDirection::left_start
                            ? std::int64_t(q)
                            : std::int64_t(omega) - std::int64_t(q) - std::int64_t(w);
        if (q + w > omega)
            r.overflow_m = std::max(r.overflow_m, q + w - omega);
        rows = row + 1;
        prefix += w;
    }
    r.row_direction.resize(rows);
    for (std::uint64_t row = 0; row < rows; ++row)
        r.row_direction[row] = row_direction(row);
    return r;
}

/// S * omega / (omega + m).
inline double correct_overflow(double scale, std::uint64_t m, std::uint32_t omega)
{
    if (m == 0)
        return scale;
    return scale * double(omega) / (double(omega) + double(m));
}

struct PushResult {
    std::vector<std::uint32_t> y_of_box;
    std::uint64_t height_used = 0;
};

/// Advancing-front compaction, one row at a time. All boxes of a row read the front
/// before any of them writes it.
inline PushResult push_up(const FoldResult& fold, std::span<const std::uint32_t> widths,
                          std::span<const std::uint32_t> heights, std::uint32_t omega)
{
    if (fold.overflow_m != 0)
        throw Error("push_up requires a fold without horizontal overflow");
    const std::size_t n = widths.size();
    PushResult r;
    r.y_of_box.resize(n);
    std::vector<std::uint64_t> front(omega, 0);
    std::size_t begin = 0;
    while (begin < n) {
        std::size_t end = begin;
        while (end < n && fold.row_of_box[end] == fold.row_of_box[begin])
            ++end;
        for (std::size_t i = begin; i < end; ++i) {
            const auto x = static_cast<std::size_t>(fold.x_of_box[i]);
            r.y_of_box[i] = static_cast<std::uint32_t>(
                std::min<std::uint64_t>(*std::max_element(front.begin() + x, front.begin() + x + widths[i]),
                                        UINT32_MAX));
        }
        for (std::size_t i = begin; i < end; ++i) {
            const auto x = static_cast<std::size_t>(fold.x_of_box[i]);
            std::fill(front.begin() + x, front.begin() + x + widths[i], std::uint64_t(r.y_of_box[i]) + heights[i]);
        }
        begin = end;
    }
    r.height_used = n ? *std::max_element(front.begin(), front.end()) : 0;
    return r;
}

struct ScaleFactor {
    std::uint32_t num = 1, den = 1;

    double value() const { return double(num) / double(den); }
};

struct PackOptions {
    std::uint32_t n_scales = 64;
    std::uint32_t min_dim = 1;
    std::uint32_t padding = 0; // per side, per axis
    unsigned threads = 1;      // 0: hardware concurrency
    unsigned max_correction_rounds = 8;
};

/// Scaled integer extent: max(min_dim, ceil(S * target)) + 2 * padding.
inline std::uint32_t scaled_extent(std::uint32_t target, ScaleFactor s, std::uint32_t min_dim, std::uint32_t padding)
{
    const std::uint64_t c = (std::uint64_t(target) * s.num + s.den - 1) / s.den;
    return static_cast<std::uint32_t>(std::max<std::uint64_t>(min_dim, c) + 2ull * padding);
}

inline std::uint32_t scaled_extent(std::uint32_t target, double s, std::uint32_t min_dim, std::uint32_t padding)
{
    const double c = std::ceil(double(target) * s);
    return static_cast<std::uint32_t>(std::max<double>(min_dim, c) + 2.0 * padding);
}

/// One candidate scale. Returns nullopt when the candidate is rejected.
inline std::optional<AtlasLayout> pack_at_scale(std::span<const OrientedBox> ordered, ScaleFactor s,
                                                std::uint32_t omega, std::uint32_t min_dim = 1,
                                                std::uint32_t padding = 0, unsigned max_correction_rounds = 8)
{
    if (!is_power_of_two(omega))
        throw Error("atlas size must be a power of two");
    if (s.num == 0 || s.num > s.den)
        throw Error("scale must lie in (0, 1]");

    const std::size_t n = ordered.size();
    std::vector<std::uint32_t> widths(n), heights(n);
    const auto rescale = [&](auto scale) {
        for (std::size_t i = 0; i < n; ++i) {
            widths[i] = scaled_extent(ordered[i].w, scale, min_dim, padding);
            heights[i] = scaled_extent(ordered[i].h, scale, min_dim, padding);
        }
    };

    rescale(s);
    double effective = s.value();
    FoldResult folded = fold(widths, omega);
    for (unsigned round = 0; folded.overflow_m > 0; ++round) {
        if (round == max_correction_rounds)
            return std::nullopt;
        effective = correct_overflow(effective, folded.overflow_m, omega);
        rescale(effective);
        folded = fold(widths, omega);
    }

    // Area and height are necessary conditions; checking them first skips most rejects.
    std::uint64_t area = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (heights[i] > omega)
            return std::nullopt;
        area += std::uint64_t(widths[i]) * heights[i];
    }
    if (area > std::uint64_t(omega) * omega)
        return std::nullopt;

    const PushResult pushed = push_up(folded, widths, heights, omega);
    if (pushed.height_used > omega)
        return std::nullopt;

    AtlasLayout layout{omega, s.num, s.den, effective, padding, {}};
    layout.placements.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const OrientedBox& b = ordered[i];
        layout.placements.push_back({b.source.chart_id, static_cast<std::uint32_t>(folded.x_of_box[i]),
                                     pushed.y_of_box[i], widths[i], heights[i], b.rotated, b.source.target_w,
                                     b.source.target_h});
    }
    return layout;
}

inline std::vector<OrientedBox> orient_and_order(std::span<const ChartBox> boxes)
{
    std::vector<OrientedBox> oriented;
    oriented.reserve(boxes.size());
    std::uint32_t max_h = 0;
    for (const ChartBox& b : boxes) {
        if (b.target_w == 0 || b.target_h == 0)
            throw Error("box of chart " + std::to_string(b.chart_id) + " has a zero dimension");
        oriented.push_back(orient(b));
        max_h = std::max(max_h, oriented.back().h);
    }
    std::vector<std::uint32_t> keys;
    keys.reserve(boxes.size());
    for (const ChartBox& b : boxes)
        keys.push_back(b.min_tri);
    std::sort(keys.begin(), keys.end());
    if (std::adjacent_find(keys.begin(), keys.end()) != keys.end())
        throw Error("min_tri values must be unique within a pack request");
    return order(oriented, max_h);
}

/// Evaluates every candidate k / n_scales in parallel and returns the layout for the
/// largest accepted k. Throws PackFailure when every candidate rejects.
inline AtlasLayout pack(std::span<const ChartBox> boxes, std::uint32_t omega, const PackOptions& opt = {})
{
    if (!is_power_of_two(omega))
        throw Error("atlas size must be a power of two");
    if (opt.n_scales == 0)
        throw Error("need at least one candidate scale");
    if (boxes.empty())
        return AtlasLayout{omega, opt.n_scales, opt.n_scales, 1.0, opt.padding, {}};

    const std::vector<OrientedBox> ordered = orient_and_order(boxes);
    std::vector<std::optional<AtlasLayout>> results(opt.n_scales);
    std::atomic<std::uint32_t> next{0};
    const auto worker = [&] {
        for (std::uint32_t i = next++; i < opt.n_scales; i = next++)
            results[i] = pack_at_scale(ordered, ScaleFactor{i + 1, opt.n_scales}, omega, opt.min_dim, opt.padding,
                                       opt.max_correction_rounds);
    };

    unsigned threads = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, opt.n_scales);
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back(worker);
    }

    for (std::uint32_t i = opt.n_scales; i-- > 0;)
        if (results[i])
            return std::move(*results[i]);
    throw PackFailure("no candidate scale packs " + std::to_string(boxes.size()) + " boxes into " +
                      std::to_string(omega) + "x" + std::to_string(omega));
}

} // namespace fastatlas
