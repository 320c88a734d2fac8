#pragma once

// Atlas quality measures: packing efficiency, per-triangle texture stretch (singular
// values of the atlas -> screen map), effective shading rate and layout digests.

#include "fastatlas/error.hpp"
#include "fastatlas/geometry.hpp"
#include "fastatlas/packing.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fastatlas {

/// Placed area over the full omega x omega atlas.
inline double packing_efficiency(const AtlasLayout& layout)
{
    if (layout.omega == 0)
        return 0.0;
    std::uint64_t area = 0;
    for (const Placement& p : layout.placements)
        area += std::uint64_t(p.w) * p.h;
    return double(area) / (double(layout.omega) * double(layout.omega));
}

using Triangle2 = std::array<Vec2, 3>;

inline double signed_area(const Triangle2& t)
{
    return 0.5 * ((t[1].x - t[0].x) * (t[2].y - t[0].y) - (t[2].x - t[0].x) * (t[1].y - t[0].y));
}

struct SingularValues {
    double max = 0; // Gamma
    double min = 0; // gamma
};

/// Singular values of a 2x2 matrix [a b; c d], closed form.
inline SingularValues singular_values_2x2(double a, double b, double c, double d)
{
    const double e = (a + d) * 0.5, f = (a - d) * 0.5;
    const double g = (c + b) * 0.5, h = (c - b) * 0.5;
    const double q = std::hypot(e, h), r = std::hypot(f, g);
    return {q + r, std::abs(q - r)};
}

/// Stretch of the affine map taking the atlas triangle onto the screen triangle.
/// Values above 1 mean the atlas undersamples the screen.
inline SingularValues triangle_stretch(const Triangle2& screen, const Triangle2& atlas)
{
    const double a00 = atlas[1].x - atlas[0].x, a01 = atlas[2].x - atlas[0].x;
    const double a10 = atlas[1].y - atlas[0].y, a11 = atlas[2].y - atlas[0].y;
    const double det = a00 * a11 - a01 * a10;
    if (det == 0 || !std::isfinite(det))
        throw DegenerateTriangle();
    const double s00 = screen[1].x - screen[0].x, s01 = screen[2].x - screen[0].x;
    const double s10 = screen[1].y - screen[0].y, s11 = screen[2].y - screen[0].y;
    // J = S * A^-1
    const double i00 = a11 / det, i01 = -a01 / det, i10 = -a10 / det, i11 = a00 / det;
    return singular_values_2x2(s00 * i00 + s01 * i10, s00 * i01 + s01 * i11, s10 * i00 + s11 * i10,
                               s10 * i01 + s11 * i11);
}

struct TrianglePair {
    Triangle2 screen;
    Triangle2 atlas;
};

struct StretchReport {
    double l2 = 0;
    double linf = 0;
    std::vector<SingularValues> per_triangle;
};

/// Screen-area weighted RMS stretch and worst per-triangle stretch. Pairs with a
/// degenerate screen or atlas triangle are skipped.
inline StretchReport scene_stretch(std::span<const TrianglePair> pairs, bool keep_per_triangle = false)
{
    StretchReport report;
    double weighted = 0, total_area = 0;
    for (const TrianglePair& p : pairs) {
        const double area = std::abs(signed_area(p.screen));
        if (!(area > 0) || signed_area(p.atlas) == 0)
            continue;
        const SingularValues sv = triangle_stretch(p.screen, p.atlas);
        weighted += area * (sv.max * sv.max + sv.min * sv.min) * 0.5;
        total_area += area;
        report.linf = std::max(report.linf, sv.max);
        if (keep_per_triangle)
            report.per_triangle.push_back(sv);
    }
    if (total_area == 0)
        throw NoValidTriangles();
    report.l2 = std::sqrt(weighted / total_area);
    return report;
}

/// Texels read per shaded screen fragment.
inline double effective_shading_rate(std::uint64_t texels_read, std::uint64_t screen_fragments)
{
    if (screen_fragments == 0)
        throw Error("effective shading rate is undefined without visible fragments");
    return double(texels_read) / double(screen_fragments);
}

/// Stretch of each placement treated as an image of its requested box: the target
/// rectangle (split in two triangles) against the placement interior, rotation undone.
inline std::vector<TrianglePair> box_triangle_pairs(const AtlasLayout& layout)
{
    std::vector<TrianglePair> pairs;
    pairs.reserve(layout.placements.size() * 2);
    for (const Placement& p : layout.placements) {
        const double iw = double(p.w) - 2.0 * layout.padding;
        const double ih = double(p.h) - 2.0 * layout.padding;
        if (iw <= 0 || ih <= 0)
            continue;
        const double tw = p.target_w, th = p.target_h;
        const Vec2 s0{0, 0}, s1{tw, 0}, s2{tw, th}, s3{0, th};
        // Rotated placements hold the box transposed.
        const auto atlas = [&](Vec2 s) {
            const double u = s.x / tw, v = s.y / th;
            return p.rotated ? Vec2{v * iw, u * ih} : Vec2{u * iw, v * ih};
        };
        pairs.push_back({{s0, s1, s2}, {atlas(s0), atlas(s1), atlas(s2)}});
        pairs.push_back({{s0, s2, s3}, {atlas(s0), atlas(s2), atlas(s3)}});
    }
    return pairs;
}

using Digest = std::array<std::uint8_t, 32>;

inline constexpr const char* kDigestAlgorithm = "sha256";

namespace detail {

    inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v)
    {
        for (int i = 0; i < 4; ++i)
            out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v)
    {
        for (int i = 0; i < 8; ++i)
            out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

} // namespace detail

/// Canonical little-endian encoding: header fields, then placements ordered by chart_id.
inline std::vector<std::uint8_t> canonical_bytes(const AtlasLayout& layout)
{
    std::vector<Placement> sorted = layout.placements;
    std::sort(sorted.begin(), sorted.end(), [](const Placement& a, const Placement& b) {
        return a.chart_id != b.chart_id ? a.chart_id < b.chart_id : a.x != b.x ? a.x < b.x : a.y < b.y;
    });
    constexpr std::string_view magic = "FALAYOUT";
    std::vector<std::uint8_t> out(magic.begin(), magic.end());
    out.reserve(40 + sorted.size() * 29);
    detail::put_u32(out, layout.omega);
    detail::put_u32(out, layout.scale_num);
    detail::put_u32(out, layout.scale_den);
    detail::put_u64(out, std::bit_cast<std::uint64_t>(layout.scale));
    detail::put_u32(out, layout.padding);
    detail::put_u64(out, sorted.size());
    for (const Placement& p : sorted) {
        detail::put_u32(out, p.chart_id);
        detail::put_u32(out, p.x);
        detail::put_u32(out, p.y);
        detail::put_u32(out, p.w);
        detail::put_u32(out, p.h);
        out.push_back(p.rotated ? 1 : 0);
        detail::put_u32(out, p.target_w);
        detail::put_u32(out, p.target_h);
    }
    return out;
}

inline Digest sha256(std::span<const std::uint8_t> bytes)
{
    Digest d{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), d.data(), &len, EVP_sha256(), nullptr) != 1 || len != d.size())
        throw Error("sha256 digest failed");
    return d;
}

inline Digest layout_digest(const AtlasLayout& layout) { return sha256(canonical_bytes(layout)); }

inline std::string to_hex(const Digest& d)
{
    static constexpr char kHex[] = "0123456789abcdef";
    std::string s;
    s.reserve(64);
    for (std::uint8_t b : d) {
        s.push_back(kHex[b >> 4]);
        s.push_back(kHex[b & 15]);
    }
    return s;
}

} // namespace fastatlas
