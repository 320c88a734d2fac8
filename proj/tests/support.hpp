#pragma once

#include "fastatlas/fastatlas.hpp"
#include "oracles/components_oracle.hpp"
#include "oracles/frustum_oracle.hpp"
#include "oracles/packing_oracle.hpp"
#include "oracles/raster_oracle.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace support {

using namespace fastatlas;

inline oracle::H to_oracle(const HPoint& p) { return {p.x, p.y, p.z, p.w}; }

inline std::array<oracle::H, 3> to_oracle(const ClipTriangle& t)
{
    return {to_oracle(t[0]), to_oracle(t[1]), to_oracle(t[2])};
}

inline std::vector<oracle::Rect> rects_of(const AtlasLayout& layout)
{
    std::vector<oracle::Rect> out;
    out.reserve(layout.placements.size());
    for (const Placement& p : layout.placements)
        out.push_back({p.x, p.y, p.w, p.h});
    return out;
}

/// Random clip-space triangle; roughly a third of the vertices land behind the camera.
inline ClipTriangle random_clip_triangle(Rng& rng, double spread = 3.0)
{
    ClipTriangle t;
    for (HPoint& p : t)
        p = {rng.range(0, 1) ? (rng.uniform() * 2 - 1) * spread : rng.uniform() * 2 - 1,
             rng.range(0, 1) ? (rng.uniform() * 2 - 1) * spread : rng.uniform() * 2 - 1, rng.uniform() * 2 - 1,
             rng.uniform() * 3.0 - 1.0};
    return t;
}

/// Random triangle soup over a small vertex pool with a random visibility mask; the
/// pool is small relative to the triangle count so edges and vertices are shared often.
struct RandomMesh {
    Mesh mesh;
    std::vector<std::uint8_t> visible;
};

inline RandomMesh random_mesh(Rng& rng, std::uint32_t max_triangles)
{
    const auto nt = static_cast<std::uint32_t>(rng.range(0, max_triangles));
    const auto nv = static_cast<std::uint32_t>(rng.range(3, std::max<std::uint64_t>(3, nt + 2)));
    std::vector<Vec3> pos(nv);
    for (Vec3& p : pos)
        p = {rng.uniform(), rng.uniform(), rng.uniform()};
    std::vector<TriIndices> tris(nt);
    // Half the triangles reuse an edge of an earlier one, the rest are arbitrary.
    for (std::uint32_t t = 0; t < nt; ++t) {
        if (t > 0 && rng.range(0, 1)) {
            const TriIndices& o = tris[rng.range(0, t - 1)];
            const auto e = rng.range(0, 2);
            tris[t] = {o[(e + 1) % 3], o[e], static_cast<std::uint32_t>(rng.range(0, nv - 1))};
        } else {
            for (auto& v : tris[t])
                v = static_cast<std::uint32_t>(rng.range(0, nv - 1));
        }
    }
    const double density = rng.uniform();
    std::vector<std::uint8_t> vis(nt);
    for (auto& f : vis)
        f = rng.uniform() < density ? 1 : 0;
    return {Mesh::build(std::move(pos), std::move(tris)), std::move(vis)};
}

inline std::vector<oracle::Tri> oracle_tris(const Mesh& mesh)
{
    std::vector<oracle::Tri> out;
    for (const TriIndices& t : mesh.triangles)
        out.push_back({t[0], t[1], t[2]});
    return out;
}

inline std::vector<std::uint32_t> labels_of(const ChartSet& cs)
{
    std::vector<std::uint32_t> out(cs.chart_of_triangle.size(), oracle::kUnlabeled);
    for (std::size_t t = 0; t < out.size(); ++t)
        if (cs.chart_of_triangle[t] != kNoChart)
            out[t] = cs.chart_of_triangle[t];
    return out;
}

/// Quad on the z = depth plane spanning [x0, x1] x [y0, y1], counter-clockwise seen from +z.
inline void add_quad(std::vector<Vec3>& pos, std::vector<TriIndices>& tris, double x0, double y0, double x1,
                     double y1, double depth)
{
    const auto base = static_cast<std::uint32_t>(pos.size());
    pos.push_back({x0, y0, depth});
    pos.push_back({x1, y0, depth});
    pos.push_back({x1, y1, depth});
    pos.push_back({x0, y1, depth});
    tris.push_back({base, base + 1, base + 2});
    tris.push_back({base, base + 2, base + 3});
}

} // namespace support
