#pragma once

// Per-frame visibility and chartification: a software depth prepass, a second pass
// that flags triangles owning at least one depth-passing sample, and union-find
// grouping of visible triangles into charts.

#include "fastatlas/error.hpp"
#include "fastatlas/geometry.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <utility>
#include <vector>

namespace fastatlas {

inline constexpr std::uint32_t kNoChart = std::numeric_limits<std::uint32_t>::max();
inline constexpr std::int32_t kNoNeighbor = -1;

using TriIndices = std::array<std::uint32_t, 3>;

/// Indexed triangle soup with edge adjacency. adjacency[t][e] is the triangle across
/// edge (v[e], v[(e+1)%3]) or kNoNeighbor. Edges shared by more than two triangles are
/// treated as boundaries.
struct Mesh {
    std::vector<Vec3> positions;
    std::vector<TriIndices> triangles;
    std::vector<std::array<std::int32_t, 3>> adjacency;

    std::size_t triangle_count() const { return triangles.size(); }
    std::size_t vertex_count() const { return positions.size(); }

    WorldTriangle world_triangle(std::size_t t) const
    {
        const TriIndices& f = triangles[t];
        return {positions[f[0]], positions[f[1]], positions[f[2]]};
    }

    static Mesh build(std::vector<Vec3> positions, std::vector<TriIndices> triangles)
    {
        Mesh mesh{std::move(positions), std::move(triangles), {}};
        const auto nv = mesh.positions.size();
        for (const TriIndices& f : mesh.triangles)
            for (std::uint32_t v : f)
                if (v >= nv)
                    throw Error("triangle references vertex " + std::to_string(v) + " out of range");
        mesh.adjacency.assign(mesh.triangles.size(), {kNoNeighbor, kNoNeighbor, kNoNeighbor});

        struct EdgeUse {
            std::uint32_t tri;
            std::uint8_t edge;
        };
        std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<EdgeUse>> edges;
        for (std::uint32_t t = 0; t < mesh.triangles.size(); ++t) {
            const TriIndices& f = mesh.triangles[t];
            for (std::uint8_t e = 0; e < 3; ++e) {
                const std::uint32_t a = f[e], b = f[(e + 1) % 3];
                if (a == b)
                    continue;
                edges[{std::min(a, b), std::max(a, b)}].push_back({t, e});
            }
        }
        for (const auto& [key, uses] : edges) {
            if (uses.size() != 2 || uses[0].tri == uses[1].tri)
                continue;
            mesh.adjacency[uses[0].tri][uses[0].edge] = static_cast<std::int32_t>(uses[1].tri);
            mesh.adjacency[uses[1].tri][uses[1].edge] = static_cast<std::int32_t>(uses[0].tri);
        }
        return mesh;
    }
};

struct Resolution {
    std::uint32_t width = 1, height = 1;
};

struct DepthBuffer {
    Resolution res;
    std::vector<double> depth; // row-major, row 0 at the top

    double at(std::uint32_t x, std::uint32_t y) const { return depth[std::size_t(y) * res.width + x]; }
};

struct VisibilityBuffer {
    Resolution res;
    std::vector<std::uint8_t> flags;

    bool visible(std::size_t t) const { return flags[t] != 0; }
    std::size_t count() const { return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), 1)); }
};

struct RasterOptions {
    bool backface_cull = true;
    double depth_epsilon = 1e-6; // relative
};

namespace detail {

    /// Sign of the homogeneous determinant |x y w|; positive for triangles that face the
    /// eye with counter-clockwise winding. Valid even when vertices straddle w = 0.
    inline bool front_facing(const ClipTriangle& t)
    {
        const double det = t[0].x * (t[1].y * t[2].w - t[2].y * t[1].w) - t[1].x * (t[0].y * t[2].w - t[2].y * t[0].w) +
                           t[2].x * (t[0].y * t[1].w - t[1].y * t[0].w);
        return det > 0;
    }

    struct ScreenVertex {
        double x, y, z;
    };

    inline bool top_left(const ScreenVertex& a, const ScreenVertex& b)
    {
        const double dx = b.x - a.x, dy = b.y - a.y;
        return (dy == 0 && dx > 0) || dy < 0;
    }

    /// Pixel-center coverage of one screen triangle; fn(x, y, depth) per covered sample.
    template <class Fn>
    bool raster_triangle(ScreenVertex a, ScreenVertex b, ScreenVertex c, Resolution res, Fn&& fn)
    {
        const auto edge = [](const ScreenVertex& p, const ScreenVertex& q, double x, double y) {
            return (q.x - p.x) * (y - p.y) - (q.y - p.y) * (x - p.x);
        };
        double area = edge(a, b, c.x, c.y);
        if (area == 0)
            return false;
        if (area < 0) {
            std::swap(b, c);
            area = -area;
        }
        const bool tl_ab = top_left(a, b), tl_bc = top_left(b, c), tl_ca = top_left(c, a);

        const auto lo = [](double v) { return static_cast<long>(std::floor(v - 0.5)); };
        const auto hi = [](double v) { return static_cast<long>(std::ceil(v - 0.5)); };
        const long x0 = std::max(0L, lo(std::min({a.x, b.x, c.x})));
        const long x1 = std::min(long(res.width) - 1, hi(std::max({a.x, b.x, c.x})));
        const long y0 = std::max(0L, lo(std::min({a.y, b.y, c.y})));
        const long y1 = std::min(long(res.height) - 1, hi(std::max({a.y, b.y, c.y})));

        for (long py = y0; py <= y1; ++py) {
            const double sy = py + 0.5;
            for (long px = x0; px <= x1; ++px) {
                const double sx = px + 0.5;
                const double w0 = edge(b, c, sx, sy); // weight of a
                const double w1 = edge(c, a, sx, sy); // weight of b
                const double w2 = edge(a, b, sx, sy); // weight of c
                if (w0 < 0 || w1 < 0 || w2 < 0)
                    continue;
                if ((w0 == 0 && !tl_bc) || (w1 == 0 && !tl_ca) || (w2 == 0 && !tl_ab))
                    continue;
                const double z = (w0 * a.z + w1 * b.z + w2 * c.z) / area;
                if (fn(std::uint32_t(px), std::uint32_t(py), z))
                    return true;
            }
        }
        return false;
    }

    /// Clips against the full frustum and rasterizes the result as a fan.
    /// fn returns true to stop early; the return value reports whether it did.
    template <class Fn>
    bool raster_clip_triangle(const ClipTriangle& tri, Resolution res, Fn&& fn)
    {
        std::vector<HPoint> poly(tri.begin(), tri.end()), scratch;
        for (ClipPlane plane : kFrustumPlanes) {
            clip_polygon(poly, plane, scratch);
            poly.swap(scratch);
            if (poly.size() < 3)
                return false;
        }
        std::vector<ScreenVertex> sv;
        sv.reserve(poly.size());
        for (const HPoint& p : poly) {
            if (!(p.w > 0))
                return false;
            const Vec2 px = ndc_to_pixel({p.x / p.w, p.y / p.w}, res.width, res.height);
            sv.push_back({px.x, px.y, p.z / p.w});
        }
        for (std::size_t i = 1; i + 1 < sv.size(); ++i)
            if (raster_triangle(sv[0], sv[i], sv[i + 1], res, fn))
                return true;
        return false;
    }

    inline bool culled(const ClipTriangle& tri, const RasterOptions& opt)
    {
        return opt.backface_cull && !front_facing(tri);
    }

} // namespace detail

/// Minimum NDC depth per pixel center; uncovered pixels hold +infinity.
inline DepthBuffer depth_prepass(const Mesh& mesh, const CameraFrame& cam, Resolution res,
                                 const RasterOptions& opt = {})
{
    if (res.width == 0 || res.height == 0)
        throw Error("depth buffer resolution must be at least 1x1");
    DepthBuffer buf{res, std::vector<double>(std::size_t(res.width) * res.height,
                                             std::numeric_limits<double>::infinity())};
    const Mat4 vp = cam.view_proj();
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
        const WorldTriangle w = mesh.world_triangle(t);
        const ClipTriangle tri{vp.apply(w[0]), vp.apply(w[1]), vp.apply(w[2])};
        if (detail::culled(tri, opt))
            continue;
        detail::raster_clip_triangle(tri, res, [&](std::uint32_t x, std::uint32_t y, double z) {
            double& d = buf.depth[std::size_t(y) * res.width + x];
            d = std::min(d, z);
            return false;
        });
    }
    return buf;
}

/// Flags every triangle with at least one pixel-center sample passing the depth test.
inline VisibilityBuffer mark_visible(const Mesh& mesh, const CameraFrame& cam, const DepthBuffer& depth,
                                     const RasterOptions& opt = {})
{
    VisibilityBuffer vis{depth.res, std::vector<std::uint8_t>(mesh.triangle_count(), 0)};
    const Mat4 vp = cam.view_proj();
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
        const WorldTriangle w = mesh.world_triangle(t);
        const ClipTriangle tri{vp.apply(w[0]), vp.apply(w[1]), vp.apply(w[2])};
        if (detail::culled(tri, opt))
            continue;
        vis.flags[t] = detail::raster_clip_triangle(tri, depth.res, [&](std::uint32_t x, std::uint32_t y, double z) {
            const double stored = depth.at(x, y);
            return z <= stored + opt.depth_epsilon * std::max(1.0, std::abs(stored));
        });
    }
    return vis;
}

struct Chart {
    std::uint32_t id = kNoChart; // minimum member triangle index
    std::vector<std::uint32_t> triangles;
};

struct ChartSet {
    std::vector<std::uint32_t> chart_of_triangle; // kNoChart for invisible triangles
    std::vector<Chart> charts;                    // sorted by id
    std::vector<std::uint32_t> vertex_to_chart;   // kNoChart for vertices of no visible triangle

    friend bool operator==(const ChartSet& a, const ChartSet& b)
    {
        if (a.chart_of_triangle != b.chart_of_triangle || a.vertex_to_chart != b.vertex_to_chart ||
            a.charts.size() != b.charts.size())
            return false;
        for (std::size_t i = 0; i < a.charts.size(); ++i)
            if (a.charts[i].id != b.charts[i].id || a.charts[i].triangles != b.charts[i].triangles)
                return false;
        return true;
    }
};

namespace detail {

    /// Union-find over triangle indices where every root is the minimum of its set.
    class MinUnionFind {
    public:
        explicit MinUnionFind(std::size_t n) : parent_(n)
        {
            for (std::size_t i = 0; i < n; ++i)
                parent_[i] = static_cast<std::uint32_t>(i);
        }

        std::uint32_t& parent(std::uint32_t i) { return parent_[i]; }

        std::uint32_t find(std::uint32_t i)
        {
            while (parent_[i] != i) {
                parent_[i] = parent_[parent_[i]];
                i = parent_[i];
            }
            return i;
        }

        /// Hooks the larger root under the smaller one.
        void hook(std::uint32_t a, std::uint32_t b)
        {
            std::uint32_t ra = find(a), rb = find(b);
            while (ra != rb) {
                if (ra < rb) {
                    parent_[rb] = ra;
                    rb = find(rb);
                } else {
                    parent_[ra] = rb;
                    ra = find(ra);
                }
            }
        }

        void flatten()
        {
            for (std::size_t i = 0; i < parent_.size(); ++i) {
                std::uint32_t cur = parent_[i];
                while (cur > parent_[cur])
                    cur = parent_[cur];
                parent_[i] = cur;
            }
        }

    private:
        std::vector<std::uint32_t> parent_;
    };

    inline ChartSet collect(const Mesh& mesh, std::span<const std::uint8_t> visible, MinUnionFind& uf)
    {
        ChartSet cs;
        cs.chart_of_triangle.assign(mesh.triangle_count(), kNoChart);
        cs.vertex_to_chart.assign(mesh.vertex_count(), kNoChart);
        std::vector<std::uint32_t> slot(mesh.triangle_count(), kNoChart);
        for (std::uint32_t t = 0; t < mesh.triangle_count(); ++t) {
            if (!visible[t])
                continue;
            const std::uint32_t root = uf.find(t);
            cs.chart_of_triangle[t] = root;
            if (slot[root] == kNoChart) {
                slot[root] = static_cast<std::uint32_t>(cs.charts.size());
                cs.charts.push_back({root, {}});
            }
            cs.charts[slot[root]].triangles.push_back(t);
        }
        // Triangles are visited in increasing order, so roots appear in increasing order too.
        return cs;
    }

} // namespace detail

/// Connected components of visible triangles over shared edges, labeled by their
/// minimum triangle index. vertex_to_chart is left unpopulated.
inline ChartSet connected_charts(const Mesh& mesh, const VisibilityBuffer& vis)
{
    if (vis.flags.size() != mesh.triangle_count())
        throw Error("visibility buffer does not match mesh");
    const auto n = static_cast<std::uint32_t>(mesh.triangle_count());
    detail::MinUnionFind uf(n);

    // Initialization: link to the lowest visible neighbor.
    for (std::uint32_t t = 0; t < n; ++t) {
        if (!vis.visible(t))
            continue;
        for (std::int32_t j : mesh.adjacency[t])
            if (j != kNoNeighbor && vis.visible(std::size_t(j)))
                uf.parent(t) = std::min(uf.parent(t), static_cast<std::uint32_t>(j));
    }
    // Hooking to a fixpoint over all visible edges.
    for (std::uint32_t t = 0; t < n; ++t) {
        if (!vis.visible(t))
            continue;
        for (std::int32_t j : mesh.adjacency[t])
            if (j != kNoNeighbor && vis.visible(std::size_t(j)))
                uf.hook(t, static_cast<std::uint32_t>(j));
    }
    uf.flatten();
    return detail::collect(mesh, vis.flags, uf);
}

/// Merges charts that share any vertex and fills vertex_to_chart.
inline ChartSet merge_shared_vertices(const ChartSet& cs, const Mesh& mesh)
{
    const auto n = static_cast<std::uint32_t>(mesh.triangle_count());
    if (cs.chart_of_triangle.size() != n)
        throw Error("chart set does not match mesh");
    detail::MinUnionFind uf(n);
    std::vector<std::uint8_t> visible(n, 0);
    for (std::uint32_t t = 0; t < n; ++t) {
        if (cs.chart_of_triangle[t] == kNoChart)
            continue;
        visible[t] = 1;
        uf.parent(t) = cs.chart_of_triangle[t];
    }

    // Each vertex takes the minimum root among its triangles, then triangles hook
    // through their vertices.
    std::vector<std::uint32_t> vertex_root(mesh.vertex_count(), kNoChart);
    for (std::uint32_t t = 0; t < n; ++t) {
        if (!visible[t])
            continue;
        const std::uint32_t root = uf.find(t);
        for (std::uint32_t v : mesh.triangles[t])
            vertex_root[v] = std::min(vertex_root[v], root);
    }
    for (std::uint32_t t = 0; t < n; ++t) {
        if (!visible[t])
            continue;
        for (std::uint32_t v : mesh.triangles[t])
            uf.hook(t, vertex_root[v]);
    }
    uf.flatten();

    ChartSet merged = detail::collect(mesh, visible, uf);
    for (std::size_t v = 0; v < vertex_root.size(); ++v)
        if (vertex_root[v] != kNoChart)
            merged.vertex_to_chart[v] = uf.find(vertex_root[v]);
    return merged;
}

/// Depth prepass, visibility, edge components and vertex merge in one call.
inline ChartSet compute_charts(const Mesh& mesh, const CameraFrame& cam, Resolution res,
                               const RasterOptions& opt = {})
{
    const DepthBuffer depth = depth_prepass(mesh, cam, res, opt);
    const VisibilityBuffer vis = mark_visible(mesh, cam, depth, opt);
    return merge_shared_vertices(connected_charts(mesh, vis), mesh);
}

} // namespace fastatlas
