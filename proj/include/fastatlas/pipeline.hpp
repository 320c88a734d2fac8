#pragma once

// Scene to atlas: visibility, charts, per-chart screen boxes, packing, and the
// screen/atlas triangle correspondence used for stretch measurements.

#include "fastatlas/charts.hpp"
#include "fastatlas/error.hpp"
#include "fastatlas/geometry.hpp"
#include "fastatlas/metrics.hpp"
#include "fastatlas/packing.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <vector>

namespace fastatlas {

struct ChartBounds {
    std::uint32_t chart_id = kNoChart;
    NdcBox ndc;
    PixelSize pixels;
};

/// Screen box of every chart, built from its visible triangles. Charts whose triangles
/// all clip away are dropped.
inline std::vector<ChartBounds> chart_bounds(const Mesh& mesh, const CameraFrame& cam, const ChartSet& charts,
                                             Resolution screen)
{
    std::vector<ChartBounds> out;
    out.reserve(charts.charts.size());
    std::vector<WorldTriangle> tris;
    for (const Chart& c : charts.charts) {
        tris.clear();
        for (std::uint32_t t : c.triangles)
            tris.push_back(mesh.world_triangle(t));
        try {
            const NdcBox box = chart_bbox(tris, cam);
            out.push_back({c.id, box, viewport_box(box, screen.width, screen.height)});
        } catch (const Degenerate&) {
        }
    }
    return out;
}

/// Pack requests, one per chart; the chart id doubles as the ordering tie-break.
inline std::vector<ChartBox> chart_boxes(std::span<const ChartBounds> bounds)
{
    std::vector<ChartBox> boxes;
    boxes.reserve(bounds.size());
    for (const ChartBounds& b : bounds)
        boxes.push_back({b.pixels.w, b.pixels.h, b.chart_id, b.chart_id});
    return boxes;
}

inline std::uint64_t covered_pixels(const DepthBuffer& depth)
{
    std::uint64_t n = 0;
    for (double d : depth.depth)
        n += std::isfinite(d) ? 1 : 0;
    return n;
}

struct SceneAtlas {
    ChartSet charts;
    std::vector<ChartBounds> bounds;
    AtlasLayout layout;
    std::uint64_t fragments = 0; // covered screen pixels
};

struct SceneOptions {
    RasterOptions raster;
    PackOptions pack;
};

/// Full pipeline. Throws NothingVisible when no triangle survives, PackFailure when no
/// candidate scale fits.
inline SceneAtlas atlas_scene(const Mesh& mesh, const CameraFrame& cam, Resolution screen, std::uint32_t omega,
                              const SceneOptions& opt = {})
{
    SceneAtlas result;
    const DepthBuffer depth = depth_prepass(mesh, cam, screen, opt.raster);
    const VisibilityBuffer vis = mark_visible(mesh, cam, depth, opt.raster);
    result.charts = merge_shared_vertices(connected_charts(mesh, vis), mesh);
    result.bounds = chart_bounds(mesh, cam, result.charts, screen);
    if (result.bounds.empty())
        throw NothingVisible();
    result.fragments = covered_pixels(depth);
    const std::vector<ChartBox> boxes = chart_boxes(result.bounds);
    result.layout = pack(boxes, omega, opt.pack);
    return result;
}

/// Screen triangle and its atlas image for every visible triangle whose vertices are all
/// in front of the camera. Pixels map into the placement interior with the scale the
/// placement realizes on each axis.
inline std::vector<TrianglePair> atlas_triangle_pairs(const Mesh& mesh, const CameraFrame& cam, Resolution screen,
                                                      const ChartSet& charts, std::span<const ChartBounds> bounds,
                                                      const AtlasLayout& layout)
{
    std::unordered_map<std::uint32_t, const ChartBounds*> bound_of;
    for (const ChartBounds& b : bounds)
        bound_of[b.chart_id] = &b;
    std::unordered_map<std::uint32_t, const Placement*> placement_of;
    for (const Placement& p : layout.placements)
        placement_of[p.chart_id] = &p;

    const Mat4 vp = cam.view_proj();
    std::vector<TrianglePair> pairs;
    for (const Chart& c : charts.charts) {
        const auto bit = bound_of.find(c.id);
        const auto pit = placement_of.find(c.id);
        if (bit == bound_of.end() || pit == placement_of.end())
            continue;
        const ChartBounds& b = *bit->second;
        const Placement& p = *pit->second;
        const Vec2 origin = ndc_to_pixel({b.ndc.min_x, b.ndc.max_y}, screen.width, screen.height);
        const double inner_w = double(p.w) - 2.0 * layout.padding;
        const double inner_h = double(p.h) - 2.0 * layout.padding;
        const double pad = layout.padding;
        // Scale along the box's own x and y axes.
        const double sx = p.rotated ? inner_h / p.target_w : inner_w / p.target_w;
        const double sy = p.rotated ? inner_w / p.target_h : inner_h / p.target_h;
        const auto to_atlas = [&](Vec2 px) {
            const double u = (px.x - origin.x) * sx, v = (px.y - origin.y) * sy;
            return p.rotated ? Vec2{p.x + pad + v, p.y + pad + u} : Vec2{p.x + pad + u, p.y + pad + v};
        };

        for (std::uint32_t t : c.triangles) {
            const WorldTriangle w = mesh.world_triangle(t);
            TrianglePair pair;
            bool in_front = true;
            for (int i = 0; i < 3; ++i) {
                const HPoint h = vp.apply(w[i]);
                if (!passes_near(h)) {
                    in_front = false;
                    break;
                }
                pair.screen[i] = ndc_to_pixel({h.x / h.w, h.y / h.w}, screen.width, screen.height);
                pair.atlas[i] = to_atlas(pair.screen[i]);
            }
            if (in_front)
                pairs.push_back(pair);
        }
    }
    return pairs;
}

/// Interior texels allocated across all placements.
inline std::uint64_t allocated_texels(const AtlasLayout& layout)
{
    std::uint64_t n = 0;
    for (const Placement& p : layout.placements) {
        const std::uint64_t iw = p.w > 2 * layout.padding ? p.w - 2 * layout.padding : 0;
        const std::uint64_t ih = p.h > 2 * layout.padding ? p.h - 2 * layout.padding : 0;
        n += iw * ih;
    }
    return n;
}

} // namespace fastatlas
