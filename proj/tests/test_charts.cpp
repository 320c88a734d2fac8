#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace fastatlas;
using support::add_quad;

namespace {

CameraFrame unit_camera() { return CameraFrame::make(std::numbers::pi / 2, 1.0, 0.1, 100.0); }

VisibilityBuffer mask(const std::vector<std::uint8_t>& flags) { return {{1, 1}, flags}; }

Mesh mesh_of(std::vector<Vec3> pos, std::vector<TriIndices> tris) { return Mesh::build(std::move(pos), std::move(tris)); }

} // namespace

TEST(MeshAdjacency, SharedEdgesAreSymmetric)
{
    std::vector<Vec3> pos;
    std::vector<TriIndices> tris;
    add_quad(pos, tris, 0, 0, 1, 1, 0);
    const Mesh m = mesh_of(pos, tris);
    EXPECT_EQ(m.adjacency[0][2], 1); // edge (2, 0)
    EXPECT_EQ(m.adjacency[1][0], 0); // edge (0, 2)
    EXPECT_EQ(m.adjacency[0][0], kNoNeighbor);
}

TEST(MeshAdjacency, EdgesUsedThreeTimesAreBoundaries)
{
    const Mesh m = mesh_of({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}}, {{0, 1, 2}, {1, 0, 3}, {0, 1, 4}});
    for (const auto& adj : m.adjacency)
        for (std::int32_t n : adj)
            EXPECT_EQ(n, kNoNeighbor);
}

TEST(MeshAdjacency, RejectsOutOfRangeIndices)
{
    EXPECT_THROW(mesh_of({{0, 0, 0}}, {{0, 0, 1}}), Error);
}

TEST(DepthPrepass, EmptyMeshLeavesInfinity)
{
    const DepthBuffer d = depth_prepass(mesh_of({}, {}), unit_camera(), {16, 8});
    ASSERT_EQ(d.depth.size(), 128u);
    for (double v : d.depth)
        EXPECT_TRUE(std::isinf(v));
}

TEST(DepthPrepass, FullScreenQuadIsConstant)
{
    std::vector<Vec3> pos;
    std::vector<TriIndices> tris;
    add_quad(pos, tris, -3, -3, 3, 3, -2);
    const DepthBuffer d = depth_prepass(mesh_of(pos, tris), unit_camera(), {32, 24});
    const double expected = project_vertex({0, 0, -2}, unit_camera()).z / project_vertex({0, 0, -2}, unit_camera()).w;
    for (double v : d.depth)
        EXPECT_NEAR(v, expected, 1e-12);
}

TEST(DepthPrepass, OverlapHoldsNearerDepth)
{
    std::vector<Vec3> pos;
    std::vector<TriIndices> tris;
    add_quad(pos, tris, -3, -3, 0.5, 3, -2); // near, left part
    add_quad(pos, tris, -0.5, -3, 3, 3, -4); // far, right part
    const CameraFrame cam = unit_camera();
    const DepthBuffer d = depth_prepass(mesh_of(pos, tris), cam, {40, 40});
    const auto ndc_z = [&](double z) {
        const HPoint p = project_vertex({0, 0, z}, cam);
        return p.z / p.w;
    };
    // NDC x = -0.25 is covered by both quads; x = 0.5 only by the far one.
    EXPECT_NEAR(d.at(15, 20), ndc_z(-2), 1e-12);
    EXPECT_NEAR(d.at(30, 20), ndc_z(-4), 1e-12);
}

TEST(DepthPrepass, MatchesBruteForceOracle)
{
    Rng rng(99);
    const Resolution res{48, 36};
    const CameraFrame cam = CameraFrame::make(1.2, 48.0 / 36.0, 0.5, 20.0);
    int compared = 0;
    for (int scene = 0; scene < 30; ++scene) {
        std::vector<Vec3> pos;
        std::vector<TriIndices> tris;
        const int n = 1 + int(rng.range(0, 40));
        for (int t = 0; t < n; ++t) {
            for (int v = 0; v < 3; ++v)
                pos.push_back({(rng.uniform() * 2 - 1) * 4, (rng.uniform() * 2 - 1) * 4, -rng.uniform() * 25 + 2});
            tris.push_back({std::uint32_t(3 * t), std::uint32_t(3 * t + 1), std::uint32_t(3 * t + 2)});
        }
        const Mesh mesh = mesh_of(pos, tris);
        for (bool cull : {true, false}) {
            const DepthBuffer d = depth_prepass(mesh, cam, res, {cull, 1e-6});
            std::vector<std::array<oracle::ClipV, 3>> clip;
            for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
                std::array<oracle::ClipV, 3> c;
                for (int v = 0; v < 3; ++v) {
                    const HPoint h = project_vertex(mesh.world_triangle(t)[v], cam);
                    c[v] = {h.x, h.y, h.z, h.w};
                }
                clip.push_back(c);
            }
            const auto expected = oracle::brute_force_depth(clip, int(res.width), int(res.height), cull);
            for (std::uint32_t y = 0; y < res.height; ++y)
                for (std::uint32_t x = 0; x < res.width; ++x) {
                    const oracle::DepthSample& s = expected[std::size_t(y) * res.width + x];
                    if (s.ambiguous)
                        continue;
                    ++compared;
                    if (std::isinf(s.depth)) {
                        ASSERT_TRUE(std::isinf(d.at(x, y))) << "scene " << scene << " pixel " << x << "," << y;
                    } else {
                        ASSERT_NEAR(d.at(x, y), s.depth, 1e-9) << "scene " << scene << " pixel " << x << "," << y;
                    }
                }
        }
    }
    EXPECT_GT(compared, 50000);
}

TEST(MarkVisible, OccludedTriangleIsHidden)
{
    std::vector<Vec3> pos;
    std::vector<TriIndices> tris;
    add_quad(pos, tris, -3, -3, 3, 3, -2);
    add_quad(pos, tris, -0.5, -0.5, 0.5, 0.5, -5);
    const Mesh mesh = mesh_of(pos, tris);
    const CameraFrame cam = unit_camera();
    const VisibilityBuffer vis = mark_visible(mesh, cam, depth_prepass(mesh, cam, {64, 64}));
    EXPECT_TRUE(vis.visible(0));
    EXPECT_TRUE(vis.visible(1));
    EXPECT_FALSE(vis.visible(2));
    EXPECT_FALSE(vis.visible(3));
}

TEST(MarkVisible, SubPixelTriangleCoveringNoCenterIsHidden)
{
    // At z = -1 one pixel of a 10x10 screen spans 0.2 world units; this sliver sits
    // between pixel centers.
    const Mesh mesh = mesh_of({{0.01, 0.01, -1}, {0.05, 0.01, -1}, {0.01, 0.05, -1}}, {{0, 1, 2}});
    const CameraFrame cam = unit_camera();
    const VisibilityBuffer vis = mark_visible(mesh, cam, depth_prepass(mesh, cam, {10, 10}));
    EXPECT_FALSE(vis.visible(0));
}

TEST(MarkVisible, PartiallyOffScreenTriangleIsVisible)
{
    // Covers pixel centers only in the rightmost column; most of it is outside the frustum.
    const Mesh mesh = mesh_of({{0.85, 0.05, -1}, {5, 0.05, -1}, {0.85, 0.5, -1}}, {{0, 1, 2}});
    const CameraFrame cam = unit_camera();
    const VisibilityBuffer vis = mark_visible(mesh, cam, depth_prepass(mesh, cam, {10, 10}));
    EXPECT_TRUE(vis.visible(0));
}

TEST(MarkVisible, BackFacingTrianglesAreNeverFlagged)
{
    const Mesh mesh = mesh_of({{-1, -1, -2}, {1, 1, -2}, {1, -1, -2}}, {{0, 1, 2}});
    const CameraFrame cam = unit_camera();
    EXPECT_FALSE(mark_visible(mesh, cam, depth_prepass(mesh, cam, {16, 16})).visible(0));
    const RasterOptions both{false, 1e-6};
    EXPECT_TRUE(mark_visible(mesh, cam, depth_prepass(mesh, cam, {16, 16}, both), both).visible(0));
}

TEST(ConnectedCharts, VertexOnlyContactStaysSplit)
{
    const Mesh m = mesh_of({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {-1, 0, 0}, {0, -1, 0}}, {{0, 1, 2}, {0, 3, 4}});
    const ChartSet cs = connected_charts(m, mask({1, 1}));
    ASSERT_EQ(cs.charts.size(), 2u);
    EXPECT_EQ(cs.chart_of_triangle, (std::vector<std::uint32_t>{0, 1}));
}

TEST(ConnectedCharts, NothingVisibleGivesEmptySet)
{
    std::vector<Vec3> pos;
    std::vector<TriIndices> tris;
    add_quad(pos, tris, 0, 0, 1, 1, 0);
    const ChartSet cs = connected_charts(mesh_of(pos, tris), mask({0, 0}));
    EXPECT_TRUE(cs.charts.empty());
    EXPECT_EQ(cs.chart_of_triangle, (std::vector<std::uint32_t>{kNoChart, kNoChart}));
}

TEST(ConnectedCharts, InvisibleTriangleSplitsStrip)
{
    // Strip of four triangles; hiding the second separates {0} from {2, 3}.
    const Mesh m = mesh_of({{0, 0, 0}, {0, 1, 0}, {1, 0, 0}, {1, 1, 0}, {2, 0, 0}, {2, 1, 0}},
                           {{0, 2, 1}, {1, 2, 3}, {2, 4, 3}, {3, 4, 5}});
    const ChartSet cs = connected_charts(m, mask({1, 0, 1, 1}));
    ASSERT_EQ(cs.charts.size(), 2u);
    EXPECT_EQ(cs.charts[0].id, 0u);
    EXPECT_EQ(cs.charts[1].id, 2u);
    EXPECT_EQ(cs.charts[1].triangles, (std::vector<std::uint32_t>{2, 3}));
}

TEST(MergeSharedVertices, VertexContactMergesToMinimumRoot)
{
    const Mesh m = mesh_of({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {-1, 0, 0}, {0, -1, 0}}, {{0, 3, 4}, {0, 1, 2}});
    const ChartSet cs = merge_shared_vertices(connected_charts(m, mask({1, 1})), m);
    ASSERT_EQ(cs.charts.size(), 1u);
    EXPECT_EQ(cs.charts[0].id, 0u);
    EXPECT_EQ(cs.vertex_to_chart, (std::vector<std::uint32_t>{0, 0, 0, 0, 0}));
}

TEST(MergeSharedVertices, DisjointChartsUnchanged)
{
    const Mesh m = mesh_of({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {5, 0, 0}, {6, 0, 0}, {5, 1, 0}}, {{0, 1, 2}, {3, 4, 5}});
    const ChartSet before = connected_charts(m, mask({1, 1}));
    const ChartSet after = merge_shared_vertices(before, m);
    EXPECT_EQ(after.chart_of_triangle, before.chart_of_triangle);
    EXPECT_EQ(after.vertex_to_chart, (std::vector<std::uint32_t>{0, 0, 0, 1, 1, 1}));
}

TEST(MergeSharedVertices, BowTieFansBecomeOneChart)
{
    // Five separate fans, each of two triangles, all touching vertex 0 only.
    std::vector<Vec3> pos{{0, 0, 0}};
    std::vector<TriIndices> tris;
    for (std::uint32_t k = 0; k < 5; ++k) {
        const auto b = static_cast<std::uint32_t>(pos.size());
        for (int i = 0; i < 3; ++i)
            pos.push_back({std::cos(k + 0.2 * i), std::sin(k + 0.2 * i), 0});
        tris.push_back({0, b, b + 1});
        tris.push_back({0, b + 1, b + 2});
    }
    const Mesh m = mesh_of(pos, tris);
    const VisibilityBuffer vis = mask(std::vector<std::uint8_t>(tris.size(), 1));
    EXPECT_EQ(connected_charts(m, vis).charts.size(), 5u);
    const ChartSet merged = merge_shared_vertices(connected_charts(m, vis), m);
    ASSERT_EQ(merged.charts.size(), 1u);
    EXPECT_EQ(merged.charts[0].triangles.size(), 10u);
}

TEST(ChartsOracle, RandomMeshesMatchBfs)
{
    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        const support::RandomMesh rm = support::random_mesh(rng, 2000);
        const auto tris = support::oracle_tris(rm.mesh);
        const ChartSet edge = connected_charts(rm.mesh, mask(rm.visible));
        ASSERT_EQ(support::labels_of(edge), oracle::edge_components(tris, rm.visible)) << "mesh " << i;
        const ChartSet merged = merge_shared_vertices(edge, rm.mesh);
        ASSERT_EQ(support::labels_of(merged), oracle::merged_components(tris, rm.mesh.vertex_count(), rm.visible))
            << "mesh " << i;
    }
}

TEST(ChartsOracle, ChartIdsAreMemberMinimaAndVerticesUnique)
{
    Rng rng(6);
    for (int i = 0; i < 100; ++i) {
        const support::RandomMesh rm = support::random_mesh(rng, 500);
        const ChartSet cs = merge_shared_vertices(connected_charts(rm.mesh, mask(rm.visible)), rm.mesh);
        for (const Chart& c : cs.charts) {
            ASSERT_FALSE(c.triangles.empty());
            ASSERT_EQ(c.id, *std::min_element(c.triangles.begin(), c.triangles.end()));
        }
        for (std::uint32_t t = 0; t < rm.mesh.triangle_count(); ++t) {
            if (!rm.visible[t])
                continue;
            for (std::uint32_t v : rm.mesh.triangles[t])
                ASSERT_EQ(cs.vertex_to_chart[v], cs.chart_of_triangle[t]);
        }
        ASSERT_EQ(cs, merge_shared_vertices(connected_charts(rm.mesh, mask(rm.visible)), rm.mesh));
    }
}

TEST(ChartsOracle, HidingATriangleNeverMergesCharts)
{
    Rng rng(8);
    for (int i = 0; i < 100; ++i) {
        support::RandomMesh rm = support::random_mesh(rng, 300);
        if (rm.mesh.triangle_count() == 0)
            continue;
        const ChartSet before = merge_shared_vertices(connected_charts(rm.mesh, mask(rm.visible)), rm.mesh);
        rm.visible[rng.range(0, rm.mesh.triangle_count() - 1)] = 0;
        const ChartSet after = merge_shared_vertices(connected_charts(rm.mesh, mask(rm.visible)), rm.mesh);
        for (std::uint32_t a = 0; a < rm.mesh.triangle_count(); ++a) {
            if (after.chart_of_triangle[a] == kNoChart)
                continue;
            for (std::uint32_t b = a + 1; b < rm.mesh.triangle_count(); ++b) {
                if (after.chart_of_triangle[a] == after.chart_of_triangle[b]) {
                    ASSERT_EQ(before.chart_of_triangle[a], before.chart_of_triangle[b]);
                }
            }
        }
    }
}
