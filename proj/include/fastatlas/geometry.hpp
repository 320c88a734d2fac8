#pragma once

// Homogeneous projection, single-plane clipping and conservative clip-space
// bounding boxes for visible chart regions.
//
// Conventions: right-handed view space looking down -z, OpenGL-style NDC with
// z in [-1, 1]. Matrices are row-major and act on column vectors.

#include "fastatlas/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace fastatlas {

struct Vec2 {
    double x = 0, y = 0;
};

struct Vec3 {
    double x = 0, y = 0, z = 0;

    friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
};

inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

inline Vec3 cross(Vec3 a, Vec3 b)
{
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline Vec3 normalize(Vec3 a)
{
    const double len = std::sqrt(dot(a, a));
    return len > 0 ? (1.0 / len) * a : a;
}

/// Homogeneous clip-space point, before the perspective divide.
struct HPoint {
    double x = 0, y = 0, z = 0, w = 1;

    friend bool operator==(const HPoint&, const HPoint&) = default;

    friend HPoint lerp(const HPoint& a, const HPoint& b, double t)
    {
        return {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), a.z + t * (b.z - a.z), a.w + t * (b.w - a.w)};
    }
};

struct Mat4 {
    std::array<double, 16> m{};

    static Mat4 identity()
    {
        Mat4 r;
        r.m[0] = r.m[5] = r.m[10] = r.m[15] = 1.0;
        return r;
    }

    double operator()(int row, int col) const { return m[row * 4 + col]; }
    double& operator()(int row, int col) { return m[row * 4 + col]; }

    friend Mat4 operator*(const Mat4& a, const Mat4& b)
    {
        Mat4 r;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                double s = 0;
                for (int k = 0; k < 4; ++k)
                    s += a(i, k) * b(k, j);
                r(i, j) = s;
            }
        return r;
    }

    HPoint apply(Vec3 p) const
    {
        const auto row = [&](int i) { return m[i * 4] * p.x + m[i * 4 + 1] * p.y + m[i * 4 + 2] * p.z + m[i * 4 + 3]; };
        return {row(0), row(1), row(2), row(3)};
    }
};

/// Standard OpenGL perspective matrix: view depth `near` maps to NDC z = -1, `far` to +1.
inline Mat4 perspective(double fov_y, double aspect, double near, double far)
{
    const double f = 1.0 / std::tan(fov_y * 0.5);
    Mat4 p;
    p(0, 0) = f / aspect;
    p(1, 1) = f;
    p(2, 2) = (far + near) / (near - far);
    p(2, 3) = 2.0 * far * near / (near - far);
    p(3, 2) = -1.0;
    return p;
}

inline Mat4 look_at(Vec3 eye, Vec3 target, Vec3 up)
{
    const Vec3 f = normalize(target - eye);
    const Vec3 s = normalize(cross(f, up));
    const Vec3 u = cross(s, f);
    Mat4 v = Mat4::identity();
    v(0, 0) = s.x, v(0, 1) = s.y, v(0, 2) = s.z, v(0, 3) = -dot(s, eye);
    v(1, 0) = u.x, v(1, 1) = u.y, v(1, 2) = u.z, v(1, 3) = -dot(u, eye);
    v(2, 0) = -f.x, v(2, 1) = -f.y, v(2, 2) = -f.z, v(2, 3) = dot(f, eye);
    return v;
}

struct CameraFrame {
    double fov_y = 1.0; // radians
    double aspect = 1.0;
    double near = 0.1;
    double far = 100.0;
    Mat4 view = Mat4::identity();
    Mat4 proj = Mat4::identity();

    static CameraFrame make(double fov_y, double aspect, double near, double far, const Mat4& view = Mat4::identity())
    {
        if (!(near > 0) || !(far > near) || !(aspect > 0) || !(fov_y > 0 && fov_y < M_PI))
            throw Error("invalid camera parameters");
        return {fov_y, aspect, near, far, view, perspective(fov_y, aspect, near, far)};
    }

    Mat4 view_proj() const { return proj * view; }
};

/// Transforms a world point to clip space. No perspective divide.
inline HPoint project_vertex(Vec3 p, const CameraFrame& cam)
{
    return cam.view_proj().apply(p);
}

/// Axis-aligned box in NDC, always within [-1, 1]^2.
struct NdcBox {
    double min_x = 1, min_y = 1, max_x = -1, max_y = -1;

    bool empty() const { return min_x > max_x || min_y > max_y; }
    double area() const { return empty() ? 0.0 : (max_x - min_x) * (max_y - min_y); }

    void extend(Vec2 p)
    {
        min_x = std::min(min_x, p.x), max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y), max_y = std::max(max_y, p.y);
    }

    void extend(const NdcBox& b)
    {
        if (b.empty())
            return;
        extend(Vec2{b.min_x, b.min_y});
        extend(Vec2{b.max_x, b.max_y});
    }

    bool contains(const NdcBox& inner, double tol = 0.0) const
    {
        if (inner.empty())
            return true;
        return min_x <= inner.min_x + tol && min_y <= inner.min_y + tol && max_x >= inner.max_x - tol &&
               max_y >= inner.max_y - tol;
    }
};

inline constexpr double kNearEpsilon = 1e-9;

/// Result of clipping a triangle against one plane: a triangle or a quad.
class ClipPolygon {
public:
    ClipPolygon() = default;
    ClipPolygon(const HPoint& a, const HPoint& b, const HPoint& c) : verts_{a, b, c}, count_(3) {}

    void push(const HPoint& p) { verts_.at(count_++) = p; }
    std::size_t size() const { return count_; }
    const HPoint& operator[](std::size_t i) const { return verts_[i]; }
    std::span<const HPoint> vertices() const { return {verts_.data(), count_}; }

private:
    std::array<HPoint, 4> verts_{};
    std::size_t count_ = 0;
};

using ClipTriangle = std::array<HPoint, 3>;

// `near` is the camera plane w = eps used for chart boxes; `depth_near` and `far` are the
// z-planes of the full view frustum.
enum class ClipPlane : std::uint8_t { left, right, bottom, top, near, depth_near, far };

inline constexpr std::array<ClipPlane, 6> kFrustumPlanes{ClipPlane::left,   ClipPlane::right,      ClipPlane::bottom,
                                                         ClipPlane::top,    ClipPlane::depth_near, ClipPlane::far};

inline constexpr std::array<ClipPlane, 4> kSidePlanes{ClipPlane::left, ClipPlane::right, ClipPlane::bottom,
                                                      ClipPlane::top};

/// Signed distance to a clip-space plane; >= 0 is inside.
inline double plane_distance(const HPoint& p, ClipPlane plane)
{
    switch (plane) {
    case ClipPlane::left: return p.w + p.x;
    case ClipPlane::right: return p.w - p.x;
    case ClipPlane::bottom: return p.w + p.y;
    case ClipPlane::top: return p.w - p.y;
    case ClipPlane::near: return p.w - kNearEpsilon;
    case ClipPlane::depth_near: return p.w + p.z;
    case ClipPlane::far: return p.w - p.z;
    }
    return 0.0;
}

inline bool passes_near(const HPoint& p) { return p.w > kNearEpsilon; }

/// Sutherland-Hodgman step against a single plane, interpolating in clip space.
/// Works on arbitrary convex polygons; `out` is cleared first.
inline void clip_polygon(std::span<const HPoint> in, ClipPlane plane, std::vector<HPoint>& out)
{
    out.clear();
    const std::size_t n = in.size();
    for (std::size_t i = 0; i < n; ++i) {
        const HPoint& a = in[i];
        const HPoint& b = in[(i + 1) % n];
        const double da = plane_distance(a, plane);
        const double db = plane_distance(b, plane);
        if (da >= 0)
            out.push_back(a);
        if ((da >= 0) != (db >= 0))
            out.push_back(lerp(a, b, da / (da - db)));
    }
}

/// Clips a triangle against one plane. One vertex outside gives a quad, two give a triangle.
inline ClipPolygon clip_triangle(const ClipTriangle& tri, ClipPlane plane)
{
    ClipPolygon poly;
    for (std::size_t i = 0; i < 3; ++i) {
        const HPoint& a = tri[i];
        const HPoint& b = tri[(i + 1) % 3];
        const double da = plane_distance(a, plane);
        const double db = plane_distance(b, plane);
        if (da >= 0)
            poly.push(a);
        if ((da >= 0) != (db >= 0))
            poly.push(lerp(a, b, da / (da - db)));
    }
    return poly;
}

/// Clips against the camera plane (w > eps). Unchanged if every vertex passes.
inline ClipPolygon clip_near(const ClipTriangle& tri)
{
    const int passing = passes_near(tri[0]) + passes_near(tri[1]) + passes_near(tri[2]);
    if (passing == 0)
        throw AllClipped();
    if (passing == 3)
        return {tri[0], tri[1], tri[2]};
    ClipPolygon poly;
    for (std::size_t i = 0; i < 3; ++i) {
        const HPoint& a = tri[i];
        const HPoint& b = tri[(i + 1) % 3];
        const bool ina = passes_near(a), inb = passes_near(b);
        if (ina)
            poly.push(a);
        if (ina != inb) {
            const double da = a.w - kNearEpsilon, db = b.w - kNearEpsilon;
            HPoint p = lerp(a, b, da / (da - db));
            p.w = std::max(p.w, kNearEpsilon); // keep the new vertex on the passing side
            poly.push(p);
        }
    }
    return poly;
}

/// Blinn's clamp: clamp x, y to [-|w|, |w|] then divide by |w|. Total; w == 0 maps to
/// the corner given by the signs of x and y, with sign(0) = +1.
inline Vec2 blinn_clamped_ndc(const HPoint& p)
{
    const double aw = std::abs(p.w);
    if (aw == 0.0)
        return {p.x >= 0 ? 1.0 : -1.0, p.y >= 0 ? 1.0 : -1.0};
    const double x = std::clamp(p.x, -aw, aw) / aw;
    const double y = std::clamp(p.y, -aw, aw) / aw;
    return {std::clamp(x, -1.0, 1.0), std::clamp(y, -1.0, 1.0)};
}

struct Interval {
    double lo = 1, hi = -1;

    void extend(double v) { lo = std::min(lo, v), hi = std::max(hi, v); }
};

/// Outcode form of the Blinn estimator: the screen interval a vertex can reach along one
/// axis. Equals the clamped divide when w > 0. Behind the camera, a vertex outside the
/// +plane (c > w) reaches +1 and outside the -plane (c < -w) reaches -1; with w <= 0
/// both can hold, in which case the whole axis is covered.
inline Interval blinn_axis_extent(double c, double w)
{
    Interval iv;
    if (w > 0) {
        iv.extend(std::clamp(c, -w, w) / w);
        return iv;
    }
    if (c > w)
        iv.extend(1.0);
    if (c < -w)
        iv.extend(-1.0);
    if (iv.lo > iv.hi) // c == w == 0: direction undefined
        iv = {-1.0, 1.0};
    return iv;
}

/// Clamp-only Blinn box over raw clip-space vertices (no clipping). Conservative for
/// any input, including vertices behind the camera.
inline NdcBox blinn_only_box(std::span<const HPoint> pts)
{
    NdcBox box;
    for (const HPoint& p : pts) {
        const Interval ix = blinn_axis_extent(p.x, p.w);
        const Interval iy = blinn_axis_extent(p.y, p.w);
        box.extend(Vec2{ix.lo, iy.lo});
        box.extend(Vec2{ix.hi, iy.hi});
    }
    return box;
}

inline NdcBox blinn_box(std::span<const HPoint> pts)
{
    NdcBox box;
    for (const HPoint& p : pts)
        box.extend(blinn_clamped_ndc(p));
    return box;
}

/// Picks the side plane whose single-plane clip gives the smallest Blinn box.
/// Ties resolve in the order left, right, bottom, top. Expects all w > 0.
inline std::optional<ClipPlane> select_side_plane(const ClipTriangle& tri)
{
    std::optional<ClipPlane> best;
    double best_area = 0;
    for (ClipPlane plane : kSidePlanes) {
        const double d0 = plane_distance(tri[0], plane);
        const double d1 = plane_distance(tri[1], plane);
        const double d2 = plane_distance(tri[2], plane);
        const bool crosses = std::min({d0, d1, d2}) < 0 && std::max({d0, d1, d2}) >= 0;
        if (!crosses)
            continue;
        const double area = blinn_box(clip_triangle(tri, plane).vertices()).area();
        if (!best || area < best_area) {
            best = plane;
            best_area = area;
        }
    }
    return best;
}

/// Conservative box of one clip-space triangle's visible part, or nullopt when the
/// triangle is entirely behind the camera or entirely outside one side plane.
inline std::optional<NdcBox> triangle_ndc_box(const ClipTriangle& tri)
{
    const int passing = passes_near(tri[0]) + passes_near(tri[1]) + passes_near(tri[2]);
    if (passing == 0)
        return std::nullopt;
    if (passing < 3)
        return blinn_box(clip_near(tri).vertices());

    for (ClipPlane plane : kSidePlanes)
        if (plane_distance(tri[0], plane) < 0 && plane_distance(tri[1], plane) < 0 &&
            plane_distance(tri[2], plane) < 0)
            return std::nullopt;

    if (const auto plane = select_side_plane(tri))
        return blinn_box(clip_triangle(tri, *plane).vertices());
    return blinn_box(tri);
}

/// NDC box bounding the visible portion of a chart given as clip-space triangles.
inline NdcBox chart_bbox_clip(std::span<const ClipTriangle> tris)
{
    NdcBox box;
    bool any = false;
    for (const ClipTriangle& tri : tris) {
        if (const auto b = triangle_ndc_box(tri)) {
            box.extend(*b);
            any = true;
        }
    }
    if (!any)
        throw Degenerate();
    box.min_x = std::clamp(box.min_x, -1.0, 1.0), box.max_x = std::clamp(box.max_x, -1.0, 1.0);
    box.min_y = std::clamp(box.min_y, -1.0, 1.0), box.max_y = std::clamp(box.max_y, -1.0, 1.0);
    return box;
}

using WorldTriangle = std::array<Vec3, 3>;

inline NdcBox chart_bbox(std::span<const WorldTriangle> tris, const CameraFrame& cam)
{
    const Mat4 vp = cam.view_proj();
    std::vector<ClipTriangle> clip;
    clip.reserve(tris.size());
    for (const WorldTriangle& t : tris)
        clip.push_back({vp.apply(t[0]), vp.apply(t[1]), vp.apply(t[2])});
    return chart_bbox_clip(clip);
}

struct PixelSize {
    std::uint32_t w = 1, h = 1;

    friend bool operator==(const PixelSize&, const PixelSize&) = default;
};

/// Integer pixel extent of an NDC box on a screen_w x screen_h viewport, at least 1x1.
inline PixelSize viewport_box(const NdcBox& box, std::uint32_t screen_w, std::uint32_t screen_h)
{
    if (screen_w == 0 || screen_h == 0)
        throw Error("screen dimensions must be at least 1x1");
    if (box.empty())
        return {};
    // Absorb round-off so exact extents such as 0.5 * 256 do not ceil upward.
    const auto extent = [](double lo, double hi, std::uint32_t res) {
        const double px = (hi - lo) * 0.5 * res;
        const double c = std::ceil(px - 1e-9);
        return static_cast<std::uint32_t>(std::max(1.0, std::min(c, static_cast<double>(res))));
    };
    return {extent(box.min_x, box.max_x, screen_w), extent(box.min_y, box.max_y, screen_h)};
}

/// NDC to pixel coordinates with y pointing down (row 0 at the top of the screen).
inline Vec2 ndc_to_pixel(Vec2 ndc, std::uint32_t screen_w, std::uint32_t screen_h)
{
    return {(ndc.x + 1.0) * 0.5 * screen_w, (1.0 - ndc.y) * 0.5 * screen_h};
}

} // namespace fastatlas
