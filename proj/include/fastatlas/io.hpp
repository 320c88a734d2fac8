#pragma once

// Text formats: box lists, layout files, scene configs, Wavefront OBJ (positions and
// faces only) and SVG renderings of layouts. Files are written through a temp file and
// renamed into place.

#include "fastatlas/charts.hpp"
#include "fastatlas/error.hpp"
#include "fastatlas/geometry.hpp"
#include "fastatlas/metrics.hpp"
#include "fastatlas/packing.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace fastatlas {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr const char* kLayoutMagic = "fastatlas-layout";
inline constexpr int kLayoutVersion = 1;

namespace detail {

    inline std::string_view trim(std::string_view s)
    {
        const auto first = s.find_first_not_of(" \t\r\n");
        if (first == std::string_view::npos)
            return {};
        const auto last = s.find_last_not_of(" \t\r\n");
        return s.substr(first, last - first + 1);
    }

    inline std::string_view strip_comment(std::string_view s)
    {
        const auto hash = s.find('#');
        return trim(hash == std::string_view::npos ? s : s.substr(0, hash));
    }

    inline std::vector<std::string_view> split_fields(std::string_view s)
    {
        std::vector<std::string_view> out;
        std::size_t i = 0;
        while (i < s.size()) {
            while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == ','))
                ++i;
            const std::size_t start = i;
            while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != ',')
                ++i;
            if (i > start)
                out.push_back(s.substr(start, i - start));
        }
        return out;
    }

    template <class T>
    std::optional<T> parse_number(std::string_view s)
    {
        T v{};
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size())
            return std::nullopt;
        return v;
    }

    inline std::optional<double> parse_double(std::string_view s)
    {
        // from_chars for double is not available in every toolchain we build with.
        const std::string tmp(s);
        char* end = nullptr;
        const double v = std::strtod(tmp.c_str(), &end);
        if (tmp.empty() || end != tmp.c_str() + tmp.size())
            return std::nullopt;
        return v;
    }

    inline std::uint32_t require_u32(std::string_view s, const std::string& what)
    {
        const auto v = parse_number<std::uint32_t>(s);
        if (!v)
            throw ParseError(what + ": expected an unsigned integer, got '" + std::string(s) + "'");
        return *v;
    }

    inline std::string format_double(double v)
    {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }

} // namespace detail

/// One record per line: chart_id min_tri w h. '#' starts a comment.
inline std::vector<ChartBox> parse_box_list(std::istream& in)
{
    std::vector<ChartBox> boxes;
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        const std::string_view body = detail::strip_comment(line);
        if (body.empty())
            continue;
        const std::string where = "line " + std::to_string(lineno);
        const auto fields = detail::split_fields(body);
        if (fields.size() != 4)
            throw ParseError(where + ": expected 4 fields (chart_id min_tri w h), got " +
                             std::to_string(fields.size()));
        ChartBox b{detail::require_u32(fields[2], where + " w"), detail::require_u32(fields[3], where + " h"),
                   detail::require_u32(fields[0], where + " chart_id"),
                   detail::require_u32(fields[1], where + " min_tri")};
        if (b.target_w == 0 || b.target_h == 0)
            throw ParseError(where + ": box of chart " + std::to_string(b.chart_id) + " has a zero dimension");
        boxes.push_back(b);
    }
    return boxes;
}

inline void write_box_list(std::ostream& out, std::span<const ChartBox> boxes)
{
    out << "# chart_id min_tri w h\n";
    for (const ChartBox& b : boxes)
        out << b.chart_id << ' ' << b.min_tri << ' ' << b.target_w << ' ' << b.target_h << '\n';
}

/// Placements sorted by chart_id; the form layout files store.
inline AtlasLayout canonicalize(AtlasLayout layout)
{
    std::sort(layout.placements.begin(), layout.placements.end(), [](const Placement& a, const Placement& b) {
        return a.chart_id != b.chart_id ? a.chart_id < b.chart_id : a.x != b.x ? a.x < b.x : a.y < b.y;
    });
    return layout;
}

inline void write_layout(std::ostream& out, const AtlasLayout& layout)
{
    const AtlasLayout c = canonicalize(layout);
    out << kLayoutMagic << ' ' << kLayoutVersion << '\n'
        << "omega " << c.omega << '\n'
        << "scale " << c.scale_num << '/' << c.scale_den << '\n'
        << "effective_scale " << detail::format_double(c.scale) << '\n'
        << "padding " << c.padding << '\n'
        << "digest " << kDigestAlgorithm << ' ' << to_hex(layout_digest(c)) << '\n'
        << "tool fastatlas " << kToolVersion << '\n'
        << "count " << c.placements.size() << '\n'
        << "# chart_id x y w h rotated target_w target_h\n";
    for (const Placement& p : c.placements)
        out << p.chart_id << ' ' << p.x << ' ' << p.y << ' ' << p.w << ' ' << p.h << ' ' << (p.rotated ? 1 : 0)
            << ' ' << p.target_w << ' ' << p.target_h << '\n';
}

/// Parses a layout file and checks its digest.
inline AtlasLayout parse_layout(std::istream& in)
{
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        const std::string_view body = detail::strip_comment(line);
        if (!body.empty())
            lines.emplace_back(body);
    }
    std::size_t at = 0;
    const auto header = [&](std::string_view key) {
        if (at >= lines.size())
            throw ParseError("layout: missing header '" + std::string(key) + "'");
        auto fields = detail::split_fields(lines[at]);
        if (fields.empty() || fields[0] != key)
            throw ParseError("layout: expected header '" + std::string(key) + "', got '" + lines[at] + "'");
        ++at;
        fields.erase(fields.begin());
        return fields;
    };

    const auto magic = header(kLayoutMagic);
    if (magic.size() != 1 || magic[0] != std::to_string(kLayoutVersion))
        throw ParseError("layout: unsupported version");
    AtlasLayout layout;
    const auto omega = header("omega");
    layout.omega = detail::require_u32(omega.at(0), "layout omega");
    const auto scale = header("scale");
    const auto slash = scale.size() == 1 ? scale[0].find('/') : std::string_view::npos;
    if (slash == std::string_view::npos)
        throw ParseError("layout: scale must be written as num/den");
    layout.scale_num = detail::require_u32(scale[0].substr(0, slash), "layout scale numerator");
    layout.scale_den = detail::require_u32(scale[0].substr(slash + 1), "layout scale denominator");
    const auto eff = header("effective_scale");
    const auto eff_value = eff.size() == 1 ? detail::parse_double(eff[0]) : std::nullopt;
    if (!eff_value)
        throw ParseError("layout: bad effective_scale");
    layout.scale = *eff_value;
    layout.padding = detail::require_u32(header("padding").at(0), "layout padding");
    const auto digest = header("digest");
    if (digest.size() != 2 || digest[0] != kDigestAlgorithm)
        throw ParseError("layout: digest must be '" + std::string(kDigestAlgorithm) + " <hex>'");
    const std::string expected_digest(digest[1]);
    header("tool");
    const std::uint32_t count = detail::require_u32(header("count").at(0), "layout count");

    if (lines.size() - at != count)
        throw ParseError("layout: count says " + std::to_string(count) + " placements, found " +
                         std::to_string(lines.size() - at));
    for (; at < lines.size(); ++at) {
        const auto f = detail::split_fields(lines[at]);
        const std::string where = "layout placement '" + lines[at] + "'";
        if (f.size() != 8)
            throw ParseError(where + ": expected 8 fields");
        const std::uint32_t rotated = detail::require_u32(f[5], where);
        if (rotated > 1)
            throw ParseError(where + ": rotated must be 0 or 1");
        layout.placements.push_back({detail::require_u32(f[0], where), detail::require_u32(f[1], where),
                                     detail::require_u32(f[2], where), detail::require_u32(f[3], where),
                                     detail::require_u32(f[4], where), rotated == 1, detail::require_u32(f[6], where),
                                     detail::require_u32(f[7], where)});
    }
    if (to_hex(layout_digest(layout)) != expected_digest)
        throw ParseError("layout: digest mismatch");
    return layout;
}

/// Writes through a sibling temp file and renames it over `path`.
inline void atomic_write(const std::filesystem::path& path, const std::string& contents)
{
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error("cannot open " + tmp.string() + " for writing");
        out << contents;
        if (!out.flush())
            throw Error("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

struct SceneConfig {
    std::filesystem::path mesh_path;
    double fov_y_deg = 60.0;
    std::optional<double> aspect; // defaults to screen width / height
    double near = 0.1;
    double far = 100.0;
    Vec3 position{0, 0, 5};
    Vec3 look_at{0, 0, 0};
    Vec3 up{0, 1, 0};
    Resolution screen{1920, 1080};
    std::uint32_t atlas = 2048;
    std::uint32_t n_scales = 64;
    std::uint32_t min_dim = 1;
    std::uint32_t padding = 0;
    bool backface_cull = true;

    CameraFrame camera() const
    {
        const double a = aspect.value_or(double(screen.width) / double(screen.height));
        return CameraFrame::make(fov_y_deg * M_PI / 180.0, a, near, far, fastatlas::look_at(position, look_at, up));
    }

    void validate() const
    {
        if (!is_power_of_two(atlas))
            throw ParseError("scene: atlas must be a power of two");
        if (!(near > 0 && near < far))
            throw ParseError("scene: need 0 < near < far");
        if (screen.width == 0 || screen.height == 0)
            throw ParseError("scene: screen must be at least 1x1");
    }
};

inline std::optional<Resolution> parse_resolution(std::string_view s)
{
    const auto x = s.find_first_of("xX");
    if (x == std::string_view::npos)
        return std::nullopt;
    const auto w = detail::parse_number<std::uint32_t>(s.substr(0, x));
    const auto h = detail::parse_number<std::uint32_t>(s.substr(x + 1));
    if (!w || !h || *w == 0 || *h == 0)
        return std::nullopt;
    return Resolution{*w, *h};
}

/// key = value lines. Relative mesh paths resolve against `base_dir`.
inline SceneConfig parse_scene_config(std::istream& in, const std::filesystem::path& base_dir = {})
{
    SceneConfig cfg;
    bool have_mesh = false;
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        const std::string_view body = detail::strip_comment(line);
        if (body.empty())
            continue;
        const std::string where = "scene line " + std::to_string(lineno);
        const auto eq = body.find('=');
        if (eq == std::string_view::npos)
            throw ParseError(where + ": expected key = value");
        const std::string key(detail::trim(body.substr(0, eq)));
        const std::string_view value = detail::trim(body.substr(eq + 1));

        const auto number = [&] {
            const auto v = detail::parse_double(value);
            if (!v)
                throw ParseError(where + ": '" + key + "' expects a number");
            return *v;
        };
        const auto vec3 = [&] {
            const auto f = detail::split_fields(value);
            std::optional<double> a, b, c;
            if (f.size() == 3)
                a = detail::parse_double(f[0]), b = detail::parse_double(f[1]), c = detail::parse_double(f[2]);
            if (!a || !b || !c)
                throw ParseError(where + ": '" + key + "' expects three numbers");
            return Vec3{*a, *b, *c};
        };

        if (key == "mesh") {
            cfg.mesh_path = base_dir / std::filesystem::path(std::string(value));
            have_mesh = true;
        } else if (key == "fov_y") {
            cfg.fov_y_deg = number();
        } else if (key == "aspect") {
            cfg.aspect = number();
        } else if (key == "near") {
            cfg.near = number();
        } else if (key == "far") {
            cfg.far = number();
        } else if (key == "position") {
            cfg.position = vec3();
        } else if (key == "look_at") {
            cfg.look_at = vec3();
        } else if (key == "up") {
            cfg.up = vec3();
        } else if (key == "screen") {
            const auto r = parse_resolution(value);
            if (!r)
                throw ParseError(where + ": screen expects WxH");
            cfg.screen = *r;
        } else if (key == "atlas") {
            cfg.atlas = detail::require_u32(value, where);
        } else if (key == "scales") {
            cfg.n_scales = detail::require_u32(value, where);
        } else if (key == "min_dim") {
            cfg.min_dim = detail::require_u32(value, where);
        } else if (key == "padding") {
            cfg.padding = detail::require_u32(value, where);
        } else if (key == "backface_cull") {
            if (value == "true" || value == "1")
                cfg.backface_cull = true;
            else if (value == "false" || value == "0")
                cfg.backface_cull = false;
            else
                throw ParseError(where + ": backface_cull expects true or false");
        } else {
            throw ParseError(where + ": unknown key '" + key + "'");
        }
    }
    if (!have_mesh)
        throw ParseError("scene: missing 'mesh'");
    cfg.validate();
    return cfg;
}

/// Positions and faces; polygons are fan-triangulated, other records ignored.
inline Mesh load_obj(std::istream& in)
{
    std::vector<Vec3> positions;
    std::vector<TriIndices> triangles;
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        const std::string_view body = detail::strip_comment(line);
        const auto f = detail::split_fields(body);
        if (f.empty())
            continue;
        const std::string where = "obj line " + std::to_string(lineno);
        if (f[0] == "v") {
            if (f.size() < 4)
                throw ParseError(where + ": vertex needs 3 coordinates");
            const auto x = detail::parse_double(f[1]), y = detail::parse_double(f[2]), z = detail::parse_double(f[3]);
            if (!x || !y || !z)
                throw ParseError(where + ": bad vertex coordinate");
            positions.push_back({*x, *y, *z});
        } else if (f[0] == "f") {
            std::vector<std::uint32_t> idx;
            for (std::size_t i = 1; i < f.size(); ++i) {
                const std::string_view token = f[i].substr(0, f[i].find('/'));
                const auto v = detail::parse_number<long long>(token);
                if (!v || *v == 0)
                    throw ParseError(where + ": bad face index '" + std::string(f[i]) + "'");
                const long long resolved = *v > 0 ? *v - 1 : static_cast<long long>(positions.size()) + *v;
                if (resolved < 0 || resolved >= static_cast<long long>(positions.size()))
                    throw ParseError(where + ": face index out of range");
                idx.push_back(static_cast<std::uint32_t>(resolved));
            }
            if (idx.size() < 3)
                throw ParseError(where + ": face needs at least 3 vertices");
            for (std::size_t i = 1; i + 1 < idx.size(); ++i)
                triangles.push_back({idx[0], idx[i], idx[i + 1]});
        }
    }
    return Mesh::build(std::move(positions), std::move(triangles));
}

inline Mesh load_obj(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open mesh " + path.string());
    return load_obj(in);
}

/// Atlas rendering: one rectangle per placement, hue derived from chart_id.
inline void write_svg(std::ostream& out, const AtlasLayout& layout, std::uint32_t max_pixels = 1024)
{
    const double omega = std::max<std::uint32_t>(layout.omega, 1);
    const double px = std::min<double>(max_pixels, omega);
    const double k = px / omega;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px << "\" height=\"" << px << "\" viewBox=\"0 0 "
        << omega << ' ' << omega << "\">\n"
        << "<rect x=\"0\" y=\"0\" width=\"" << omega << "\" height=\"" << omega << "\" fill=\"#202020\"/>\n";
    const double stroke = std::max(0.5, 0.5 / k);
    for (const Placement& p : canonicalize(layout).placements) {
        const unsigned hue = (p.chart_id * 2654435761u) % 360u;
        out << "<rect x=\"" << p.x << "\" y=\"" << p.y << "\" width=\"" << p.w << "\" height=\"" << p.h
            << "\" fill=\"hsl(" << hue << ",65%,55%)\" stroke=\"#000\" stroke-width=\"" << stroke
            << "\"><title>chart " << p.chart_id << "</title></rect>\n";
    }
    out << "</svg>\n";
}

} // namespace fastatlas
