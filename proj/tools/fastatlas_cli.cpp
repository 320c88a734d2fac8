// fastatlas command-line front end.
//
//   fastatlas pack-boxes  BOXES --omega N -o LAYOUT [--csv FILE] [--svg FILE]
//   fastatlas atlas-scene SCENE --out-dir DIR [--omega N] [--res WxH]
//   fastatlas compare     (--boxes FILE | --scene FILE | --synthetic) --omega N[,N...] --csv FILE
//   fastatlas gen-boxes   --omega N --seed S -o BOXES
//
// Exit codes: 0 success, 1 malformed input or usage, 2 packing failed, 3 nothing visible.

#include "fastatlas/fastatlas.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace fastatlas;

namespace {

enum ExitCode : int { kOk = 0, kBadInput = 1, kPackFailed = 2, kNothingVisible = 3 };

constexpr const char* kAveragingNote = "# stretch columns: screen-area weighted per frame; frames averaged uniformly";

struct PackFlags {
    std::uint32_t omega = 2048;
    std::uint32_t scales = 64;
    std::uint32_t min_dim = 1;
    std::uint32_t padding = 0;
    unsigned threads = 0;

    PackOptions options() const { return {scales, min_dim, padding, threads, 8}; }
};

void add_pack_flags(CLI::App* cmd, PackFlags& f, bool omega_required)
{
    auto* o = cmd->add_option("--omega", f.omega, "Atlas side length in texels (power of two)");
    if (omega_required)
        o->required();
    cmd->add_option("--scales", f.scales, "Number of candidate scales k/n")->check(CLI::PositiveNumber);
    cmd->add_option("--min-dim", f.min_dim, "Minimum scaled box extent")->check(CLI::PositiveNumber);
    cmd->add_option("--padding", f.padding, "Texels of padding per side");
    cmd->add_option("--threads", f.threads, "Worker threads for the scale search (0: all cores)");
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<ChartBox> load_boxes(const fs::path& path)
{
    std::istringstream in(read_file(path));
    try {
        return parse_box_list(in);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string layout_string(const AtlasLayout& l)
{
    std::ostringstream out;
    write_layout(out, l);
    return out.str();
}

std::string svg_string(const AtlasLayout& l)
{
    std::ostringstream out;
    write_svg(out, l);
    return out.str();
}

double elapsed_ms(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

// ---- pack-boxes ----

struct PackBoxesArgs {
    fs::path input, output, csv, svg;
    PackFlags pack;
};

int cmd_pack_boxes(const PackBoxesArgs& a)
{
    const auto boxes = load_boxes(a.input);
    const AtlasLayout layout = pack(boxes, a.pack.omega, a.pack.options());
    atomic_write(a.output, layout_string(layout));
    if (!a.csv.empty()) {
        std::ostringstream csv;
        csv << "boxes,omega,scale_num,scale_den,scale,efficiency,l2,linf,digest\n";
        std::string l2 = "", linf = "";
        if (!layout.placements.empty()) {
            const StretchReport r = scene_stretch(box_triangle_pairs(layout));
            l2 = fmt(r.l2);
            linf = fmt(r.linf);
        }
        csv << boxes.size() << ',' << layout.omega << ',' << layout.scale_num << ',' << layout.scale_den << ','
            << fmt(layout.scale) << ',' << fmt(packing_efficiency(layout)) << ',' << l2 << ',' << linf << ','
            << to_hex(layout_digest(layout)) << '\n';
        atomic_write(a.csv, csv.str());
    }
    if (!a.svg.empty())
        atomic_write(a.svg, svg_string(layout));
    std::cout << "packed " << boxes.size() << " boxes at scale " << layout.scale_num << '/' << layout.scale_den
              << " (effective " << fmt(layout.scale) << "), efficiency " << fmt(packing_efficiency(layout)) << '\n';
    return kOk;
}

// ---- atlas-scene ----

struct SceneArgs {
    fs::path scene, out_dir;
    std::optional<std::uint32_t> omega, scales, min_dim, padding;
    std::string res;
    unsigned threads = 0;
};

SceneConfig load_scene(const fs::path& path)
{
    std::istringstream in(read_file(path));
    return parse_scene_config(in, path.parent_path());
}

struct SceneRun {
    SceneConfig cfg;
    Mesh mesh;
    CameraFrame cam;
};

SceneRun prepare_scene(const SceneArgs& a)
{
    SceneRun run{load_scene(a.scene), {}, {}};
    if (a.omega)
        run.cfg.atlas = *a.omega;
    if (a.scales)
        run.cfg.n_scales = *a.scales;
    if (a.min_dim)
        run.cfg.min_dim = *a.min_dim;
    if (a.padding)
        run.cfg.padding = *a.padding;
    if (!a.res.empty()) {
        const auto r = parse_resolution(a.res);
        if (!r)
            throw ParseError("--res expects WxH, got '" + a.res + "'");
        run.cfg.screen = *r;
    }
    run.cfg.validate();
    try {
        run.mesh = load_obj(run.cfg.mesh_path);
    } catch (const ParseError& e) {
        throw ParseError(run.cfg.mesh_path.string() + ": " + e.what());
    } catch (const Error& e) {
        throw ParseError(e.what());
    }
    run.cam = run.cfg.camera();
    return run;
}

SceneOptions scene_options(const SceneConfig& cfg, unsigned threads)
{
    SceneOptions opt;
    opt.raster.backface_cull = cfg.backface_cull;
    opt.pack = {cfg.n_scales, cfg.min_dim, cfg.padding, threads, 8};
    return opt;
}

int cmd_atlas_scene(const SceneArgs& a)
{
    const SceneRun run = prepare_scene(a);
    const SceneAtlas atlas = atlas_scene(run.mesh, run.cam, run.cfg.screen, run.cfg.atlas,
                                         scene_options(run.cfg, a.threads));
    fs::create_directories(a.out_dir);
    atomic_write(a.out_dir / "layout.txt", layout_string(atlas.layout));
    atomic_write(a.out_dir / "atlas.svg", svg_string(atlas.layout));

    std::ostringstream charts;
    charts << "# triangle_id chart_id (-1: not visible)\n";
    for (std::size_t t = 0; t < atlas.charts.chart_of_triangle.size(); ++t) {
        const std::uint32_t c = atlas.charts.chart_of_triangle[t];
        charts << t << ' ';
        if (c == kNoChart)
            charts << -1;
        else
            charts << c;
        charts << '\n';
    }
    atomic_write(a.out_dir / "charts.txt", charts.str());

    std::ostringstream csv;
    csv << kAveragingNote << '\n' << "chart_id,triangles,box_w,box_h,placed_w,placed_h,l2,linf\n";
    const auto pairs_for = [&](const ChartSet& cs) {
        return atlas_triangle_pairs(run.mesh, run.cam, run.cfg.screen, cs, atlas.bounds, atlas.layout);
    };
    for (const Placement& p : canonicalize(atlas.layout).placements) {
        ChartSet one;
        for (const Chart& c : atlas.charts.charts)
            if (c.id == p.chart_id)
                one.charts.push_back(c);
        const auto pairs = pairs_for(one);
        std::string l2, linf;
        try {
            const StretchReport r = scene_stretch(pairs);
            l2 = fmt(r.l2);
            linf = fmt(r.linf);
        } catch (const NoValidTriangles&) {
        }
        csv << p.chart_id << ',' << (one.charts.empty() ? 0 : one.charts[0].triangles.size()) << ','
            << p.target_w << ',' << p.target_h << ',' << p.w << ',' << p.h << ',' << l2 << ',' << linf << '\n';
    }
    std::string l2, linf;
    try {
        const StretchReport r = scene_stretch(pairs_for(atlas.charts));
        l2 = fmt(r.l2);
        linf = fmt(r.linf);
    } catch (const NoValidTriangles&) {
    }
    csv << "all," << atlas.charts.charts.size() << ",,,,," << l2 << ',' << linf << '\n';
    atomic_write(a.out_dir / "stretch.csv", csv.str());

    std::cout << atlas.charts.charts.size() << " charts, scale " << atlas.layout.scale_num << '/'
              << atlas.layout.scale_den << " (effective " << fmt(atlas.layout.scale) << "), efficiency "
              << fmt(packing_efficiency(atlas.layout)) << ", shading rate "
              << fmt(effective_shading_rate(allocated_texels(atlas.layout), atlas.fragments)) << '\n';
    return kOk;
}

// ---- compare ----

struct CompareArgs {
    fs::path boxes, scene, csv;
    bool synthetic = false;
    std::uint64_t seed = 1;
    std::vector<std::uint32_t> omegas;
    std::vector<std::string> packers{"fastatlas", "sequential", "superblock"};
    std::uint32_t scales = 64, min_dim = 1, padding = 0, block_size = 256;
    std::string res;
    unsigned threads = 0;
};

struct Row {
    std::string packer;
    std::uint32_t omega = 0;
    bool ok = false;
    double efficiency = 0, scale = 0, l2 = 0, linf = 0, wall_ms = 0;
    std::optional<std::uint32_t> block_size, halvings;
};

int cmd_compare(const CompareArgs& a)
{
    const int sources = int(!a.boxes.empty()) + int(!a.scene.empty()) + int(a.synthetic);
    if (sources != 1)
        throw ParseError("compare needs exactly one of --boxes, --scene, --synthetic");
    if (a.omegas.empty())
        throw ParseError("compare needs at least one --omega");
    for (const std::string& p : a.packers)
        if (p != "fastatlas" && p != "sequential" && p != "superblock")
            throw ParseError("unknown packer '" + p + "'");

    // Scene input: charts and screen boxes do not depend on the atlas size.
    std::optional<SceneRun> run;
    SceneAtlas scene_charts;
    std::vector<ChartBox> fixed_boxes;
    if (!a.scene.empty()) {
        SceneArgs sa;
        sa.scene = a.scene;
        sa.res = a.res;
        run = prepare_scene(sa);
        RasterOptions raster;
        raster.backface_cull = run->cfg.backface_cull;
        const DepthBuffer depth = depth_prepass(run->mesh, run->cam, run->cfg.screen, raster);
        const VisibilityBuffer vis = mark_visible(run->mesh, run->cam, depth, raster);
        scene_charts.charts = merge_shared_vertices(connected_charts(run->mesh, vis), run->mesh);
        scene_charts.bounds = chart_bounds(run->mesh, run->cam, scene_charts.charts, run->cfg.screen);
        if (scene_charts.bounds.empty())
            throw NothingVisible();
        fixed_boxes = chart_boxes(scene_charts.bounds);
    } else if (!a.boxes.empty()) {
        fixed_boxes = load_boxes(a.boxes);
    }

    std::vector<Row> rows;
    for (std::uint32_t omega : a.omegas) {
        if (!is_power_of_two(omega))
            throw ParseError("--omega values must be powers of two");
        std::vector<ChartBox> boxes = fixed_boxes;
        if (a.synthetic) {
            Rng rng(a.seed ^ (std::uint64_t(omega) << 32));
            boxes = heavy_tailed_boxes(rng, omega);
        }
        for (const std::string& name : a.packers) {
            Row row;
            row.packer = name;
            row.omega = omega;
            const auto t0 = std::chrono::steady_clock::now();
            std::optional<AtlasLayout> layout;
            double scale = 0;
            const PackOptions opt{a.scales, a.min_dim, a.padding, a.threads, 8};
            try {
                if (name == "fastatlas") {
                    layout = pack(boxes, omega, opt);
                    scale = layout->scale;
                } else if (name == "sequential") {
                    layout = sequential_search(boxes, omega, opt);
                    scale = layout->scale;
                } else {
                    const auto r =
                        superblock_pack(boxes, omega, {std::min(a.block_size, omega), true, 16});
                    if (r) {
                        layout = r->layout;
                        scale = 1.0;
                        for (double d : r->downscale)
                            scale = std::min(scale, d);
                        row.block_size = r->block_size;
                        row.halvings = r->halvings;
                    }
                }
            } catch (const PackFailure&) {
            }
            row.wall_ms = elapsed_ms(t0);
            if (layout) {
                row.ok = true;
                row.efficiency = packing_efficiency(*layout);
                row.scale = scale;
                if (!layout->placements.empty()) {
                    const StretchReport r =
                        run ? scene_stretch(atlas_triangle_pairs(run->mesh, run->cam, run->cfg.screen,
                                                                 scene_charts.charts, scene_charts.bounds, *layout))
                            : scene_stretch(box_triangle_pairs(*layout));
                    row.l2 = r.l2;
                    row.linf = r.linf;
                }
            }
            rows.push_back(row);
        }
    }

    std::ostringstream csv;
    csv << kAveragingNote << '\n' << "packer,omega,status,efficiency,scale,l2,linf,block_size,halvings,wall_ms\n";
    bool any_ok = false;
    for (const Row& r : rows) {
        any_ok = any_ok || r.ok;
        csv << r.packer << ',' << r.omega << ',' << (r.ok ? "ok" : "fail") << ',';
        if (r.ok)
            csv << fmt(r.efficiency) << ',' << fmt(r.scale) << ',' << fmt(r.l2) << ',' << fmt(r.linf);
        else
            csv << ",,,";
        csv << ',' << (r.block_size ? std::to_string(*r.block_size) : "") << ','
            << (r.halvings ? std::to_string(*r.halvings) : "") << ',' << fmt(r.wall_ms) << '\n';
    }
    if (a.csv.empty())
        std::cout << csv.str();
    else
        atomic_write(a.csv, csv.str());
    return any_ok ? kOk : kPackFailed;
}

// ---- gen-boxes ----

struct GenArgs {
    fs::path output;
    std::uint32_t omega = 2048;
    std::uint64_t seed = 1;
    std::uint32_t min_count = 1, max_count = 400;
};

int cmd_gen_boxes(const GenArgs& a)
{
    if (!is_power_of_two(a.omega))
        throw ParseError("--omega must be a power of two");
    if (a.min_count == 0 || a.min_count > a.max_count)
        throw ParseError("need 1 <= --min-count <= --max-count");
    Rng rng(a.seed);
    const auto boxes = heavy_tailed_boxes(rng, a.omega, {.min_count = a.min_count, .max_count = a.max_count});
    std::ostringstream out;
    write_box_list(out, boxes);
    atomic_write(a.output, out.str());
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"FastAtlas: chart extraction, conservative screen boxes and atlas packing"};
    app.set_version_flag("--version", std::string("fastatlas ") + kToolVersion);
    app.require_subcommand(1);

    PackBoxesArgs pb;
    auto* pack_cmd = app.add_subcommand("pack-boxes", "Pack a box list into an atlas");
    pack_cmd->add_option("input", pb.input, "Box list (chart_id min_tri w h per line)")->required();
    pack_cmd->add_option("-o,--output", pb.output, "Layout file to write")->required();
    pack_cmd->add_option("--csv", pb.csv, "Metrics CSV to write");
    pack_cmd->add_option("--svg", pb.svg, "SVG rendering of the atlas");
    add_pack_flags(pack_cmd, pb.pack, true);

    SceneArgs sc;
    auto* scene_cmd = app.add_subcommand("atlas-scene", "Run the full pipeline on a scene config");
    scene_cmd->add_option("scene", sc.scene, "Scene config (key = value)")->required();
    scene_cmd->add_option("--out-dir", sc.out_dir, "Directory for layout.txt, charts.txt, stretch.csv, atlas.svg")
        ->required();
    scene_cmd->add_option("--omega", sc.omega, "Override the atlas size");
    scene_cmd->add_option("--scales", sc.scales, "Override the number of candidate scales");
    scene_cmd->add_option("--min-dim", sc.min_dim, "Override the minimum scaled extent");
    scene_cmd->add_option("--padding", sc.padding, "Override the padding");
    scene_cmd->add_option("--res", sc.res, "Override the screen resolution, WxH");
    scene_cmd->add_option("--threads", sc.threads, "Worker threads for the scale search (0: all cores)");

    CompareArgs cmp;
    auto* cmp_cmd = app.add_subcommand("compare", "Compare packers over one or more atlas sizes");
    cmp_cmd->add_option("--boxes", cmp.boxes, "Box list input");
    cmp_cmd->add_option("--scene", cmp.scene, "Scene config input");
    cmp_cmd->add_flag("--synthetic", cmp.synthetic, "Heavy-tailed synthetic boxes per omega");
    cmp_cmd->add_option("--seed", cmp.seed, "Seed for --synthetic");
    cmp_cmd->add_option("--omega", cmp.omegas, "Atlas sizes")->delimiter(',')->required();
    cmp_cmd->add_option("--packer", cmp.packers, "Packers: fastatlas, sequential, superblock")->delimiter(',');
    cmp_cmd->add_option("--scales", cmp.scales, "Number of candidate scales")->check(CLI::PositiveNumber);
    cmp_cmd->add_option("--min-dim", cmp.min_dim, "Minimum scaled extent")->check(CLI::PositiveNumber);
    cmp_cmd->add_option("--padding", cmp.padding, "Padding per side");
    cmp_cmd->add_option("--block-size", cmp.block_size, "Initial superblock size");
    cmp_cmd->add_option("--res", cmp.res, "Override the scene resolution, WxH");
    cmp_cmd->add_option("--threads", cmp.threads, "Worker threads for the scale search (0: all cores)");
    cmp_cmd->add_option("--csv", cmp.csv, "CSV to write (stdout if omitted)");

    GenArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-boxes", "Write a heavy-tailed synthetic box list");
    gen_cmd->add_option("-o,--output", gen.output, "Box list to write")->required();
    gen_cmd->add_option("--omega", gen.omega, "Atlas size the boxes are drawn for");
    gen_cmd->add_option("--seed", gen.seed, "Random seed");
    gen_cmd->add_option("--min-count", gen.min_count, "Minimum number of boxes");
    gen_cmd->add_option("--max-count", gen.max_count, "Maximum number of boxes");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kBadInput;
    }

    try {
        if (*pack_cmd)
            return cmd_pack_boxes(pb);
        if (*scene_cmd)
            return cmd_atlas_scene(sc);
        if (*cmp_cmd)
            return cmd_compare(cmp);
        return cmd_gen_boxes(gen);
    } catch (const PackFailure& e) {
        std::cerr << "fastatlas: " << e.what() << '\n';
        return kPackFailed;
    } catch (const NothingVisible& e) {
        std::cerr << "fastatlas: " << e.what() << '\n';
        return kNothingVisible;
    } catch (const std::exception& e) {
        std::cerr << "fastatlas: " << e.what() << '\n';
        return kBadInput;
    }
}
