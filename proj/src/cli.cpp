#include "tprb/cli.h"

#include <cmath>
#include <filesystem>
#include <iostream>
#include <regex>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"
#include "tprb/experiments.h"
#include "tprb/io.h"

namespace tprb {

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string scene_path;
    std::optional<int> spp, max_depth, threads;
    std::optional<uint64_t> seed;
    std::string res;
    std::string out = ".";
    std::string channel = "r";
    std::optional<double> fd_eps;
    int setting = 1;
    std::string variant = "occluding";
    std::string method;
    double png_scale = 0.0;
    int fd_spp = 4096;
    double target_pi = 0.0;
    std::optional<double> init_pi;
    int steps = 100;
    double lr = 0.25;
    int target_spp = 256;
};

CaseSetting case_setting(const Options &o) {
    const auto v = parse_variant(o.variant);
    if (!v) throw UsageError("--variant must be occluding or fully_visible");
    if (o.setting < 1 || o.setting > 3) throw UsageError("--setting must be 1, 2 or 3");
    return {o.setting, *v};
}

// Scene from --scene, or the case-study fixture selected by --setting/--variant.
SceneFile load_scene(const Options &o) {
    SceneFile f;
    if (!o.scene_path.empty()) {
        f = parse_scene(o.scene_path);
    } else {
        f.scene = build_case_scene(case_setting(o));
    }
    if (!o.res.empty()) {
        static const std::regex re("([0-9]+)x([0-9]+)");
        std::smatch m;
        if (!std::regex_match(o.res, m, re)) throw UsageError("--res must look like WxH");
        const int w = std::stoi(m[1]), h = std::stoi(m[2]);
        if (w < 1 || h < 1) throw UsageError("--res must be positive");
        f.scene.camera.width = w;
        f.scene.camera.height = h;
    }
    return f;
}

IntegratorConfig integrator_config(const Options &o, const RenderDefaults &d) {
    IntegratorConfig c;
    c.spp = o.spp.value_or(d.spp);
    c.max_depth = o.max_depth.value_or(d.max_depth);
    c.seed = o.seed.value_or(d.seed);
    c.threads = o.threads.value_or(0);
    const auto ch = parse_channel(o.channel);
    if (!ch) throw UsageError("--channel must be r, g or b");
    c.channel = *ch;
    try {
        c.validate();
    } catch (const std::invalid_argument &e) {
        throw UsageError(e.what());
    }
    return c;
}

std::string join(const std::string &dir, const std::string &name) {
    return (std::filesystem::path(dir) / name).string();
}

double auto_png_scale(const GradImage &g, Channel c, double requested) {
    if (requested > 0.0) return requested;
    double peak = 0.0;
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x) peak = std::max(peak, std::abs(g.channel(x, y, c)));
    return peak > 0.0 ? 1.0 / peak : 1.0;
}

void write_gradient(const GradImage &g, const std::string &stem, const Options &o, Channel c) {
    write_pfm(g, join(o.out, stem + ".pfm"));
    write_png_signed(g, c, auto_png_scale(g, c, o.png_scale), join(o.out, stem + ".png"));
}

void emit(const std::vector<std::string> &lines, const std::string &path) {
    write_lines(lines, path);
    for (const auto &l : lines) std::cout << l << '\n';
}

int run_render(const Options &o) {
    if (o.fd_eps) throw UsageError("--fd-eps is only valid with finite differences");
    const SceneFile f = load_scene(o);
    const IntegratorConfig c = integrator_config(o, f.render);
    const Image img = render(f.scene, c);
    const std::string path = join(o.out, "render.pfm");
    write_pfm(img, path);
    Rgb mean{};
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) mean += img.at(x, y);
    mean = mean * (1.0 / double(img.pixel_count()));
    emit({nlohmann::json({{"record", "render"},
                          {"image", path},
                          {"spp", c.spp},
                          {"seed", c.seed},
                          {"mean", {mean.r, mean.g, mean.b}}})
              .dump()},
         join(o.out, "render.jsonl"));
    return 0;
}

int run_grad(const Options &o) {
    const auto method = parse_method(o.method);
    if (!method) throw UsageError("--method must be one of prb_threepoint, ad_threepoint, "
                                  "ad_spherical, prb_classic, fd");
    if (o.fd_eps && *method != Method::Fd)
        throw UsageError("--fd-eps is only valid with --method fd");
    const SceneFile f = load_scene(o);
    const IntegratorConfig c = integrator_config(o, f.render);
    std::optional<double> h = o.fd_eps ? o.fd_eps : f.render.fd_eps;
    const GradImage g = render_gradient(f.scene, *method, c, h);
    const std::string stem = "grad_" + to_string(*method);
    write_gradient(g, stem, o, c.channel);
    double l1 = 0.0;
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x) l1 += std::abs(g.channel(x, y, c.channel));
    emit({nlohmann::json({{"record", "gradient"},
                          {"method", to_string(*method)},
                          {"image", join(o.out, stem + ".pfm")},
                          {"spp", c.spp},
                          {"seed", c.seed},
                          {"channel", o.channel},
                          {"l1_norm", l1}})
              .dump()},
         join(o.out, stem + ".jsonl"));
    return 0;
}

ComparisonConfig comparison_config(const Options &o, const RenderDefaults &d) {
    ComparisonConfig cc;
    cc.integrator = integrator_config(o, d);
    cc.fd_spp = o.fd_spp;
    if (cc.fd_spp < 1) throw UsageError("--fd-spp must be positive");
    cc.fd_h = o.fd_eps;
    return cc;
}

std::string case_stem(const CaseSetting &s) {
    return "s" + std::to_string(s.id) + "_" + to_string(s.variant);
}

int run_compare(const Options &o) {
    const CaseSetting s = case_setting(o);
    const SceneFile f = load_scene(o);
    const ComparisonConfig cc = comparison_config(o, f.render);
    const ComparisonReport r =
        run_comparison(f.scene, s,
                       {Method::PrbThreePoint, Method::AdThreePoint, Method::AdSpherical,
                        Method::PrbClassic, Method::Fd},
                       cc);
    const std::string stem = "compare_" + case_stem(s);
    for (const auto &[name, img] : r.images) write_gradient(img, stem + "_" + name, o, r.channel);
    emit(report_records(r), join(o.out, stem + ".jsonl"));
    return 0;
}

int run_ablate(const Options &o) {
    const CaseSetting s = case_setting(o);
    const ComparisonReport r = ablate_determinant(s, comparison_config(o, RenderDefaults{}));
    const std::string stem = "ablate_" + case_stem(s);
    for (const auto &[name, img] : r.images) write_gradient(img, stem + "_" + name, o, r.channel);
    emit(report_records(r), join(o.out, stem + ".jsonl"));
    return 0;
}

int run_optimize(const Options &o) {
    if (o.fd_eps) throw UsageError("--fd-eps is only valid with finite differences");
    const CaseSetting s = case_setting(o);
    OptimizationConfig oc;
    const auto method = parse_method(o.method.empty() ? "prb_threepoint" : o.method);
    if (!method || *method == Method::Fd)
        throw UsageError("--method for optimize must be a differentiable integrator");
    oc.method = *method;
    oc.target_pi = o.target_pi;
    oc.init_pi = o.init_pi.value_or(o.target_pi + 0.5);
    if (o.steps < 0) throw UsageError("--steps must be non-negative");
    oc.steps = o.steps;
    oc.step_size = o.lr;
    RenderDefaults d;
    d.spp = 16;
    oc.integrator = integrator_config(o, d);
    oc.target_spp = o.target_spp;
    const OptimizationTrace t = optimize_translation(s, oc);
    emit(trace_records(t, to_string(oc.method)),
         join(o.out, "optimize_" + to_string(oc.method) + "_" + case_stem(s) + ".jsonl"));
    return 0;
}

}  // namespace

int cli_main(int argc, char **argv) {
    CLI::App app{"Three-point path replay backpropagation for moving geometry"};
    app.fallthrough();
    app.require_subcommand(1);
    Options o;
    app.add_option("--scene", o.scene_path, "Scene file (JSON)");
    app.add_option("--spp", o.spp, "Samples per pixel");
    app.add_option("--res", o.res, "Resolution WxH");
    app.add_option("--seed", o.seed, "Random seed");
    app.add_option("--max-depth", o.max_depth, "Maximum number of path vertices");
    app.add_option("--out", o.out, "Output directory");
    app.add_option("--channel", o.channel, "Channel for gradient metrics and images (r|g|b)");
    app.add_option("--fd-eps", o.fd_eps, "Finite-difference step");
    app.add_option("--threads", o.threads, "Worker threads (0: all cores)");
    app.add_option("--setting", o.setting, "Case-study setting (1|2|3)");
    app.add_option("--variant", o.variant, "Case-study variant (occluding|fully_visible)");
    app.add_option("--png-scale", o.png_scale, "Colormap scale (default: 1 / peak magnitude)");

    auto *render_cmd = app.add_subcommand("render", "Render the radiance image");
    auto *grad_cmd = app.add_subcommand("grad", "Render a gradient image");
    grad_cmd->add_option("--method", o.method, "prb_threepoint|ad_threepoint|ad_spherical|prb_classic|fd")
        ->required();
    auto *compare_cmd = app.add_subcommand("compare", "Compare all methods against finite differences");
    compare_cmd->add_option("--fd-spp", o.fd_spp, "Samples per pixel of the FD oracle");
    auto *ablate_cmd = app.add_subcommand("ablate", "Disable the determinant derivative");
    ablate_cmd->add_option("--fd-spp", o.fd_spp, "Samples per pixel of the FD oracle");
    auto *opt_cmd = app.add_subcommand("optimize", "Recover the slab depth by gradient descent");
    opt_cmd->add_option("--target-pi", o.target_pi, "Parameter value of the target image");
    opt_cmd->add_option("--init-pi", o.init_pi, "Initial parameter (default target + 0.5)");
    opt_cmd->add_option("--steps", o.steps, "Gradient-descent steps");
    opt_cmd->add_option("--lr", o.lr, "Step size");
    opt_cmd->add_option("--method", o.method, "Adjoint method (default prb_threepoint)");
    opt_cmd->add_option("--target-spp", o.target_spp, "Samples per pixel of the target");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError &e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    try {
        std::filesystem::create_directories(o.out);
        if (render_cmd->parsed()) return run_render(o);
        if (grad_cmd->parsed()) return run_grad(o);
        if (compare_cmd->parsed()) return run_compare(o);
        if (ablate_cmd->parsed()) return run_ablate(o);
        if (opt_cmd->parsed()) return run_optimize(o);
    } catch (const UsageError &e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}

}  // namespace tprb
