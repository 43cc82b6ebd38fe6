#include "tprb/experiments.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace tprb {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Camera case_camera() {
    Camera cam;
    cam.position = {0, 0, 0};
    cam.look_at = {0, 0, 1};
    cam.up = {0, 1, 0};
    cam.fov_deg = 20.0;
    cam.width = 64;
    cam.height = 64;
    return cam;
}

// Square slab of side `size` centred on the optical axis at depth 2, normal
// toward the camera, u along +x.
Shape slab(double size) {
    Shape s;
    s.name = "slab";
    s.origin = {-0.5 * size, 0.5 * size, 2.0};
    s.edge_u = {size, 0, 0};
    s.edge_v = {0, -size, 0};
    s.binding = PiBinding{{0, 0, 1}, 1.0};
    return s;
}

const Rgb kBlack{0.0, 0.0, 0.0};
const Rgb kRed{1.0, 0.0, 0.0};

// Emitter in the plane y = -1 facing +y, u along +z.
Shape floor_emitter(const Vec3 &origin, double length_z, double width_x) {
    Shape s;
    s.name = "emitter";
    s.origin = origin;
    s.edge_u = {0, 0, length_z};
    s.edge_v = {width_x, 0, 0};
    return s;
}

// Constant emitter for Setting 2. Wide enough that the change of irradiance
// with the slab depth is marginal. Ends at z = 5.5, short of where the plane
// enters the field of view.
Shape constant_floor(Variant variant) {
    if (variant == Variant::Occluding) return floor_emitter({-40.0, -1.0, -40.0}, 45.5, 80.0);
    return floor_emitter({-0.5, -1.0, 0.5}, 1.0, 1.0);
}

// Textured emitter for Setting 3. In the occluding variant the radiance is a
// bilinear plateau that falls to zero on the border, so the emitter has no
// edge in direction space.
Shape textured_floor(Variant variant) {
    if (variant == Variant::Occluding) return floor_emitter({-1.5, -1.0, 1.0}, 2.0, 3.0);
    return floor_emitter({-0.5, -1.0, 0.5}, 1.0, 1.0);
}

Texture textured_floor_radiance(Variant variant) {
    if (variant == Variant::FullyVisible)
        return LinearGradientTexture{TexAxis::U, kBlack, kRed};
    GridTexture g;
    g.width = 4;
    g.height = 4;
    const double profile[4] = {0.0, 1.0, 1.0, 0.0};
    for (int j = 0; j < 4; ++j)
        for (int i = 0; i < 4; ++i) g.texels.push_back(kRed * (profile[i] * profile[j]));
    return g;
}

}  // namespace

std::string to_string(Variant v) { return v == Variant::Occluding ? "occluding" : "fully_visible"; }

std::optional<Variant> parse_variant(const std::string &s) {
    if (s == "occluding") return Variant::Occluding;
    if (s == "fully_visible") return Variant::FullyVisible;
    return std::nullopt;
}

Scene build_case_scene(const CaseSetting &setting) {
    Scene scene;
    scene.camera = case_camera();
    scene.parameter_name = "depth";
    scene.parameter = 0.0;
    const double slab_size = setting.variant == Variant::Occluding ? 1.0 : 0.5;
    Shape s = slab(slab_size);
    switch (setting.id) {
    case 1:
        scene.emitters.push_back({LinearGradientTexture{TexAxis::U, kBlack, kRed}, false, false});
        s.emitter = 0;
        scene.shapes.push_back(s);
        break;
    case 2: {
        scene.bsdfs.push_back({LinearGradientTexture{TexAxis::U, kBlack, kRed}});
        scene.emitters.push_back({ConstantTexture{Rgb(1.0)}, false, false});
        s.bsdf = 0;
        Shape e = constant_floor(setting.variant);
        e.emitter = 0;
        scene.shapes.push_back(s);
        scene.shapes.push_back(e);
        break;
    }
    case 3: {
        scene.bsdfs.push_back({ConstantTexture{Rgb(0.8)}});
        scene.emitters.push_back({textured_floor_radiance(setting.variant), false, false});
        s.bsdf = 0;
        Shape e = textured_floor(setting.variant);
        e.emitter = 0;
        scene.shapes.push_back(s);
        scene.shapes.push_back(e);
        break;
    }
    default: throw std::invalid_argument("case setting must be 1, 2 or 3");
    }
    scene.finalize();
    return scene;
}

Scene build_emission_scale_scene(const CaseSetting &setting, double pi) {
    Scene scene = build_case_scene(setting);
    for (Shape &s : scene.shapes) s.binding.reset();
    for (Emitter &e : scene.emitters) e.scaled_by_parameter = true;
    scene.parameter_name = "emission_scale";
    scene.parameter = pi;
    scene.finalize();
    return scene;
}

const MethodMetrics *ComparisonReport::find(const std::string &method) const {
    for (const MethodMetrics &m : methods)
        if (m.method == method) return &m;
    return nullptr;
}

MethodMetrics compare_to_reference(const std::string &name, const GradImage &g,
                                   const GradImage &reference, Channel channel) {
    if (g.width != reference.width || g.height != reference.height)
        throw std::invalid_argument("gradient images differ in resolution");
    MethodMetrics m;
    m.method = name;
    double diff = 0.0, ref_l1 = 0.0, peak = 0.0;
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x) {
            const double a = g.channel(x, y, channel), r = reference.channel(x, y, channel);
            diff += std::abs(a - r);
            ref_l1 += std::abs(r);
            m.l1_norm += std::abs(a);
            peak = std::max(peak, std::abs(r));
        }
    const double n = double(g.pixel_count());
    m.mae = n > 0 ? diff / n : 0.0;
    m.rel_l1 = ref_l1 > 0.0 ? diff / ref_l1 : (diff > 0.0 ? INFINITY : 0.0);
    int agree = 0, counted = 0;
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x) {
            const double r = reference.channel(x, y, channel);
            if (std::abs(r) <= 1e-3 * peak || peak == 0.0) continue;
            ++counted;
            if ((g.channel(x, y, channel) > 0.0) == (r > 0.0)) ++agree;
        }
    m.sign_agreement = counted > 0 ? double(agree) / counted : 1.0;
    return m;
}

ComparisonReport run_comparison(const Scene &scene, const CaseSetting &setting,
                                const std::vector<Method> &methods, const ComparisonConfig &config) {
    ComparisonReport report;
    report.setting = setting;
    report.channel = config.integrator.channel;
    report.width = scene.camera.width;
    report.height = scene.camera.height;
    report.spp = config.integrator.spp;
    report.fd_spp = config.fd_spp;
    report.fd_h = config.fd_h.value_or(default_fd_step(scene));

    IntegratorConfig fd_config = config.integrator;
    fd_config.spp = config.fd_spp;
    auto start = std::chrono::steady_clock::now();
    const GradImage fd = fd_gradient(scene, report.fd_h, fd_config);
    report.fd_runtime_seconds = seconds_since(start);
    const MethodMetrics fd_self = compare_to_reference("fd", fd, fd, report.channel);
    report.fd_l1_norm = fd_self.l1_norm;
    report.images["fd"] = fd;

    for (Method method : methods) {
        if (method == Method::Fd) {
            MethodMetrics m = fd_self;
            m.runtime_seconds = report.fd_runtime_seconds;
            report.methods.push_back(m);
            continue;
        }
        start = std::chrono::steady_clock::now();
        const GradImage g = render_gradient(scene, method, config.integrator);
        MethodMetrics m = compare_to_reference(to_string(method), g, fd, report.channel);
        m.runtime_seconds = seconds_since(start);
        report.methods.push_back(m);
        report.images[to_string(method)] = g;
    }
    return report;
}

ComparisonReport run_comparison(const CaseSetting &setting, const std::vector<Method> &methods,
                                const ComparisonConfig &config) {
    return run_comparison(build_case_scene(setting), setting, methods, config);
}

ComparisonReport ablate_determinant(const CaseSetting &setting, const ComparisonConfig &config) {
    const Scene scene = build_case_scene(setting);
    ComparisonReport report = run_comparison(scene, setting, {Method::PrbThreePoint}, config);
    IntegratorConfig ablated = config.integrator;
    ablated.ablate_determinant = true;
    const auto start = std::chrono::steady_clock::now();
    const GradImage g = render_gradient(scene, Method::PrbThreePoint, ablated);
    MethodMetrics m =
        compare_to_reference("prb_threepoint_ablated", g, report.images.at("fd"), report.channel);
    m.runtime_seconds = seconds_since(start);
    report.methods.push_back(m);
    report.images["prb_threepoint_ablated"] = g;
    return report;
}

double mae_loss(const Image &a, const Image &b) {
    if (a.data.size() != b.data.size()) throw std::invalid_argument("image sizes differ");
    double total = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) total += std::abs(a.data[i] - b.data[i]);
    return a.data.empty() ? 0.0 : total / double(a.data.size());
}

Image mae_adjoint(const Image &current, const Image &target) {
    if (current.data.size() != target.data.size()) throw std::invalid_argument("image sizes differ");
    Image d(current.width, current.height);
    const double n = double(current.data.size());
    for (size_t i = 0; i < d.data.size(); ++i) {
        const double r = current.data[i] - target.data[i];
        d.data[i] = (r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0)) / n;
    }
    return d;
}

namespace {

Image render_target(const CaseSetting &setting, const OptimizationConfig &config) {
    Scene scene = build_case_scene(setting);
    scene.parameter = config.target_pi;
    IntegratorConfig c = config.integrator;
    c.spp = config.target_spp;
    c.seed = config.target_seed;
    return render(scene, c);
}

}  // namespace

OptimizationTrace optimize_translation(const CaseSetting &setting, const OptimizationConfig &config) {
    const Image target = render_target(setting, config);
    Scene scene = build_case_scene(setting);
    scene.parameter = config.init_pi;
    OptimizationTrace trace;
    for (int it = 0; it <= config.steps; ++it) {
        IntegratorConfig c = config.integrator;
        c.seed = config.integrator.seed + uint64_t(it);
        const Image current = render(scene, c);
        OptimizationStep step;
        step.iteration = it;
        step.pi = scene.parameter;
        step.loss = mae_loss(current, target);
        if (it == config.steps) {
            trace.steps.push_back(step);
            break;
        }
        step.gradient = backpropagate(scene, config.method, mae_adjoint(current, target), c);
        trace.steps.push_back(step);
        scene.parameter -= config.step_size * step.gradient;
        if (!std::isfinite(scene.parameter) || std::abs(scene.parameter) > config.pi_bound) {
            trace.diverged = true;
            trace.steps.push_back({it + 1, scene.parameter, NAN, 0.0});
            break;
        }
    }
    return trace;
}

LossSweep sweep_loss(const CaseSetting &setting, const OptimizationConfig &config, double lo,
                     double hi, int points) {
    if (points < 2) throw std::invalid_argument("a loss sweep needs at least two points");
    const Image target = render_target(setting, config);
    Scene scene = build_case_scene(setting);
    LossSweep sweep;
    for (int i = 0; i < points; ++i) {
        scene.parameter = lo + (hi - lo) * double(i) / double(points - 1);
        sweep.pi.push_back(scene.parameter);
        sweep.loss.push_back(mae_loss(render(scene, config.integrator), target));
    }
    return sweep;
}

bool is_unimodal(const std::vector<double> &values, double tol) {
    if (values.size() < 3) return true;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double flat = tol * (*hi - *lo);
    bool rising = false;
    for (size_t i = 1; i < values.size(); ++i) {
        const double d = values[i] - values[i - 1];
        if (std::abs(d) <= flat) continue;
        if (d > 0.0) rising = true;
        else if (rising) return false;
    }
    return true;
}

}  // namespace tprb
