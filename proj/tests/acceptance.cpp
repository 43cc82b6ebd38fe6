// Acceptance suite: one PASS/FAIL line per criterion at desk scale (64x64).
// Exit status is non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "test_util.h"
#include "tprb/experiments.h"

using namespace tprb;
using namespace tprb::testing;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string &name, const std::string &detail) {
    std::printf("[%s] criterion %d: %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

void info(const std::string &detail) {
    std::printf("[INFO] %s\n", detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char *f, double a, double b = 0, double c = 0, double d = 0, double e = 0) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, a, b, c, d, e);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

bool bit_equal(const Image &a, const Image &b) {
    return a.data.size() == b.data.size() &&
           std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(double)) == 0;
}

const std::vector<CaseSetting> kAllSettings = {
    {1, Variant::Occluding}, {2, Variant::Occluding}, {3, Variant::Occluding},
    {1, Variant::FullyVisible}, {2, Variant::FullyVisible}, {3, Variant::FullyVisible},
};

ComparisonConfig full_budget() {
    ComparisonConfig c;
    c.integrator.spp = 1024;
    c.integrator.channel = Channel::R;
    c.fd_spp = 4096;
    return c;
}

void criterion1() {
    const auto start = std::chrono::steady_clock::now();
    const ComparisonReport r = run_comparison(
        {3, Variant::Occluding}, {Method::PrbThreePoint, Method::AdSpherical, Method::PrbClassic}, full_budget());
    const double t = seconds_since(start);
    const double classic = r.find("prb_classic")->l1_norm / r.fd_l1_norm;
    const double three = r.find("prb_threepoint")->rel_l1, sph = r.find("ad_spherical")->rel_l1;
    report(1, classic < 0.02 && three < 0.10 && sph < 0.10 && t < 600.0, "bias reproduction (Setting 3)",
           fmt("prb_classic L1 / FD L1 = %.4f (< 0.02), prb_threepoint relL1 = %.4f (< 0.10), "
               "ad_spherical relL1 = %.4f (< 0.10), runtime %.1f s (< 600 s)",
               classic, three, sph, t));
}

void criterion2() {
    const ComparisonReport s1 = run_comparison({1, Variant::Occluding}, {Method::PrbClassic}, full_budget());
    const ComparisonReport s2 = run_comparison({2, Variant::Occluding}, {Method::PrbClassic}, full_budget());
    const double a = s1.find("prb_classic")->rel_l1, b = s2.find("prb_classic")->rel_l1;
    report(2, a < 0.10 && b < 0.10, "classic replay correct in Settings 1 and 2",
           fmt("prb_classic relL1: Setting 1 = %.4f, Setting 2 = %.4f (< 0.10)", a, b));
}

void criterion3() {
    IntegratorConfig c;
    c.spp = 1;
    const int paths = 10000;
    double worst = 0.0;
    long checked = 0;
    for (const CaseSetting &setting : kAllSettings) {
        const Scene s = build_case_scene(setting);
        for (int i = 0; i < paths; ++i) {
            const int px = i % 64, py = (i / 64) % 64;
            const CameraSample cs = camera_sample(s, 77, px, py, uint64_t(i / 4096));
            const Rgb L = sample_path(s, cs.ray, cs.rng, c);
            const Rgb prb = sample_path_adjoint(s, cs.ray, cs.rng, L, c).grad;
            const Rgb ad = dpi_of(ad_threepoint(s, cs.ray, cs.rng, c));
            for (int k = 0; k < 3; ++k) {
                const double scale = std::max(std::abs(prb[k]), std::abs(ad[k]));
                const double diff = std::abs(prb[k] - ad[k]);
                if (diff > 0.0) worst = std::max(worst, scale > 0.0 ? diff / scale : INFINITY);
            }
            ++checked;
        }
    }
    report(3, worst <= 1e-10, "PRB matches forward-mode AD per sample",
           fmt("%.0f paths over 6 scenes, worst relative difference %.3g (<= 1e-10)", double(checked), worst));
}

void criterion4() {
    const ComparisonReport r = run_comparison({2, Variant::FullyVisible},
                                              {Method::PrbThreePoint, Method::AdSpherical}, full_budget());
    const double three = r.find("prb_threepoint")->rel_l1, sph = r.find("ad_spherical")->rel_l1;
    report(4, three < 0.05 && sph > 2.0 * three, "unique-discontinuity separation (fully visible Setting 2)",
           fmt("prb_threepoint relL1 = %.4f (< 0.05), ad_spherical relL1 = %.4f (> 2x = %.4f)", three, sph,
               2.0 * three));

    // Split into pixels whose footprint stays on the slab over [pi - h, pi + h] and the rest.
    const Scene s = build_case_scene({2, Variant::FullyVisible});
    const GradImage &fd = r.images.at("fd"), &g = r.images.at("prb_threepoint"), &q = r.images.at("ad_spherical");
    double fd_in = 0.0, fd_out = 0.0, g_in = 0.0, q_in = 0.0;
    for (int y = 0; y < fd.height; ++y)
        for (int x = 0; x < fd.width; ++x) {
            bool inside = true;
            for (Point2 j : {Point2{0, 0}, Point2{1, 0}, Point2{0, 1}, Point2{1, 1}})
                for (double p : {-r.fd_h, r.fd_h}) {
                    const Ray ray = s.camera.generate_ray(x, y, j);
                    const auto hit = s.intersect(ray.origin, ray.dir, s.parameter + p);
                    inside = inside && hit && hit->point.shape_id == 0;
                }
            const double ref = fd.channel(x, y, Channel::R);
            if (!inside) {
                fd_out += std::abs(ref);
                continue;
            }
            fd_in += std::abs(ref);
            g_in += std::abs(g.channel(x, y, Channel::R) - ref);
            q_in += std::abs(q.channel(x, y, Channel::R) - ref);
        }
    info(fmt("fully visible Setting 2: silhouette pixels carry %.1f%% of the FD L1 norm; interior relL1 "
             "prb_threepoint = %.4f, ad_spherical = %.4f",
             100.0 * fd_out / (fd_in + fd_out), g_in / fd_in, q_in / fd_in));
}

void criterion5() {
    // Receding unit square centred on the axis at distance 1 + pi.
    Scene s;
    s.camera = looking_at({0, 0, 0}, {0, 0, 1}, {0, 1, 0}, 20, 4, 4);
    s.bsdfs.push_back({ConstantTexture{Rgb(0.5)}});
    Shape q = rectangle("square", {-0.5, 0.5, 1}, {1, 0, 0}, {0, -1, 0});
    q.binding = PiBinding{};
    q.bsdf = 0;
    s.shapes.push_back(q);
    s.finalize();
    const std::optional<Dual> d = s.reparam_det(attach({0, 0, 0}), ParamPoint{0, 0.5, 0.5},
                                                s.to_ambient(ParamPoint{0, 0.5, 0.5}, s.pi_attached()),
                                                s.pi_attached(), true);
    const Dual ratio = d ? *d / detach(*d) : Dual{NAN, NAN};
    const bool unit_ok = ratio.value == 1.0 && std::abs(ratio.dpi + 2.0) <= 1e-12;

    const ComparisonReport r = ablate_determinant({1, Variant::Occluding}, full_budget());
    const double full = r.find("prb_threepoint")->rel_l1, ablated = r.find("prb_threepoint_ablated")->rel_l1;
    report(5, unit_ok && full < 0.10 && ablated >= 0.20, "determinant ratio and ablation",
           fmt("ratio value = %.17g (== 1), derivative = %.15f (-2 within 1e-12); Setting 1 relL1 full = %.4f "
               "(< 0.10), ablated = %.4f (>= 0.20)",
               ratio.value, ratio.dpi, full, ablated));

    const ComparisonReport r3 = ablate_determinant({3, Variant::Occluding}, full_budget());
    info(fmt("ablation on Setting 3: relL1 full = %.4f, ablated = %.4f",
             r3.find("prb_threepoint")->rel_l1, r3.find("prb_threepoint_ablated")->rel_l1));
}

void criterion6() {
    bool static_zero = true;
    for (const CaseSetting &setting : kAllSettings) {
        Scene s = build_case_scene(setting);
        for (Shape &sh : s.shapes) sh.binding.reset();
        s.finalize();
        IntegratorConfig c;
        c.spp = 4;
        for (Method m : {Method::PrbThreePoint, Method::AdThreePoint, Method::AdSpherical, Method::PrbClassic,
                         Method::Fd})
            for (double x : render_gradient(s, m, c).data) static_zero = static_zero && x == 0.0;
    }
    double worst = 0.0;
    IntegratorConfig c;
    c.spp = 1;
    const double pi = 0.7;
    for (const CaseSetting &setting : kAllSettings) {
        const Scene s = build_emission_scale_scene(setting, pi);
        for (int i = 0; i < 10000; ++i) {
            const CameraSample cs = camera_sample(s, 5, i % 64, (i / 64) % 64, uint64_t(i / 4096));
            const Rgb L = sample_path(s, cs.ray, cs.rng, c);
            const Rgb prb = sample_path_adjoint(s, cs.ray, cs.rng, L, c).grad;
            const Rgb ad = dpi_of(ad_threepoint(s, cs.ray, cs.rng, c));
            for (int k = 0; k < 3; ++k) {
                const double expected = L[k] / pi;
                for (double g : {prb[k], ad[k]}) {
                    const double diff = std::abs(g - expected);
                    if (diff > 0.0) worst = std::max(worst, expected != 0.0 ? diff / std::abs(expected) : INFINITY);
                }
            }
        }
    }
    report(6, static_zero && worst <= 1e-6, "static geometry and emission homogeneity",
           std::string("unbound pi gives exactly zero from all methods: ") + (static_zero ? "yes" : "no") +
               fmt("; emission scale worst relative |dpi - L/pi| = %.3g (<= 1e-6)", worst));
}

void criterion7() {
    OptimizationConfig o;
    o.target_pi = 0.0;
    o.init_pi = 0.5;
    o.steps = 100;
    o.step_size = 0.25;
    o.integrator.spp = 16;
    o.integrator.seed = 1;
    const LossSweep sweep = sweep_loss({1, Variant::Occluding}, o, -1.0, 1.0, 101);
    const bool unimodal = is_unimodal(sweep.loss);

    o.method = Method::PrbThreePoint;
    const OptimizationTrace t1 = optimize_translation({1, Variant::Occluding}, o);
    o.method = Method::PrbClassic;
    const OptimizationTrace t3 = optimize_translation({3, Variant::Occluding}, o);
    const double e1 = std::abs(t1.final_pi() - o.target_pi), e3 = std::abs(t3.final_pi() - o.target_pi);
    int first = -1;
    for (const OptimizationStep &s : t1.steps)
        if (std::abs(s.pi - o.target_pi) < 1e-2) {
            first = s.iteration;
            break;
        }
    report(7, unimodal && !t1.diverged && e1 < 1e-2 && e3 > 0.4, "inverse-rendering analog",
           std::string("Setting 1 loss sweep over 101 points unimodal: ") + (unimodal ? "yes" : "no") +
               fmt("; prb_threepoint Setting 1 |pi - pi*| = %.4g after 100 steps (< 1e-2, first within at step "
                   "%.0f); prb_classic Setting 3 |pi - pi*| = %.4f (> 0.4)",
                   e1, double(first), e3));
}

void criterion8() {
    const Scene direct = direct_emitter_scene(Rgb(1.0));
    IntegratorConfig c;
    c.spp = 64;
    bool exact = true;
    for (double x : render(direct, c).data) exact = exact && x == 1.0;

    FacingRectangles f;
    const Scene fr = f.scene();
    IntegratorConfig fc;
    fc.max_depth = 2;
    std::vector<double> v;
    for (int i = 0; i < 4096; ++i) {
        const CameraSample cs = camera_sample(fr, 0, 0, 0, uint64_t(i));
        v.push_back(sample_path(fr, cs.ray, cs.rng, fc).g);
    }
    const Stats st = stats(v);
    const double expected =
        f.rho * f.le * rectangle_form_factor(f.target.x, f.target.y, f.ex0, f.ex1, f.ey0, f.ey1, f.height);
    const double z = std::abs(st.mean - expected) / st.se;

    const Scene s3 = build_case_scene({3, Variant::Occluding});
    IntegratorConfig a;
    a.spp = 16;
    a.seed = 42;
    a.threads = 1;
    IntegratorConfig b = a;
    b.threads = 4;
    const bool repro = bit_equal(render(s3, a), render(s3, a)) && bit_equal(render(s3, a), render(s3, b)) &&
                       bit_equal(render_gradient(s3, Method::PrbThreePoint, a),
                                 render_gradient(s3, Method::PrbThreePoint, b));
    report(8, exact && z <= 3.0 && repro, "forward renderer correctness",
           std::string("direct view exact: ") + (exact ? "yes" : "no") +
               fmt("; facing rectangles mean %.6f vs %.6f, %.2f standard errors (<= 3)", st.mean, expected, z) +
               "; bit-reproducible across runs and 1/4 workers: " + (repro ? "yes" : "no"));
}

}  // namespace

int main() {
    const auto start = std::chrono::steady_clock::now();
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    info(fmt("total runtime %.1f s", seconds_since(start)));
    std::printf("%d of 8 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
