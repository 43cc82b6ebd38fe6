#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <type_traits>
#include <vector>

#include "test_util.h"
#include "tprb/experiments.h"
#include "tprb/integrators.h"

using namespace tprb;
using namespace tprb::testing;

// Quantities that must never carry a pi-derivative are plain doubles.
static_assert(std::is_same_v<decltype(ParamPoint::u), double>);
static_assert(std::is_same_v<decltype(ParamPoint::v), double>);
static_assert(std::is_same_v<decltype(Intersection::t), double>);
static_assert(std::is_same_v<decltype(DirectionSample::pdf), double>);
static_assert(std::is_same_v<decltype(DirectionSample::local), Vec3>);
static_assert(std::is_same_v<decltype(EmitterSample::pdf_area), double>);
static_assert(std::is_same_v<decltype(Ray::dir), Vec3>);
static_assert(std::is_same_v<decltype(AttachedHit::u), Dual>);

namespace {

const std::vector<CaseSetting> kAllSettings = {
    {1, Variant::Occluding}, {2, Variant::Occluding}, {3, Variant::Occluding},
    {1, Variant::FullyVisible}, {2, Variant::FullyVisible}, {3, Variant::FullyVisible},
};

const Method kPerSampleMethods[] = {Method::PrbThreePoint, Method::AdThreePoint, Method::AdSpherical,
                                    Method::PrbClassic};

Scene with_resolution(Scene s, int w, int h) {
    s.camera.width = w;
    s.camera.height = h;
    s.finalize();
    return s;
}

IntegratorConfig config_with(int spp, uint64_t seed = 0, int threads = 0) {
    IntegratorConfig c;
    c.spp = spp;
    c.seed = seed;
    c.threads = threads;
    return c;
}

bool bit_equal(const Image &a, const Image &b) {
    return a.width == b.width && a.height == b.height &&
           std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(double)) == 0;
}

bool close(double a, double b, double rel, double abs_tol = 1e-12) {
    return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs_tol;
}

}  // namespace

TEST(Render, DirectViewOfConstantEmitterIsExact) {
    const Scene s = direct_emitter_scene(Rgb(1.0));
    for (int spp : {1, 7, 49, 64}) {
        const Image img = render(s, config_with(spp));
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) {
                const Rgb c = img.at(x, y);
                EXPECT_EQ(c.r, 1.0);
                EXPECT_EQ(c.g, 1.0);
                EXPECT_EQ(c.b, 1.0);
            }
    }
}

TEST(Render, DepthOneHasNoIndirectLight) {
    const Scene s = FacingRectangles{}.scene();
    IntegratorConfig c = config_with(64);
    c.max_depth = 1;
    EXPECT_EQ(render(s, c).at(0, 0).g, 0.0);
    c.max_depth = 2;
    EXPECT_GT(render(s, c).at(0, 0).g, 0.0);
}

TEST(Render, FacingRectanglesMatchFormFactor) {
    std::vector<FacingRectangles> cases(3);
    cases[1].target = {0.0, 0.0, 0.0};
    cases[1].height = 0.5;
    cases[2].target = {0.9, -0.7, 0.0};
    cases[2].ex0 = -0.2;
    cases[2].ex1 = 0.6;
    cases[2].ey0 = -0.3;
    cases[2].ey1 = 0.9;
    IntegratorConfig c;
    c.max_depth = 2;
    for (const FacingRectangles &f : cases) {
        const Scene s = f.scene();
        const double expected =
            f.rho * f.le *
            rectangle_form_factor(f.target.x, f.target.y, f.ex0, f.ex1, f.ey0, f.ey1, f.height);
        std::vector<double> v;
        for (int i = 0; i < 20000; ++i) {
            const CameraSample cs = camera_sample(s, 11, 0, 0, uint64_t(i));
            v.push_back(sample_path(s, cs.ray, cs.rng, c).g);
        }
        const Stats st = stats(v);
        EXPECT_NEAR(st.mean, expected, 3.0 * st.se) << "target " << f.target.x << "," << f.target.y;
    }
}

TEST(Render, OnePixelImageIsTheSampleMean) {
    const Scene s = with_resolution(build_case_scene({3, Variant::Occluding}), 1, 1);
    const IntegratorConfig c = config_with(37, 5);
    std::vector<Rgb> samples;
    for (int i = 0; i < c.spp; ++i) {
        const CameraSample cs = camera_sample(s, c.seed, 0, 0, uint64_t(i));
        samples.push_back(sample_path(s, cs.ray, cs.rng, c));
    }
    const Rgb expected = pairwise_sum(samples.data(), samples.size()) / double(c.spp);
    const Rgb got = render(s, c).at(0, 0);
    EXPECT_EQ(got.r, expected.r);
    EXPECT_EQ(got.g, expected.g);
}

TEST(Render, ConfigValidation) {
    IntegratorConfig c;
    c.spp = 0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c.spp = 1;
    c.max_depth = 0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c.max_depth = IntegratorConfig::kMaxDepth + 1;
    EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Gradient, ReplayMatchesForwardModePerSample) {
    const IntegratorConfig c = config_with(1);
    for (const CaseSetting &setting : kAllSettings) {
        const Scene s = build_case_scene(setting);
        for (int i = 0; i < 2000; ++i) {
            const int px = (i * 37) % 64, py = (i * 11) % 64;
            const CameraSample cs = camera_sample(s, 3, px, py, uint64_t(i));
            const Rgb L = sample_path(s, cs.ray, cs.rng, c);
            const AdjointResult adj = sample_path_adjoint(s, cs.ray, cs.rng, L, c);
            const Spectrum fwd = ad_threepoint(s, cs.ray, cs.rng, c);
            for (int k = 0; k < 3; ++k) {
                ASSERT_TRUE(close(adj.grad[k], fwd[k].dpi, 1e-10))
                    << "setting " << setting.id << " sample " << i << " channel " << k;
                ASSERT_TRUE(close(fwd[k].value, L[k], 1e-12));
                ASSERT_TRUE(close(adj.replayed[k], L[k], 1e-6));
            }
            const AdjointResult cl = prb_classic(s, cs.ray, cs.rng, L, c);
            for (int k = 0; k < 3; ++k) ASSERT_TRUE(close(cl.replayed[k], L[k], 1e-6));
        }
    }
}

TEST(Gradient, DeltaOverloadIsTheProjectedGradient) {
    const Scene s = build_case_scene({3, Variant::Occluding});
    const IntegratorConfig c = config_with(1);
    const Rgb dl{0.3, -2.0, 0.5};
    for (int i = 0; i < 200; ++i) {
        const CameraSample cs = camera_sample(s, 1, 32, 40, uint64_t(i));
        const Rgb L = sample_path(s, cs.ray, cs.rng, c);
        const Rgb g = sample_path_adjoint(s, cs.ray, cs.rng, L, c).grad;
        EXPECT_NEAR(sample_path_adjoint(s, cs.ray, cs.rng, L, dl, c), g.r * dl.r + g.g * dl.g + g.b * dl.b,
                    1e-12 * (1 + std::abs(g.r) + std::abs(g.g) + std::abs(g.b)));
    }
}

TEST(Gradient, StaticSceneGivesExactlyZero) {
    for (const CaseSetting &setting : kAllSettings) {
        Scene s = build_case_scene(setting);
        for (Shape &sh : s.shapes) sh.binding.reset();
        s.finalize();
        s = with_resolution(s, 8, 8);
        ASSERT_FALSE(s.parameter_moves_geometry());
        for (Method m : {Method::PrbThreePoint, Method::AdThreePoint, Method::AdSpherical,
                         Method::PrbClassic, Method::Fd}) {
            const GradImage g = render_gradient(s, m, config_with(8));
            for (double x : g.data) ASSERT_EQ(x, 0.0) << to_string(m) << " setting " << setting.id;
        }
    }
}

TEST(Gradient, EmissionScaleIsHomogeneous) {
    const IntegratorConfig c = config_with(1);
    for (int id : {1, 2, 3}) {
        const Scene s = build_emission_scale_scene({id, Variant::Occluding}, 0.7);
        for (int i = 0; i < 300; ++i) {
            const CameraSample cs = camera_sample(s, 9, (i * 13) % 64, (i * 7) % 64, uint64_t(i));
            const Rgb L = sample_path(s, cs.ray, cs.rng, c);
            for (Method m : kPerSampleMethods) {
                const Rgb g = sample_gradient(s, m, cs, c);
                for (int k = 0; k < 3; ++k)
                    ASSERT_TRUE(close(g[k], L[k] / 0.7, 1e-10)) << to_string(m) << " setting " << id;
            }
        }
    }
}

TEST(Gradient, FiniteDifferencesExactOnLinearModel) {
    const Scene s = with_resolution(build_emission_scale_scene({3, Variant::Occluding}, 0.7), 8, 8);
    const IntegratorConfig c = config_with(16);
    const Image L = render(s, c);
    const GradImage g = fd_gradient(s, 1e-3, c);
    for (size_t i = 0; i < g.data.size(); ++i) EXPECT_NEAR(g.data[i], L.data[i] / 0.7, 1e-9);
}

TEST(Gradient, FiniteDifferenceStepIsBounded) {
    const Scene s = with_resolution(build_case_scene({1, Variant::Occluding}), 2, 2);
    EXPECT_DOUBLE_EQ(default_fd_step(s), 1e-3 * s.extent());
    EXPECT_THROW(fd_gradient(s, 1e-8 * s.extent(), config_with(1)), std::invalid_argument);
    EXPECT_THROW(fd_gradient(s, 0.0, config_with(1)), std::invalid_argument);
    EXPECT_NO_THROW(fd_gradient(s, 1e-7 * s.extent(), config_with(1)));
}

TEST(Gradient, FiniteDifferencesHaveNoPerSampleGradient) {
    const Scene s = build_case_scene({1, Variant::Occluding});
    EXPECT_THROW(sample_gradient(s, Method::Fd, camera_sample(s, 0, 0, 0, 0), config_with(1)),
                 std::invalid_argument);
}

TEST(Gradient, EmissiveSlabClosedForm) {
    // Slab at depth 2 + pi, u = x + 0.5 with x = d.x (2 + pi) / d.z, radiance u.
    const Scene s = build_case_scene({1, Variant::Occluding});
    const IntegratorConfig c = config_with(1);
    for (int i = 0; i < 500; ++i) {
        const CameraSample cs = camera_sample(s, 2, (i * 5) % 64, (i * 3) % 64, uint64_t(i));
        const Vec3 d = cs.ray.dir;
        const double u = d.x * 2.0 / d.z + 0.5;
        const Spectrum sph = ad_spherical(s, cs.ray, cs.rng, c);
        const Spectrum three = ad_threepoint(s, cs.ray, cs.rng, c);
        EXPECT_NEAR(sph.r.value, u, 1e-12);
        EXPECT_NEAR(sph.r.dpi, d.x / d.z, 1e-12);
        EXPECT_NEAR(three.r.dpi, d.x / d.z, 1e-12);
        EXPECT_EQ(sph.g.dpi, 0.0);
    }
}

namespace {

// Pixels whose four corners all see shape 0 at the current parameter.
std::vector<bool> interior_mask(const Scene &s) {
    std::vector<bool> mask(s.camera.width * s.camera.height);
    for (int y = 0; y < s.camera.height; ++y)
        for (int x = 0; x < s.camera.width; ++x) {
            bool inside = true;
            for (Point2 j : {Point2{0, 0}, Point2{1, 0}, Point2{0, 1}, Point2{1, 1}}) {
                const Ray r = s.camera.generate_ray(x, y, j);
                const auto hit = s.intersect(r.origin, r.dir, s.parameter);
                inside = inside && hit && hit->point.shape_id == 0;
            }
            mask[size_t(y * s.camera.width + x)] = inside;
        }
    return mask;
}

}  // namespace

TEST(Gradient, SphericalAgreesWithFiniteDifferencesOnVisibleSlab) {
    const Scene s = with_resolution(build_case_scene({1, Variant::FullyVisible}), 32, 32);
    const IntegratorConfig c = config_with(16);
    const GradImage sph = render_gradient(s, Method::AdSpherical, c);
    const GradImage fd = render_gradient(s, Method::Fd, c);
    const std::vector<bool> mask = interior_mask(s);
    double diff = 0.0, norm = 0.0;
    int count = 0;
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            if (!mask[size_t(y * 32 + x)]) continue;
            diff += std::abs(sph.channel(x, y, Channel::R) - fd.channel(x, y, Channel::R));
            norm += std::abs(fd.channel(x, y, Channel::R));
            ++count;
        }
    ASSERT_GT(count, 100);
    EXPECT_LT(diff / norm, 0.02);
}

TEST(Gradient, ThreePointAgreesWithFiniteDifferencesPerPixel) {
    // Both are unbiased on interior pixels; check agreement within 3 combined
    // standard errors from independent batches.
    const int res = 12, batches = 8;
    for (const CaseSetting &setting : {CaseSetting{2, Variant::Occluding}, CaseSetting{3, Variant::Occluding},
                                       CaseSetting{3, Variant::FullyVisible}}) {
        const Scene s = with_resolution(build_case_scene(setting), res, res);
        const std::vector<bool> mask = interior_mask(s);
        std::vector<std::vector<double>> a(size_t(res * res)), b(size_t(res * res));
        for (int k = 0; k < batches; ++k) {
            const GradImage g = render_gradient(s, Method::PrbThreePoint, config_with(64, 100 + k));
            const GradImage f = render_gradient(s, Method::Fd, config_with(256, 200 + k));
            for (int i = 0; i < res * res; ++i) {
                a[size_t(i)].push_back(g.channel(i % res, i / res, Channel::R));
                b[size_t(i)].push_back(f.channel(i % res, i / res, Channel::R));
            }
        }
        int tested = 0, passed = 0;
        for (int i = 0; i < res * res; ++i) {
            if (!mask[size_t(i)]) continue;
            const Stats sa = stats(a[size_t(i)]), sb = stats(b[size_t(i)]);
            ++tested;
            passed += std::abs(sa.mean - sb.mean) <= 3.0 * std::hypot(sa.se, sb.se) + 1e-12;
        }
        ASSERT_GT(tested, 20);
        EXPECT_GE(double(passed) / tested, 0.9) << "setting " << setting.id << " " << to_string(setting.variant);
    }
}

TEST(Gradient, VarianceHalvesWithDoubleSampleCount) {
    const Scene s = with_resolution(build_case_scene({3, Variant::Occluding}), 8, 8);
    auto mean_variance = [&](int spp) {
        std::vector<std::vector<double>> v(64);
        for (int seed = 0; seed < 32; ++seed) {
            const GradImage g = render_gradient(s, Method::PrbThreePoint, config_with(spp, 1000 + seed));
            for (int i = 0; i < 64; ++i) v[size_t(i)].push_back(g.channel(i % 8, i / 8, Channel::R));
        }
        double total = 0.0;
        for (const auto &px : v) {
            const Stats st = stats(px);
            total += st.se * st.se * double(px.size());
        }
        return total / 64.0;
    };
    const double ratio = mean_variance(32) / mean_variance(16);
    EXPECT_GT(ratio, 0.35);
    EXPECT_LT(ratio, 0.65);
}

TEST(Determinism, RepeatedRunsAreBitIdentical) {
    const Scene s = with_resolution(build_case_scene({3, Variant::Occluding}), 12, 10);
    for (Method m : {Method::PrbThreePoint, Method::AdSpherical, Method::PrbClassic, Method::Fd}) {
        const GradImage a = render_gradient(s, m, config_with(8, 4));
        const GradImage b = render_gradient(s, m, config_with(8, 4));
        EXPECT_TRUE(bit_equal(a, b)) << to_string(m);
    }
}

TEST(Determinism, ThreadCountDoesNotChangeResults) {
    const Scene s = with_resolution(build_case_scene({2, Variant::Occluding}), 12, 10);
    const Image r1 = render(s, config_with(8, 4, 1));
    const Image r5 = render(s, config_with(8, 4, 5));
    EXPECT_TRUE(bit_equal(r1, r5));
    const GradImage g1 = render_gradient(s, Method::PrbThreePoint, config_with(8, 4, 1));
    const GradImage g3 = render_gradient(s, Method::PrbThreePoint, config_with(8, 4, 3));
    EXPECT_TRUE(bit_equal(g1, g3));
}

TEST(Determinism, SeedChangesTheEstimate) {
    const Scene s = with_resolution(build_case_scene({3, Variant::Occluding}), 6, 6);
    EXPECT_FALSE(bit_equal(render(s, config_with(4, 1)), render(s, config_with(4, 2))));
}

TEST(Backpropagate, MatchesGradientImageDotAdjoint) {
    const Scene s = with_resolution(build_case_scene({3, Variant::Occluding}), 6, 6);
    const IntegratorConfig c = config_with(8, 3);
    Image dl(6, 6);
    for (size_t i = 0; i < dl.data.size(); ++i) dl.data[i] = std::sin(double(i));
    for (Method m : {Method::PrbThreePoint, Method::PrbClassic}) {
        const GradImage g = render_gradient(s, m, c);
        double expected = 0.0;
        for (size_t i = 0; i < g.data.size(); ++i) expected += g.data[i] * dl.data[i];
        EXPECT_NEAR(backpropagate(s, m, dl, c), expected, 1e-9 * (1.0 + std::abs(expected))) << to_string(m);
    }
    EXPECT_THROW(backpropagate(s, Method::PrbThreePoint, Image(3, 3), c), std::invalid_argument);
}

TEST(Methods, NamesRoundTrip) {
    for (Method m : {Method::PrbThreePoint, Method::AdThreePoint, Method::AdSpherical, Method::PrbClassic,
                     Method::Fd})
        EXPECT_EQ(parse_method(to_string(m)), m);
    EXPECT_FALSE(parse_method("nope").has_value());
    EXPECT_EQ(parse_channel("g"), Channel::G);
}
