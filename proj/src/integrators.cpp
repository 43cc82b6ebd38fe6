#include "tprb/integrators.h"

#include <cmath>
#include <stdexcept>

namespace tprb {

namespace {

double pdf_area_of(const Scene &scene) {
    return scene.emitter_shapes().empty() ? 0.0 : 1.0 / scene.total_emitter_area();
}

// One walk of the three-point estimator. Every decision (sampling, visibility,
// MIS) uses values only, so the forward pass, the adjoint replay and the
// forward-mode twin visit identical vertices. The visitor receives, in
// Listing order per vertex:
//   arrive(D)        determinant of the segment that reached the vertex
//   emission(E)      MIS-weighted emitted radiance, without throughput
//   nee(C)           f * Le * D / pdf * w for the emitter sample, without throughput
//   scatter(f, pdf)  BSDF value toward the next vertex and its solid-angle pdf
// f, D and E carry pi-derivatives when pi is attached.
template <typename Visitor>
void walk_threepoint(const Scene &scene, const Ray &ray, const CounterRng &rng, int max_depth,
                     Dual pi, Visitor &visitor) {
    // Primary vertex: found along the static camera ray, so it slides over the
    // surface as the surface moves.
    const auto first = scene.intersect_attached(attach(ray.origin), attach(ray.dir), pi);
    if (!first) return;
    DVec3 x_prev = attach(ray.origin);
    SurfacePoint cur = scene.surface_point(*first, pi);
    const double pdf_area = pdf_area_of(scene);
    double w_emit = 1.0;

    for (int depth = 1; depth <= max_depth; ++depth) {
        const Shape &shape = scene.shape(cur.p.shape_id);
        const DVec3 wo = normalize(x_prev - cur.x);
        const Vec3 x_c = value_of(cur.x);

        if (shape.emitter) visitor.emission(eval_emitter(scene, cur, wo, pi) * Dual(w_emit));
        if (depth == max_depth || !shape.bsdf) break;

        if (pdf_area > 0.0) {
            const EmitterSample es =
                sample_emitter(scene, rng.uniform(uint32_t(depth), rng_dim::kEmitterSelect),
                               rng.uniform2(uint32_t(depth), rng_dim::kEmitterUv));
            if (es.point.shape_id != cur.p.shape_id) {
                const SurfacePoint q = scene.surface_point(es.point, pi);
                const Vec3 x_q = value_of(q.x);
                if (scene.visible(x_c, x_q, pi.value)) {
                    const auto D = scene.reparam_det(cur.x, es.point, q.x, pi, true);
                    if (D && D->value > 0.0) {
                        const DVec3 wi = normalize(q.x - cur.x);
                        const Spectrum f = eval_bsdf(scene, cur, wo, wi);
                        const Spectrum le = eval_emitter(scene, q, -wi, pi);
                        if (!is_black(f) && !is_black(le)) {
                            const double pdf_m = es.pdf_area * scene.shape(es.point.shape_id).area();
                            const double p_nee = emitter_pdf_solid_angle(scene, x_c, es.point, x_q,
                                                                         cur.p.shape_id);
                            const double p_bsdf = bsdf_pdf(cur, value_of(wo), value_of(wi));
                            const double w = power_heuristic(p_nee, p_bsdf).value_or(0.0);
                            if (w > 0.0) visitor.nee(f * le * (*D * (w / pdf_m)));
                        }
                    }
                }
            }
        }

        const DirectionSample ds =
            sample_bsdf(cur, value_of(wo), rng.uniform2(uint32_t(depth), rng_dim::kBsdf));
        if (!(ds.pdf > 0.0)) break;
        const auto hit = scene.intersect(x_c, value_of(ds.direction), pi.value);
        if (!hit) break;
        const ParamPoint p_n = hit->point;  // detached
        const SurfacePoint next = scene.surface_point(p_n, pi);
        const auto D = scene.reparam_det(cur.x, p_n, next.x, pi, true);
        if (!D || D->value <= 0.0) break;
        const Spectrum f = eval_bsdf(scene, cur, wo, normalize(next.x - cur.x));
        if (is_black(f)) break;
        visitor.scatter(f, ds.pdf);
        w_emit = power_heuristic(ds.pdf, pdf_area > 0.0 ? emitter_pdf_solid_angle(
                                                              scene, x_c, p_n, value_of(next.x),
                                                              cur.p.shape_id)
                                                        : 0.0)
                     .value_or(0.0);
        x_prev = cur.x;
        cur = next;
        visitor.arrive(*D);
    }
}

// Same estimator structure over directions. Directions are detached; hit
// points come from differentiated ray solves whose origin is the attached
// current vertex (attach_origin) or its detached copy.
template <typename Visitor>
void walk_spherical(const Scene &scene, const Ray &ray, const CounterRng &rng, int max_depth,
                    Dual pi, bool attach_origin, Visitor &visitor) {
    const auto first = scene.intersect_attached(attach(ray.origin), attach(ray.dir), pi);
    if (!first) return;
    Vec3 wo = -ray.dir;
    SurfacePoint cur = scene.surface_point(*first, pi);
    const double pdf_area = pdf_area_of(scene);
    double w_emit = 1.0;

    for (int depth = 1; depth <= max_depth; ++depth) {
        const Shape &shape = scene.shape(cur.p.shape_id);
        const Vec3 x_c = value_of(cur.x);
        const DVec3 origin = attach_origin ? cur.x : detach(cur.x);

        if (shape.emitter)
            visitor.emission(eval_emitter(scene, cur, attach(wo), pi) * Dual(w_emit));
        if (depth == max_depth || !shape.bsdf) break;

        if (pdf_area > 0.0) {
            const EmitterSample es =
                sample_emitter(scene, rng.uniform(uint32_t(depth), rng_dim::kEmitterSelect),
                               rng.uniform2(uint32_t(depth), rng_dim::kEmitterUv));
            if (es.point.shape_id != cur.p.shape_id) {
                const Vec3 x_q = scene.to_ambient_value(es.point, pi.value);
                const double p_nee =
                    emitter_pdf_solid_angle(scene, x_c, es.point, x_q, cur.p.shape_id);
                if (p_nee > 0.0 && scene.visible(x_c, x_q, pi.value)) {
                    const Vec3 wi = normalize(x_q - x_c);
                    const auto qhit = scene.solve_attached(es.point.shape_id, origin, attach(wi), pi);
                    if (qhit) {
                        const SurfacePoint q = scene.surface_point(*qhit, pi);
                        const Spectrum f = eval_bsdf(scene, cur, attach(wo), attach(wi));
                        const Spectrum le = eval_emitter(scene, q, attach(-wi), pi);
                        if (!is_black(f) && !is_black(le)) {
                            const double p_bsdf = bsdf_pdf(cur, wo, wi);
                            const double w = power_heuristic(p_nee, p_bsdf).value_or(0.0);
                            if (w > 0.0) visitor.nee(f * le * Dual(w / p_nee));
                        }
                    }
                }
            }
        }

        const DirectionSample ds =
            sample_bsdf(cur, wo, rng.uniform2(uint32_t(depth), rng_dim::kBsdf));
        if (!(ds.pdf > 0.0)) break;
        const Vec3 dir = value_of(ds.direction);
        const auto hit = scene.intersect_attached(origin, attach(dir), pi);
        if (!hit) break;
        const Spectrum f = eval_bsdf(scene, cur, attach(wo), attach(dir));
        if (is_black(f)) break;
        visitor.scatter(f, ds.pdf);
        w_emit = power_heuristic(ds.pdf, pdf_area > 0.0 ? emitter_pdf_solid_angle(
                                                              scene, x_c, hit->point,
                                                              value_of(hit->x), cur.p.shape_id)
                                                        : 0.0)
                     .value_or(0.0);
        wo = -dir;
        cur = scene.surface_point(*hit, pi);
        visitor.arrive(Dual(1.0));
    }
}

struct ValueVisitor {
    Rgb beta{1.0};
    Rgb L{};
    void arrive(Dual) {}
    void emission(const Spectrum &e) { L += beta * value_of(e); }
    void nee(const Spectrum &c) { L += beta * value_of(c); }
    void scatter(const Spectrum &f, double pdf) { beta = beta * value_of(f) * (1.0 / pdf); }
};

// Full forward-mode product along the path. The determinant enters through
// D / detach(D): value 1, derivative dD/D.
struct DualVisitor {
    Spectrum beta{Dual(1.0)};
    Spectrum L{};
    void arrive(Dual D) { beta = beta * (D / detach(D)); }
    void emission(const Spectrum &e) { L += beta * e; }
    void nee(const Spectrum &c) { L += beta * c; }
    void scatter(const Spectrum &f, double pdf) { beta = beta * f * Dual(1.0 / pdf); }
};

// Listing-1 bookkeeping. L starts as the forward radiance and loses each
// vertex's own contribution as the replay passes it, so at every vertex it
// holds the radiance arriving from the rest of the path. beta never carries a
// derivative across iterations.
struct ReplayVisitor {
    Rgb beta{1.0};
    Rgb L;
    Rgb grad{};
    Rgb replayed{};
    bool with_determinant = true;

    void arrive(Dual D) {
        if (!with_determinant || D.value == 0.0) return;
        grad += L * (D.dpi / D.value);
    }
    void add(const Spectrum &local) {
        const Spectrum c = Spectrum(beta) * local;
        grad += dpi_of(c);
        L -= value_of(c);
        replayed += value_of(c);
    }
    void emission(const Spectrum &e) { add(e); }
    void nee(const Spectrum &c) { add(c); }
    void scatter(const Spectrum &f, double pdf) {
        for (int k = 0; k < 3; ++k)
            if (f[k].value != 0.0) grad[k] += L[k] * (f[k].dpi / f[k].value);
        beta = beta * value_of(f) * (1.0 / pdf);
    }
};

double dot_rgb(const Rgb &a, const Rgb &b) { return a.r * b.r + a.g * b.g + a.b * b.b; }

}  // namespace

std::string to_string(Method m) {
    switch (m) {
    case Method::PrbThreePoint: return "prb_threepoint";
    case Method::AdThreePoint: return "ad_threepoint";
    case Method::AdSpherical: return "ad_spherical";
    case Method::PrbClassic: return "prb_classic";
    case Method::Fd: return "fd";
    }
    return "unknown";
}

std::optional<Method> parse_method(const std::string &s) {
    for (Method m : {Method::PrbThreePoint, Method::AdThreePoint, Method::AdSpherical,
                     Method::PrbClassic, Method::Fd})
        if (to_string(m) == s) return m;
    return std::nullopt;
}

std::optional<Channel> parse_channel(const std::string &s) {
    if (s == "r") return Channel::R;
    if (s == "g") return Channel::G;
    if (s == "b") return Channel::B;
    return std::nullopt;
}

void IntegratorConfig::validate() const {
    if (max_depth < 1 || max_depth > kMaxDepth)
        throw std::invalid_argument("max_depth must lie in [1, " + std::to_string(kMaxDepth) + "]");
    if (spp < 1) throw std::invalid_argument("spp must be positive");
    if (threads < 0) throw std::invalid_argument("threads must be non-negative");
}

CameraSample camera_sample(const Scene &scene, uint64_t seed, int px, int py, uint64_t sample) {
    const uint64_t pixel = uint64_t(py) * uint64_t(scene.camera.width) + uint64_t(px);
    CounterRng rng(seed, pixel, sample);
    const Ray ray = scene.camera.generate_ray(px, py, rng.uniform2(0, rng_dim::kPixelJitter));
    return {ray, rng};
}

Rgb sample_path(const Scene &scene, const Ray &ray, const CounterRng &rng,
                const IntegratorConfig &config) {
    ValueVisitor v;
    walk_threepoint(scene, ray, rng, config.max_depth, scene.pi_detached(), v);
    return v.L;
}

AdjointResult sample_path_adjoint(const Scene &scene, const Ray &ray, const CounterRng &rng,
                                  const Rgb &L, const IntegratorConfig &config) {
    ReplayVisitor v;
    v.L = L;
    v.with_determinant = !config.ablate_determinant;
    walk_threepoint(scene, ray, rng, config.max_depth, scene.pi_attached(), v);
    return {v.grad, v.replayed};
}

double sample_path_adjoint(const Scene &scene, const Ray &ray, const CounterRng &rng, const Rgb &L,
                           const Rgb &delta_L, const IntegratorConfig &config) {
    return dot_rgb(sample_path_adjoint(scene, ray, rng, L, config).grad, delta_L);
}

Spectrum ad_threepoint(const Scene &scene, const Ray &ray, const CounterRng &rng,
                       const IntegratorConfig &config) {
    DualVisitor v;
    walk_threepoint(scene, ray, rng, config.max_depth, scene.pi_attached(), v);
    return v.L;
}

Spectrum ad_spherical(const Scene &scene, const Ray &ray, const CounterRng &rng,
                      const IntegratorConfig &config) {
    DualVisitor v;
    walk_spherical(scene, ray, rng, config.max_depth, scene.pi_attached(), true, v);
    return v.L;
}

AdjointResult prb_classic(const Scene &scene, const Ray &ray, const CounterRng &rng, const Rgb &L,
                          const IntegratorConfig &config) {
    ReplayVisitor v;
    v.L = L;
    v.with_determinant = false;
    walk_spherical(scene, ray, rng, config.max_depth, scene.pi_attached(), false, v);
    return {v.grad, v.replayed};
}

double prb_classic(const Scene &scene, const Ray &ray, const CounterRng &rng, const Rgb &L,
                   const Rgb &delta_L, const IntegratorConfig &config) {
    return dot_rgb(prb_classic(scene, ray, rng, L, config).grad, delta_L);
}

Rgb sample_gradient(const Scene &scene, Method method, const CameraSample &cs,
                    const IntegratorConfig &config) {
    switch (method) {
    case Method::PrbThreePoint: {
        const Rgb L = sample_path(scene, cs.ray, cs.rng, config);
        return sample_path_adjoint(scene, cs.ray, cs.rng, L, config).grad;
    }
    case Method::AdThreePoint: return dpi_of(ad_threepoint(scene, cs.ray, cs.rng, config));
    case Method::AdSpherical: return dpi_of(ad_spherical(scene, cs.ray, cs.rng, config));
    case Method::PrbClassic: {
        const Rgb L = sample_path(scene, cs.ray, cs.rng, config);
        return prb_classic(scene, cs.ray, cs.rng, L, config).grad;
    }
    case Method::Fd: break;
    }
    throw std::invalid_argument("finite differences have no per-sample gradient");
}

Rgb pairwise_sum(const Rgb *values, size_t n) {
    if (n == 0) return {};
    if (n == 1) return values[0];
    const size_t half = n / 2;
    return pairwise_sum(values, half) + pairwise_sum(values + half, n - half);
}

namespace {

template <typename SampleFn>
Image accumulate(const Scene &scene, const IntegratorConfig &config, SampleFn &&per_sample) {
    config.validate();
    const int w = scene.camera.width, h = scene.camera.height;
    Image img(w, h);
    for_each_pixel(w, h, config.threads, [&](int px, int py) {
        std::vector<Rgb> samples(size_t(config.spp));
        for (int s = 0; s < config.spp; ++s)
            samples[size_t(s)] =
                per_sample(camera_sample(scene, config.seed, px, py, uint64_t(s)), px, py);
        img.set(px, py, pairwise_sum(samples.data(), samples.size()) / double(config.spp));
    });
    return img;
}

}  // namespace

Image render(const Scene &scene, const IntegratorConfig &config) {
    return accumulate(scene, config, [&](const CameraSample &cs, int, int) {
        return sample_path(scene, cs.ray, cs.rng, config);
    });
}

GradImage render_gradient(const Scene &scene, Method method, const IntegratorConfig &config,
                          std::optional<double> fd_h) {
    if (method == Method::Fd) return fd_gradient(scene, fd_h.value_or(default_fd_step(scene)), config);
    return accumulate(scene, config, [&](const CameraSample &cs, int, int) {
        return sample_gradient(scene, method, cs, config);
    });
}

double default_fd_step(const Scene &scene) { return 1e-3 * scene.extent(); }

GradImage fd_gradient(const Scene &scene, double h, const IntegratorConfig &config) {
    if (!(h >= 1e-7 * scene.extent()))
        throw std::invalid_argument("finite-difference step must be at least 1e-7 * scene extent");
    // Copies keep the cached extent, so the ray epsilon is shared by both sides.
    Scene plus = scene, minus = scene;
    plus.parameter = scene.parameter + h;
    minus.parameter = scene.parameter - h;
    const Image a = render(plus, config);
    const Image b = render(minus, config);
    GradImage g(a.width, a.height);
    for (size_t i = 0; i < g.data.size(); ++i) g.data[i] = (a.data[i] - b.data[i]) / (2.0 * h);
    return g;
}

double backpropagate(const Scene &scene, Method method, const Image &delta_L,
                     const IntegratorConfig &config) {
    if (delta_L.width != scene.camera.width || delta_L.height != scene.camera.height)
        throw std::invalid_argument("adjoint image does not match the camera resolution");
    if (method == Method::Fd || method == Method::AdThreePoint || method == Method::AdSpherical) {
        const GradImage g = render_gradient(scene, method, config);
        double total = 0.0;
        for (size_t i = 0; i < g.data.size(); ++i) total += g.data[i] * delta_L.data[i];
        return total;
    }
    const Image per_pixel = accumulate(scene, config, [&](const CameraSample &cs, int px, int py) {
        const Rgb dl = delta_L.at(px, py);
        const Rgb L = sample_path(scene, cs.ray, cs.rng, config);
        const double g = method == Method::PrbThreePoint
                             ? sample_path_adjoint(scene, cs.ray, cs.rng, L, dl, config)
                             : prb_classic(scene, cs.ray, cs.rng, L, dl, config);
        return Rgb(g, 0.0, 0.0);
    });
    double total = 0.0;
    for (int y = 0; y < per_pixel.height; ++y)
        for (int x = 0; x < per_pixel.width; ++x) total += per_pixel.at(x, y).r;
    return total;
}

}  // namespace tprb
