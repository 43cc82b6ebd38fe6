#include "tprb/radiometry.h"

#include <algorithm>

namespace tprb {

namespace {

// Geometric normal flipped toward wo. The flip is a value-only decision.
Vec3 facing_normal(const SurfacePoint &sp, const Vec3 &wo) {
    const Vec3 n = value_of(sp.n);
    return dot(n, wo) < 0.0 ? -n : n;
}

}  // namespace

Spectrum eval_bsdf(const Scene &scene, const SurfacePoint &sp, const DVec3 &wo, const DVec3 &wi) {
    const Shape &s = scene.shape(sp.p.shape_id);
    if (!s.bsdf) return {};
    const Vec3 wo_v = value_of(wo);
    const bool flip = dot(value_of(sp.n), wo_v) < 0.0;
    const DVec3 n = flip ? -sp.n : sp.n;
    if (dot(value_of(n), wo_v) <= 0.0) return {};
    const Dual cos_i = max(dot(n, wi), 0.0);
    if (cos_i.value == 0.0) return {};
    const Spectrum albedo = eval_texture(scene.bsdfs[size_t(*s.bsdf)].albedo, sp.u, sp.v);
    return albedo * (cos_i * kInvPi);
}

DirectionSample sample_bsdf(const SurfacePoint &sp, const Vec3 &wo, Point2 u) {
    return cosine_hemisphere_sample(u, Frame::from_normal(facing_normal(sp, wo)));
}

double bsdf_pdf(const SurfacePoint &sp, const Vec3 &wo, const Vec3 &wi) {
    return cosine_hemisphere_pdf(dot(facing_normal(sp, wo), wi));
}

Spectrum eval_emitter(const Scene &scene, const SurfacePoint &sp, const DVec3 &toward, Dual pi) {
    const Shape &s = scene.shape(sp.p.shape_id);
    if (!s.emitter) return {};
    const Emitter &e = scene.emitters[size_t(*s.emitter)];
    if (!e.two_sided && dot(value_of(sp.n), value_of(toward)) <= 0.0) return {};
    Spectrum le = eval_texture(e.radiance, sp.u, sp.v);
    if (e.scaled_by_parameter) le = le * pi;
    return le;
}

EmitterSample sample_emitter(const Scene &scene, double u_select, Point2 u_surface) {
    const auto &ids = scene.emitter_shapes();
    if (ids.empty()) throw SceneError("scene has no emitter to sample");
    const auto &cdf = scene.emitter_cdf();
    const double target = u_select * scene.total_emitter_area();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
    const size_t k = std::min(size_t(it - cdf.begin()), ids.size() - 1);
    EmitterSample es;
    // Rectangles have a constant area element, so uniform uv is uniform area.
    es.point = {ids[k], u_surface.x, u_surface.y};
    es.pdf_area = 1.0 / scene.total_emitter_area();
    return es;
}

double emitter_pdf_solid_angle(const Scene &scene, const Vec3 &x, const ParamPoint &q,
                               const Vec3 &x_q, int ignore_shape) {
    if (q.shape_id == ignore_shape || !scene.shape(q.shape_id).emitter) return 0.0;
    const Vec3 d = x - x_q;
    const double r2 = dot(d, d);
    const double cos_q = std::abs(dot(scene.normal_value(q.shape_id), d)) / std::sqrt(r2);
    if (cos_q <= 0.0) return 0.0;
    return r2 / (cos_q * scene.total_emitter_area());
}

}  // namespace tprb
