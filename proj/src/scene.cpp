#include "tprb/scene.h"

#include <cmath>
#include <limits>

namespace tprb {

namespace {

template <typename T>
struct PlaneSolve {
    T t, u, v;
};

// Ray against the plane of a rectangle with corner o and edges eu, ev. The
// same code runs on doubles and duals so attached hits agree bit-exactly with
// value-only hits.
template <typename T>
std::optional<PlaneSolve<T>> solve_plane(const Vec3T<T> &o, const Vec3T<T> &eu, const Vec3T<T> &ev,
                                         const Vec3T<T> &origin, const Vec3T<T> &dir) {
    const Vec3T<T> n = cross(eu, ev);
    const T denom = dot(n, dir);
    const T n2 = dot(n, n);
    if (std::abs(value_of(denom)) <= 1e-14 * std::sqrt(value_of(n2))) return std::nullopt;
    const T t = dot(n, o - origin) / denom;
    const Vec3T<T> local = origin + dir * t - o;
    const T u = dot(local, cross(ev, n)) / n2;
    const T v = dot(local, cross(n, eu)) / n2;
    return PlaneSolve<T>{t, u, v};
}

bool in_unit_square(double u, double v) { return u >= 0.0 && u <= 1.0 && v >= 0.0 && v <= 1.0; }

}  // namespace

Ray Camera::generate_ray(int px, int py, Point2 jitter) const {
    const Vec3 forward = normalize(look_at - position);
    const Vec3 right = normalize(cross(forward, up));
    const Vec3 true_up = cross(right, forward);
    const double tan_half = std::tan(0.5 * fov_deg * kPi / 180.0);
    const double aspect = double(width) / double(height);
    const double sx = 2.0 * (double(px) + jitter.x) / double(width) - 1.0;
    const double sy = 1.0 - 2.0 * (double(py) + jitter.y) / double(height);
    const Vec3 d = forward + right * (sx * tan_half * aspect) + true_up * (sy * tan_half);
    return {position, normalize(d)};
}

void Scene::finalize() {
    if (camera.width < 1 || camera.height < 1) throw SceneError("camera resolution must be positive");
    if (!(camera.fov_deg > 0.0 && camera.fov_deg < 180.0))
        throw SceneError("camera fov must lie in (0, 180) degrees");
    const Vec3 forward = camera.look_at - camera.position;
    if (length(forward) == 0.0) throw SceneError("camera look_at coincides with its position");
    if (length(cross(forward, camera.up)) <= 1e-12 * length(forward) * length(camera.up))
        throw SceneError("camera up vector is parallel to the view direction");
    if (!std::isfinite(parameter)) throw SceneError("parameter value must be finite");

    for (size_t i = 0; i < bsdfs.size(); ++i) {
        if (!texture_is_valid(bsdfs[i].albedo))
            throw SceneError("bsdf " + std::to_string(i) + ": invalid albedo texture");
        if (texture_max(bsdfs[i].albedo) > 1.0)
            throw SceneError("bsdf " + std::to_string(i) + ": albedo exceeds 1");
    }
    for (size_t i = 0; i < emitters.size(); ++i)
        if (!texture_is_valid(emitters[i].radiance))
            throw SceneError("emitter " + std::to_string(i) + ": invalid radiance texture");

    Vec3 lo{kInfinity, kInfinity, kInfinity}, hi{-kInfinity, -kInfinity, -kInfinity};
    emitter_shapes_.clear();
    emitter_cdf_.clear();
    total_emitter_area_ = 0.0;
    for (size_t i = 0; i < shapes.size(); ++i) {
        const Shape &s = shapes[i];
        const std::string where = "shape '" + s.name + "'";
        if (s.area() <= 1e-12) throw SceneError(where + ": edge_u x edge_v is zero");
        if (s.binding && std::abs(length(s.binding->axis) - 1.0) > 1e-9)
            throw SceneError(where + ": pi_binding axis must be unit length");
        if (s.bsdf && (*s.bsdf < 0 || size_t(*s.bsdf) >= bsdfs.size()))
            throw SceneError(where + ": unknown bsdf " + std::to_string(*s.bsdf));
        if (s.emitter && (*s.emitter < 0 || size_t(*s.emitter) >= emitters.size()))
            throw SceneError(where + ": unknown emitter " + std::to_string(*s.emitter));
        if (s.emitter) {
            emitter_shapes_.push_back(int(i));
            total_emitter_area_ += s.area();
            emitter_cdf_.push_back(total_emitter_area_);
        }
        for (double a : {0.0, 1.0})
            for (double b : {0.0, 1.0}) {
                const Vec3 c = to_ambient_value({int(i), a, b}, parameter);
                for (int k = 0; k < 3; ++k) {
                    lo[k] = std::min(lo[k], c[k]);
                    hi[k] = std::max(hi[k], c[k]);
                }
            }
    }
    extent_ = shapes.empty() ? 1.0 : length(hi - lo);
    if (!(extent_ > 0.0)) extent_ = 1.0;
}

const Shape &Scene::shape(int id) const {
    if (id < 0 || size_t(id) >= shapes.size())
        throw SceneError("invalid shape id " + std::to_string(id));
    return shapes[size_t(id)];
}

bool Scene::parameter_moves_geometry() const {
    for (const Shape &s : shapes)
        if (s.binding && s.binding->scale != 0.0) return true;
    return false;
}

bool Scene::parameter_scales_emission() const {
    for (const Emitter &e : emitters)
        if (e.scaled_by_parameter) return true;
    return false;
}

DVec3 Scene::binding_offset(const Shape &s, Dual pi) const {
    if (!s.binding) return {};
    return attach(s.binding->axis) * (pi * s.binding->scale);
}

DVec3 Scene::to_ambient(int shape_id, Dual u, Dual v, Dual pi) const {
    const Shape &s = shape(shape_id);
    return attach(s.origin) + attach(s.edge_u) * u + attach(s.edge_v) * v + binding_offset(s, pi);
}

DVec3 Scene::to_ambient(const ParamPoint &p, Dual pi) const {
    return to_ambient(p.shape_id, Dual(p.u), Dual(p.v), pi);
}

Vec3 Scene::to_ambient_value(const ParamPoint &p, double pi) const {
    return value_of(to_ambient(p, Dual(pi)));
}

Vec3 Scene::normal_value(int shape_id) const {
    const Shape &s = shape(shape_id);
    return normalize(cross(s.edge_u, s.edge_v));
}

DVec3 Scene::normal(const ParamPoint &p, Dual) const {
    // Translation leaves the frame unchanged.
    return attach(normal_value(p.shape_id));
}

Dual Scene::area_element(int shape_id, Dual) const { return Dual(shape(shape_id).area()); }

std::optional<Intersection> Scene::intersect(const Vec3 &origin, const Vec3 &dir, double pi,
                                             double t_max) const {
    const double eps = ray_epsilon();
    std::optional<Intersection> best;
    double best_t = t_max;
    for (size_t i = 0; i < shapes.size(); ++i) {
        const Shape &s = shapes[i];
        const Vec3 o = value_of(attach(s.origin) + binding_offset(s, Dual(pi)));
        const auto hit = solve_plane(o, s.edge_u, s.edge_v, origin, dir);
        if (!hit || hit->t <= eps || hit->t >= best_t) continue;
        if (!in_unit_square(hit->u, hit->v)) continue;
        best_t = hit->t;
        best = Intersection{{int(i), hit->u, hit->v}, hit->t};
    }
    return best;
}

std::optional<AttachedHit> Scene::solve_attached(int shape_id, const DVec3 &origin,
                                                 const DVec3 &dir, Dual pi) const {
    const Shape &s = shape(shape_id);
    const DVec3 o = attach(s.origin) + binding_offset(s, pi);
    const auto hit = solve_plane(o, attach(s.edge_u), attach(s.edge_v), origin, dir);
    if (!hit) return std::nullopt;
    AttachedHit h;
    h.point = {shape_id, std::clamp(hit->u.value, 0.0, 1.0), std::clamp(hit->v.value, 0.0, 1.0)};
    h.u = hit->u;
    h.v = hit->v;
    h.t = hit->t;
    h.x = origin + dir * hit->t;
    return h;
}

std::optional<AttachedHit> Scene::intersect_attached(const DVec3 &origin, const DVec3 &dir,
                                                     Dual pi) const {
    const auto hit = intersect(value_of(origin), value_of(dir), pi.value);
    if (!hit) return std::nullopt;
    auto attached = solve_attached(hit->point.shape_id, origin, dir, pi);
    if (attached) attached->point = hit->point;
    return attached;
}

bool Scene::visible(const Vec3 &a, const Vec3 &b, double pi) const {
    const Vec3 d = b - a;
    const double dist = length(d);
    const double eps = ray_epsilon();
    if (dist <= 2.0 * eps) return true;
    return !intersect(a, d / dist, pi, dist - eps);
}

bool Scene::visible(const ParamPoint &a, const ParamPoint &b, double pi) const {
    return visible(to_ambient_value(a, pi), to_ambient_value(b, pi), pi);
}

std::optional<Dual> Scene::reparam_det(const DVec3 &x_prev, const ParamPoint &cur,
                                       const DVec3 &x_cur, Dual pi, bool is_visible) const {
    const DVec3 d = x_prev - x_cur;
    const Dual r2 = dot(d, d);
    if (std::sqrt(r2.value) < ray_epsilon()) return std::nullopt;
    if (!is_visible) return Dual(0.0);
    const Dual cos_cur = abs(dot(normal(cur, pi), d)) / sqrt(r2);
    return cos_cur / r2 * area_element(cur.shape_id, pi);
}

std::optional<Dual> Scene::reparam_det(const ParamPoint &prev, const ParamPoint &cur,
                                       Dual pi) const {
    const DVec3 x_prev = to_ambient(prev, pi);
    const DVec3 x_cur = to_ambient(cur, pi);
    const bool vis = visible(value_of(x_prev), value_of(x_cur), pi.value);
    return reparam_det(x_prev, cur, x_cur, pi, vis);
}

SurfacePoint Scene::surface_point(const ParamPoint &p, Dual pi) const {
    return {p, Dual(p.u), Dual(p.v), to_ambient(p, pi), normal(p, pi)};
}

SurfacePoint Scene::surface_point(const AttachedHit &hit, Dual pi) const {
    return {hit.point, hit.u, hit.v, hit.x, normal(hit.point, pi)};
}

}  // namespace tprb
