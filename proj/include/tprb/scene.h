#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tprb/dual.h"
#include "tprb/materials.h"
#include "tprb/sampling.h"

namespace tprb {

class SceneError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// A point of the global surface parametrization: the disjoint union of one
// unit square per shape. uv are plain reals, so a ParamPoint never carries a
// pi-derivative.
struct ParamPoint {
    int shape_id = -1;
    double u = 0.0, v = 0.0;
};

// Rigid translation S(p, pi) = S(p, 0) + axis * scale * pi.
struct PiBinding {
    Vec3 axis{0, 0, 1};
    double scale = 1.0;
};

struct Shape {
    std::string name;
    Vec3 origin;
    Vec3 edge_u, edge_v;
    std::optional<PiBinding> binding;
    std::optional<int> bsdf;
    std::optional<int> emitter;

    double area() const { return length(cross(edge_u, edge_v)); }
};

struct Ray {
    Vec3 origin, dir;
};

struct Camera {
    Vec3 position{0, 0, 0};
    Vec3 look_at{0, 0, 1};
    Vec3 up{0, 1, 0};
    double fov_deg = 20.0;  // across the image height
    int width = 64, height = 64;

    // Pixel (0, 0) is the top-left corner of the image.
    Ray generate_ray(int px, int py, Point2 jitter) const;
};

struct Intersection {
    ParamPoint point;
    double t = 0.0;
};

// Ray hit differentiated through the ray-plane solve.
struct AttachedHit {
    ParamPoint point;  // value-only copy
    Dual u, v;
    DVec3 x;
    Dual t;
};

// Everything the radiometry needs at a path vertex. u, v and x may or may not
// be attached depending on the estimator.
struct SurfacePoint {
    ParamPoint p;
    Dual u, v;
    DVec3 x;
    DVec3 n;
};

class Scene {
  public:
    std::vector<Shape> shapes;
    std::vector<Bsdf> bsdfs;
    std::vector<Emitter> emitters;
    Camera camera;
    std::string parameter_name = "pi";
    double parameter = 0.0;

    // Checks cross references and shape invariants and caches derived data.
    // Must be called after the scene is assembled and before it is queried.
    void finalize();

    const Shape &shape(int id) const;
    double extent() const { return extent_; }
    double ray_epsilon() const { return 1e-4 * extent_; }
    bool parameter_moves_geometry() const;
    bool parameter_scales_emission() const;

    Dual pi_attached() const { return {parameter, 1.0}; }
    Dual pi_detached() const { return {parameter, 0.0}; }

    // S(p, pi)
    DVec3 to_ambient(const ParamPoint &p, Dual pi) const;
    DVec3 to_ambient(int shape_id, Dual u, Dual v, Dual pi) const;
    Vec3 to_ambient_value(const ParamPoint &p, double pi) const;

    DVec3 normal(const ParamPoint &p, Dual pi) const;
    Vec3 normal_value(int shape_id) const;
    // |dS/du x dS/dv|; constant under translation but kept dual so other
    // bindings differentiate correctly.
    Dual area_element(int shape_id, Dual pi) const;

    // Nearest hit with t > ray epsilon. uv in the result are detached.
    std::optional<Intersection> intersect(const Vec3 &origin, const Vec3 &dir, double pi,
                                          double t_max = kInfinity) const;
    // Same hit as intersect() on values; derivatives of t, the ambient point
    // and uv follow from differentiating the ray-rectangle solve.
    std::optional<AttachedHit> intersect_attached(const DVec3 &origin, const DVec3 &dir,
                                                  Dual pi) const;
    // Differentiated solve against one shape's plane, without the bounds test.
    std::optional<AttachedHit> solve_attached(int shape_id, const DVec3 &origin, const DVec3 &dir,
                                              Dual pi) const;

    // True iff the open segment between the two points, shrunk by the ray
    // epsilon at both ends, hits nothing. Never differentiated.
    bool visible(const ParamPoint &a, const ParamPoint &b, double pi) const;
    bool visible(const Vec3 &a, const Vec3 &b, double pi) const;

    // D(prev, cur) = V * |n_cur . (x_cur -> x_prev)| / |x_prev - x_cur|^2 * |dS/du x dS/dv|.
    // Empty when the points coincide (the caller drops the sample).
    std::optional<Dual> reparam_det(const ParamPoint &prev, const ParamPoint &cur, Dual pi) const;
    // Variant for integrators that already know the visibility and hold the
    // (possibly attached) ambient positions.
    std::optional<Dual> reparam_det(const DVec3 &x_prev, const ParamPoint &cur, const DVec3 &x_cur,
                                    Dual pi, bool visible) const;

    SurfacePoint surface_point(const ParamPoint &p, Dual pi) const;
    SurfacePoint surface_point(const AttachedHit &hit, Dual pi) const;

    const std::vector<int> &emitter_shapes() const { return emitter_shapes_; }
    // Cumulative emitter areas, parallel to emitter_shapes().
    const std::vector<double> &emitter_cdf() const { return emitter_cdf_; }
    double total_emitter_area() const { return total_emitter_area_; }

    static constexpr double kInfinity = 1e300;

  private:
    DVec3 binding_offset(const Shape &s, Dual pi) const;

    double extent_ = 1.0;
    std::vector<int> emitter_shapes_;
    std::vector<double> emitter_cdf_;
    double total_emitter_area_ = 0.0;
};

}  // namespace tprb
