#pragma once

#include "tprb/rng.h"
#include "tprb/sampling.h"
#include "tprb/scene.h"

namespace tprb {

// Diffuse reflection with the receiving cosine folded in:
// albedo(uv) / pi * max(0, n . wi). The surface is treated as two-sided; the
// side facing wo is the reflecting one. Directions point away from the point.
Spectrum eval_bsdf(const Scene &scene, const SurfacePoint &sp, const DVec3 &wo, const DVec3 &wi);

// Cosine-weighted sample around the side of the surface that faces wo. The
// direction and pdf never depend on pi.
DirectionSample sample_bsdf(const SurfacePoint &sp, const Vec3 &wo, Point2 u);
double bsdf_pdf(const SurfacePoint &sp, const Vec3 &wo, const Vec3 &wi);

// Radiance leaving sp toward `toward`. Zero on the back of one-sided emitters
// and on shapes without an emitter.
Spectrum eval_emitter(const Scene &scene, const SurfacePoint &sp, const DVec3 &toward, Dual pi);

struct EmitterSample {
    ParamPoint point;
    double pdf_area = 0.0;  // with respect to ambient area at the current pi
};

// Uniform by area over all emitter shapes. Throws SceneError when the scene
// has no emitter.
EmitterSample sample_emitter(const Scene &scene, double u_select, Point2 u_surface);

// Solid-angle density, as seen from x, of reaching emitter point q by
// emitter sampling. Zero if q is not on an emitter or lies on ignore_shape.
double emitter_pdf_solid_angle(const Scene &scene, const Vec3 &x, const ParamPoint &q,
                               const Vec3 &x_q, int ignore_shape);

}  // namespace tprb
