#pragma once

#include <optional>

#include "tprb/dual.h"

namespace tprb {

struct Point2 {
    double x = 0.0, y = 0.0;
};

// Orthonormal basis (s, t, n). Directions expressed in the frame pick up a
// pi-derivative only if the frame itself is attached.
struct Frame {
    DVec3 s, t, n;

    static Frame from_normal(const DVec3 &n);
    static Frame from_normal(const Vec3 &n) { return from_normal(attach(n)); }

    DVec3 to_world(const Vec3 &local) const { return s * local.x + t * local.y + n * local.z; }
    Vec3 to_local(const Vec3 &w) const;
};

struct DirectionSample {
    DVec3 direction;  // world space
    Vec3 local;       // frame space, never differentiated
    double pdf = 0.0; // solid angle
};

// Malley's method with a polar disk warp: r = sqrt(u.x), phi = 2*pi*u.y.
Vec3 cosine_hemisphere_local(Point2 u);
DirectionSample cosine_hemisphere_sample(Point2 u, const Frame &frame);
inline double cosine_hemisphere_pdf(double cos_theta) {
    return cos_theta > 0.0 ? cos_theta * kInvPi : 0.0;
}

// Power heuristic (exponent 2). Empty when neither strategy can produce the
// sample, in which case the sample carries no weight.
std::optional<double> power_heuristic(double pdf_a, double pdf_b);

}  // namespace tprb
