#include "tprb/sampling.h"

#include <cmath>

namespace tprb {

// Duff et al., "Building an Orthonormal Basis, Revisited".
Frame Frame::from_normal(const DVec3 &n) {
    const Dual sign = n.z.value >= 0.0 ? 1.0 : -1.0;
    const Dual a = Dual(-1.0) / (sign + n.z);
    const Dual b = n.x * n.y * a;
    Frame f;
    f.s = {Dual(1.0) + sign * n.x * n.x * a, sign * b, -sign * n.x};
    f.t = {b, sign + n.y * n.y * a, -n.y};
    f.n = n;
    return f;
}

Vec3 Frame::to_local(const Vec3 &w) const {
    return {dot(w, value_of(s)), dot(w, value_of(t)), dot(w, value_of(n))};
}

Vec3 cosine_hemisphere_local(Point2 u) {
    const double r = std::sqrt(u.x);
    const double phi = 2.0 * kPi * u.y;
    const double z = std::sqrt(std::max(0.0, 1.0 - u.x));
    return {r * std::cos(phi), r * std::sin(phi), z};
}

DirectionSample cosine_hemisphere_sample(Point2 u, const Frame &frame) {
    DirectionSample ds;
    ds.local = cosine_hemisphere_local(u);
    ds.direction = frame.to_world(ds.local);
    ds.pdf = cosine_hemisphere_pdf(ds.local.z);
    return ds;
}

std::optional<double> power_heuristic(double pdf_a, double pdf_b) {
    const double a2 = pdf_a * pdf_a, b2 = pdf_b * pdf_b;
    if (a2 + b2 == 0.0) return std::nullopt;
    // Squared pdfs can overflow near grazing connections.
    if (std::isinf(a2)) return std::isinf(b2) ? std::nullopt : std::optional<double>(1.0);
    return a2 / (a2 + b2);
}

}  // namespace tprb
