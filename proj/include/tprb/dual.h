#pragma once

// Forward-mode differential arithmetic with respect to the single scene
// parameter. A Dual carries a value and its derivative d(value)/d(pi).

#include <algorithm>
#include <cmath>
#include <ostream>

namespace tprb {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kInvPi = 1.0 / kPi;

struct Dual {
    double value = 0.0;
    double dpi = 0.0;

    constexpr Dual() = default;
    constexpr Dual(double v) : value(v) {}  // NOLINT: constants promote implicitly
    constexpr Dual(double v, double d) : value(v), dpi(d) {}
};

constexpr Dual operator+(Dual a, Dual b) { return {a.value + b.value, a.dpi + b.dpi}; }
constexpr Dual operator-(Dual a, Dual b) { return {a.value - b.value, a.dpi - b.dpi}; }
constexpr Dual operator-(Dual a) { return {-a.value, -a.dpi}; }
constexpr Dual operator*(Dual a, Dual b) {
    return {a.value * b.value, a.value * b.dpi + a.dpi * b.value};
}
constexpr Dual operator/(Dual a, Dual b) {
    const double q = a.value / b.value;
    return {q, (a.dpi - q * b.dpi) / b.value};
}
constexpr Dual &operator+=(Dual &a, Dual b) { return a = a + b; }
constexpr Dual &operator-=(Dual &a, Dual b) { return a = a - b; }
constexpr Dual &operator*=(Dual &a, Dual b) { return a = a * b; }
constexpr Dual &operator/=(Dual &a, Dual b) { return a = a / b; }

// Comparisons look at values only; derivative tracking never flips a decision.
constexpr bool operator<(Dual a, Dual b) { return a.value < b.value; }
constexpr bool operator>(Dual a, Dual b) { return a.value > b.value; }
constexpr bool operator<=(Dual a, Dual b) { return a.value <= b.value; }
constexpr bool operator>=(Dual a, Dual b) { return a.value >= b.value; }

constexpr Dual dual_mul(Dual a, Dual b) { return a * b; }

constexpr double detach(double x) { return x; }
constexpr Dual detach(Dual x) { return {x.value, 0.0}; }
constexpr double value_of(double x) { return x; }
constexpr double value_of(Dual x) { return x.value; }

inline Dual sqrt(Dual x) {
    const double s = std::sqrt(x.value);
    return {s, s > 0.0 ? 0.5 * x.dpi / s : 0.0};
}
inline Dual sin(Dual x) { return {std::sin(x.value), std::cos(x.value) * x.dpi}; }
inline Dual cos(Dual x) { return {std::cos(x.value), -std::sin(x.value) * x.dpi}; }
inline Dual exp(Dual x) {
    const double e = std::exp(x.value);
    return {e, e * x.dpi};
}
inline Dual log(Dual x) { return {std::log(x.value), x.dpi / x.value}; }
inline Dual abs(Dual x) { return x.value < 0.0 ? -x : x; }
inline Dual atan(Dual x) { return {std::atan(x.value), x.dpi / (1.0 + x.value * x.value)}; }
inline Dual pow(Dual x, double p) {
    const double r = std::pow(x.value, p);
    return {r, p * std::pow(x.value, p - 1.0) * x.dpi};
}
inline Dual max(Dual a, double b) { return a.value > b ? a : Dual(b); }
inline Dual clamp(Dual x, double lo, double hi) {
    if (x.value < lo) return Dual(lo);
    if (x.value > hi) return Dual(hi);
    return x;
}

using std::abs;
using std::clamp;
using std::cos;
using std::exp;
using std::log;
using std::sin;
using std::sqrt;
inline double max(double a, double b) { return std::max(a, b); }

inline std::ostream &operator<<(std::ostream &os, Dual x) {
    return os << "(" << x.value << ", dpi=" << x.dpi << ")";
}

// ---------------------------------------------------------------------------

template <typename T>
struct Vec3T {
    T x{}, y{}, z{};

    constexpr Vec3T() = default;
    constexpr Vec3T(T x_, T y_, T z_) : x(x_), y(y_), z(z_) {}
    template <typename U>
    constexpr explicit Vec3T(const Vec3T<U> &o) : x(T(o.x)), y(T(o.y)), z(T(o.z)) {}

    constexpr T operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    constexpr T &operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
};

using Vec3 = Vec3T<double>;
using DVec3 = Vec3T<Dual>;

template <typename T>
constexpr Vec3T<T> operator+(const Vec3T<T> &a, const Vec3T<T> &b) {
    return {a.x + b.x, a.y + b.y, a.z + b.z};
}
template <typename T>
constexpr Vec3T<T> operator-(const Vec3T<T> &a, const Vec3T<T> &b) {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
}
template <typename T>
constexpr Vec3T<T> operator-(const Vec3T<T> &a) {
    return {-a.x, -a.y, -a.z};
}
template <typename T, typename S>
constexpr Vec3T<T> operator*(const Vec3T<T> &a, S s) {
    return {a.x * s, a.y * s, a.z * s};
}
template <typename T, typename S>
constexpr Vec3T<T> operator*(S s, const Vec3T<T> &a) {
    return {a.x * s, a.y * s, a.z * s};
}
template <typename T, typename S>
constexpr Vec3T<T> operator/(const Vec3T<T> &a, S s) {
    return {a.x / s, a.y / s, a.z / s};
}
template <typename T>
constexpr T dot(const Vec3T<T> &a, const Vec3T<T> &b) {
    return a.x * b.x + a.y * b.y + a.z * b.z;
}
template <typename T>
constexpr Vec3T<T> cross(const Vec3T<T> &a, const Vec3T<T> &b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
template <typename T>
inline T length_squared(const Vec3T<T> &a) {
    return dot(a, a);
}
template <typename T>
inline T length(const Vec3T<T> &a) {
    return sqrt(dot(a, a));
}
template <typename T>
inline Vec3T<T> normalize(const Vec3T<T> &a) {
    return a / length(a);
}

inline DVec3 attach(const Vec3 &v) { return DVec3(v); }
inline DVec3 detach(const DVec3 &v) { return {detach(v.x), detach(v.y), detach(v.z)}; }
inline Vec3 value_of(const DVec3 &v) { return {v.x.value, v.y.value, v.z.value}; }
inline Vec3 dpi_of(const DVec3 &v) { return {v.x.dpi, v.y.dpi, v.z.dpi}; }
inline const Vec3 &value_of(const Vec3 &v) { return v; }

// ---------------------------------------------------------------------------

template <typename T>
struct SpectrumT {
    T r{}, g{}, b{};

    constexpr SpectrumT() = default;
    constexpr explicit SpectrumT(T s) : r(s), g(s), b(s) {}
    constexpr SpectrumT(T r_, T g_, T b_) : r(r_), g(g_), b(b_) {}
    template <typename U>
    constexpr explicit SpectrumT(const SpectrumT<U> &o) : r(T(o.r)), g(T(o.g)), b(T(o.b)) {}

    constexpr T operator[](int i) const { return i == 0 ? r : (i == 1 ? g : b); }
    constexpr T &operator[](int i) { return i == 0 ? r : (i == 1 ? g : b); }
};

using Rgb = SpectrumT<double>;
using Spectrum = SpectrumT<Dual>;

template <typename T>
constexpr SpectrumT<T> operator+(const SpectrumT<T> &a, const SpectrumT<T> &b) {
    return {a.r + b.r, a.g + b.g, a.b + b.b};
}
template <typename T>
constexpr SpectrumT<T> operator-(const SpectrumT<T> &a, const SpectrumT<T> &b) {
    return {a.r - b.r, a.g - b.g, a.b - b.b};
}
template <typename T>
constexpr SpectrumT<T> operator*(const SpectrumT<T> &a, const SpectrumT<T> &b) {
    return {a.r * b.r, a.g * b.g, a.b * b.b};
}
template <typename T, typename S>
constexpr SpectrumT<T> operator*(const SpectrumT<T> &a, S s) {
    return {a.r * s, a.g * s, a.b * s};
}
template <typename T, typename S>
constexpr SpectrumT<T> operator*(S s, const SpectrumT<T> &a) {
    return {a.r * s, a.g * s, a.b * s};
}
template <typename T, typename S>
constexpr SpectrumT<T> operator/(const SpectrumT<T> &a, S s) {
    return {a.r / s, a.g / s, a.b / s};
}
template <typename T>
constexpr SpectrumT<T> &operator+=(SpectrumT<T> &a, const SpectrumT<T> &b) {
    return a = a + b;
}
template <typename T>
constexpr SpectrumT<T> &operator-=(SpectrumT<T> &a, const SpectrumT<T> &b) {
    return a = a - b;
}
template <typename T>
constexpr SpectrumT<T> &operator*=(SpectrumT<T> &a, const SpectrumT<T> &b) {
    return a = a * b;
}

inline Spectrum operator*(const Rgb &a, const Spectrum &b) { return Spectrum(a) * b; }
inline Spectrum operator*(const Spectrum &a, const Rgb &b) { return a * Spectrum(b); }

inline Spectrum detach(const Spectrum &s) { return {detach(s.r), detach(s.g), detach(s.b)}; }
inline Rgb value_of(const Spectrum &s) { return {s.r.value, s.g.value, s.b.value}; }
inline Rgb dpi_of(const Spectrum &s) { return {s.r.dpi, s.g.dpi, s.b.dpi}; }
inline const Rgb &value_of(const Rgb &s) { return s; }

template <typename T>
constexpr bool is_black(const SpectrumT<T> &s) {
    return value_of(s.r) == 0.0 && value_of(s.g) == 0.0 && value_of(s.b) == 0.0;
}

}  // namespace tprb
