#pragma once

#include <variant>
#include <vector>

#include "tprb/dual.h"

namespace tprb {

enum class TexAxis { U, V };

struct ConstantTexture {
    Rgb value;
};

struct LinearGradientTexture {
    TexAxis axis = TexAxis::U;
    Rgb from, to;
};

// Piecewise constant; cell selection uses values only and the texture never
// contributes a derivative.
struct CheckerTexture {
    Rgb a, b;
    int tiles = 1;
};

// Texel-centred bilinear lookup with clamp-to-edge addressing.
struct GridTexture {
    int width = 1, height = 1;
    std::vector<Rgb> texels;  // row-major, v = 0 row first
    bool bilinear = true;
};

using Texture = std::variant<ConstantTexture, LinearGradientTexture, CheckerTexture, GridTexture>;

struct Bsdf {
    // Only diffuse reflection is modelled.
    Texture albedo;
};

struct Emitter {
    Texture radiance;
    bool two_sided = false;
    // Radiance is multiplied by the parameter value when set.
    bool scaled_by_parameter = false;
};

// uv are clamped to [0,1]^2; the derivative flows through attached uv.
Spectrum eval_texture(const Texture &tex, Dual u, Dual v);
inline Rgb eval_texture(const Texture &tex, double u, double v) {
    return value_of(eval_texture(tex, Dual(u), Dual(v)));
}

bool texture_is_valid(const Texture &tex);
// Largest channel value the texture can produce.
double texture_max(const Texture &tex);

}  // namespace tprb
