#include "tprb/materials.h"

#include <algorithm>
#include <cmath>

namespace tprb {

namespace {

template <typename... Fs>
struct Overloaded : Fs... {
    using Fs::operator()...;
};
template <typename... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

bool nonnegative(const Rgb &c) { return c.r >= 0.0 && c.g >= 0.0 && c.b >= 0.0; }

Spectrum lerp(const Rgb &a, const Rgb &b, Dual t) {
    return {Dual(a.r) + (b.r - a.r) * t, Dual(a.g) + (b.g - a.g) * t,
            Dual(a.b) + (b.b - a.b) * t};
}

}  // namespace

Spectrum eval_texture(const Texture &tex, Dual u, Dual v) {
    u = clamp(u, 0.0, 1.0);
    v = clamp(v, 0.0, 1.0);
    return std::visit(
        Overloaded{
            [](const ConstantTexture &t) { return Spectrum(t.value); },
            [&](const LinearGradientTexture &t) {
                return lerp(t.from, t.to, t.axis == TexAxis::U ? u : v);
            },
            [&](const CheckerTexture &t) {
                const int iu = std::min(int(u.value * t.tiles), t.tiles - 1);
                const int iv = std::min(int(v.value * t.tiles), t.tiles - 1);
                return Spectrum((iu + iv) % 2 == 0 ? t.a : t.b);
            },
            [&](const GridTexture &t) {
                auto texel = [&](int x, int y) -> const Rgb & {
                    x = std::clamp(x, 0, t.width - 1);
                    y = std::clamp(y, 0, t.height - 1);
                    return t.texels[size_t(y) * size_t(t.width) + size_t(x)];
                };
                if (!t.bilinear) {
                    const int x = std::min(int(u.value * t.width), t.width - 1);
                    const int y = std::min(int(v.value * t.height), t.height - 1);
                    return Spectrum(texel(x, y));
                }
                const Dual fx = u * double(t.width) - 0.5;
                const Dual fy = v * double(t.height) - 0.5;
                const int x0 = int(std::floor(fx.value));
                const int y0 = int(std::floor(fy.value));
                const Dual tx = fx - double(x0);
                const Dual ty = fy - double(y0);
                const Spectrum top = lerp(texel(x0, y0), texel(x0 + 1, y0), tx);
                const Spectrum bottom = lerp(texel(x0, y0 + 1), texel(x0 + 1, y0 + 1), tx);
                return top + (bottom - top) * ty;
            },
        },
        tex);
}

bool texture_is_valid(const Texture &tex) {
    return std::visit(Overloaded{
                          [](const ConstantTexture &t) { return nonnegative(t.value); },
                          [](const LinearGradientTexture &t) {
                              return nonnegative(t.from) && nonnegative(t.to);
                          },
                          [](const CheckerTexture &t) {
                              return t.tiles >= 1 && nonnegative(t.a) && nonnegative(t.b);
                          },
                          [](const GridTexture &t) {
                              if (t.width < 1 || t.height < 1) return false;
                              if (t.texels.size() != size_t(t.width) * size_t(t.height))
                                  return false;
                              for (const Rgb &c : t.texels)
                                  if (!nonnegative(c)) return false;
                              return true;
                          },
                      },
                      tex);
}

double texture_max(const Texture &tex) {
    auto channel_max = [](const Rgb &c) { return std::max({c.r, c.g, c.b}); };
    return std::visit(Overloaded{
                          [&](const ConstantTexture &t) { return channel_max(t.value); },
                          [&](const LinearGradientTexture &t) {
                              return std::max(channel_max(t.from), channel_max(t.to));
                          },
                          [&](const CheckerTexture &t) {
                              return std::max(channel_max(t.a), channel_max(t.b));
                          },
                          [&](const GridTexture &t) {
                              double m = 0.0;
                              for (const Rgb &c : t.texels) m = std::max(m, channel_max(c));
                              return m;
                          },
                      },
                      tex);
}

}  // namespace tprb
