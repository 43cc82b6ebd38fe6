#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tprb/radiometry.h"
#include "tprb/rng.h"
#include "tprb/scene.h"

namespace tprb {

enum class Channel { R = 0, G = 1, B = 2 };

enum class Method { PrbThreePoint, AdThreePoint, AdSpherical, PrbClassic, Fd };

std::string to_string(Method m);
std::optional<Method> parse_method(const std::string &s);
std::optional<Channel> parse_channel(const std::string &s);

struct IntegratorConfig {
    int max_depth = 4;
    int spp = 64;
    uint64_t seed = 0;
    Channel channel = Channel::R;
    int threads = 0;  // 0: hardware concurrency
    // Drops the determinant-derivative term from the three-point adjoint.
    bool ablate_determinant = false;

    static constexpr int kMaxDepth = 16;
    // Throws std::invalid_argument on out-of-range settings.
    void validate() const;
};

// Three doubles per pixel, row-major, row 0 at the top.
struct Image {
    int width = 0, height = 0;
    std::vector<double> data;

    Image() = default;
    Image(int w, int h) : width(w), height(h), data(size_t(w) * size_t(h) * 3, 0.0) {}

    Rgb at(int x, int y) const {
        const size_t i = index(x, y);
        return {data[i], data[i + 1], data[i + 2]};
    }
    void set(int x, int y, const Rgb &c) {
        const size_t i = index(x, y);
        data[i] = c.r;
        data[i + 1] = c.g;
        data[i + 2] = c.b;
    }
    double channel(int x, int y, Channel c) const { return data[index(x, y) + size_t(c)]; }
    size_t pixel_count() const { return size_t(width) * size_t(height); }

  private:
    size_t index(int x, int y) const { return (size_t(y) * size_t(width) + size_t(x)) * 3; }
};

// Per-pixel dL/dpi, one value per colour channel.
using GradImage = Image;

// Random stream and primary ray of one pixel sample.
struct CameraSample {
    Ray ray;
    CounterRng rng;
};
CameraSample camera_sample(const Scene &scene, uint64_t seed, int px, int py, uint64_t sample);

// Forward three-point path tracer with next-event estimation and MIS.
Rgb sample_path(const Scene &scene, const Ray &ray, const CounterRng &rng,
                const IntegratorConfig &config);

struct AdjointResult {
    Rgb grad;      // dL/dpi per channel, i.e. the adjoint for each unit delta L
    Rgb replayed;  // radiance re-accumulated during the replay
};

// Three-point path replay: requires L from sample_path with the same rng.
AdjointResult sample_path_adjoint(const Scene &scene, const Ray &ray, const CounterRng &rng,
                                  const Rgb &L, const IntegratorConfig &config);
double sample_path_adjoint(const Scene &scene, const Ray &ray, const CounterRng &rng, const Rgb &L,
                           const Rgb &delta_L, const IntegratorConfig &config);

// Forward-mode twin of sample_path_adjoint.
Spectrum ad_threepoint(const Scene &scene, const Ray &ray, const CounterRng &rng,
                       const IntegratorConfig &config);

// Detached direction sampling with attached intersections along the whole path.
Spectrum ad_spherical(const Scene &scene, const Ray &ray, const CounterRng &rng,
                      const IntegratorConfig &config);

// Detached-direction replay whose segments start from detached points.
AdjointResult prb_classic(const Scene &scene, const Ray &ray, const CounterRng &rng,
                          const Rgb &L, const IntegratorConfig &config);
double prb_classic(const Scene &scene, const Ray &ray, const CounterRng &rng, const Rgb &L,
                   const Rgb &delta_L, const IntegratorConfig &config);

// Per-sample gradient of one pixel sample for any non-FD method.
Rgb sample_gradient(const Scene &scene, Method method, const CameraSample &cs,
                    const IntegratorConfig &config);

Image render(const Scene &scene, const IntegratorConfig &config);
GradImage render_gradient(const Scene &scene, Method method, const IntegratorConfig &config,
                          std::optional<double> fd_h = std::nullopt);
// Central differences with common random numbers. Throws std::invalid_argument
// when h is below 1e-7 * extent.
GradImage fd_gradient(const Scene &scene, double h, const IntegratorConfig &config);
double default_fd_step(const Scene &scene);

// dLoss/dpi for a per-pixel adjoint image delta_L, each sample replayed with
// its own delta_L through the method's adjoint.
double backpropagate(const Scene &scene, Method method, const Image &delta_L,
                     const IntegratorConfig &config);

// Runs fn(px, py) for every pixel on config.threads workers. Each pixel is
// independent, so results do not depend on the worker count.
template <typename Fn>
void for_each_pixel(int width, int height, int threads, Fn &&fn);

// Pairwise (tree) sum, fixed order for a given length.
Rgb pairwise_sum(const Rgb *values, size_t n);

}  // namespace tprb

#include "tprb/parallel.inl"
