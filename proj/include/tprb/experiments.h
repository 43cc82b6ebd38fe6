#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tprb/integrators.h"

namespace tprb {

enum class Variant { Occluding, FullyVisible };

struct CaseSetting {
    int id = 1;  // 1: emissive slab, 2: textured albedo, 3: textured emitter below
    Variant variant = Variant::Occluding;
};

std::string to_string(Variant v);
std::optional<Variant> parse_variant(const std::string &s);

// Slab 1 x 1 m at 2 m depth in front of the camera, translated away from it
// by pi (slab at z = 2 + pi). Settings 2 and 3 light it from below with an
// emitter in the plane y = -1 that the camera cannot see: a large constant one
// in Setting 2, a compact one whose radiance vanishes on its border in
// Setting 3. The fully visible variant uses a 0.5 m slab and a 1 m emitter in
// front of it, with a linear gradient in Setting 3.
// Throws std::invalid_argument for an unknown setting id.
Scene build_case_scene(const CaseSetting &setting);

// Same geometry with the slab unbound and pi scaling every emitter's
// radiance (Le = pi * T), evaluated at pi.
Scene build_emission_scale_scene(const CaseSetting &setting, double pi);

struct MethodMetrics {
    std::string method;
    double mae = 0.0;           // mean |g - fd| over pixels
    double rel_l1 = 0.0;        // sum |g - fd| / sum |fd|
    double l1_norm = 0.0;       // sum |g|
    double sign_agreement = 0.0;
    double runtime_seconds = 0.0;
};

struct ComparisonReport {
    CaseSetting setting;
    Channel channel = Channel::R;
    int width = 0, height = 0;
    int spp = 0, fd_spp = 0;
    double fd_h = 0.0;
    double fd_l1_norm = 0.0;
    double fd_runtime_seconds = 0.0;
    std::vector<MethodMetrics> methods;
    std::map<std::string, GradImage> images;  // includes "fd"

    const MethodMetrics *find(const std::string &method) const;
};

// Metrics of g against the reference on one channel. Pixels whose reference
// magnitude is below 1e-3 of the peak are excluded from the sign agreement.
MethodMetrics compare_to_reference(const std::string &name, const GradImage &g,
                                   const GradImage &reference, Channel channel);

struct ComparisonConfig {
    IntegratorConfig integrator;
    int fd_spp = 4096;
    std::optional<double> fd_h;  // default 1e-3 * extent
};

// Renders each method and the finite-difference oracle for the scene.
ComparisonReport run_comparison(const Scene &scene, const CaseSetting &setting,
                                const std::vector<Method> &methods, const ComparisonConfig &config);
ComparisonReport run_comparison(const CaseSetting &setting, const std::vector<Method> &methods,
                                const ComparisonConfig &config);

// prb_threepoint with and without the determinant derivative against FD.
// Methods are reported as "prb_threepoint" and "prb_threepoint_ablated".
ComparisonReport ablate_determinant(const CaseSetting &setting, const ComparisonConfig &config);

struct OptimizationStep {
    int iteration = 0;
    double pi = 0.0;
    double loss = 0.0;
    double gradient = 0.0;
};

struct OptimizationConfig {
    Method method = Method::PrbThreePoint;
    double target_pi = 0.0;
    double init_pi = 0.5;
    int steps = 100;
    double step_size = 0.25;
    IntegratorConfig integrator;
    int target_spp = 256;
    uint64_t target_seed = 0x5eed7a46e7ULL;
    double pi_bound = 2.0;  // |pi| beyond this is reported as divergence
};

struct OptimizationTrace {
    std::vector<OptimizationStep> steps;  // state before each update, then the final state
    bool diverged = false;
    double final_pi() const { return steps.empty() ? 0.0 : steps.back().pi; }
};

// Plain gradient descent on the mean absolute error over all pixels and
// channels against a target rendered at target_pi with a held-out seed.
OptimizationTrace optimize_translation(const CaseSetting &setting, const OptimizationConfig &config);

// Mean absolute error over all pixels and channels.
double mae_loss(const Image &a, const Image &b);
// delta_L = dMAE/dpixel.
Image mae_adjoint(const Image &current, const Image &target);

struct LossSweep {
    std::vector<double> pi;
    std::vector<double> loss;
};

// Loss on a uniform grid of `points` values of pi, target as in
// optimize_translation, one render seed for every grid point.
LossSweep sweep_loss(const CaseSetting &setting, const OptimizationConfig &config, double lo,
                     double hi, int points);

// True when the sequence decreases to a single basin and then increases.
// Successive differences below tol * (max - min) count as flat.
bool is_unimodal(const std::vector<double> &values, double tol = 1e-3);

}  // namespace tprb
