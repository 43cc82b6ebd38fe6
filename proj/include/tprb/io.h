#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tprb/experiments.h"
#include "tprb/integrators.h"
#include "tprb/scene.h"

namespace tprb {

inline constexpr int kSceneFormatVersion = 1;

struct RenderDefaults {
    int spp = 64;
    int max_depth = 4;
    uint64_t seed = 0;
    std::optional<double> fd_eps;
};

struct SceneFile {
    Scene scene;  // finalized
    RenderDefaults render;
};

// JSON scene files. Unknown fields, dangling references, version mismatches
// and more than one differentiable parameter raise SceneError with the JSON
// path of the offending entry.
SceneFile parse_scene(const std::string &path);
SceneFile parse_scene_text(const std::string &text, const std::string &source = "<string>");
std::string scene_to_json(const Scene &scene, const RenderDefaults &render);

// Little-endian RGB float32 PFM, bottom row first. Throws std::runtime_error
// on IO failure and when an entry is not finite.
void write_pfm(const Image &img, const std::string &path);
Image read_pfm(const std::string &path);

// Diverging map of one channel: v * scale clamped to [-1, 1], -1 blue,
// 0 white, +1 red.
std::array<uint8_t, 3> signed_color(double v, double scale);
void write_png_signed(const GradImage &img, Channel channel, double scale, const std::string &path);

// One JSON object per line.
std::vector<std::string> report_records(const ComparisonReport &report);
std::vector<std::string> trace_records(const OptimizationTrace &trace, const std::string &method);
void write_lines(const std::vector<std::string> &lines, const std::string &path);

}  // namespace tprb
