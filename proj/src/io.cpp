#include "tprb/io.h"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "json.hpp"

namespace tprb {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string &where, const std::string &what) {
    throw SceneError(where + ": " + what);
}

std::string member(const std::string &where, const std::string &key) {
    return where.empty() ? key : where + "." + key;
}

std::string element(const std::string &where, size_t i) {
    return where + "[" + std::to_string(i) + "]";
}

const json &object_at(const json &j, const std::string &where) {
    if (!j.is_object()) fail(where, "expected an object");
    return j;
}

void check_keys(const json &j, const std::string &where, std::initializer_list<const char *> allowed) {
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto &item : j.items())
        if (!ok.count(item.key())) fail(member(where, item.key()), "unknown field");
}

const json &required(const json &j, const std::string &where, const char *key) {
    const auto it = j.find(key);
    if (it == j.end()) fail(where, std::string("missing field '") + key + "'");
    return *it;
}

double number(const json &j, const std::string &where) {
    if (!j.is_number()) fail(where, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(where, "expected a finite number");
    return v;
}

int integer(const json &j, const std::string &where) {
    if (!j.is_number_integer()) fail(where, "expected an integer");
    return j.get<int>();
}

bool boolean(const json &j, const std::string &where) {
    if (!j.is_boolean()) fail(where, "expected true or false");
    return j.get<bool>();
}

std::string string_at(const json &j, const std::string &where) {
    if (!j.is_string()) fail(where, "expected a string");
    return j.get<std::string>();
}

std::array<double, 3> triple(const json &j, const std::string &where) {
    if (!j.is_array() || j.size() != 3) fail(where, "expected an array of 3 numbers");
    return {number(j[0], element(where, 0)), number(j[1], element(where, 1)),
            number(j[2], element(where, 2))};
}

Vec3 vec3(const json &j, const std::string &where) {
    const auto t = triple(j, where);
    return {t[0], t[1], t[2]};
}

Rgb rgb(const json &j, const std::string &where) {
    const auto t = triple(j, where);
    for (size_t i = 0; i < 3; ++i)
        if (t[i] < 0.0) fail(element(where, i), "colour values must be non-negative");
    return {t[0], t[1], t[2]};
}

Texture texture(const json &j, const std::string &where) {
    object_at(j, where);
    const std::string type = string_at(required(j, where, "type"), member(where, "type"));
    if (type == "constant") {
        check_keys(j, where, {"type", "value"});
        return ConstantTexture{rgb(required(j, where, "value"), member(where, "value"))};
    }
    if (type == "linear_gradient") {
        check_keys(j, where, {"type", "axis", "from", "to"});
        LinearGradientTexture t;
        const std::string axis = string_at(required(j, where, "axis"), member(where, "axis"));
        if (axis != "u" && axis != "v") fail(member(where, "axis"), "expected \"u\" or \"v\"");
        t.axis = axis == "u" ? TexAxis::U : TexAxis::V;
        t.from = rgb(required(j, where, "from"), member(where, "from"));
        t.to = rgb(required(j, where, "to"), member(where, "to"));
        return t;
    }
    if (type == "checker") {
        check_keys(j, where, {"type", "a", "b", "tiles"});
        CheckerTexture t;
        t.a = rgb(required(j, where, "a"), member(where, "a"));
        t.b = rgb(required(j, where, "b"), member(where, "b"));
        t.tiles = integer(required(j, where, "tiles"), member(where, "tiles"));
        if (t.tiles < 1) fail(member(where, "tiles"), "must be at least 1");
        return t;
    }
    if (type == "grid") {
        check_keys(j, where, {"type", "width", "height", "texels", "bilinear"});
        GridTexture t;
        t.width = integer(required(j, where, "width"), member(where, "width"));
        t.height = integer(required(j, where, "height"), member(where, "height"));
        if (t.width < 1) fail(member(where, "width"), "must be at least 1");
        if (t.height < 1) fail(member(where, "height"), "must be at least 1");
        const json &texels = required(j, where, "texels");
        const std::string tw = member(where, "texels");
        if (!texels.is_array() || texels.size() != size_t(t.width) * size_t(t.height))
            fail(tw, "expected width * height colour triples");
        for (size_t i = 0; i < texels.size(); ++i) t.texels.push_back(rgb(texels[i], element(tw, i)));
        if (j.contains("bilinear")) t.bilinear = boolean(j["bilinear"], member(where, "bilinear"));
        return t;
    }
    fail(member(where, "type"), "unknown texture type '" + type + "'");
}

json texture_json(const Texture &tex) {
    auto arr = [](const Rgb &c) { return json::array({c.r, c.g, c.b}); };
    if (const auto *t = std::get_if<ConstantTexture>(&tex))
        return {{"type", "constant"}, {"value", arr(t->value)}};
    if (const auto *t = std::get_if<LinearGradientTexture>(&tex))
        return {{"type", "linear_gradient"},
                {"axis", t->axis == TexAxis::U ? "u" : "v"},
                {"from", arr(t->from)},
                {"to", arr(t->to)}};
    if (const auto *t = std::get_if<CheckerTexture>(&tex))
        return {{"type", "checker"}, {"a", arr(t->a)}, {"b", arr(t->b)}, {"tiles", t->tiles}};
    const auto &g = std::get<GridTexture>(tex);
    json texels = json::array();
    for (const Rgb &c : g.texels) texels.push_back(arr(c));
    return {{"type", "grid"},
            {"width", g.width},
            {"height", g.height},
            {"texels", texels},
            {"bilinear", g.bilinear}};
}

// Collects "id" fields of a list and maps them to indices.
std::map<std::string, int> index_ids(const json &list, const std::string &where) {
    std::map<std::string, int> ids;
    for (size_t i = 0; i < list.size(); ++i) {
        const std::string w = element(where, i);
        object_at(list[i], w);
        const std::string id = string_at(required(list[i], w, "id"), member(w, "id"));
        if (!ids.emplace(id, int(i)).second) fail(member(w, "id"), "duplicate id '" + id + "'");
    }
    return ids;
}

const json &array_at(const json &root, const char *key) {
    static const json empty = json::array();
    const auto it = root.find(key);
    if (it == root.end()) return empty;
    if (!it->is_array()) fail(key, "expected an array");
    return *it;
}

}  // namespace

SceneFile parse_scene_text(const std::string &text, const std::string &source) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error &e) {
        throw SceneError(source + ": invalid JSON at byte " + std::to_string(e.byte));
    }
    object_at(root, "<root>");
    check_keys(root, "", {"version", "parameter", "camera", "bsdfs", "emitters", "shapes", "render"});

    const int version = integer(required(root, "<root>", "version"), "version");
    if (version != kSceneFormatVersion)
        fail("version", "unsupported scene version " + std::to_string(version) + " (expected " +
                            std::to_string(kSceneFormatVersion) + ")");

    SceneFile file;
    Scene &scene = file.scene;

    if (root.contains("parameter")) {
        const json *p = &root["parameter"];
        std::string where = "parameter";
        if (p->is_array()) {
            if (p->size() != 1) fail(where, "exactly one differentiable parameter is supported");
            p = &(*p)[0];
            where = "parameter[0]";
        }
        object_at(*p, where);
        check_keys(*p, where, {"name", "initial_value"});
        scene.parameter_name = string_at(required(*p, where, "name"), member(where, "name"));
        if (p->contains("initial_value"))
            scene.parameter = number((*p)["initial_value"], member(where, "initial_value"));
    }

    {
        const json &c = object_at(required(root, "<root>", "camera"), "camera");
        check_keys(c, "camera", {"position", "look_at", "up", "fov"});
        scene.camera.position = vec3(required(c, "camera", "position"), "camera.position");
        scene.camera.look_at = vec3(required(c, "camera", "look_at"), "camera.look_at");
        if (c.contains("up")) scene.camera.up = vec3(c["up"], "camera.up");
        if (c.contains("fov")) scene.camera.fov_deg = number(c["fov"], "camera.fov");
    }

    const json &bsdfs = array_at(root, "bsdfs");
    const auto bsdf_ids = index_ids(bsdfs, "bsdfs");
    for (size_t i = 0; i < bsdfs.size(); ++i) {
        const std::string w = element("bsdfs", i);
        check_keys(bsdfs[i], w, {"id", "type", "albedo"});
        const std::string type = string_at(required(bsdfs[i], w, "type"), member(w, "type"));
        if (type != "diffuse") fail(member(w, "type"), "unknown bsdf type '" + type + "'");
        Bsdf b{texture(required(bsdfs[i], w, "albedo"), member(w, "albedo"))};
        if (texture_max(b.albedo) > 1.0) fail(member(w, "albedo"), "albedo must not exceed 1");
        scene.bsdfs.push_back(b);
    }

    const json &emitters = array_at(root, "emitters");
    const auto emitter_ids = index_ids(emitters, "emitters");
    for (size_t i = 0; i < emitters.size(); ++i) {
        const std::string w = element("emitters", i);
        check_keys(emitters[i], w, {"id", "type", "radiance", "two_sided", "scale_by_parameter"});
        const std::string type = string_at(required(emitters[i], w, "type"), member(w, "type"));
        if (type != "area") fail(member(w, "type"), "unknown emitter type '" + type + "'");
        Emitter e;
        e.radiance = texture(required(emitters[i], w, "radiance"), member(w, "radiance"));
        if (emitters[i].contains("two_sided"))
            e.two_sided = boolean(emitters[i]["two_sided"], member(w, "two_sided"));
        if (emitters[i].contains("scale_by_parameter"))
            e.scaled_by_parameter =
                boolean(emitters[i]["scale_by_parameter"], member(w, "scale_by_parameter"));
        scene.emitters.push_back(e);
    }

    const json &shapes = array_at(root, "shapes");
    index_ids(shapes, "shapes");
    for (size_t i = 0; i < shapes.size(); ++i) {
        const json &j = shapes[i];
        const std::string w = element("shapes", i);
        check_keys(j, w, {"id", "type", "origin", "edge_u", "edge_v", "bsdf", "emitter", "pi_binding"});
        const std::string type = string_at(required(j, w, "type"), member(w, "type"));
        if (type != "rectangle") fail(member(w, "type"), "unknown shape type '" + type + "'");
        Shape s;
        s.name = j["id"].get<std::string>();
        s.origin = vec3(required(j, w, "origin"), member(w, "origin"));
        s.edge_u = vec3(required(j, w, "edge_u"), member(w, "edge_u"));
        s.edge_v = vec3(required(j, w, "edge_v"), member(w, "edge_v"));
        if (length(cross(s.edge_u, s.edge_v)) <= 1e-12) fail(w, "edge_u and edge_v are parallel");
        if (j.contains("bsdf")) {
            const std::string id = string_at(j["bsdf"], member(w, "bsdf"));
            const auto it = bsdf_ids.find(id);
            if (it == bsdf_ids.end()) fail(member(w, "bsdf"), "unknown bsdf id '" + id + "'");
            s.bsdf = it->second;
        }
        if (j.contains("emitter")) {
            const std::string id = string_at(j["emitter"], member(w, "emitter"));
            const auto it = emitter_ids.find(id);
            if (it == emitter_ids.end()) fail(member(w, "emitter"), "unknown emitter id '" + id + "'");
            s.emitter = it->second;
        }
        if (j.contains("pi_binding")) {
            const std::string bw = member(w, "pi_binding");
            const json &b = object_at(j["pi_binding"], bw);
            check_keys(b, bw, {"parameter", "axis", "scale"});
            const std::string name = string_at(required(b, bw, "parameter"), member(bw, "parameter"));
            if (name != scene.parameter_name)
                fail(member(bw, "parameter"), "'" + name + "' is not the declared parameter '" +
                                                  scene.parameter_name +
                                                  "'; only one parameter is supported");
            PiBinding pb;
            pb.axis = vec3(required(b, bw, "axis"), member(bw, "axis"));
            if (std::abs(length(pb.axis) - 1.0) > 1e-9) fail(member(bw, "axis"), "must be unit length");
            if (b.contains("scale")) pb.scale = number(b["scale"], member(bw, "scale"));
            s.binding = pb;
        }
        scene.shapes.push_back(s);
    }

    RenderDefaults &r = file.render;
    if (root.contains("render")) {
        const json &j = object_at(root["render"], "render");
        check_keys(j, "render", {"res", "spp", "max_depth", "seed", "fd_eps"});
        if (j.contains("res")) {
            const json &res = j["res"];
            if (!res.is_array() || res.size() != 2) fail("render.res", "expected [width, height]");
            scene.camera.width = integer(res[0], "render.res[0]");
            scene.camera.height = integer(res[1], "render.res[1]");
            if (scene.camera.width < 1 || scene.camera.height < 1)
                fail("render.res", "resolution must be positive");
        }
        if (j.contains("spp")) r.spp = integer(j["spp"], "render.spp");
        if (j.contains("max_depth")) r.max_depth = integer(j["max_depth"], "render.max_depth");
        if (j.contains("seed")) {
            if (!j["seed"].is_number_unsigned()) fail("render.seed", "expected a non-negative integer");
            r.seed = j["seed"].get<uint64_t>();
        }
        if (j.contains("fd_eps")) {
            r.fd_eps = number(j["fd_eps"], "render.fd_eps");
            if (!(*r.fd_eps > 0.0)) fail("render.fd_eps", "must be positive");
        }
        if (r.spp < 1) fail("render.spp", "must be positive");
        if (r.max_depth < 1 || r.max_depth > IntegratorConfig::kMaxDepth)
            fail("render.max_depth", "must lie in [1, 16]");
    }

    try {
        scene.finalize();
    } catch (const SceneError &e) {
        throw SceneError(source + ": " + e.what());
    }
    return file;
}

SceneFile parse_scene(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SceneError(path + ": cannot open scene file");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_scene_text(ss.str(), path);
    } catch (const SceneError &e) {
        const std::string msg = e.what();
        if (msg.rfind(path, 0) == 0) throw;
        throw SceneError(path + ": " + msg);
    }
}

std::string scene_to_json(const Scene &scene, const RenderDefaults &render) {
    auto v3 = [](const Vec3 &v) { return json::array({v.x, v.y, v.z}); };
    json root;
    root["version"] = kSceneFormatVersion;
    root["parameter"] = {{"name", scene.parameter_name}, {"initial_value", scene.parameter}};
    root["camera"] = {{"position", v3(scene.camera.position)},
                      {"look_at", v3(scene.camera.look_at)},
                      {"up", v3(scene.camera.up)},
                      {"fov", scene.camera.fov_deg}};
    json bsdfs = json::array(), emitters = json::array(), shapes = json::array();
    for (size_t i = 0; i < scene.bsdfs.size(); ++i)
        bsdfs.push_back({{"id", "bsdf" + std::to_string(i)},
                         {"type", "diffuse"},
                         {"albedo", texture_json(scene.bsdfs[i].albedo)}});
    for (size_t i = 0; i < scene.emitters.size(); ++i)
        emitters.push_back({{"id", "emitter" + std::to_string(i)},
                            {"type", "area"},
                            {"radiance", texture_json(scene.emitters[i].radiance)},
                            {"two_sided", scene.emitters[i].two_sided},
                            {"scale_by_parameter", scene.emitters[i].scaled_by_parameter}});
    for (const Shape &s : scene.shapes) {
        json j = {{"id", s.name},
                  {"type", "rectangle"},
                  {"origin", v3(s.origin)},
                  {"edge_u", v3(s.edge_u)},
                  {"edge_v", v3(s.edge_v)}};
        if (s.bsdf) j["bsdf"] = "bsdf" + std::to_string(*s.bsdf);
        if (s.emitter) j["emitter"] = "emitter" + std::to_string(*s.emitter);
        if (s.binding)
            j["pi_binding"] = {{"parameter", scene.parameter_name},
                               {"axis", v3(s.binding->axis)},
                               {"scale", s.binding->scale}};
        shapes.push_back(j);
    }
    root["bsdfs"] = bsdfs;
    root["emitters"] = emitters;
    root["shapes"] = shapes;
    json r = {{"res", {scene.camera.width, scene.camera.height}},
              {"spp", render.spp},
              {"max_depth", render.max_depth},
              {"seed", render.seed}};
    if (render.fd_eps) r["fd_eps"] = *render.fd_eps;
    root["render"] = r;
    return root.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

namespace {

void put_le_float(std::vector<unsigned char> &out, float f) {
    uint32_t bits;
    std::memcpy(&bits, &f, 4);
    for (int k = 0; k < 4; ++k) out.push_back(static_cast<unsigned char>((bits >> (8 * k)) & 0xffu));
}

float get_le_float(const unsigned char *p) {
    const uint32_t bits = uint32_t(p[0]) | (uint32_t(p[1]) << 8) | (uint32_t(p[2]) << 16) |
                          (uint32_t(p[3]) << 24);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
}

}  // namespace

void write_pfm(const Image &img, const std::string &path) {
    std::vector<unsigned char> bytes;
    const std::string header =
        "PF\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n-1.0\n";
    bytes.insert(bytes.end(), header.begin(), header.end());
    for (int y = img.height - 1; y >= 0; --y)
        for (int x = 0; x < img.width; ++x) {
            const Rgb c = img.at(x, y);
            for (int k = 0; k < 3; ++k) {
                if (!std::isfinite(c[k]))
                    throw std::runtime_error(path + ": refusing to write a non-finite pixel");
                put_le_float(bytes, float(c[k]));
            }
        }
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char *>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw std::runtime_error(path + ": write failed");
}

Image read_pfm(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path + ": cannot open");
    std::string magic, scale;
    int w = 0, h = 0;
    in >> magic >> w >> h >> scale;
    in.get();
    if (magic != "PF" || w < 1 || h < 1) throw std::runtime_error(path + ": not an RGB PFM file");
    if (std::stod(scale) >= 0.0) throw std::runtime_error(path + ": big-endian PFM is not supported");
    std::vector<unsigned char> raw(size_t(w) * size_t(h) * 12);
    in.read(reinterpret_cast<char *>(raw.data()), std::streamsize(raw.size()));
    if (in.gcount() != std::streamsize(raw.size())) throw std::runtime_error(path + ": truncated");
    Image img(w, h);
    size_t o = 0;
    for (int y = h - 1; y >= 0; --y)
        for (int x = 0; x < w; ++x) {
            Rgb c;
            for (int k = 0; k < 3; ++k, o += 4) c[k] = get_le_float(&raw[o]);
            img.set(x, y, c);
        }
    return img;
}

std::array<uint8_t, 3> signed_color(double v, double scale) {
    const double t = std::clamp(v * scale, -1.0, 1.0);
    const auto q = [](double x) { return static_cast<uint8_t>(std::round(255.0 * x)); };
    if (t >= 0.0) return {255, q(1.0 - t), q(1.0 - t)};
    return {q(1.0 + t), q(1.0 + t), 255};
}

void write_png_signed(const GradImage &img, Channel channel, double scale, const std::string &path) {
    if (!(scale > 0.0)) throw std::invalid_argument("png scale must be positive");
    std::unique_ptr<FILE, int (*)(FILE *)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
    if (!fp) throw std::runtime_error(path + ": cannot open for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("libpng initialisation failed");
    }
    std::vector<png_byte> rows(size_t(img.width) * size_t(img.height) * 3);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const auto c = signed_color(img.channel(x, y, channel), scale);
            std::copy(c.begin(), c.end(), rows.begin() + std::ptrdiff_t((size_t(y) * size_t(img.width) + size_t(x)) * 3));
        }
    std::vector<png_bytep> row_ptrs(size_t(img.height));
    for (int y = 0; y < img.height; ++y) row_ptrs[size_t(y)] = &rows[size_t(y) * size_t(img.width) * 3];
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error(path + ": png encoding failed");
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, png_uint_32(img.width), png_uint_32(img.height), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, row_ptrs.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

// ---------------------------------------------------------------------------

std::vector<std::string> report_records(const ComparisonReport &report) {
    const char *channel = report.channel == Channel::R ? "r" : report.channel == Channel::G ? "g" : "b";
    std::vector<std::string> lines;
    json head = {{"record", "comparison"},
                 {"setting", report.setting.id},
                 {"variant", to_string(report.setting.variant)},
                 {"channel", channel},
                 {"width", report.width},
                 {"height", report.height},
                 {"spp", report.spp},
                 {"fd_spp", report.fd_spp},
                 {"fd_h", report.fd_h},
                 {"fd_l1_norm", report.fd_l1_norm},
                 {"fd_runtime_seconds", report.fd_runtime_seconds}};
    lines.push_back(head.dump());
    for (const MethodMetrics &m : report.methods) {
        json j = {{"record", "method"},
                  {"setting", report.setting.id},
                  {"variant", to_string(report.setting.variant)},
                  {"method", m.method},
                  {"mae", m.mae},
                  {"rel_l1", m.rel_l1},
                  {"l1_norm", m.l1_norm},
                  {"sign_agreement", m.sign_agreement},
                  {"runtime_seconds", m.runtime_seconds}};
        lines.push_back(j.dump());
    }
    return lines;
}

std::vector<std::string> trace_records(const OptimizationTrace &trace, const std::string &method) {
    std::vector<std::string> lines;
    for (const OptimizationStep &s : trace.steps) {
        json j = {{"record", "step"}, {"method", method}, {"iteration", s.iteration}, {"pi", s.pi}};
        j["loss"] = std::isfinite(s.loss) ? json(s.loss) : json(nullptr);
        j["gradient"] = s.gradient;
        lines.push_back(j.dump());
    }
    lines.push_back(json({{"record", "summary"},
                          {"method", method},
                          {"final_pi", trace.final_pi()},
                          {"diverged", trace.diverged}})
                        .dump());
    return lines;
}

void write_lines(const std::vector<std::string> &lines, const std::string &path) {
    std::ofstream out(path, std::ios::binary);
    for (const std::string &l : lines) out << l << '\n';
    if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace tprb
