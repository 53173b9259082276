#include "mvdc/io.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace mvdc::io {

using nlohmann::json;

IoError::IoError(const std::filesystem::path& path, size_t byte_offset,
                 const std::string& message)
    : std::runtime_error(path.string() + " @ byte " + std::to_string(byte_offset) + ": " + message),
      path_(path), byte_offset_(byte_offset) {}

namespace {

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path, 0, "cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

void dump(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path, 0, "cannot open file for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError(path, 0, "short write");
}

/// Byte cursor over a loaded file, for parse errors with exact offsets.
struct Cursor {
    const std::filesystem::path& path;
    const std::string& bytes;
    size_t pos = 0;

    [[noreturn]] void fail(const std::string& message) const { throw IoError(path, pos, message); }

    bool eof() const { return pos >= bytes.size(); }

    void skip_space_and_comments() {
        while (!eof()) {
            const char c = bytes[pos];
            if (c == '#') {
                while (!eof() && bytes[pos] != '\n') ++pos;
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                ++pos;
            } else {
                break;
            }
        }
    }

    std::string token() {
        skip_space_and_comments();
        if (eof()) fail("unexpected end of file");
        const size_t start = pos;
        while (!eof() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
        return bytes.substr(start, pos - start);
    }

    long long integer(const char* what) {
        const std::string t = token();
        try {
            size_t used = 0;
            const long long v = std::stoll(t, &used);
            if (used != t.size()) throw std::invalid_argument(t);
            return v;
        } catch (const std::exception&) {
            fail(std::string("expected integer for ") + what);
        }
    }

    double real(const char* what) {
        const std::string t = token();
        try {
            size_t used = 0;
            const double v = std::stod(t, &used);
            if (used != t.size()) throw std::invalid_argument(t);
            return v;
        } catch (const std::exception&) {
            fail(std::string("expected number for ") + what);
        }
    }

    /// Consumes exactly one whitespace byte (binary payload separator).
    void expect_single_space() {
        if (eof() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
            fail("expected whitespace before binary payload");
        }
        ++pos;
    }

    const char* raw(size_t count, const char* what) {
        if (pos + count > bytes.size()) {
            fail(std::string("truncated ") + what);
        }
        const char* p = bytes.data() + pos;
        pos += count;
        return p;
    }
};

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void check_dimensions(Cursor& c, long long w, long long h) {
    constexpr long long kMaxDim = 1 << 20;
    if (w <= 0 || h <= 0 || w > kMaxDim || h > kMaxDim) c.fail("dimensions out of range");
}

}  // namespace

// --------------------------------------------------------------------------
// PFM

void write_pfm(const DepthImage& image, const std::filesystem::path& path) {
    if (image.width <= 0 || image.height <= 0) throw IoError(path, 0, "empty image");
    std::string out;
    out += "Pf\n";
    out += std::to_string(image.width) + " " + std::to_string(image.height) + "\n";
    out += "-1.0\n";
    const size_t header = out.size();
    out.resize(header + image.data.size() * sizeof(float));
    float* dst = reinterpret_cast<float*>(out.data() + header);
    // PFM stores the bottom row first.
    for (int y = image.height - 1; y >= 0; --y) {
        for (int x = 0; x < image.width; ++x) {
            const double d = image.at(x, y);
            if (!std::isfinite(d)) throw IoError(path, 0, "non-finite depth on write");
            *dst++ = static_cast<float>(d);
        }
    }
    dump(path, out);
}

DepthImage read_pfm(const std::filesystem::path& path, std::optional<double> background) {
    const std::string bytes = slurp(path);
    Cursor c{path, bytes};
    if (c.token() != "Pf") c.fail("bad magic, expected 'Pf'");
    const long long w = c.integer("width");
    const long long h = c.integer("height");
    check_dimensions(c, w, h);
    const double scale = c.real("scale");
    if (scale >= 0.0) c.fail("big-endian PFM not supported (scale must be negative)");
    c.pos -= 0;  // scale token consumed; payload starts after one whitespace byte
    c.expect_single_space();

    const char* raw = c.raw(static_cast<size_t>(w * h) * sizeof(float), "pixel data");
    DepthImage image(static_cast<int>(w), static_cast<int>(h), 0.0);
    for (long long y = h - 1; y >= 0; --y) {
        for (long long x = 0; x < w; ++x) {
            float f;
            std::memcpy(&f, raw, sizeof(float));
            raw += sizeof(float);
            image.at(static_cast<int>(x), static_cast<int>(y)) = static_cast<double>(f);
        }
    }
    double bg = background.value_or(-1.0);
    if (!background) {
        for (double d : image.data) bg = std::max(bg, d);
    }
    image.background_depth = bg;
    return image;
}

// --------------------------------------------------------------------------
// PGM

void write_pgm16(const DepthImage& image, const std::filesystem::path& path, double range_min,
                 double range_max) {
    if (range_max <= range_min) throw IoError(path, 0, "invalid quantization range");
    std::string out;
    out += "P5\n";
    out += "# depth_range " + format_double(range_min) + " " + format_double(range_max) + "\n";
    out += std::to_string(image.width) + " " + std::to_string(image.height) + "\n65535\n";
    out.reserve(out.size() + image.data.size() * 2);
    const double span = range_max - range_min;
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            const double d = image.at(x, y);
            if (!std::isfinite(d)) throw IoError(path, 0, "non-finite depth on write");
            const double clamped = std::clamp(d, range_min, range_max);
            const auto code =
                static_cast<unsigned>(std::lround((clamped - range_min) / span * 65535.0));
            out += static_cast<char>((code >> 8) & 0xFF);  // PGM 16-bit is big-endian
            out += static_cast<char>(code & 0xFF);
        }
    }
    dump(path, out);
}

namespace {

/// Shared P5 header parse; returns (w, h, maxval) and leaves the cursor at
/// the payload. The declared-range comment is scanned out of the raw header.
void parse_pgm_header(Cursor& c, long long& w, long long& h, long long& maxval) {
    if (c.token() != "P5") c.fail("bad magic, expected 'P5'");
    w = c.integer("width");
    h = c.integer("height");
    check_dimensions(c, w, h);
    maxval = c.integer("maxval");
    c.expect_single_space();
}

bool scan_comment(const std::string& bytes, const char* key, double* a, double* b) {
    const size_t at = bytes.find(key);
    if (at == std::string::npos) return false;
    const char* p = bytes.data() + at + std::strlen(key);
    char* end = nullptr;
    *a = std::strtod(p, &end);
    if (end == p) return false;
    if (b) {
        p = end;
        *b = std::strtod(p, &end);
        if (end == p) return false;
    }
    return true;
}

}  // namespace

DepthImage read_pgm16(const std::filesystem::path& path) {
    const std::string bytes = slurp(path);
    Cursor c{path, bytes};
    long long w = 0, h = 0, maxval = 0;
    parse_pgm_header(c, w, h, maxval);
    if (maxval != 65535) c.fail("expected 16-bit maxval 65535");
    double lo = 0.0, hi = 0.0;
    if (!scan_comment(bytes, "# depth_range ", &lo, &hi) || hi <= lo) {
        c.fail("missing or invalid depth_range comment");
    }
    const unsigned char* raw = reinterpret_cast<const unsigned char*>(
        c.raw(static_cast<size_t>(w * h) * 2, "pixel data"));
    DepthImage image(static_cast<int>(w), static_cast<int>(h), hi);
    for (size_t i = 0; i < image.data.size(); ++i) {
        const unsigned code = (static_cast<unsigned>(raw[2 * i]) << 8) | raw[2 * i + 1];
        image.data[i] = lo + (hi - lo) * (static_cast<double>(code) / 65535.0);
    }
    return image;
}

void write_loss_pgm8(const LossMap& map, const std::filesystem::path& path, double full_scale) {
    if (full_scale <= 0.0) throw IoError(path, 0, "full_scale must be positive");
    std::string out;
    out += "P5\n";
    out += "# scale " + format_double(full_scale) + "\n";
    out += std::to_string(map.width) + " " + std::to_string(map.height) + "\n255\n";
    for (double v : map.values) {
        if (!std::isfinite(v)) throw IoError(path, 0, "non-finite loss value on write");
        const double normalized = std::clamp(v / full_scale, 0.0, 1.0);
        out += static_cast<char>(std::lround(normalized * 255.0));
    }
    dump(path, out);
}

LossImage8 read_loss_pgm8(const std::filesystem::path& path) {
    const std::string bytes = slurp(path);
    Cursor c{path, bytes};
    long long w = 0, h = 0, maxval = 0;
    parse_pgm_header(c, w, h, maxval);
    if (maxval != 255) c.fail("expected 8-bit maxval 255");
    LossImage8 out;
    out.width = static_cast<int>(w);
    out.height = static_cast<int>(h);
    if (!scan_comment(bytes, "# scale ", &out.full_scale, nullptr) || out.full_scale <= 0.0) {
        c.fail("missing or invalid scale comment");
    }
    const char* raw = c.raw(static_cast<size_t>(w * h), "pixel data");
    out.codes.assign(reinterpret_cast<const uint8_t*>(raw),
                     reinterpret_cast<const uint8_t*>(raw) + w * h);
    return out;
}

// --------------------------------------------------------------------------
// PLY

void write_ply(const PointCloud& cloud, const std::filesystem::path& path, bool binary) {
    const bool normals = cloud.has_normals();
    if (normals && cloud.normals.size() != cloud.points.size()) {
        throw IoError(path, 0, "normal count does not match point count");
    }
    std::string out;
    out += "ply\n";
    out += binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n";
    out += "element vertex " + std::to_string(cloud.points.size()) + "\n";
    out += "property double x\nproperty double y\nproperty double z\n";
    if (normals) out += "property double nx\nproperty double ny\nproperty double nz\n";
    out += "end_header\n";

    auto append_value = [&](double v) {
        if (!std::isfinite(v)) throw IoError(path, 0, "non-finite coordinate on write");
        if (binary) {
            const char* p = reinterpret_cast<const char*>(&v);
            out.append(p, sizeof(double));
        } else {
            out += format_double(v);
        }
    };
    for (size_t i = 0; i < cloud.points.size(); ++i) {
        for (int a = 0; a < 3; ++a) {
            append_value(cloud.points[i][a]);
            if (!binary) out += (a < 2 || normals) ? " " : "";
        }
        if (normals) {
            for (int a = 0; a < 3; ++a) {
                append_value(cloud.normals[i][a]);
                if (!binary && a < 2) out += " ";
            }
        }
        if (!binary) out += "\n";
    }
    dump(path, out);
}

namespace {

struct PlyProperty {
    std::string name;
    int byte_size = 0;
    bool is_double = false;
    bool is_float = false;
};

int ply_type_size(const std::string& type) {
    if (type == "char" || type == "uchar" || type == "int8" || type == "uint8") return 1;
    if (type == "short" || type == "ushort" || type == "int16" || type == "uint16") return 2;
    if (type == "int" || type == "uint" || type == "int32" || type == "uint32" ||
        type == "float" || type == "float32") {
        return 4;
    }
    if (type == "double" || type == "float64") return 8;
    return 0;
}

}  // namespace

PointCloud read_ply(const std::filesystem::path& path) {
    const std::string bytes = slurp(path);
    Cursor c{path, bytes};
    if (c.token() != "ply") c.fail("bad magic, expected 'ply'");

    bool binary = false;
    long long vertex_count = -1;
    std::vector<PlyProperty> properties;
    bool in_vertex_element = false;

    for (;;) {
        const std::string word = c.token();
        if (word == "end_header") break;
        if (word == "format") {
            const std::string fmt = c.token();
            if (fmt == "ascii") {
                binary = false;
            } else if (fmt == "binary_little_endian") {
                binary = true;
            } else {
                c.fail("unsupported format '" + fmt + "'");
            }
            c.token();  // version
        } else if (word == "comment") {
            while (!c.eof() && bytes[c.pos] != '\n') ++c.pos;
        } else if (word == "element") {
            const std::string name = c.token();
            const long long count = c.integer("element count");
            in_vertex_element = name == "vertex";
            if (in_vertex_element) {
                if (count < 0 || count > (1LL << 31)) c.fail("vertex count out of range");
                vertex_count = count;
            } else if (vertex_count >= 0) {
                break;  // vertex data precedes later elements; stop collecting
            }
        } else if (word == "property") {
            const std::string type = c.token();
            if (type == "list") {
                if (in_vertex_element) c.fail("list properties on vertices not supported");
                c.token();
                c.token();
                c.token();
                continue;
            }
            const std::string name = c.token();
            if (in_vertex_element) {
                const int size = ply_type_size(type);
                if (size == 0) c.fail("unknown property type '" + type + "'");
                properties.push_back({name, size, type == "double" || type == "float64",
                                      type == "float" || type == "float32"});
            }
        } else {
            c.fail("unexpected header keyword '" + word + "'");
        }
    }
    if (vertex_count < 0) c.fail("no vertex element");

    // end_header was consumed as a token; binary payload starts after newline.
    if (binary) c.expect_single_space();

    int ix = -1, iy = -1, iz = -1, inx = -1, iny = -1, inz = -1;
    for (size_t i = 0; i < properties.size(); ++i) {
        if (properties[i].name == "x") ix = static_cast<int>(i);
        if (properties[i].name == "y") iy = static_cast<int>(i);
        if (properties[i].name == "z") iz = static_cast<int>(i);
        if (properties[i].name == "nx") inx = static_cast<int>(i);
        if (properties[i].name == "ny") iny = static_cast<int>(i);
        if (properties[i].name == "nz") inz = static_cast<int>(i);
    }
    if (ix < 0 || iy < 0 || iz < 0) c.fail("vertex element lacks x/y/z properties");
    const bool normals = inx >= 0 && iny >= 0 && inz >= 0;

    PointCloud cloud;
    cloud.points.resize(static_cast<size_t>(vertex_count));
    if (normals) cloud.normals.resize(static_cast<size_t>(vertex_count));

    std::vector<double> row(properties.size());
    for (long long v = 0; v < vertex_count; ++v) {
        if (binary) {
            for (size_t p = 0; p < properties.size(); ++p) {
                const char* raw = c.raw(properties[p].byte_size, "vertex data");
                if (properties[p].is_double) {
                    double d;
                    std::memcpy(&d, raw, 8);
                    row[p] = d;
                } else if (properties[p].is_float) {
                    float f;
                    std::memcpy(&f, raw, 4);
                    row[p] = f;
                } else {
                    row[p] = 0.0;  // skipped integer property
                }
            }
        } else {
            for (size_t p = 0; p < properties.size(); ++p) row[p] = c.real("vertex value");
        }
        cloud.points[v] = Point3(row[ix], row[iy], row[iz]);
        if (normals) cloud.normals[v] = Eigen::Vector3d(row[inx], row[iny], row[inz]);
    }
    return cloud;
}

// --------------------------------------------------------------------------
// JSON

namespace {

constexpr int kSchemaVersion = 1;

json load_json(const std::filesystem::path& path) {
    const std::string bytes = slurp(path);
    json j = json::parse(bytes, nullptr, false);
    if (j.is_discarded()) throw IoError(path, 0, "invalid JSON");
    return j;
}

void save_json(const json& j, const std::filesystem::path& path) {
    json out = j;
    out["schema_version"] = kSchemaVersion;
    dump(path, out.dump(2) + "\n");
}

json intrinsics_to_json(const Intrinsics& k) {
    return json{{"fx", k.fx},
                {"fy", k.fy},
                {"cx", k.cx},
                {"cy", k.cy},
                {"model", k.model == CameraModel::kPerspective ? "perspective" : "orthographic"}};
}

Intrinsics intrinsics_from_json(const json& j) {
    Intrinsics k;
    k.fx = j.at("fx").get<double>();
    k.fy = j.at("fy").get<double>();
    k.cx = j.at("cx").get<double>();
    k.cy = j.at("cy").get<double>();
    const std::string model = j.value("model", "perspective");
    k.model = model == "orthographic" ? CameraModel::kOrthographic : CameraModel::kPerspective;
    return k;
}

json shape_to_json(const ShapeSpec& shape) {
    json parts = json::array();
    for (const ShapePart& p : shape.parts) {
        json jp;
        if (p.kind == ShapePart::Kind::kSphere) {
            jp["type"] = "sphere";
            jp["radius"] = p.radius;
        } else {
            jp["type"] = "box";
            jp["extents"] = {p.extents.x(), p.extents.y(), p.extents.z()};
        }
        jp["center"] = {p.center.x(), p.center.y(), p.center.z()};
        parts.push_back(jp);
    }
    return json{{"parts", parts}};
}

ShapeSpec shape_from_json(const json& j) {
    ShapeSpec shape;
    for (const json& jp : j.at("parts")) {
        ShapePart p;
        const std::string type = jp.at("type").get<std::string>();
        if (type == "sphere") {
            p.kind = ShapePart::Kind::kSphere;
            p.radius = jp.at("radius").get<double>();
        } else if (type == "box") {
            p.kind = ShapePart::Kind::kBox;
            const auto& e = jp.at("extents");
            p.extents = Eigen::Vector3d(e[0].get<double>(), e[1].get<double>(), e[2].get<double>());
        } else {
            throw std::invalid_argument("shape: unknown part type '" + type + "'");
        }
        if (jp.contains("center")) {
            const auto& ctr = jp.at("center");
            p.center =
                Eigen::Vector3d(ctr[0].get<double>(), ctr[1].get<double>(), ctr[2].get<double>());
        }
        shape.parts.push_back(p);
    }
    if (shape.parts.empty()) throw std::invalid_argument("shape: no parts");
    return shape;
}

}  // namespace

void write_rig(const CameraRig& rig, const std::filesystem::path& path) {
    json views = json::array();
    for (const View& view : rig.views) {
        json rotation = json::array();
        for (int r = 0; r < 3; ++r) {
            for (int col = 0; col < 3; ++col) rotation.push_back(view.pose.rotation(r, col));
        }
        views.push_back(json{{"rotation", rotation},
                             {"translation",
                              {view.pose.translation.x(), view.pose.translation.y(),
                               view.pose.translation.z()}},
                             {"intrinsics", intrinsics_to_json(view.intrinsics)}});
    }
    save_json(json{{"width", rig.width}, {"height", rig.height}, {"views", views}}, path);
}

CameraRig read_rig(const std::filesystem::path& path) {
    const json j = load_json(path);
    CameraRig rig;
    if (j.contains("type") && j.at("type") == "cube_corner") {
        const double distance = j.value("distance", 2.0);
        rig = cube_corner_rig(distance, j.value("height", 256), j.value("width", 256),
                              j.contains("intrinsics") ? intrinsics_from_json(j.at("intrinsics"))
                                                       : Intrinsics{});
        return rig;
    }
    rig.width = j.at("width").get<int>();
    rig.height = j.at("height").get<int>();
    for (const json& jv : j.at("views")) {
        View view;
        const auto& rot = jv.at("rotation");
        for (int r = 0; r < 3; ++r) {
            for (int col = 0; col < 3; ++col) {
                view.pose.rotation(r, col) = rot[r * 3 + col].get<double>();
            }
        }
        const auto& t = jv.at("translation");
        view.pose.translation =
            Eigen::Vector3d(t[0].get<double>(), t[1].get<double>(), t[2].get<double>());
        view.intrinsics = intrinsics_from_json(jv.at("intrinsics"));
        if (!view.pose.is_valid()) throw IoError(path, 0, "invalid rotation in rig");
        rig.views.push_back(view);
    }
    return rig;
}

void write_scene_spec(const SceneSpec& spec, const std::filesystem::path& path) {
    save_json(json{{"shape", shape_to_json(spec.shape)},
                   {"samples", spec.samples},
                   {"hole_fraction", spec.hole_fraction},
                   {"noise_sigma_frac", spec.noise_sigma_frac},
                   {"seed", spec.seed},
                   {"background_depth", spec.background_depth},
                   {"raster_ground_truth", spec.raster_ground_truth}},
              path);
}

SceneSpec read_scene_spec(const std::filesystem::path& path) {
    const json j = load_json(path);
    SceneSpec spec;
    if (j.contains("shape")) spec.shape = shape_from_json(j.at("shape"));
    spec.samples = j.value("samples", spec.samples);
    spec.hole_fraction = j.value("hole_fraction", spec.hole_fraction);
    spec.noise_sigma_frac = j.value("noise_sigma_frac", spec.noise_sigma_frac);
    spec.seed = j.value("seed", spec.seed);
    spec.background_depth = j.value("background_depth", spec.background_depth);
    spec.raster_ground_truth = j.value("raster_ground_truth", spec.raster_ground_truth);
    return spec;
}

namespace {

json energy_to_json(const EnergyConfig& cfg) {
    return json{{"mu", cfg.mu},
                {"gen_norm", cfg.gen_norm == NormKind::kL1 ? "l1" : "l2"},
                {"steps", cfg.steps},
                {"learning_rate", cfg.learning_rate},
                {"select_window", cfg.select_window},
                {"grad_scale", cfg.grad_scale == GradScale::kViewSum ? "view_sum" : "mean"},
                {"momentum", cfg.momentum},
                {"backtracking", cfg.backtracking},
                {"threads", cfg.threads},
                {"consistency",
                 json{{"u_factor", cfg.consistency.u_factor},
                      {"j_views", cfg.consistency.j_views},
                      {"outlier_fraction", cfg.consistency.outlier_fraction},
                      {"depth_range",
                       {cfg.consistency.depth_range.min, cfg.consistency.depth_range.max}}}}};
}

EnergyConfig energy_from_json(const json& j) {
    EnergyConfig cfg;
    cfg.mu = j.value("mu", cfg.mu);
    cfg.gen_norm = j.value("gen_norm", "l2") == std::string("l1") ? NormKind::kL1 : NormKind::kL2;
    cfg.steps = j.value("steps", cfg.steps);
    cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
    cfg.select_window = j.value("select_window", cfg.select_window);
    cfg.grad_scale = j.value("grad_scale", "mean") == std::string("view_sum")
                         ? GradScale::kViewSum
                         : GradScale::kMean;
    cfg.momentum = j.value("momentum", cfg.momentum);
    cfg.backtracking = j.value("backtracking", cfg.backtracking);
    cfg.threads = j.value("threads", cfg.threads);
    if (j.contains("consistency")) {
        const json& jc = j.at("consistency");
        cfg.consistency.u_factor = jc.value("u_factor", cfg.consistency.u_factor);
        cfg.consistency.j_views = jc.value("j_views", cfg.consistency.j_views);
        cfg.consistency.outlier_fraction =
            jc.value("outlier_fraction", cfg.consistency.outlier_fraction);
        if (jc.contains("depth_range")) {
            cfg.consistency.depth_range.min = jc.at("depth_range")[0].get<double>();
            cfg.consistency.depth_range.max = jc.at("depth_range")[1].get<double>();
        }
    }
    return cfg;
}

}  // namespace

void write_energy_config(const EnergyConfig& cfg, const std::filesystem::path& path) {
    save_json(energy_to_json(cfg), path);
}

EnergyConfig read_energy_config(const std::filesystem::path& path) {
    return energy_from_json(load_json(path));
}

void write_generator_spec(const RbfGeneratorSpec& spec, const std::filesystem::path& path) {
    json centers = json::array();
    for (const Point3& c : spec.config.centers) centers.push_back({c.x(), c.y(), c.z()});
    save_json(json{{"bandwidth", spec.config.bandwidth},
                   {"background_depth", spec.config.background_depth},
                   {"temperature_fraction", spec.config.temperature_fraction},
                   {"ridge", spec.config.ridge},
                   {"centers", centers},
                   {"center_count", spec.center_count},
                   {"center_radius", spec.center_radius},
                   {"base_shape", shape_to_json(spec.base_shape)},
                   {"base_samples", spec.base_samples},
                   {"base_seed", spec.base_seed}},
              path);
}

RbfGeneratorSpec read_generator_spec(const std::filesystem::path& path) {
    const json j = load_json(path);
    RbfGeneratorSpec spec;
    spec.config.bandwidth = j.value("bandwidth", spec.config.bandwidth);
    spec.config.background_depth = j.value("background_depth", spec.config.background_depth);
    spec.config.temperature_fraction =
        j.value("temperature_fraction", spec.config.temperature_fraction);
    spec.config.ridge = j.value("ridge", spec.config.ridge);
    if (j.contains("centers")) {
        for (const json& jc : j.at("centers")) {
            spec.config.centers.emplace_back(jc[0].get<double>(), jc[1].get<double>(),
                                             jc[2].get<double>());
        }
    }
    spec.center_count = j.value("center_count", spec.center_count);
    spec.center_radius = j.value("center_radius", spec.center_radius);
    if (j.contains("base_shape")) spec.base_shape = shape_from_json(j.at("base_shape"));
    spec.base_samples = j.value("base_samples", spec.base_samples);
    spec.base_seed = j.value("base_seed", spec.base_seed);
    return spec;
}

std::unique_ptr<RbfShapeGenerator> build_rbf_generator(const RbfGeneratorSpec& spec,
                                                       const CameraRig& rig) {
    RbfGeneratorConfig config = spec.config;
    if (config.centers.empty()) {
        config.centers = fibonacci_sphere(spec.center_count, spec.center_radius);
    }
    CounterRng rng(spec.base_seed);
    std::vector<Point3> base = sample_surface(spec.base_shape, spec.base_samples, rng);
    return std::make_unique<RbfShapeGenerator>(std::move(base), std::move(config), rig);
}

void write_report(const EnergyReport& report, const EnergyConfig& cfg, const std::string& mode,
                  const std::filesystem::path& path) {
    json steps = json::array();
    for (const StepRecord& s : report.steps) {
        steps.push_back(json{{"step", s.step},
                             {"consistency", s.consistency},
                             {"generator", s.generator},
                             {"total", s.total}});
    }
    json j{{"mode", mode},
           {"config", energy_to_json(cfg)},
           {"steps", steps},
           {"selected_step", report.selected_step},
           {"diverged", report.diverged},
           {"initial_consistency", report.initial_consistency()},
           {"final_consistency", report.selected_consistency()}};
    if (report.diverged) j["diverged_at_step"] = report.diverged_at_step;
    if (report.final_descriptor.dim() > 0) {
        json z = json::array();
        for (int i = 0; i < report.final_descriptor.dim(); ++i) {
            z.push_back(report.final_descriptor.values[i]);
        }
        j["final_descriptor"] = z;
    }
    save_json(j, path);
}

}  // namespace mvdc::io
