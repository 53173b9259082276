#include "mvdc/io.hpp"

#include "mvdc/experiments.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace mvdc;
using namespace mvdc::testing;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / ("mvdc_io_" + std::to_string(::getpid()))) {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

DepthImage float_valued_image(int size, uint64_t seed) {
    DepthImage image(size, size, 4.0);
    CounterRng rng(seed);
    for (double& d : image.data) {
        if (rng.next_double() < 0.7) d = static_cast<float>(rng.uniform(0.5, 3.0));
    }
    return image;
}

std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

}  // namespace

TEST_CASE("pfm: write/read round trip is bit identical") {
    TempDir tmp;
    const DepthImage image = float_valued_image(256, 101);
    const fs::path path = tmp.path / "depth.pfm";
    io::write_pfm(image, path);
    const DepthImage loaded = io::read_pfm(path);
    CHECK(loaded.width == image.width);
    CHECK(loaded.height == image.height);
    CHECK(loaded.data == image.data);
    CHECK(loaded.background_depth == 4.0);  // inferred from the maximum
}

TEST_CASE("pfm: deterministic writer") {
    TempDir tmp;
    const DepthImage image = float_valued_image(32, 102);
    io::write_pfm(image, tmp.path / "a.pfm");
    io::write_pfm(image, tmp.path / "b.pfm");
    CHECK(read_bytes(tmp.path / "a.pfm") == read_bytes(tmp.path / "b.pfm"));
}

TEST_CASE("pfm: malformed inputs raise structured errors") {
    TempDir tmp;
    const fs::path path = tmp.path / "bad.pfm";

    SUBCASE("bad magic") {
        std::ofstream(path) << "P5\n2 2\n-1.0\n";
        CHECK_THROWS_AS(io::read_pfm(path), io::IoError);
    }

    SUBCASE("truncated payload") {
        std::ofstream(path) << "Pf\n4 4\n-1.0\nxx";
        try {
            io::read_pfm(path);
            FAIL("expected IoError");
        } catch (const io::IoError& e) {
            CHECK(e.byte_offset() > 0);
        }
    }

    SUBCASE("dimensions out of range") {
        std::ofstream(path) << "Pf\n-3 4\n-1.0\n";
        CHECK_THROWS_AS(io::read_pfm(path), io::IoError);
    }

    SUBCASE("NaN depth on write") {
        DepthImage image(2, 2, 4.0);
        image.at(0, 0) = std::nan("");
        CHECK_THROWS_AS(io::write_pfm(image, path), io::IoError);
    }
}

TEST_CASE("pgm16: quantization error bounded by one step") {
    TempDir tmp;
    const CameraRig rig = default_rig(64);
    const DepthImage image = analytic_depth_views(ShapeSpec::sphere(1.0), rig, 4.0)[0];
    const fs::path path = tmp.path / "depth.pgm";
    io::write_pgm16(image, path, 0.5, 4.0);
    const DepthImage loaded = io::read_pgm16(path);

    const double step = (4.0 - 0.5) / 65535.0;
    for (size_t i = 0; i < image.data.size(); ++i) {
        CHECK(std::abs(loaded.data[i] - image.data[i]) <= step);
    }
    CHECK(loaded.background_depth == 4.0);
    // Background hits the top code, so it round-trips exactly.
    CHECK(loaded.data[0] == 4.0);
}

TEST_CASE("pgm8: loss map export with declared scale") {
    TempDir tmp;
    LossMap map(4, 2);
    map.values = {0.0, 0.01, 0.02, 0.04, 0.005, 0.0, 0.04, 0.1};
    const fs::path path = tmp.path / "loss.pgm";
    io::write_loss_pgm8(map, path, 0.04);
    const io::LossImage8 loaded = io::read_loss_pgm8(path);
    CHECK(loaded.width == 4);
    CHECK(loaded.height == 2);
    CHECK(loaded.full_scale == 0.04);
    CHECK(loaded.codes[0] == 0);
    CHECK(loaded.codes[1] == 64);
    CHECK(loaded.codes[3] == 255);
    CHECK(loaded.codes[7] == 255);  // clamped above full scale
}

TEST_CASE("ply: ascii single point") {
    TempDir tmp;
    const fs::path path = tmp.path / "one.ply";
    std::ofstream(path) << "ply\nformat ascii 1.0\nelement vertex 1\n"
                           "property float x\nproperty float y\nproperty float z\n"
                           "end_header\n0 0 0\n";
    const PointCloud cloud = io::read_ply(path);
    REQUIRE(cloud.size() == 1);
    CHECK(cloud.points[0] == Point3(0, 0, 0));
}

TEST_CASE("ply: round trips preserve doubles exactly") {
    TempDir tmp;
    CounterRng rng(103);
    PointCloud cloud;
    for (int i = 0; i < 200; ++i) {
        cloud.points.emplace_back(rng.gaussian(), rng.gaussian(), rng.gaussian());
        cloud.normals.push_back(Eigen::Vector3d(rng.gaussian(), rng.gaussian(), rng.gaussian())
                                    .normalized());
    }

    SUBCASE("ascii") {
        io::write_ply(cloud, tmp.path / "a.ply", false);
        const PointCloud loaded = io::read_ply(tmp.path / "a.ply");
        REQUIRE(loaded.size() == cloud.size());
        for (size_t i = 0; i < cloud.size(); ++i) {
            CHECK(loaded.points[i] == cloud.points[i]);
            CHECK(loaded.normals[i] == cloud.normals[i]);
        }
    }

    SUBCASE("binary") {
        io::write_ply(cloud, tmp.path / "b.ply", true);
        const PointCloud loaded = io::read_ply(tmp.path / "b.ply");
        REQUIRE(loaded.size() == cloud.size());
        for (size_t i = 0; i < cloud.size(); ++i) {
            CHECK(loaded.points[i] == cloud.points[i]);
            CHECK(loaded.normals[i] == cloud.normals[i]);
        }
    }
}

TEST_CASE("ply: tolerates extra scalar properties") {
    TempDir tmp;
    const fs::path path = tmp.path / "extra.ply";
    std::ofstream(path) << "ply\nformat ascii 1.0\nelement vertex 2\n"
                           "property float x\nproperty float y\nproperty float z\n"
                           "property uchar red\n"
                           "end_header\n1 2 3 255\n4 5 6 128\n";
    const PointCloud cloud = io::read_ply(path);
    REQUIRE(cloud.size() == 2);
    CHECK(cloud.points[1] == Point3(4, 5, 6));
}

TEST_CASE("ply: malformed files raise structured errors") {
    TempDir tmp;
    const fs::path path = tmp.path / "bad.ply";

    SUBCASE("bad magic") {
        std::ofstream(path) << "plx\n";
        CHECK_THROWS_AS(io::read_ply(path), io::IoError);
    }

    SUBCASE("missing coordinates") {
        std::ofstream(path) << "ply\nformat ascii 1.0\nelement vertex 1\n"
                               "property float x\nend_header\n0\n";
        CHECK_THROWS_AS(io::read_ply(path), io::IoError);
    }

    SUBCASE("truncated binary payload") {
        std::ofstream(path) << "ply\nformat binary_little_endian 1.0\nelement vertex 5\n"
                               "property double x\nproperty double y\nproperty double z\n"
                               "end_header\n123";
        CHECK_THROWS_AS(io::read_ply(path), io::IoError);
    }
}

TEST_CASE("json: rig round trip and cube-corner shorthand") {
    TempDir tmp;
    const CameraRig rig = default_rig(64);
    io::write_rig(rig, tmp.path / "rig.json");
    const CameraRig loaded = io::read_rig(tmp.path / "rig.json");
    REQUIRE(loaded.size() == 8);
    CHECK(loaded.width == 64);
    for (int n = 0; n < 8; ++n) {
        CHECK((loaded.views[n].pose.rotation - rig.views[n].pose.rotation).norm() < 1e-15);
        CHECK((loaded.views[n].pose.translation - rig.views[n].pose.translation).norm() < 1e-15);
    }

    std::ofstream(tmp.path / "shorthand.json")
        << R"({"type": "cube_corner", "distance": 2.0, "width": 32, "height": 32,)"
        << R"( "intrinsics": {"fx": 32, "fy": 32, "cx": 15.5, "cy": 15.5}})";
    const CameraRig shorthand = io::read_rig(tmp.path / "shorthand.json");
    CHECK(shorthand.size() == 8);
    CHECK(shorthand.width == 32);
}

TEST_CASE("json: scene/energy/generator specs round trip") {
    TempDir tmp;

    SceneSpec scene;
    scene.shape = ShapeSpec::box(Eigen::Vector3d(1.0, 0.8, 0.6));
    scene.samples = 1234;
    scene.hole_fraction = 0.25;
    scene.noise_sigma_frac = 0.02;
    scene.seed = 99;
    io::write_scene_spec(scene, tmp.path / "scene.json");
    const SceneSpec scene2 = io::read_scene_spec(tmp.path / "scene.json");
    CHECK(scene2.samples == 1234);
    CHECK(scene2.hole_fraction == 0.25);
    CHECK(scene2.seed == 99);
    CHECK(scene2.shape.parts[0].kind == ShapePart::Kind::kBox);

    EnergyConfig cfg = EnergyConfig::direct_defaults();
    cfg.consistency.depth_range = {0.9, 1.8};
    io::write_energy_config(cfg, tmp.path / "energy.json");
    const EnergyConfig cfg2 = io::read_energy_config(tmp.path / "energy.json");
    CHECK(cfg2.learning_rate == cfg.learning_rate);
    CHECK(cfg2.grad_scale == GradScale::kViewSum);
    CHECK(cfg2.consistency.depth_range.max == 1.8);

    io::RbfGeneratorSpec gen;
    gen.center_count = 32;
    io::write_generator_spec(gen, tmp.path / "gen.json");
    const io::RbfGeneratorSpec gen2 = io::read_generator_spec(tmp.path / "gen.json");
    CHECK(gen2.center_count == 32);
    CHECK(gen2.base_samples == gen.base_samples);

    // schema_version is stamped on every config.
    CHECK(read_bytes(tmp.path / "scene.json").find("schema_version") != std::string::npos);
}

TEST_CASE("json: report serialization") {
    TempDir tmp;
    EnergyReport report;
    report.steps = {{0, 0.5, 0.0, 0.5}, {1, 0.4, 0.01, 0.41}};
    report.selected_step = 1;
    io::write_report(report, EnergyConfig::direct_defaults(), "direct", tmp.path / "report.json");
    const std::string text = read_bytes(tmp.path / "report.json");
    CHECK(text.find("\"mode\": \"direct\"") != std::string::npos);
    CHECK(text.find("\"selected_step\": 1") != std::string::npos);
    CHECK(text.find("\"final_consistency\": 0.4") != std::string::npos);
}
