#include "mvdc/io.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / ("mvdc_cli_" + std::to_string(::getpid()))) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

int run_cli(const std::string& args) {
    const std::string command = std::string(MVDC_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(command.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string capture_cli(const std::string& args, const fs::path& tmp) {
    const fs::path out = tmp / "stdout.txt";
    const std::string command =
        std::string(MVDC_CLI_PATH) + " " + args + " > " + out.string() + " 2> /dev/null";
    const int status = std::system(command.c_str());
    REQUIRE(WIFEXITED(status));
    std::ifstream in(out);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return text;
}

}  // namespace

TEST_CASE("cli: unknown flag and bad config exit with code 2") {
    TempDir tmp;
    CHECK(run_cli("synth --definitely-not-a-flag") == 2);
    CHECK(run_cli("nonsense-subcommand") == 2);

    const fs::path bad = tmp.path / "bad.json";
    std::ofstream(bad) << "{ not json";
    CHECK(run_cli("optimize-direct --config " + bad.string() + " --out " +
                  (tmp.path / "o").string()) == 2);
}

TEST_CASE("cli: synth then render and eval-cd round trip") {
    TempDir tmp;
    const fs::path scene_dir = tmp.path / "scene";
    CHECK(run_cli("synth --out " + scene_dir.string() +
                  " --res 32 32 --samples 4000 --hole-fraction 0.2 --noise-frac 0.01 --seed 3") ==
          0);
    CHECK(fs::exists(scene_dir / "rig.json"));
    CHECK(fs::exists(scene_dir / "gt_cloud.ply"));
    CHECK(fs::exists(scene_dir / "gt_view_07.pfm"));
    CHECK(fs::exists(scene_dir / "input_view_00.pfm"));
    CHECK(fs::exists(scene_dir / "init_view_00.pfm"));

    const fs::path render_dir = tmp.path / "render";
    CHECK(run_cli("render --cloud " + (scene_dir / "gt_cloud.ply").string() + " --out " +
                  render_dir.string() + " --res 32 32") == 0);
    CHECK(fs::exists(render_dir / "view_00.pfm"));

    const std::string cd =
        capture_cli("eval-cd --a " + (scene_dir / "gt_cloud.ply").string() + " --b " +
                        (scene_dir / "gt_cloud.ply").string(),
                    tmp.path);
    CHECK(std::stod(cd) == 0.0);
}

TEST_CASE("cli: lossmaps on a self-consistent scene are near black") {
    TempDir tmp;
    const fs::path out = tmp.path / "maps";
    CHECK(run_cli("lossmaps --out " + out.string() +
                  " --res 48 48 --samples 8000 --seed 4 --use gt --u-factor 5") == 0);
    double total = 0.0;
    size_t count = 0;
    for (int t = 0; t < 8; ++t) {
        char name[32];
        std::snprintf(name, sizeof(name), "lossmap_%02d.pgm", t);
        const mvdc::io::LossImage8 image = mvdc::io::read_loss_pgm8(out / name);
        for (uint8_t code : image.codes) total += code;
        count += image.codes.size();
    }
    CHECK(total / static_cast<double>(count) < 0.01 * 255.0);
}

TEST_CASE("cli: reproject writes buffer and distance maps") {
    TempDir tmp;
    const fs::path out = tmp.path / "reproj";
    CHECK(run_cli("reproject --out " + out.string() +
                  " --res 32 32 --samples 4000 --seed 5 --source 0 --target 1 --u-factor 3") == 0);
    CHECK(fs::exists(out / "buffer_0_1.pfm"));
    CHECK(fs::exists(out / "distance_0_1.pfm"));
    const mvdc::DepthImage buffer = mvdc::io::read_pfm(out / "buffer_0_1.pfm", 0.0);
    CHECK(buffer.width == 96);
    CHECK(buffer.height == 96);
}

TEST_CASE("cli: optimize-direct writes report, views, and fused cloud") {
    TempDir tmp;
    const fs::path out = tmp.path / "opt";
    CHECK(run_cli("optimize-direct --out " + out.string() +
                  " --res 32 32 --samples 4000 --seed 6 --hole-fraction 0.3 --noise-frac 0.01 "
                  "--steps 8 --select-window 3 --u-factor 3") == 0);
    CHECK(fs::exists(out / "report.json"));
    CHECK(fs::exists(out / "final_view_07.pfm"));
    CHECK(fs::exists(out / "fused.ply"));
    CHECK(fs::exists(out / "metrics.json"));

    std::ifstream in(out / "report.json");
    const nlohmann::json report = nlohmann::json::parse(in);
    CHECK(report.at("final_consistency").get<double>() <
          report.at("initial_consistency").get<double>());
}

TEST_CASE("cli: identical synth invocations are byte-identical") {
    TempDir tmp;
    const fs::path a = tmp.path / "a";
    const fs::path b = tmp.path / "b";
    const std::string flags =
        " --res 24 24 --samples 2000 --hole-fraction 0.2 --noise-frac 0.01 --seed 11";
    CHECK(run_cli("synth --out " + a.string() + flags) == 0);
    CHECK(run_cli("synth --out " + b.string() + flags) == 0);
    for (const auto& entry : fs::directory_iterator(a)) {
        const fs::path other = b / entry.path().filename();
        REQUIRE(fs::exists(other));
        std::ifstream fa(entry.path(), std::ios::binary), fb(other, std::ios::binary);
        const std::string ca((std::istreambuf_iterator<char>(fa)),
                             std::istreambuf_iterator<char>());
        const std::string cb((std::istreambuf_iterator<char>(fb)),
                             std::istreambuf_iterator<char>());
        CHECK(ca == cb);
    }
}
