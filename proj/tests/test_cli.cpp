#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "cpi/io.hpp"
#include "cpi/manifest.hpp"

namespace fs = std::filesystem;

namespace {

const std::string cli = CPI_CLI_PATH;
const std::string scenario = std::string(CPI_SCENARIO_DIR) + "/paper_setup";

int run(const std::string& args) {
    const std::string cmd = cli + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path fresh_dir(const std::string& name) {
    auto p = fs::temp_directory_path() / "cpi_cli_tests" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("gamma, ghost, refocus pipeline with manifests") {
    const auto dir = fresh_dir("pipeline");
    const std::string base = "--scenario " + scenario + " --out-dir " + dir.string() +
                             " --set z_b=113e-3 --mask slits:n=3,a=99e-6,d=198e-6";
    REQUIRE(run(base + " gamma --na 121 --nb 65 --out g.bin") == 0);
    REQUIRE(fs::exists(dir / "g.bin"));
    REQUIRE(fs::exists(dir / "gamma.manifest.json"));

    REQUIRE(run("--out-dir " + dir.string() + " ghost --tensor " + (dir / "g.bin").string() +
                " --out ghost.csv") == 0);
    REQUIRE(run("--out-dir " + dir.string() + " refocus --tensor " + (dir / "g.bin").string() +
                " --out refocus.csv") == 0);
    CHECK(fs::exists(dir / "ghost.csv"));
    CHECK(fs::exists(dir / "refocus.csv"));

    SECTION("verify passes on intact outputs and fails after tampering") {
        CHECK(run("verify " + (dir / "gamma.manifest.json").string()) == 0);
        std::ofstream f(dir / "g.bin", std::ios::app | std::ios::binary);
        f << "tamper";
        f.close();
        CHECK(run("verify " + (dir / "gamma.manifest.json").string()) == 4);
    }
}

TEST_CASE("analytic outputs are bit-identical across reruns and thread counts") {
    const auto d1 = fresh_dir("det1");
    const auto d2 = fresh_dir("det2");
    const std::string mask = " --mask slits:n=2,a=99e-6,d=198e-6 --set z_b=100e-3";
    REQUIRE(run("--scenario " + scenario + mask + " --out-dir " + d1.string() +
                " --threads 1 gamma --na 81 --nb 33") == 0);
    REQUIRE(run("--scenario " + scenario + mask + " --out-dir " + d2.string() +
                " --threads 3 gamma --na 81 --nb 33") == 0);
    CHECK(cpi::file_checksum((d1 / "gamma.bin").string()) ==
          cpi::file_checksum((d2 / "gamma.bin").string()));
}

TEST_CASE("config errors carry exit code 2 and diagnostics") {
    const auto dir = fresh_dir("config");
    // scenario file with a missing key
    const auto bad = dir / "bad_scenario";
    std::ofstream f(bad);
    f << "wavelength = 532e-9\n";
    f.close();
    CHECK(run("--scenario " + bad.string() + " --mask slits:n=1,a=1e-5 gamma") == 2);
    // unknown modality and broken mask specs are config errors too
    CHECK(run("--scenario " + scenario + " vismap --modality nonsense --z-steps 2") == 2);
    CHECK(run("--scenario " + scenario + " --mask circles:r=2 gamma") == 2);
    // CLI parse errors behave like config errors
    CHECK(run("definitely-not-a-command") == 2);
    // missing files are io errors
    CHECK(run("ghost --tensor /nonexistent.bin") == 4);
}

TEST_CASE("speckle, estimate and resume") {
    const auto dir = fresh_dir("speckle");
    const std::string base = "--scenario " + scenario + " --out-dir " + dir.string() +
                             " --mask slits:n=2,a=99e-6,d=198e-6 --seed 77";
    // tiny reduced-scale run: shrink the source so the lattice stays small
    const std::string shrink = " --set source_sigma=0.5e-3 --set z_a=50e-3 --set z_b=50e-3"
                               " --set f_b=0.15 --set NA_b=0.03";
    REQUIRE(run(base + shrink + " speckle --frames 48 --na 32 --nb 24") == 0);
    REQUIRE(fs::exists(dir / "frames.bin"));
    REQUIRE(fs::exists(dir / "gamma_est.bin"));

    const auto est1 = cpi::file_checksum((dir / "gamma_est.bin").string());

    SECTION("same seed reproduces the stack and tensor") {
        const auto dir2 = fresh_dir("speckle2");
        const std::string base2 = "--scenario " + scenario + " --out-dir " + dir2.string() +
                                  " --mask slits:n=2,a=99e-6,d=198e-6 --seed 77";
        REQUIRE(run(base2 + shrink + " speckle --frames 48 --na 32 --nb 24") == 0);
        CHECK(cpi::file_checksum((dir2 / "frames.bin").string()) ==
              cpi::file_checksum((dir / "frames.bin").string()));
        CHECK(cpi::file_checksum((dir2 / "gamma_est.bin").string()) == est1);
    }
    SECTION("estimate from the persisted stack matches") {
        REQUIRE(run("--out-dir " + dir.string() + " estimate --stack " +
                    (dir / "frames.bin").string() + " --out est2.bin") == 0);
        CHECK(cpi::file_checksum((dir / "est2.bin").string()) == est1);
    }
    SECTION("resume skips regeneration") {
        REQUIRE(run(base + shrink + " speckle --resume " + (dir / "frames.bin").string() +
                    " --out-tensor est3.bin") == 0);
        CHECK(cpi::file_checksum((dir / "est3.bin").string()) == est1);
    }
    SECTION("postprocess option changes the tensor") {
        REQUIRE(run("--out-dir " + dir.string() + " estimate --stack " +
                    (dir / "frames.bin").string() +
                    " --out est4.bin --postprocess lowpass=3e5,threshold=0.01") == 0);
        CHECK(cpi::file_checksum((dir / "est4.bin").string()) != est1);
    }
}

TEST_CASE("bound and dof commands emit their tables") {
    const auto dir = fresh_dir("analysis");
    REQUIRE(run("--scenario " + scenario + " --out-dir " + dir.string() +
                " --mask slits:n=2,a=99e-6,d=198e-6 bound") == 0);
    REQUIRE(fs::exists(dir / "bound.csv"));

    // single-cell visibility map, standard modality only (fast)
    REQUIRE(run("--scenario " + scenario + " --out-dir " + dir.string() +
                " vismap --modality standard --d-min 140e-6 --d-max 140e-6 --d-steps 1"
                " --z-min 92e-3 --z-max 92e-3 --z-steps 1") == 0);
    std::ifstream in(dir / "vismap.csv");
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(header == "d,z_offset,modality,visibility,bound_z_min,bound_z_max");
    CHECK(row.find("standard") != std::string::npos);
}
