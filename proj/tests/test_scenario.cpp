#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "cpi/scenario.hpp"

using namespace cpi;

TEST_CASE("scenario validation rejects bad fields") {
    ScenarioConfig cfg;
    REQUIRE_NOTHROW(cfg.validate());

    SECTION("non-positive lengths") {
        cfg.z_b = 0.0;
        REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
    }
    SECTION("zero magnification") {
        cfg.M = 0.0;
        REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
    }
    SECTION("source NA outside (0,1)") {
        cfg.source_NA = 1.0;
        REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
        cfg.source_NA = -0.1;
        REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
    }
}

TEST_CASE("derived quantities match the bench numbers") {
    ScenarioConfig cfg;  // 532 nm, NA = 0.038
    const auto d = derived_quantities(cfg.with(113e-3), 99e-6, 198e-6);

    CHECK(d.dx_focused == Catch::Approx(14e-6).epsilon(2e-3));
    CHECK(d.dof_std == Catch::Approx(0.37e-3).epsilon(5e-3));
    // diffraction term lambda z_b / a dominates the source-plane resolution
    CHECK(d.du_source == Catch::Approx(532e-9 * 113e-3 / 99e-6).epsilon(1e-12));
    CHECK(d.du_source == Catch::Approx(607e-6).epsilon(2e-2));
}

TEST_CASE("projection factor is unity at focus") {
    ScenarioConfig cfg;
    const auto d = derived_quantities(cfg, 99e-6, 198e-6);
    CHECK(d.dx_projected == Catch::Approx(198e-6));
}

TEST_CASE("resolution identities hold exactly") {
    ScenarioConfig cfg;
    for (double na : {0.01, 0.038, 0.2, 0.7}) {
        cfg.source_NA = na;
        CHECK(cfg.focused_resolution() * cfg.source_NA == Catch::Approx(cfg.wavelength).epsilon(1e-14));
        CHECK(cfg.dof_standard() * na * na == Catch::Approx(cfg.wavelength).epsilon(1e-14));
    }
}

TEST_CASE("angular resolution is non-decreasing in z_b once diffraction dominates") {
    ScenarioConfig cfg;
    const double a = 99e-6;
    double prev = 0.0;
    bool diffraction_seen = false;
    for (double z = 20e-3; z < 400e-3; z += 5e-3) {
        const auto at = cfg.with(z);
        const double du = angular_resolution(at, a);
        if (diffraction_seen) CHECK(du >= prev - 1e-15);
        if (du == cfg.wavelength * z / a) diffraction_seen = true;
        prev = du;
    }
    CHECK(diffraction_seen);
}

TEST_CASE("source NA calibration") {
    ScenarioConfig cfg;
    const auto c = calibrate_source_na(cfg, 14e-6);
    CHECK(c.source_NA == Catch::Approx(0.038).epsilon(1e-3));
    CHECK(c.source_diameter() == Catch::Approx(3.50e-3).epsilon(2e-3));
    CHECK(c.source_diameter() / c.source_sigma == Catch::Approx(3.24).epsilon(5e-3));

    // resolution at the wavelength itself would need NA = 1; the invariant rejects it
    REQUIRE_THROWS_AS(calibrate_source_na(cfg, cfg.wavelength), ConfigError);
    REQUIRE_THROWS_AS(calibrate_source_na(cfg, -1.0), PreconditionError);
}

TEST_CASE("gaussian source profile normalization") {
    SourceProfile src(1.08e-3);
    // numeric check over +-8 sigma
    const std::size_t n = 4001;
    const double dx = 16.0 * src.sigma / double(n - 1);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = -8.0 * src.sigma + dx * double(i);
        acc += src.intensity_1d(x) * dx;
    }
    CHECK(acc >= 0.999);
    CHECK(acc <= 1.001);
    // 2D profile integrates to one as well (radial quadrature)
    double acc2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = dx * (double(i) + 0.5);
        acc2 += src.intensity_2d(r) * 2.0 * std::numbers::pi * r * dx;
    }
    CHECK(acc2 >= 0.999);
}

TEST_CASE("scenario files parse, serialize, and diagnose errors") {
    std::istringstream good(R"(# comment
wavelength = 532e-9
source_sigma = 1.08e-3
z_a = 92e-3
z_b = 113e-3   # trailing comment
M = 1.0
NA_b = 0.038
source_NA = 0.038
pixel_dx = 7.2e-6
pixel_du = 72e-6
f_b = 0.3
)");
    const auto cfg = parse_scenario(good);
    CHECK(cfg.z_b == Catch::Approx(113e-3));

    SECTION("round trip through canonical serialization") {
        std::istringstream again(serialize_scenario(cfg));
        const auto cfg2 = parse_scenario(again);
        CHECK(scenario_hash(cfg) == scenario_hash(cfg2));
        CHECK(cfg2.z_b == cfg.z_b);
    }
    SECTION("missing key is named") {
        std::istringstream in("wavelength = 532e-9\n");
        try {
            parse_scenario(in);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("missing key") != std::string::npos);
        }
    }
    SECTION("unknown key is named with its line") {
        std::istringstream in("wavelngth = 532e-9\n");
        try {
            parse_scenario(in);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("wavelngth") != std::string::npos);
            CHECK(msg.find("line 1") != std::string::npos);
        }
    }
    SECTION("bad number is rejected") {
        std::istringstream in("wavelength = banana\n");
        REQUIRE_THROWS_AS(parse_scenario(in), ConfigError);
    }
    SECTION("hash changes with any field") {
        ScenarioConfig c2 = cfg;
        c2.pixel_du *= 2.0;
        CHECK(scenario_hash(c2) != scenario_hash(cfg));
    }
}

TEST_CASE("shipped canonical scenario loads") {
    const auto cfg = load_scenario(std::string(CPI_SCENARIO_DIR) + "/paper_setup");
    CHECK(cfg.wavelength == Catch::Approx(532e-9));
    CHECK(cfg.source_sigma == Catch::Approx(1.08e-3));
    CHECK(cfg.z_a == Catch::Approx(92e-3));
    CHECK(cfg.focused_resolution() == Catch::Approx(14e-6).epsilon(2e-3));
    CHECK(cfg.wavelength / cfg.NA_b == Catch::Approx(14e-6).epsilon(2e-3));
    CHECK(cfg.pixel_dx == Catch::Approx(7.2e-6));
    CHECK(cfg.pixel_du == Catch::Approx(72e-6));
}
