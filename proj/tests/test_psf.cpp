#include <catch2/catch_amalgamated.hpp>

#include "cpi/psf.hpp"

using namespace cpi;

namespace {
const ScenarioConfig bench;  // 532 nm, sigma 1.08 mm, z_a 92 mm
}

TEST_CASE("incoherent kernel equals the squared coherent kernel") {
    for (double dz : {0.0, 21e-3, -21e-3}) {
        const auto cfg = bench.with(bench.z_a + dz);
        const auto psf = GaussianPsf::from_scenario(cfg);
        const auto grid = SampledGrid::centered(4096, psf.coherent_envelope_width() / 64.0);
        double worst = 0.0;
        for (std::size_t i = 0; i < grid.n; ++i) {
            const double rho = grid.coord(i);
            worst = std::max(worst, std::abs(std::norm(psf.coherent(rho)) - psf.incoherent(rho)));
        }
        CHECK(worst < 1e-10);
    }
}

TEST_CASE("coherent kernel is a pure real gaussian at focus") {
    const auto psf = GaussianPsf::from_scenario(bench);
    CHECK(psf.beta == Catch::Approx(0.0).margin(1e-12));
    const double w = 1.0 / psf.gamma;  // c z_b / (omega sigma)
    CHECK(std::abs(psf.coherent(w).imag()) < 1e-14);
    CHECK(psf.coherent(w).real() == Catch::Approx(std::exp(-0.5)));
}

TEST_CASE("defocus widens the incoherent kernel by sqrt(1 + beta^2)") {
    const auto cfg = bench.with(bench.z_a + 21e-3);
    const auto here = GaussianPsf::from_scenario(cfg);
    const auto focus = GaussianPsf::from_scenario(cfg, cfg.z_a);
    const double measured = here.incoherent_sigma() / focus.incoherent_sigma();
    const double predicted =
        std::sqrt(1.0 + here.beta * here.beta) * (cfg.z_b / cfg.z_a);  // gamma scales with z_b too
    CHECK(measured == Catch::Approx(predicted).epsilon(1e-12));
}

TEST_CASE("sampled kernels: normalization, symmetry, monotone envelope") {
    const auto cfg = bench.with(bench.z_a + 21e-3);
    const auto psf = GaussianPsf::from_scenario(cfg);
    const auto grid = SampledGrid::centered(513, psf.coherent_envelope_width() / 40.0);

    const auto c = coherent_psf(cfg, grid);
    CHECK(std::abs(c.values[256] - std::complex<double>(1.0, 0.0)) < 1e-14);
    double prev = 2.0;
    for (std::size_t i = 256; i < grid.n; ++i) {
        const double mag = std::abs(c.values[i]);
        CHECK(mag <= prev + 1e-15);
        prev = mag;
    }

    const auto j = incoherent_psf(cfg, grid);
    j.check();
    CHECK(j.values[256] == Catch::Approx(1.0));
    for (std::size_t i = 0; i < grid.n; ++i) {
        CHECK(j.values[i] == Catch::Approx(j.values[grid.n - 1 - i]).margin(1e-14));
    }
}

TEST_CASE("kernel construction rejects degenerate grids") {
    // kernel far narrower than the grid spacing
    const auto grid = SampledGrid::centered(64, 1e-3);
    REQUIRE_THROWS_AS(coherent_psf(bench, grid), PreconditionError);
    // grid not covering a few widths
    const auto tiny = SampledGrid::centered(4, 1e-6);
    REQUIRE_THROWS_AS(coherent_psf(bench, tiny), PreconditionError);
}

TEST_CASE("optimal alpha matches the brute-force argmin") {
    const double abar = optimal_alpha(bench);
    CHECK(abar > 0.9999);
    CHECK(abar < 1.0);

    const std::size_t n = 100000;
    const double lo = 0.999, hi = 1.001;
    std::size_t arg = 0;
    double best = 1e99;
    for (std::size_t i = 0; i < n; ++i) {
        const double alpha = lo + (hi - lo) * double(i) / double(n - 1);
        const double w = image_width_alpha(bench, alpha);
        if (w < best) {
            best = w;
            arg = i;
        }
    }
    const double step = (hi - lo) / double(n - 1);
    const double scanned = lo + step * double(arg);
    CHECK(std::abs(scanned - abar) <= step);
}

TEST_CASE("alpha tends to one for a large source") {
    ScenarioConfig cfg = bench;
    cfg.source_sigma = 50e-3;
    CHECK(optimal_alpha(cfg) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("image width at alpha = z_b/z_a equals the ghost kernel width") {
    const auto cfg = bench.with(71e-3);
    const double alpha = cfg.z_b / cfg.z_a;
    const auto psf = GaussianPsf::from_scenario(cfg);
    CHECK(image_width_alpha(cfg, alpha) ==
          Catch::Approx(psf.incoherent_sigma() * alpha).epsilon(1e-12));
}
