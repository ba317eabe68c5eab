#include <catch2/catch_amalgamated.hpp>

#include "cpi/correlation.hpp"
#include "cpi/imaging.hpp"
#include "support/oracles.hpp"

using namespace cpi;

namespace {
const ScenarioConfig bench;
}

TEST_CASE("point-like mask gives a rho_b independent correlation") {
    const auto cfg = bench.with(bench.z_a + 21e-3);
    const auto psf = GaussianPsf::from_scenario(cfg);
    // slit much narrower than every kernel scale
    const auto mask = make_slit_mask(1, 0.5e-6, 0.5e-6);
    const auto ga = SampledGrid::centered(65, 20e-6);
    const auto gb = SampledGrid::centered(33, 150e-6);
    const auto t = gamma_map(cfg, mask, ga, gb);
    t.check();

    for (std::size_t i = 0; i < ga.n; ++i) {
        const double ref = t.at(i, 0);
        for (std::size_t j = 1; j < gb.n; ++j) {
            CHECK(t.at(i, j) == Catch::Approx(ref).epsilon(1e-9));
        }
        // the row follows |C| at the projected displacement
        const double expected = std::norm(psf.coherent(cfg.z_b / cfg.z_a * ga.coord(i)));
        CHECK(t.at(i, 0) / t.at(ga.n / 2, 0) == Catch::Approx(expected).epsilon(1e-6));
    }
}

TEST_CASE("chirp-z path equals a direct transform on the same samples") {
    // hard-edged triple slit, defocused: exercises kernel shift, chirp and
    // the Fourier ladder; agreement here is algebraic.
    const auto cfg = bench.with(bench.z_a + 21e-3);
    const auto mask = make_slit_mask(3, 99e-6, 198e-6);
    const auto ga = SampledGrid::centered(31, 24e-6);
    const auto gb = SampledGrid::centered(17, 300e-6);
    const auto fft_path = gamma_map(cfg, mask, ga, gb);
    const auto direct = oracles::gamma_direct_same_grid(cfg, mask, ga, gb);
    CHECK(oracles::frobenius_nrmse(fft_path.values, direct.values) < 1e-10);
}

TEST_CASE("fft path matches oversampled trapezoidal quadrature") {
    // smooth-integrand scenario: wide slit, mild defocus chirp, kernel
    // centers kept far from the slit edges.
    ScenarioConfig cfg = bench;
    cfg.z_b = cfg.z_a + 0.6e-3;
    const auto mask = make_slit_mask(1, 240e-6, 240e-6);
    const auto ga = SampledGrid::centered(32, 1.9e-6);
    const auto gb = SampledGrid::centered(32, 126e-6);
    const auto fft_path = gamma_map(cfg, mask, ga, gb);
    const auto plan = detail::plan_object_grid(cfg, mask, ga, gb, {});
    const auto oracle = oracles::gamma_quadrature(cfg, mask, ga, gb, plan.grid.spacing, 10);
    CHECK(oracles::frobenius_nrmse(fft_path.values, oracle.values) < 1e-6);
}

TEST_CASE("slices show displaced images of the object") {
    const auto cfg = bench.with(113e-3);
    const auto mask = make_slit_mask(3, 99e-6, 198e-6);
    const auto plan = plan_tensor_grids(cfg, mask);
    const auto t = gamma_map(cfg, mask, plan.grid_a, plan.grid_b);

    // track the brightest image peak per column over the bright band
    std::vector<double> mass(plan.grid_b.n, 0.0);
    double peak_mass = 0.0;
    for (std::size_t j = 0; j < plan.grid_b.n; ++j) {
        for (std::size_t i = 0; i < plan.grid_a.n; ++i) mass[j] += t.at(i, j);
        peak_mass = std::max(peak_mass, mass[j]);
    }
    const double expect = (1.0 - cfg.z_b / cfg.z_a) / cfg.M;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t j = 0; j < plan.grid_b.n; ++j) {
        if (mass[j] < 0.2 * peak_mass) continue;
        std::size_t ipk = 1;
        for (std::size_t i = 1; i + 1 < plan.grid_a.n; ++i) {
            if (t.at(i, j) > t.at(ipk, j)) ipk = i;
        }
        const double y0 = t.at(ipk - 1, j), y1 = t.at(ipk, j), y2 = t.at(ipk + 1, j);
        const double den = y0 - 2.0 * y1 + y2;
        const double frac = den != 0.0 ? 0.5 * (y0 - y2) / den : 0.0;
        const double pos = plan.grid_a.coord(ipk) + frac * plan.grid_a.spacing;
        const double u = plan.grid_b.coord(j);
        sxx += mass[j] * u * u;
        sxy += mass[j] * u * (cfg.z_b / cfg.z_a) * pos;
    }
    CHECK(sxy / sxx == Catch::Approx(expect).epsilon(0.02));
}

TEST_CASE("bucket sum reproduces the incoherent image at focus") {
    const auto mask = make_slit_mask(3, 99e-6, 198e-6);
    // wide angular window so the diffraction tails carry < 1% of the energy
    const auto plan = plan_tensor_grids(bench, mask, 161, 329);
    const auto t = gamma_map(bench, mask, plan.grid_a, plan.grid_b);
    const auto ghost = ghost_image(t);

    const double sigma = GaussianPsf::from_scenario(bench).incoherent_sigma();
    double worst = 0.0, peak = 0.0;
    std::vector<double> reference(ghost.grid.n);
    for (std::size_t i = 0; i < ghost.grid.n; ++i) {
        reference[i] = oracles::incoherent_image_value(mask, sigma, ghost.grid.coord(i));
        peak = std::max(peak, reference[i]);
    }
    const double gpeak = ghost.peak();
    for (std::size_t i = 0; i < ghost.grid.n; ++i) {
        worst = std::max(worst, std::abs(ghost.values[i] / gpeak - reference[i] / peak));
    }
    CHECK(worst < 0.01);
}

TEST_CASE("aliasing precondition names the required spacing") {
    const auto cfg = bench.with(113e-3);
    const auto mask = make_slit_mask(3, 99e-6, 198e-6);
    const auto ga = SampledGrid::centered(17, 24e-6);
    const auto gb = SampledGrid::centered(65, 300e-6);
    GammaOptions opt;
    opt.object_spacing = 60e-6;  // grossly undersamples the Fourier ladder
    try {
        gamma_map(cfg, mask, ga, gb, opt);
        FAIL("expected aliasing error");
    } catch (const PreconditionError& e) {
        CHECK(std::string(e.what()).find("aliasing") != std::string::npos);
    }
}

TEST_CASE("tensor values are finite and non-negative by construction") {
    const auto cfg = bench.with(46e-3);
    const auto mask = make_slit_mask(2, 99e-6, 198e-6);
    const auto ga = SampledGrid::centered(41, 28.8e-6);
    const auto gb = SampledGrid::centered(21, 288e-6);
    const auto t = gamma_map(cfg, mask, ga, gb);
    REQUIRE_NOTHROW(t.check());
}
