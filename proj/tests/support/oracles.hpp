#pragma once

// Independent reference implementations used only by tests. These must stay
// decoupled from the library's FFT-based evaluation paths.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "cpi/aperture.hpp"
#include "cpi/correlation.hpp"
#include "cpi/grid.hpp"
#include "cpi/psf.hpp"
#include "cpi/scenario.hpp"

namespace cpi::oracles {

/// Direct trapezoidal quadrature of the correlation integral on an
/// `oversample`-times refined object lattice with point-sampled slits.
inline CorrelationTensor gamma_quadrature(const ScenarioConfig& cfg, const ApertureMask& mask,
                                          const SampledGrid& grid_a, const SampledGrid& grid_b,
                                          double base_spacing, int oversample) {
    const GaussianPsf psf = GaussianPsf::from_scenario(cfg);
    const double k = cfg.wavenumber();
    const double dx = base_spacing / oversample;
    const double lo = mask.min_edge();
    const double hi = mask.max_edge();
    const auto n = static_cast<std::size_t>(std::llround((hi - lo) / dx)) + 1;

    std::vector<double> xs(n);
    std::vector<std::complex<double>> amp(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = lo + dx * double(i);
        // sample just inside the outer edges so the endpoints carry the slit value
        const double x = (i == 0) ? xs[i] + 1e-9 * dx : (i + 1 == n ? xs[i] - 1e-9 * dx : xs[i]);
        amp[i] = mask.transmission_at(x);
    }

    CorrelationTensor t;
    t.grid_a = grid_a;
    t.grid_b = grid_b;
    t.scenario = cfg;
    t.provenance = Provenance::analytic;
    t.values.assign(grid_a.n * grid_b.n, 0.0);
    for (std::size_t ia = 0; ia < grid_a.n; ++ia) {
        const double center = cfg.z_b / cfg.z_a * grid_a.coord(ia);
        std::vector<std::complex<double>> weighted(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double w = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
            weighted[i] = w * amp[i] * psf.coherent(xs[i] - center);
        }
        for (std::size_t jb = 0; jb < grid_b.n; ++jb) {
            const double q = k * grid_b.coord(jb) / (cfg.z_b * cfg.M);
            std::complex<double> acc{0.0, 0.0};
            for (std::size_t i = 0; i < n; ++i) {
                acc += weighted[i] * std::polar(1.0, -q * xs[i]);
            }
            t.at(ia, jb) = std::norm(acc * dx);
        }
    }
    return t;
}

/// Direct DFT over exactly the same midpoint samples the FFT path uses;
/// agreement is algebraic, not a discretization statement.
inline CorrelationTensor gamma_direct_same_grid(const ScenarioConfig& cfg,
                                                const ApertureMask& mask,
                                                const SampledGrid& grid_a,
                                                const SampledGrid& grid_b,
                                                const GammaOptions& opt = {}) {
    const auto plan = detail::plan_object_grid(cfg, mask, grid_a, grid_b, opt);
    const GaussianPsf psf = GaussianPsf::from_scenario(cfg);
    const auto amp = mask.sample(plan.grid);

    CorrelationTensor t;
    t.grid_a = grid_a;
    t.grid_b = grid_b;
    t.scenario = cfg;
    t.values.assign(grid_a.n * grid_b.n, 0.0);
    for (std::size_t ia = 0; ia < grid_a.n; ++ia) {
        const double center = cfg.z_b / cfg.z_a * grid_a.coord(ia);
        for (std::size_t jb = 0; jb < grid_b.n; ++jb) {
            const double q = plan.q0 + plan.dq * double(jb);
            std::complex<double> acc{0.0, 0.0};
            for (std::size_t i = 0; i < plan.grid.n; ++i) {
                if (amp[i] == std::complex<double>(0.0, 0.0)) continue;
                acc += amp[i] * psf.coherent(plan.grid.coord(i) - center) *
                       std::polar(1.0, -q * plan.grid.coord(i));
            }
            t.at(ia, jb) = std::norm(acc * plan.grid.spacing);
        }
    }
    return t;
}

/// Closed-form standard/ghost image of a slit mask: |A|^2 convolved with a
/// Gaussian PSF of width sigma, evaluated from error functions.
inline double incoherent_image_value(const ApertureMask& mask, double sigma, double x) {
    double s = 0.0;
    for (const auto& slit : mask.slits()) {
        const double lo = slit.center - 0.5 * slit.width;
        const double hi = slit.center + 0.5 * slit.width;
        s += std::norm(slit.amplitude) * 0.5 *
             (std::erf((x - lo) / (sigma * std::numbers::sqrt2)) -
              std::erf((x - hi) / (sigma * std::numbers::sqrt2)));
    }
    return s;
}

inline double frobenius_nrmse(const std::vector<double>& test, const std::vector<double>& ref) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const double d = test[i] - ref[i];
        num += d * d;
        den += ref[i] * ref[i];
    }
    return std::sqrt(num / den);
}

inline double peak_normalized_rmse(const std::vector<double>& test,
                                   const std::vector<double>& ref) {
    double pt = 0.0, pr = 0.0;
    for (double v : test) pt = std::max(pt, v);
    for (double v : ref) pr = std::max(pr, v);
    double acc = 0.0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const double d = test[i] / pt - ref[i] / pr;
        acc += d * d;
    }
    return std::sqrt(acc / double(test.size()));
}

}  // namespace cpi::oracles
