#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <vector>

#include "cpi/aperture.hpp"
#include "cpi/errors.hpp"
#include "cpi/fft.hpp"
#include "cpi/grid.hpp"
#include "cpi/parallel.hpp"
#include "cpi/psf.hpp"
#include "cpi/scenario.hpp"

namespace cpi {

enum class Provenance { analytic, monte_carlo };

/// Correlation of intensity fluctuations Gamma(rho_a, rho_b), sampled on a
/// spatial-sensor grid (rows) times an angular-sensor grid (columns).
/// rho_b is the physical sensor coordinate; values are squared moduli, so
/// they are non-negative everywhere.
struct CorrelationTensor {
    std::vector<double> values;  // row-major, [i_a * grid_b.n + j_b]
    SampledGrid grid_a;
    SampledGrid grid_b;
    ScenarioConfig scenario;
    Provenance provenance = Provenance::analytic;

    double at(std::size_t ia, std::size_t jb) const { return values[ia * grid_b.n + jb]; }
    double& at(std::size_t ia, std::size_t jb) { return values[ia * grid_b.n + jb]; }

    double peak() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, v);
        return m;
    }

    void check() const {
        if (values.size() != grid_a.n * grid_b.n) {
            throw PreconditionError("CorrelationTensor: size mismatch");
        }
        for (double v : values) {
            if (!std::isfinite(v) || v < 0.0) {
                throw PreconditionError("CorrelationTensor: negative or non-finite value");
            }
        }
    }
};

struct GammaOptions {
    double object_spacing = 0.0;      // 0 = choose from the phase-step bound
    double phase_step_bound = std::numbers::pi / 4.0;
    std::size_t max_object_samples = std::size_t(1) << 22;
    double samples_per_feature = 8.0;
    double envelope_samples = 6.0;
};

namespace detail {

struct ObjectGridPlan {
    SampledGrid grid;
    double q0 = 0.0;  // Fourier frequency of grid_b column 0
    double dq = 0.0;  // frequency step per column
};

inline ObjectGridPlan plan_object_grid(const ScenarioConfig& cfg, const ApertureMask& mask,
                                       const SampledGrid& grid_a, const SampledGrid& grid_b,
                                       const GammaOptions& opt) {
    const GaussianPsf psf = GaussianPsf::from_scenario(cfg);
    const double k = cfg.wavenumber();
    const double qscale = k / (cfg.z_b * cfg.M);

    ObjectGridPlan plan;
    plan.q0 = qscale * grid_b.coord(0);
    plan.dq = qscale * grid_b.spacing;

    const double pad = 1e-3 * mask.extent();
    const double lo = mask.min_edge() - pad;
    const double hi = mask.max_edge() + pad;

    // Highest local phase rate of the integrand over the object window:
    // Fourier kernel at the extreme column plus the kernel chirp at the
    // farthest displacement from any kernel center.
    const double q_abs = std::max(std::abs(plan.q0),
                                  std::abs(plan.q0 + plan.dq * double(grid_b.n - 1)));
    const double scale_ab = cfg.z_b / cfg.z_a;
    const double c_lo = scale_ab * std::min(grid_a.min(), grid_a.max());
    const double c_hi = scale_ab * std::max(grid_a.min(), grid_a.max());
    const double reach = std::max(std::abs(hi - c_lo), std::abs(lo - c_hi));
    const double q_total = q_abs + std::abs(psf.chirp_rate()) * reach;

    double dx = opt.object_spacing;
    if (dx <= 0.0) {
        dx = mask.smallest_feature() / opt.samples_per_feature;
        const double sigma_c = psf.coherent_envelope_width() / std::sqrt(2.0);
        dx = std::min(dx, sigma_c / opt.envelope_samples);
        if (q_total > 0.0) dx = std::min(dx, opt.phase_step_bound / q_total);
    }
    if (q_total * dx > std::numbers::pi) {
        std::ostringstream os;
        os << "gamma_map: aliasing, oscillation per object sample " << q_total * dx
           << " rad exceeds pi; need object spacing <= " << std::numbers::pi / q_total;
        throw PreconditionError(os.str());
    }
    const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / dx)) + 1;
    if (n > opt.max_object_samples) {
        std::ostringstream os;
        os << "gamma_map: object grid of " << n << " samples exceeds the limit of "
           << opt.max_object_samples << "; widen pixels or shrink the field of view";
        throw PreconditionError(os.str());
    }
    plan.grid = SampledGrid(std::max<std::size_t>(n, 2), dx, lo + 0.5 * dx);
    return plan;
}

}  // namespace detail

/// Default sensor grids for a scenario and mask: the spatial grid covers the
/// projected mask plus the full refocusing shear range at the scenario pixel
/// pitch; the angular grid covers the correlated support of Gamma.
struct TensorGridPlan {
    SampledGrid grid_a;
    SampledGrid grid_b;
};

inline TensorGridPlan plan_tensor_grids(const ScenarioConfig& cfg, const ApertureMask& mask,
                                        std::size_t n_a = 0, std::size_t n_b = 0) {
    cfg.validate();
    const GaussianPsf psf = GaussianPsf::from_scenario(cfg);
    const double k = cfg.wavenumber();
    const double a_min = mask.smallest_feature();
    const double sigma_c = psf.coherent_envelope_width() / std::numbers::sqrt2;
    const double shear_obj = (1.0 - cfg.z_b / cfg.z_a) / cfg.M;

    const double y_half = mask.half_extent() + 4.0 * sigma_c;
    const double x_half = mask.half_extent() + std::max(2.0 * a_min, 4.0 * psf.incoherent_sigma());
    const double u_diff = 48.0 * cfg.z_b * std::abs(cfg.M) / (k * a_min);
    double u_half = u_diff;
    if (shear_obj != 0.0) {
        const double u_env = 4.5 * sigma_c / (std::numbers::sqrt2 * std::abs(shear_obj));
        u_half = std::min((y_half + x_half) / std::abs(shear_obj), u_env + 0.25 * u_diff);
    }

    TensorGridPlan plan;
    if (n_b == 0) n_b = 2 * static_cast<std::size_t>(std::ceil(u_half / cfg.pixel_du)) + 1;
    plan.grid_b = SampledGrid::centered(std::max<std::size_t>(n_b, 3), cfg.pixel_du);

    const double u_span = 0.5 * plan.grid_b.extent();
    const double shear_a = (1.0 - cfg.z_a / cfg.z_b) / cfg.M;
    const double span_a = (cfg.z_a / cfg.z_b) * x_half + u_span * std::abs(shear_a);
    if (n_a == 0) n_a = 2 * static_cast<std::size_t>(std::ceil(span_a / cfg.pixel_dx)) + 1;
    plan.grid_a = SampledGrid::centered(std::max<std::size_t>(n_a, 3), cfg.pixel_dx);
    return plan;
}

/// Analytic correlation map
///   Gamma(rho_a, rho_b) = | integral dx A(x) e^{-i k x rho_b / (z_b M)}
///                           C(x - (z_b/z_a) rho_a) |^2,
/// with the object integral evaluated for all columns at once by a chirp-Z
/// transform of A(x) C(x - shift). Rows are independent and run in parallel;
/// the result does not depend on the thread count.
inline CorrelationTensor gamma_map(const ScenarioConfig& cfg, const ApertureMask& mask,
                                   const SampledGrid& grid_a, const SampledGrid& grid_b,
                                   const GammaOptions& opt = {}) {
    cfg.validate();
    const auto plan = detail::plan_object_grid(cfg, mask, grid_a, grid_b, opt);
    const GaussianPsf psf = GaussianPsf::from_scenario(cfg);
    const SampledGrid& og = plan.grid;
    const auto amask = mask.sample(og);

    const fft::Czt czt(og.n, grid_b.n, plan.dq * og.spacing, plan.q0 * og.spacing);
    const double scale_ab = cfg.z_b / cfg.z_a;
    const double cell = og.spacing;

    CorrelationTensor out;
    out.grid_a = grid_a;
    out.grid_b = grid_b;
    out.scenario = cfg;
    out.provenance = Provenance::analytic;
    out.values.assign(grid_a.n * grid_b.n, 0.0);

    parallel_for(grid_a.n, [&](std::size_t ia) {
        const double center = scale_ab * grid_a.coord(ia);
        cvec g(og.n);
        for (std::size_t n = 0; n < og.n; ++n) {
            g[n] = amask[n] == std::complex<double>(0.0, 0.0)
                       ? std::complex<double>(0.0, 0.0)
                       : amask[n] * psf.coherent(og.coord(n) - center);
        }
        cvec row(grid_b.n);
        czt.run(g, row);
        double* dst = out.values.data() + ia * grid_b.n;
        for (std::size_t j = 0; j < grid_b.n; ++j) dst[j] = std::norm(row[j] * cell);
    });
    return out;
}

}  // namespace cpi
