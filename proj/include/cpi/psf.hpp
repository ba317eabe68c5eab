#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "cpi/errors.hpp"
#include "cpi/grid.hpp"
#include "cpi/image.hpp"
#include "cpi/scenario.hpp"

namespace cpi {

/// Closed-form Gaussian-source kernels at object distance z_b.
///
/// The coherent kernel is
///   C(rho) = exp(-(1/2) gamma^2 rho^2 / (1 - i beta)),
/// with gamma = k sigma / z_b and beta = (k sigma^2 / z_b)(1 - z_b/z_a);
/// the incoherent kernel is J(rho) = |C(rho)|^2.
struct GaussianPsf {
    double gamma = 0.0;   // k sigma / z_b
    double beta = 0.0;    // defocus parameter, 0 at z_b = z_a
    double z_a = 0.0;
    double z_b = 0.0;

    static GaussianPsf from_scenario(const ScenarioConfig& cfg) {
        return from_scenario(cfg, cfg.z_b);
    }

    static GaussianPsf from_scenario(const ScenarioConfig& cfg, double z_b) {
        cfg.validate();
        if (!(z_b > 0.0)) throw PreconditionError("GaussianPsf: z_b must be positive");
        GaussianPsf p;
        const double k = cfg.wavenumber();
        p.gamma = k * cfg.source_sigma / z_b;
        p.beta = (k * cfg.source_sigma * cfg.source_sigma / z_b) * (1.0 - z_b / cfg.z_a);
        p.z_a = cfg.z_a;
        p.z_b = z_b;
        return p;
    }

    /// 1/e half-width of |C|; the envelope of the coherent kernel.
    double coherent_envelope_width() const {
        return std::sqrt(2.0 * (1.0 + beta * beta)) / gamma;
    }

    /// Gaussian sigma of J, i.e. of the incoherent (ghost) point-spread function.
    double incoherent_sigma() const { return std::sqrt(1.0 + beta * beta) / (gamma * std::sqrt(2.0)); }

    /// Local chirp rate of the phase of C: arg C(rho) = -chirp_rate()/2 * rho^2.
    double chirp_rate() const { return gamma * gamma * beta / (1.0 + beta * beta); }

    std::complex<double> coherent(double rho) const {
        const std::complex<double> denom(1.0, -beta);
        return std::exp(-(0.5 * gamma * gamma * rho * rho) / denom);
    }

    double incoherent(double rho) const {
        return std::exp(-(gamma * gamma * rho * rho) / (1.0 + beta * beta));
    }
};

struct ComplexPSF {
    std::vector<std::complex<double>> values;
    SampledGrid grid;
    GaussianPsf params;
};

/// Coherent kernel sampled on a grid, normalized so C(0) = 1.
inline ComplexPSF coherent_psf(const ScenarioConfig& cfg, const SampledGrid& grid) {
    const GaussianPsf p = GaussianPsf::from_scenario(cfg);
    const double width = p.coherent_envelope_width();
    if (!(width > grid.spacing)) {
        throw PreconditionError("coherent_psf: kernel width degenerate at grid scale");
    }
    grid.require_covers(-3.0 * width, 3.0 * width, "coherent PSF");
    ComplexPSF out;
    out.grid = grid;
    out.params = p;
    out.values.resize(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) out.values[i] = p.coherent(grid.coord(i));
    return out;
}

/// Incoherent (ghost) PSF on a grid, peak-normalized.
inline ImageProfile incoherent_psf(const ScenarioConfig& cfg, const SampledGrid& grid) {
    const GaussianPsf p = GaussianPsf::from_scenario(cfg);
    const double width = p.coherent_envelope_width();
    if (!(width > grid.spacing)) {
        throw PreconditionError("incoherent_psf: kernel width degenerate at grid scale");
    }
    ImageProfile out;
    out.grid = grid;
    out.kind = ImageKind::focused_reference;
    out.values.resize(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) out.values[i] = p.incoherent(grid.coord(i));
    out.peak_normalize();
    return out;
}

/// Width sigma_i of the image of a point object at magnification ratio
/// alpha = z_b / z_a, with the sensor plane held fixed.
inline double image_width_alpha(const ScenarioConfig& cfg, double alpha) {
    cfg.validate();
    if (!(alpha > 0.0)) throw PreconditionError("image_width_alpha: alpha must be positive");
    const double k = cfg.wavenumber();
    const double s = cfg.source_sigma;
    const double t = cfg.z_a / (k * s);  // diffraction term scale
    return std::sqrt(0.5 * t * t * alpha * alpha + 0.5 * s * s * (1.0 - alpha) * (1.0 - alpha));
}

/// Ratio alpha minimizing image_width_alpha.
inline double optimal_alpha(const ScenarioConfig& cfg) {
    cfg.validate();
    const double r = cfg.z_a / (cfg.wavenumber() * cfg.source_sigma * cfg.source_sigma);
    return 1.0 / (1.0 + r * r);
}

}  // namespace cpi
