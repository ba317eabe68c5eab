#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "cpi/aperture.hpp"
#include "cpi/correlation.hpp"
#include "cpi/errors.hpp"
#include "cpi/fft.hpp"
#include "cpi/grid.hpp"
#include "cpi/image.hpp"
#include "cpi/parallel.hpp"
#include "cpi/psf.hpp"
#include "cpi/scenario.hpp"

namespace cpi {

// --- image metrics ---

/// Peak-dip contrast of a multi-slit image. Peaks are searched within half a
/// pitch of each slit's geometric projection; dips are the minima between
/// adjacent found peaks, averaged over gaps. Returns 0 when any gap has no
/// interior dip (unresolved image). Invariant under rescaling of the image.
inline double visibility(const ImageProfile& img, const ApertureMask& mask) {
    if (mask.n_slits() < 2) {
        throw PreconditionError("visibility: needs a multi-slit mask; use width metrics instead");
    }
    img.check();
    const double scale = img.object_scale;
    if (!(scale > 0.0)) throw PreconditionError("visibility: profile lacks an object scale");
    const double half_pitch = 0.5 * mask.pitch();

    struct Peak {
        std::size_t idx;
        double value;
    };
    std::vector<Peak> peaks;
    for (const auto& slit : mask.slits()) {
        const double lo = (slit.center - half_pitch) / scale;
        const double hi = (slit.center + half_pitch) / scale;
        if (!img.grid.covers(lo, hi)) {
            throw PreconditionError("visibility: grid does not cover the projected slit positions");
        }
        const std::size_t i0 = img.grid.nearest_index(lo);
        const std::size_t i1 = img.grid.nearest_index(hi);
        Peak best{i0, -1.0};
        for (std::size_t i = i0; i <= i1; ++i) {
            if (img.values[i] > best.value) best = {i, img.values[i]};
        }
        peaks.push_back(best);
    }

    double peak_sum = 0.0;
    for (const auto& p : peaks) peak_sum += p.value;
    const double mean_peak = peak_sum / double(peaks.size());
    if (!(mean_peak > 0.0)) return 0.0;

    double dip_sum = 0.0;
    for (std::size_t g = 0; g + 1 < peaks.size(); ++g) {
        const std::size_t lo = peaks[g].idx;
        const std::size_t hi = peaks[g + 1].idx;
        if (hi <= lo + 1) return 0.0;  // peaks collapsed onto each other
        std::size_t arg = lo;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = lo; i <= hi; ++i) {
            if (img.values[i] < best) {
                best = img.values[i];
                arg = i;
            }
        }
        if (arg == lo || arg == hi) return 0.0;  // monotone between peaks: no dip
        dip_sum += best;
    }
    const double mean_dip = dip_sum / double(peaks.size() - 1);
    const double v = (mean_peak - mean_dip) / (mean_peak + mean_dip);
    return std::clamp(v, 0.0, 1.0);
}

struct WidthMetrics {
    double fwhm = 0.0;
    double hwhm = 0.0;
    bool multimodal = false;  // envelope width reported when set
};

/// Full/half width at half maximum with linear interpolation between samples.
/// Multi-modal profiles report the envelope width (outermost crossings).
inline WidthMetrics width_metrics(const ImageProfile& img) {
    img.check();
    const auto& v = img.values;
    const std::size_t n = v.size();
    std::size_t ipk = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (v[i] > v[ipk]) ipk = i;
    }
    const double half = 0.5 * v[ipk];
    if (!(half > 0.0)) throw PreconditionError("width_metrics: empty profile");

    std::size_t runs = 0;
    bool above = false;
    for (std::size_t i = 0; i < n; ++i) {
        const bool a = v[i] >= half;
        if (a && !above) ++runs;
        above = a;
    }

    auto cross_from_left = [&]() {
        for (std::size_t i = 0; i < n; ++i) {
            if (v[i] >= half) {
                if (i == 0) return img.grid.coord(0);
                const double f = (half - v[i - 1]) / (v[i] - v[i - 1]);
                return img.grid.coord(i - 1) + f * img.grid.spacing;
            }
        }
        return img.grid.coord(0);
    };
    auto cross_from_right = [&]() {
        for (std::size_t i = n; i-- > 0;) {
            if (v[i] >= half) {
                if (i + 1 == n) return img.grid.coord(n - 1);
                const double f = (half - v[i + 1]) / (v[i] - v[i + 1]);
                return img.grid.coord(i + 1) - f * img.grid.spacing;
            }
        }
        return img.grid.coord(n - 1);
    };

    WidthMetrics m;
    m.fwhm = cross_from_right() - cross_from_left();
    m.hwhm = 0.5 * m.fwhm;
    m.multimodal = runs > 1;
    return m;
}

/// Smallest resolvable half-image extent: object half-width plus the
/// Rayleigh-equivalent term for a Gaussian PSF of width sigma.
inline double resolution_limit(const ApertureMask& mask, double psf_sigma) {
    if (psf_sigma < 0.0) throw PreconditionError("resolution_limit: negative PSF width");
    return 0.5 * mask.smallest_feature() + 2.0 * std::sqrt(2.0 * std::log(2.0)) * psf_sigma;
}

// --- modality images (all evaluated in object-plane coordinates) ---

enum class Modality { standard, standard_pi, cpi_refocused, cpi_coherent };

inline const char* to_string(Modality m) {
    switch (m) {
        case Modality::standard: return "standard";
        case Modality::standard_pi: return "standard-pi";
        case Modality::cpi_refocused: return "cpi-refocused";
        case Modality::cpi_coherent: return "cpi-coherent";
    }
    return "?";
}

inline std::optional<Modality> modality_from_string(const std::string& s) {
    if (s == "standard") return Modality::standard;
    if (s == "standard-pi" || s == "pi") return Modality::standard_pi;
    if (s == "cpi-refocused" || s == "cpi") return Modality::cpi_refocused;
    if (s == "cpi-coherent" || s == "coherent") return Modality::cpi_coherent;
    return std::nullopt;
}

namespace detail {

inline SampledGrid object_eval_grid(const ApertureMask& mask, double blur_sigma) {
    const double a = mask.smallest_feature();
    const double half = mask.half_extent() + std::max(2.0 * a, 4.0 * blur_sigma);
    double dx = std::min(a / 14.0, std::max(blur_sigma / 4.0, a / 40.0));
    const auto n = static_cast<std::size_t>(std::ceil(2.0 * half / dx)) + 1;
    return SampledGrid::centered(n, dx);
}

inline double gauss_cdf(double t) { return 0.5 * (1.0 + std::erf(t / std::numbers::sqrt2)); }

/// |A|^2 convolved with a Gaussian of width sigma, in closed form.
inline ImageProfile incoherent_slit_image(const ApertureMask& mask, double sigma,
                                          ImageKind kind) {
    ImageProfile out;
    out.grid = object_eval_grid(mask, sigma);
    out.kind = kind;
    out.object_scale = 1.0;
    out.values.assign(out.grid.n, 0.0);
    for (std::size_t i = 0; i < out.grid.n; ++i) {
        const double x = out.grid.coord(i);
        double s = 0.0;
        for (const auto& slit : mask.slits()) {
            const double lo = slit.center - 0.5 * slit.width;
            const double hi = slit.center + 0.5 * slit.width;
            s += std::norm(slit.amplitude) *
                 (gauss_cdf((x - lo) / sigma) - gauss_cdf((x - hi) / sigma));
        }
        out.values[i] = std::max(0.0, s);
    }
    return out;
}

/// Shared machinery for the coherent and refocused CPI images. Evaluates
///   G_u(y) = sum_n A_n e^{-i q_u x_n} C(x_n - y) * dx
/// on a y-lattice by one FFT correlation per angular coordinate u, then
///   Sigma_ref(x) = sum_u |G_u(x + u * shear)|^2 * du.
struct CpiEvaluator {
    ScenarioConfig cfg;
    GaussianPsf psf;
    double sigma_c = 0.0;   // envelope sigma of |C|
    double shear = 0.0;     // (1 - z_b/z_a) / M
    double quality = 1.0;

    SampledGrid object_grid;  // integration lattice over the mask
    SampledGrid y_grid;       // kernel-center lattice, same spacing
    std::vector<std::complex<double>> mask_samples;
    double u_max = 0.0;
    double du = 0.0;

    CpiEvaluator(const ScenarioConfig& scenario, const ApertureMask& mask, double z_b,
                 double quality_factor)
        : cfg(scenario.with(z_b)), psf(GaussianPsf::from_scenario(scenario, z_b)),
          quality(quality_factor) {
        cfg.validate();
        const double k = cfg.wavenumber();
        const double a_min = mask.smallest_feature();
        sigma_c = psf.coherent_envelope_width() / std::numbers::sqrt2;
        shear = (1.0 - cfg.z_b / cfg.z_a) / cfg.M;

        // Kernel support: |C|^2 is below 1e-7 beyond env_cut sigma.
        const double env_cut = 4.0;
        const double y_half = mask.half_extent() + env_cut * sigma_c;
        const double x_half = mask.half_extent() + 2.0 * a_min;

        // Angular window. Under shear, the kernel envelope bounds the
        // correlated support in u; near focus only slit-edge diffraction
        // tails do.
        const double u_diff = 48.0 * quality * cfg.z_b * std::abs(cfg.M) / (k * a_min);
        double u_cap = std::numeric_limits<double>::infinity();
        double u_env = std::numeric_limits<double>::infinity();
        if (shear != 0.0) {
            u_cap = (y_half + x_half) / std::abs(shear);
            u_env = (env_cut + 0.5) * sigma_c / (std::numbers::sqrt2 * std::abs(shear));
        }
        u_max = std::isfinite(u_env) ? std::min(u_cap, u_env + 0.25 * u_diff) : u_diff;

        // Angular step: resolve the Fourier beat across the correlated
        // support and the sheared sweep across the finest |G|^2 structure
        // (chirp beats between points the envelope can still connect).
        const double phi = std::abs(psf.chirp_rate());
        const double w_supp = std::min(mask.extent(), 10.0 * sigma_c + a_min);
        const double period_u = 2.0 * std::numbers::pi * cfg.z_b * std::abs(cfg.M) / (k * w_supp);
        double step = period_u / (4.0 * quality);
        if (shear != 0.0) {
            const double w_beat = std::min(mask.extent(), 3.0 * sigma_c);
            double s_min = std::min(a_min, 2.0 * sigma_c);
            if (phi * w_beat > 0.0) {
                s_min = std::min(s_min, std::numbers::pi / (phi * w_beat));
            }
            step = std::min(step, s_min / (3.2 * quality * std::abs(shear)));
        }
        du = step;

        // Object lattice: phase per sample bounded where the kernel is alive.
        const double q_max = k * u_max / (cfg.z_b * std::abs(cfg.M));
        const double r_max = std::min(mask.half_extent() + y_half, env_cut * sigma_c);
        double dx = std::min(a_min / (10.0 * quality), sigma_c / (6.0 * quality));
        const double q_total = q_max + phi * r_max;
        if (q_total > 0.0) dx = std::min(dx, (std::numbers::pi / 4.0) / (q_total * quality));

        const double lo = mask.min_edge() - 2.0 * dx;
        const double hi = mask.max_edge() + 2.0 * dx;
        auto n_obj = static_cast<std::size_t>(std::ceil((hi - lo) / dx)) + 1;
        object_grid = SampledGrid(std::max<std::size_t>(n_obj, 4), dx, lo + 0.5 * dx);
        mask_samples = mask.sample(object_grid);

        auto n_y = static_cast<std::size_t>(std::ceil(2.0 * y_half / dx)) + 1;
        y_grid = SampledGrid(std::max<std::size_t>(n_y, 4), dx, -y_half);
    }

    /// |G_u(y)|^2 on y-lattice nodes [j0, j0 + n_out) for one angular
    /// coordinate. Windowing skips output the caller will not sample.
    std::vector<double> correlate_window(double u, std::size_t j0, std::size_t n_out) const {
        const double k = cfg.wavenumber();
        const double q_u = k * u / (cfg.z_b * cfg.M);
        const std::size_t nh = object_grid.n;
        const std::size_t len = fft::next_pow2(nh + n_out - 1);

        cvec h(len, {0.0, 0.0});
        for (std::size_t n = 0; n < nh; ++n) {
            if (mask_samples[n] == std::complex<double>(0.0, 0.0)) continue;
            h[n] = mask_samples[n] * std::polar(1.0, -q_u * object_grid.coord(n));
        }
        // kernel K(s) = C(x_0 - y_{j0} - s dx) arranged for cyclic convolution
        cvec kern(len, {0.0, 0.0});
        const double base = object_grid.coord(0) - y_grid.coord(j0);
        for (long long s = -(long long)(nh) + 1; s <= (long long)n_out - 1; ++s) {
            const double rho = base - double(s) * object_grid.spacing;
            const std::size_t idx =
                static_cast<std::size_t>((s + (long long)len) % (long long)len);
            kern[idx] = psf.coherent(rho);
        }
        fft::forward_inplace(h);
        fft::forward_inplace(kern);
        for (std::size_t i = 0; i < len; ++i) h[i] *= kern[i];
        fft::inverse_inplace(h);

        std::vector<double> out(n_out);
        const double cell = object_grid.spacing;
        for (std::size_t m = 0; m < n_out; ++m) out[m] = std::norm(h[m] * cell);
        return out;
    }

    std::vector<double> correlate(double u) const { return correlate_window(u, 0, y_grid.n); }

    ImageProfile coherent_image(const ApertureMask& mask) const {
        const auto g2 = correlate(0.0);
        ImageProfile out;
        out.grid = detail::object_eval_grid(mask, sigma_c);
        out.kind = ImageKind::coherent;
        out.object_scale = 1.0;
        out.values.assign(out.grid.n, 0.0);
        for (std::size_t i = 0; i < out.grid.n; ++i) {
            out.values[i] = std::max(0.0, interp_linear(y_grid, g2, out.grid.coord(i)));
        }
        return out;
    }

    ImageProfile refocused_image(const ApertureMask& mask) const {
        const auto n_side = static_cast<std::size_t>(std::ceil(u_max / du));
        ImageProfile out;
        out.grid = detail::object_eval_grid(mask, 0.5 * sigma_c);
        out.kind = ImageKind::refocused;
        out.object_scale = 1.0;
        out.pixel_rescale = cfg.z_b / cfg.z_a;
        out.values.assign(out.grid.n, 0.0);

        // Centered masks give Gamma(y, u) = Gamma(-y, -u); fold the negative
        // angular half onto the positive one in that case.
        const bool mirror = mask.even_symmetric();
        const double x_reach = std::max(std::abs(out.grid.min()), std::abs(out.grid.max())) +
                               2.0 * object_grid.spacing;

        const std::size_t iu_begin = mirror ? 0 : 0;
        const std::size_t n_slabs = mirror ? n_side + 1 : 2 * n_side + 1;
        std::vector<std::vector<double>> slabs(n_slabs);
        std::vector<std::size_t> slab_j0(n_slabs, 0);
        parallel_for(n_slabs, [&](std::size_t s) {
            const double u = mirror ? double(s) * du : (double(s) - double(n_side)) * du;
            const double center = u * shear;
            const double lo = std::max(center - x_reach, y_grid.min());
            const double hi = std::min(center + x_reach, y_grid.max());
            if (lo > hi) return;  // shear carried the window outside the kernel support
            const std::size_t j0 = y_grid.nearest_index(lo);
            const std::size_t j1 = y_grid.nearest_index(hi);
            slab_j0[s] = j0 > 0 ? j0 - 1 : 0;
            const std::size_t jend = std::min(y_grid.n - 1, j1 + 1);
            slabs[s] = correlate_window(u, slab_j0[s], jend - slab_j0[s] + 1);
        });

        for (std::size_t s = iu_begin; s < n_slabs; ++s) {
            if (slabs[s].empty()) continue;
            const double u = mirror ? double(s) * du : (double(s) - double(n_side)) * du;
            const double offset = u * shear;
            const SampledGrid sub(std::max<std::size_t>(slabs[s].size(), 2), y_grid.spacing,
                                  y_grid.coord(slab_j0[s]));
            const bool fold = mirror && s > 0;
            for (std::size_t i = 0; i < out.grid.n; ++i) {
                double v = std::max(0.0, interp_linear(sub, slabs[s], out.grid.coord(i) + offset));
                if (fold) {
                    v += std::max(0.0,
                                  interp_linear(sub, slabs[s], -out.grid.coord(i) + offset));
                }
                out.values[i] += v;
            }
        }
        for (auto& v : out.values) v *= du;
        return out;
    }
};

}  // namespace detail

struct ModalityOptions {
    int n_u_pixels = 3;      // resolution compromise N_u of the plenoptic reference
    double quality = 1.0;    // sampling density multiplier for the CPI evaluators
};

/// Theoretical image of a slit mask at object distance z_b for one imaging
/// modality, in object-plane coordinates. The plenoptic reference is standard
/// imaging with an N_u-times smaller aperture.
inline ImageProfile modality_image(Modality modality, const ScenarioConfig& cfg,
                                   const ApertureMask& mask, double z_b,
                                   const ModalityOptions& opt = {}) {
    cfg.validate();
    if (!(z_b > 0.0)) throw PreconditionError("modality_image: z_b must be positive");
    switch (modality) {
        case Modality::standard: {
            const auto psf = GaussianPsf::from_scenario(cfg, z_b);
            return detail::incoherent_slit_image(mask, psf.incoherent_sigma(), ImageKind::ghost);
        }
        case Modality::standard_pi: {
            if (opt.n_u_pixels < 1) throw PreconditionError("modality_image: N_u must be >= 1");
            ScenarioConfig reduced = cfg;
            reduced.source_sigma /= double(opt.n_u_pixels);
            reduced.source_NA /= double(opt.n_u_pixels);
            const auto psf = GaussianPsf::from_scenario(reduced, z_b);
            return detail::incoherent_slit_image(mask, psf.incoherent_sigma(), ImageKind::ghost);
        }
        case Modality::cpi_coherent: {
            detail::CpiEvaluator eval(cfg, mask, z_b, opt.quality);
            return eval.coherent_image(mask);
        }
        case Modality::cpi_refocused: {
            detail::CpiEvaluator eval(cfg, mask, z_b, opt.quality);
            return eval.refocused_image(mask);
        }
    }
    throw PreconditionError("modality_image: unknown modality");
}

// --- visibility maps and depth-of-field reports ---

struct VisibilityMap {
    Modality modality = Modality::standard;
    std::vector<double> d_values;  // slit pitches (d = 2a)
    std::vector<double> z_values;  // object distances z_b
    std::vector<double> values;    // row-major [i_d * z_values.size() + i_z]
    std::size_t nan_cells = 0;

    double at(std::size_t id, std::size_t iz) const { return values[id * z_values.size() + iz]; }
};

/// Visibility of double-slit images (d = 2a) over a (d, z_b) lattice.
inline VisibilityMap visibility_map(Modality modality, const ScenarioConfig& cfg,
                                    const std::vector<double>& d_values,
                                    const std::vector<double>& z_values,
                                    const ModalityOptions& opt = {}) {
    if (d_values.empty() || z_values.empty()) {
        throw PreconditionError("visibility_map: empty axis");
    }
    VisibilityMap map;
    map.modality = modality;
    map.d_values = d_values;
    map.z_values = z_values;
    map.values.assign(d_values.size() * z_values.size(),
                      std::numeric_limits<double>::quiet_NaN());
    std::vector<std::size_t> nan_count(d_values.size(), 0);

    for (std::size_t id = 0; id < d_values.size(); ++id) {
        const double d = d_values[id];
        const ApertureMask mask = make_slit_mask(2, 0.5 * d, d);
        parallel_for(z_values.size(), [&](std::size_t iz) {
            try {
                const auto img = modality_image(modality, cfg, mask, z_values[iz], opt);
                map.values[id * z_values.size() + iz] = visibility(img, mask);
            } catch (const std::exception&) {
                ++nan_count[id];  // recorded, cell stays NaN
            }
        });
    }
    for (auto c : nan_count) map.nan_cells += c;
    return map;
}

struct ModalityDof {
    double z_min = 0.0;
    double z_max = 0.0;
    bool resolved_at_focus = false;
    bool open_low = false;   // still resolved at the scan floor
    bool open_high = false;  // still resolved at the scan ceiling
    double dof() const { return resolved_at_focus ? z_max - z_min : 0.0; }
};

struct DofOptions {
    double threshold = 0.10;       // Rayleigh-equivalent visibility criterion
    double tolerance = 1e-4;       // bisection tolerance on z_b, meters
    double floor_fraction = 1.0 / 12.0;  // scan floor as a fraction of z_a
    double ceiling_factor = 4.0;         // scan ceiling as a multiple of z_a
    int ladder_steps = 14;
    ModalityOptions modality{};
};

struct DofReport {
    double d = 0.0;
    ModalityDof standard;
    ModalityDof plenoptic;
    ModalityDof cpi;
    int n_u_pixels = 3;
    double enhancement_vs_standard = 0.0;
    double enhancement_vs_plenoptic = 0.0;
};

namespace detail {

inline ModalityDof scan_dof(Modality modality, const ScenarioConfig& cfg, const ApertureMask& mask,
                            const DofOptions& opt) {
    auto vis_at = [&](double z) {
        return visibility(modality_image(modality, cfg, mask, z, opt.modality), mask);
    };
    ModalityDof out;
    const double v_focus = vis_at(cfg.z_a);
    out.resolved_at_focus = v_focus >= opt.threshold;
    if (!out.resolved_at_focus) return out;

    auto bisect = [&](double z_good, double z_bad) {
        while (std::abs(z_bad - z_good) > opt.tolerance) {
            const double mid = 0.5 * (z_good + z_bad);
            (vis_at(mid) >= opt.threshold ? z_good : z_bad) = mid;
        }
        return 0.5 * (z_good + z_bad);
    };

    // Walk a geometric ladder away from focus until visibility drops, then
    // refine the crossing by bisection.
    auto crossing = [&](double limit, bool* open) {
        const double ratio = std::pow(limit / cfg.z_a, 1.0 / double(opt.ladder_steps));
        double z_good = cfg.z_a;
        for (int j = 1; j <= opt.ladder_steps; ++j) {
            const double z = cfg.z_a * std::pow(ratio, double(j));
            if (vis_at(z) < opt.threshold) return bisect(z_good, z);
            z_good = z;
        }
        *open = true;
        return limit;
    };

    out.z_min = crossing(opt.floor_fraction * cfg.z_a, &out.open_low);
    out.z_max = crossing(opt.ceiling_factor * cfg.z_a, &out.open_high);
    return out;
}

}  // namespace detail

/// Depth-of-field comparison for a double-slit object of pitch d (width d/2):
/// the z_b interval with visibility above the threshold, per modality, and
/// the CPI enhancement ratios.
inline DofReport dof_report(const ScenarioConfig& cfg, double d, const DofOptions& opt = {}) {
    cfg.validate();
    if (!(d > 0.0)) throw PreconditionError("dof_report: pitch must be positive");
    const ApertureMask mask = make_slit_mask(2, 0.5 * d, d);

    DofReport rep;
    rep.d = d;
    rep.n_u_pixels = opt.modality.n_u_pixels;
    rep.standard = detail::scan_dof(Modality::standard, cfg, mask, opt);
    rep.plenoptic = detail::scan_dof(Modality::standard_pi, cfg, mask, opt);
    rep.cpi = detail::scan_dof(Modality::cpi_refocused, cfg, mask, opt);
    if (rep.standard.dof() > 0.0) {
        rep.enhancement_vs_standard = rep.cpi.dof() / rep.standard.dof();
    }
    if (rep.plenoptic.dof() > 0.0) {
        rep.enhancement_vs_plenoptic = rep.cpi.dof() / rep.plenoptic.dof();
    }
    return rep;
}

// --- geometric refocusing bound ---

struct GeometricBound {
    double z_min = 0.0;
    double z_max = 0.0;
    bool unbounded_low = false;
    bool unbounded_high = false;
};

/// Solves |1 - z_a/z_b| < (d z_a / z_b) / Delta_u(z_b) for z_b, the
/// geometrical-optics range of faithful refocusing.
inline GeometricBound geometric_bound(const ScenarioConfig& cfg, const ApertureMask& mask) {
    cfg.validate();
    const double a = mask.smallest_feature();
    const double d = mask.n_slits() >= 2 ? mask.pitch() : mask.smallest_feature();
    auto margin = [&](double z) {
        const ScenarioConfig at = cfg.with(z);
        return std::abs(1.0 - cfg.z_a / z) - d * cfg.z_a / z / angular_resolution(at, a);
    };

    GeometricBound out;
    const double tol = 1e-5 * cfg.z_a;

    auto bisect = [&](double z_in, double z_out) {
        while (std::abs(z_out - z_in) > tol) {
            const double mid = 0.5 * (z_in + z_out);
            (margin(mid) < 0.0 ? z_in : z_out) = mid;
        }
        return 0.5 * (z_in + z_out);
    };

    // Upper side: the margin grows with z_b once diffraction dominates.
    {
        double hi = 2.0 * cfg.z_a;
        while (margin(hi) < 0.0 && hi < 1e4 * cfg.z_a) hi *= 2.0;
        if (margin(hi) < 0.0) {
            out.unbounded_high = true;
            out.z_max = hi;
        } else {
            out.z_max = bisect(cfg.z_a, hi);
        }
    }
    // Lower side: walk down until the condition fails, if it ever does.
    {
        double lo = cfg.z_a;
        bool crossed = false;
        for (int j = 0; j < 60; ++j) {
            const double z = lo / 1.3;
            if (margin(z) >= 0.0) {
                out.z_min = bisect(lo, z);
                crossed = true;
                break;
            }
            lo = z;
            if (lo < 1e-6 * cfg.z_a) break;
        }
        if (!crossed) {
            out.unbounded_low = true;
            out.z_min = lo;
        }
    }
    return out;
}

}  // namespace cpi
