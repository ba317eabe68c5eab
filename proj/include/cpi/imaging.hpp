#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "cpi/correlation.hpp"
#include "cpi/errors.hpp"
#include "cpi/fft.hpp"
#include "cpi/grid.hpp"
#include "cpi/image.hpp"
#include "cpi/parallel.hpp"

namespace cpi {

/// Bucket integration over the angular sensor: Sigma(rho_a) = sum_b Gamma * du.
inline ImageProfile ghost_image(const CorrelationTensor& gamma) {
    ImageProfile out;
    out.grid = gamma.grid_a;
    out.kind = ImageKind::ghost;
    out.object_scale = gamma.scenario.z_b / gamma.scenario.z_a;
    out.values.assign(gamma.grid_a.n, 0.0);
    for (std::size_t i = 0; i < gamma.grid_a.n; ++i) {
        double acc = 0.0, comp = 0.0;
        const double* row = gamma.values.data() + i * gamma.grid_b.n;
        for (std::size_t j = 0; j < gamma.grid_b.n; ++j) {
            const double y = row[j] - comp;
            const double t = acc + y;
            comp = (t - acc) - y;
            acc = t;
        }
        out.values[i] = acc * gamma.grid_b.spacing;
    }
    return out;
}

/// Shear-and-sum refocusing:
///   Sigma_ref(x) = sum_b Gamma((z_a/z_b) x - (rho_b/M)(1 - z_a/z_b), rho_b) du,
/// with the first argument linearly interpolated on grid_a. The output grid
/// is grid_a rescaled by z_b/z_a, so x is an object-plane coordinate.
/// Out-of-support samples contribute zero and are counted.
inline ImageProfile refocus(const CorrelationTensor& gamma) {
    const double za = gamma.scenario.z_a;
    const double zb = gamma.scenario.z_b;
    const double m = gamma.scenario.M;
    const double shear = (1.0 - za / zb) / m;
    const double rescale = zb / za;

    // The shear step per angular pixel must stay resolvable on grid_a.
    if (std::abs(shear) * gamma.grid_b.spacing > 8.0 * gamma.grid_a.spacing) {
        throw PreconditionError(
            "refocus: shear per angular pixel exceeds the spatial sampling; "
            "refine grid_b or coarsen the request");
    }

    ImageProfile out;
    out.grid = SampledGrid(gamma.grid_a.n, gamma.grid_a.spacing * rescale,
                           gamma.grid_a.offset * rescale);
    out.kind = ImageKind::refocused;
    out.object_scale = 1.0;
    out.pixel_rescale = rescale;
    out.values.assign(out.grid.n, 0.0);

    std::vector<std::size_t> clipped(out.grid.n, 0);
    std::vector<std::vector<double>> columns;  // nothing shared; rows of gamma reused

    parallel_for(out.grid.n, [&](std::size_t i) {
        const double base = gamma.grid_a.coord(i);  // (z_a/z_b) * x_i
        double acc = 0.0, comp = 0.0;
        std::size_t miss = 0;
        for (std::size_t j = 0; j < gamma.grid_b.n; ++j) {
            const double target = base - shear * gamma.grid_b.coord(j);
            const double t = (target - gamma.grid_a.offset) / gamma.grid_a.spacing;
            double v = 0.0;
            if (t >= 0.0 && t <= double(gamma.grid_a.n - 1)) {
                const auto i0 = static_cast<std::size_t>(t);
                const double f = t - double(i0);
                const double lo = gamma.values[i0 * gamma.grid_b.n + j];
                const double hi = (i0 + 1 < gamma.grid_a.n)
                                      ? gamma.values[(i0 + 1) * gamma.grid_b.n + j]
                                      : lo;
                v = lo * (1.0 - f) + hi * f;
            } else {
                ++miss;
            }
            const double y = v - comp;
            const double s = acc + y;
            comp = (s - acc) - y;
            acc = s;
        }
        out.values[i] = acc * gamma.grid_b.spacing;
        clipped[i] = miss;
    });

    std::size_t total_miss = 0;
    for (auto c : clipped) total_miss += c;
    out.clipped_fraction = double(total_miss) / double(out.grid.n * gamma.grid_b.n);
    return out;
}

/// On-axis coherent image: the rho_b = 0 column of the tensor. If the grid
/// does not contain rho_b = 0, the nearest column is used and flagged.
inline ImageProfile coherent_slice(const CorrelationTensor& gamma, bool* used_nearest = nullptr) {
    const std::size_t j0 = gamma.grid_b.nearest_index(0.0);
    const bool off_center = std::abs(gamma.grid_b.coord(j0)) > 0.51 * gamma.grid_b.spacing;
    if (used_nearest) *used_nearest = off_center;

    ImageProfile out;
    out.grid = gamma.grid_a;
    out.kind = ImageKind::coherent;
    out.object_scale = gamma.scenario.z_b / gamma.scenario.z_a;
    out.values.resize(gamma.grid_a.n);
    for (std::size_t i = 0; i < gamma.grid_a.n; ++i) out.values[i] = gamma.at(i, j0);
    return out;
}

struct PostprocessOptions {
    double lowpass_sigma = 0.0;  // Gaussian low-pass width in rad/m; <= 0 disables
    double threshold = 0.0;      // zero Fourier coefficients below this fraction of the peak
};

namespace detail {

inline void filter_spectrum(cvec& spec, const std::vector<double>& qs,
                            const PostprocessOptions& opt) {
    if (opt.threshold < 0.0 || opt.threshold >= 1.0) {
        throw PreconditionError("postprocess: threshold must lie in [0, 1)");
    }
    if (opt.lowpass_sigma > 0.0) {
        for (std::size_t i = 0; i < spec.size(); ++i) {
            const double q = qs[i];
            spec[i] *= std::exp(-0.5 * q * q / (opt.lowpass_sigma * opt.lowpass_sigma));
        }
    }
    if (opt.threshold > 0.0) {
        double peak = 0.0;
        for (const auto& c : spec) peak = std::max(peak, std::abs(c));
        const double cut = opt.threshold * peak;
        for (auto& c : spec) {
            if (std::abs(c) < cut) c = {0.0, 0.0};
        }
    }
}

}  // namespace detail

/// Fourier-domain cleanup: Gaussian low-pass, then thresholding of weak
/// coefficients, then clamping of negative intensities.
inline ImageProfile postprocess(const ImageProfile& img, const PostprocessOptions& opt) {
    cvec spec(img.values.begin(), img.values.end());
    fft::forward_inplace(spec);
    std::vector<double> qs(spec.size());
    for (std::size_t i = 0; i < qs.size(); ++i) {
        qs[i] = fft::bin_frequency(i, spec.size(), img.grid.spacing);
    }
    detail::filter_spectrum(spec, qs, opt);
    fft::inverse_inplace(spec);
    ImageProfile out = img;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] = std::max(0.0, spec[i].real());
    }
    return out;
}

inline CorrelationTensor postprocess(const CorrelationTensor& gamma,
                                     const PostprocessOptions& opt) {
    const std::size_t na = gamma.grid_a.n, nb = gamma.grid_b.n;
    std::vector<std::complex<double>> work(gamma.values.begin(), gamma.values.end());

    // 2D transform as rows then columns.
    parallel_for(na, [&](std::size_t i) {
        cvec row(nb);
        for (std::size_t j = 0; j < nb; ++j) row[j] = work[i * nb + j];
        fft::forward_inplace(row);
        for (std::size_t j = 0; j < nb; ++j) work[i * nb + j] = row[j];
    });
    parallel_for(nb, [&](std::size_t j) {
        cvec col(na);
        for (std::size_t i = 0; i < na; ++i) col[i] = work[i * nb + j];
        fft::forward_inplace(col);
        for (std::size_t i = 0; i < na; ++i) work[i * nb + j] = col[i];
    });

    if (opt.threshold < 0.0 || opt.threshold >= 1.0) {
        throw PreconditionError("postprocess: threshold must lie in [0, 1)");
    }
    if (opt.lowpass_sigma > 0.0) {
        const double s2 = opt.lowpass_sigma * opt.lowpass_sigma;
        for (std::size_t i = 0; i < na; ++i) {
            const double qa = fft::bin_frequency(i, na, gamma.grid_a.spacing);
            for (std::size_t j = 0; j < nb; ++j) {
                const double qb = fft::bin_frequency(j, nb, gamma.grid_b.spacing);
                work[i * nb + j] *= std::exp(-0.5 * (qa * qa + qb * qb) / s2);
            }
        }
    }
    if (opt.threshold > 0.0) {
        double peak = 0.0;
        for (const auto& c : work) peak = std::max(peak, std::abs(c));
        const double cut = opt.threshold * peak;
        for (auto& c : work) {
            if (std::abs(c) < cut) c = {0.0, 0.0};
        }
    }

    parallel_for(nb, [&](std::size_t j) {
        cvec col(na);
        for (std::size_t i = 0; i < na; ++i) col[i] = work[i * nb + j];
        fft::inverse_inplace(col);
        for (std::size_t i = 0; i < na; ++i) work[i * nb + j] = col[i];
    });
    CorrelationTensor out = gamma;
    parallel_for(na, [&](std::size_t i) {
        cvec row(nb);
        for (std::size_t j = 0; j < nb; ++j) row[j] = work[i * nb + j];
        fft::inverse_inplace(row);
        for (std::size_t j = 0; j < nb; ++j) out.values[i * nb + j] = std::max(0.0, row[j].real());
    });
    return out;
}

/// Block-sums `factor` adjacent pixels; the grid spacing grows accordingly.
/// Trailing cells that do not fill a block are dropped and counted.
inline ImageProfile bin_pixels(const ImageProfile& img, std::size_t factor,
                               std::size_t* dropped = nullptr) {
    if (factor < 1) throw PreconditionError("bin_pixels: factor must be >= 1");
    const std::size_t nOut = img.values.size() / factor;
    if (nOut < 2) throw PreconditionError("bin_pixels: too few pixels after binning");
    if (dropped) *dropped = img.values.size() - nOut * factor;

    ImageProfile out = img;
    out.values.assign(nOut, 0.0);
    for (std::size_t i = 0; i < nOut; ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < factor; ++k) s += img.values[i * factor + k];
        out.values[i] = s;
    }
    // Binned pixel centers sit at the mean of the constituent pixel centers.
    const double shift = 0.5 * img.grid.spacing * double(factor - 1);
    out.grid = SampledGrid(nOut, img.grid.spacing * double(factor), img.grid.offset + shift);
    return out;
}

}  // namespace cpi
