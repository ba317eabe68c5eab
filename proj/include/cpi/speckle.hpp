#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include "cpi/aperture.hpp"
#include "cpi/correlation.hpp"
#include "cpi/errors.hpp"
#include "cpi/fft.hpp"
#include "cpi/grid.hpp"
#include "cpi/parallel.hpp"
#include "cpi/scenario.hpp"

namespace cpi {

// --- deterministic per-frame randomness ---

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Disjoint, reproducible substream for one frame: the sequence depends only
/// on (seed, frame index), never on threading. Gaussians come from an
/// explicit Box-Muller so the draw sequence is fully specified.
class FrameRng {
  public:
    FrameRng(std::uint64_t seed, std::uint64_t frame) {
        std::uint64_t s = seed ^ (0xA0761D6478BD642Full * (frame + 1));
        const std::uint64_t a = splitmix64(s);
        const std::uint64_t b = splitmix64(s);
        std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                          static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
        gen_.seed(seq);
    }

    double uniform() {  // in (0, 1]
        return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1p-53;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double phi = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(phi);
        have_spare_ = true;
        return r * std::cos(phi);
    }

    /// Circular complex Gaussian with E|g|^2 = 1.
    std::complex<double> circular_gaussian() {
        const double inv_sqrt2 = 0.70710678118654752440;
        return {normal() * inv_sqrt2, normal() * inv_sqrt2};
    }

  private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// --- field propagation primitives ---

/// Paraxial Fresnel propagation over distance z by the transfer-function
/// method: multiply the spectrum by exp(-i q^2 z / 2k). Unitary, so total
/// power is conserved to rounding.
inline cvec fresnel_propagate(const cvec& field, const SampledGrid& grid, double z,
                              double wavelength) {
    if (field.size() != grid.n) throw PreconditionError("fresnel_propagate: size mismatch");
    if (z < 0.0) throw PreconditionError("fresnel_propagate: negative distance");
    if (z == 0.0) return field;

    const double z_max = static_cast<double>(grid.n) * grid.spacing * grid.spacing / wavelength;
    if (z > z_max) {
        std::ostringstream os;
        os << "fresnel_propagate: kernel undersampled for z = " << z
           << " m; this grid supports z <= " << z_max << " m";
        throw PreconditionError(os.str());
    }

    const double k = 2.0 * std::numbers::pi / wavelength;
    cvec out = field;
    fft::forward_inplace(out);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double q = fft::bin_frequency(i, grid.n, grid.spacing);
        out[i] *= std::polar(1.0, -q * q * z / (2.0 * k));
    }
    fft::inverse_inplace(out);
    return out;
}

/// Thin lens: quadratic phase plus a hard slab aperture of half-width R.
inline void apply_lens(cvec& field, const SampledGrid& grid, double focal, double aperture_halfwidth,
                       double wavelength) {
    const double k = 2.0 * std::numbers::pi / wavelength;
    for (std::size_t i = 0; i < grid.n; ++i) {
        const double x = grid.coord(i);
        if (std::abs(x) > aperture_halfwidth) {
            field[i] = {0.0, 0.0};
        } else {
            field[i] *= std::polar(1.0, -k * x * x / (2.0 * focal));
        }
    }
}

/// Delta-correlated chaotic field on the source plane: per-cell circular
/// Gaussians under the envelope f, scaled by 1/sqrt(cell) so that
/// <E*(x) E(x')> approaches F(x) delta(x - x'). Cells beyond the envelope
/// support radius stay dark and consume no draws.
inline cvec sample_source_field(const SourceProfile& profile, const SampledGrid& grid,
                                FrameRng& rng, double support_sigmas = 4.5) {
    cvec field(grid.n, {0.0, 0.0});
    const double support = support_sigmas * profile.sigma;
    const double inv_sqrt_cell = 1.0 / std::sqrt(grid.spacing);
    for (std::size_t i = 0; i < grid.n; ++i) {
        const double x = grid.coord(i);
        if (std::abs(x) > support) continue;
        field[i] = rng.circular_gaussian() * (profile.field_envelope_1d(x) * inv_sqrt_cell);
    }
    return field;
}

// --- the two-arm experiment ---

/// Propagation recipe for both arms plus the shared simulation lattice.
/// Arm a: free propagation over z_a. Arm b: z_b to the object, mask,
/// l1 - z_b to the lens, lens (f_b, aperture), l2 to the angular sensor,
/// with 1/l1 + 1/l2 = 1/f_b and M = l2/l1.
struct PropagationPlan {
    double z_a = 0.0;
    double z_b = 0.0;
    double l1 = 0.0;
    double l2 = 0.0;
    double f_b = 0.0;
    double lens_halfwidth = 0.0;
    double source_support_sigmas = 4.5;

    SampledGrid sim_grid;
    SampledGrid sensor_a;
    SampledGrid sensor_b;
    std::size_t base_a = 0, stride_a = 1;
    std::size_t base_b = 0, stride_b = 1;

    void validate(const ScenarioConfig& cfg) const {
        const double lhs = 1.0 / l1 + 1.0 / l2;
        const double rhs = 1.0 / f_b;
        if (std::abs(lhs - rhs) > 1e-9 * rhs) {
            throw PreconditionError("PropagationPlan: lens equation violated");
        }
        if (std::abs(l2 / l1 - cfg.M) > 1e-9 * std::abs(cfg.M)) {
            throw PreconditionError("PropagationPlan: magnification mismatch");
        }
        if (l1 <= z_b) throw PreconditionError("PropagationPlan: object sits behind the lens");
    }

    static PropagationPlan make(const ScenarioConfig& cfg, const ApertureMask& mask,
                                std::size_t n_a, std::size_t n_b,
                                std::size_t max_sim_samples = std::size_t(1) << 22) {
        cfg.validate();
        PropagationPlan p;
        p.z_a = cfg.z_a;
        p.z_b = cfg.z_b;
        p.f_b = cfg.f_b;
        const double m = cfg.M;
        if (!(m > 0.0)) throw PreconditionError("PropagationPlan: M must be positive");
        p.l1 = cfg.f_b * (m + 1.0) / m;
        p.l2 = m * p.l1;
        p.lens_halfwidth = cfg.NA_b * p.l1;

        const double lam = cfg.wavelength;
        const double S = p.source_support_sigmas * cfg.source_sigma;
        const double want_a = 0.5 * double(n_a) * cfg.pixel_dx;
        const double want_b = 0.5 * double(n_b) * cfg.pixel_du;
        const double x_obj = mask.half_extent();

        // Spacing: every source cell within the envelope must illuminate the
        // whole object and the whole spatial-sensor window through its
        // grid-limited emission cone, and the mask must be resolved.
        double dx = mask.smallest_feature() / 6.0;
        dx = std::min(dx, lam * p.z_a / (2.0 * (S + want_a)));
        dx = std::min(dx, lam * p.z_b / (2.0 * (S + x_obj)));

        // Half-window: contain arm-a speckle spread; land arm-b wraparound
        // outside the lens aperture before it and outside the angular-sensor
        // window after it.
        auto half_window = [&](double d) {
            double h = S + lam * p.z_a / (2.0 * d) + 10.0 * d;
            h = std::max(h, 0.5 * (p.lens_halfwidth + x_obj + lam * (p.l1 - p.z_b) / (2.0 * d)) +
                                10.0 * d);
            h = std::max(h, 0.5 * (p.lens_halfwidth + lam * p.l2 / (2.0 * d) + want_b) + 10.0 * d);
            h = std::max(h, std::max(want_a, want_b) + 10.0 * d);
            h = std::max(h, m * S + want_b + 10.0 * d);
            return h;
        };

        const double z_long = std::max(std::max(p.z_a, p.z_b), std::max(p.l1 - p.z_b, p.l2));
        std::size_t n = fft::next_pow2(static_cast<std::size_t>(
            std::ceil(2.0 * half_window(dx) / dx)));
        // The transfer-function kernel also needs n >= lam * z / dx^2.
        while (double(n) * dx * dx / lam < z_long) n <<= 1;
        if (n > max_sim_samples) {
            throw PreconditionError("PropagationPlan: simulation grid too large for this scenario");
        }
        p.sim_grid = SampledGrid::centered(n, dx);

        auto carve = [&](std::size_t n_px, double pitch, std::size_t& base, std::size_t& stride,
                         const char* what) {
            stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(pitch / dx)));
            const std::size_t span = (n_px - 1) * stride;
            if (span + 1 > n) throw PreconditionError(std::string("PropagationPlan: ") + what +
                                                      " window exceeds the simulation grid");
            base = (n - span - 1) / 2;
            return SampledGrid(n_px, double(stride) * dx, p.sim_grid.coord(base));
        };
        p.sensor_a = carve(n_a, cfg.pixel_dx, p.base_a, p.stride_a, "spatial sensor");
        p.sensor_b = carve(n_b, cfg.pixel_du, p.base_b, p.stride_b, "angular sensor");
        return p;
    }
};

/// Ensemble of instantaneous intensity frames on both sensors. One frame is
/// one coherence cell of the chaotic source. Frame f is reproducible from
/// (seed, f) alone.
struct FrameStack {
    std::uint64_t seed = 0;
    std::size_t n_frames = 0;
    SampledGrid grid_a;
    SampledGrid grid_b;
    ScenarioConfig scenario;
    std::vector<float> frames_a;  // n_frames x grid_a.n
    std::vector<float> frames_b;  // n_frames x grid_b.n

    const float* frame_a(std::size_t f) const { return frames_a.data() + f * grid_a.n; }
    const float* frame_b(std::size_t f) const { return frames_b.data() + f * grid_b.n; }
};

namespace detail {

inline void run_one_frame(const ScenarioConfig& cfg, const PropagationPlan& plan,
                          const std::vector<std::complex<double>>& mask_samples,
                          std::uint64_t seed, std::size_t f, float* out_a, float* out_b) {
    FrameRng rng(seed, f);
    const SourceProfile src = cfg.source();
    const double lam = cfg.wavelength;
    const cvec source = sample_source_field(src, plan.sim_grid, rng, plan.source_support_sigmas);

    // Reflected arm: straight to the ghost plane.
    {
        cvec ea = fresnel_propagate(source, plan.sim_grid, plan.z_a, lam);
        for (std::size_t i = 0; i < plan.sensor_a.n; ++i) {
            out_a[i] = static_cast<float>(std::norm(ea[plan.base_a + i * plan.stride_a]));
        }
    }
    // Transmitted arm: object, then the source-imaging lens.
    {
        cvec eb = fresnel_propagate(source, plan.sim_grid, plan.z_b, lam);
        for (std::size_t i = 0; i < plan.sim_grid.n; ++i) eb[i] *= mask_samples[i];
        eb = fresnel_propagate(eb, plan.sim_grid, plan.l1 - plan.z_b, lam);
        apply_lens(eb, plan.sim_grid, plan.f_b, plan.lens_halfwidth, lam);
        eb = fresnel_propagate(eb, plan.sim_grid, plan.l2, lam);
        for (std::size_t i = 0; i < plan.sensor_b.n; ++i) {
            out_b[i] = static_cast<float>(std::norm(eb[plan.base_b + i * plan.stride_b]));
        }
    }
}

}  // namespace detail

inline FrameStack generate_frames(const ScenarioConfig& cfg, const ApertureMask& mask,
                                  const PropagationPlan& plan, std::size_t n_frames,
                                  std::uint64_t seed) {
    if (n_frames < 2) throw PreconditionError("generate_frames: need at least 2 frames");
    plan.validate(cfg);
    const auto mask_samples = mask.sample(plan.sim_grid);

    FrameStack stack;
    stack.seed = seed;
    stack.n_frames = n_frames;
    stack.grid_a = plan.sensor_a;
    stack.grid_b = plan.sensor_b;
    stack.scenario = cfg;
    stack.frames_a.assign(n_frames * plan.sensor_a.n, 0.0f);
    stack.frames_b.assign(n_frames * plan.sensor_b.n, 0.0f);

    parallel_for(n_frames, [&](std::size_t f) {
        detail::run_one_frame(cfg, plan, mask_samples, seed, f,
                              stack.frames_a.data() + f * plan.sensor_a.n,
                              stack.frames_b.data() + f * plan.sensor_b.n);
    });
    return stack;
}

namespace detail {

struct Kahan {
    double sum = 0.0, comp = 0.0;
    void add(double v) {
        const double y = v - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
};

inline std::vector<double> mean_over_frames(const std::vector<float>& frames,
                                            std::size_t n_frames, std::size_t n_px) {
    std::vector<double> mean(n_px, 0.0);
    parallel_for(n_px, [&](std::size_t i) {
        Kahan acc;
        for (std::size_t f = 0; f < n_frames; ++f) acc.add(frames[f * n_px + i]);
        mean[i] = acc.sum / double(n_frames);
    });
    return mean;
}

}  // namespace detail

/// Sample covariance of intensity fluctuations:
///   Gamma_hat(i, j) = sum_f (Ia_f[i] - <Ia[i]>)(Ib_f[j] - <Ib[j]>) / (N - 1).
/// Two-pass with compensated accumulation in a fixed frame order, so the
/// result is identical for any thread count.
inline CorrelationTensor estimate_gamma(const FrameStack& stack) {
    if (stack.n_frames < 2) throw PreconditionError("estimate_gamma: need at least 2 frames");
    const std::size_t na = stack.grid_a.n, nb = stack.grid_b.n, nf = stack.n_frames;
    const auto mean_a = detail::mean_over_frames(stack.frames_a, nf, na);
    const auto mean_b = detail::mean_over_frames(stack.frames_b, nf, nb);

    CorrelationTensor out;
    out.grid_a = stack.grid_a;
    out.grid_b = stack.grid_b;
    out.scenario = stack.scenario;
    out.provenance = Provenance::monte_carlo;
    out.values.assign(na * nb, 0.0);

    parallel_for(na, [&](std::size_t i) {
        std::vector<detail::Kahan> acc(nb);
        for (std::size_t f = 0; f < nf; ++f) {
            const double da = double(stack.frames_a[f * na + i]) - mean_a[i];
            const float* row_b = stack.frames_b.data() + f * nb;
            for (std::size_t j = 0; j < nb; ++j) {
                acc[j].add(da * (double(row_b[j]) - mean_b[j]));
            }
        }
        double* dst = out.values.data() + i * nb;
        const double norm = 1.0 / double(nf - 1);
        for (std::size_t j = 0; j < nb; ++j) dst[j] = acc[j].sum * norm;
    });
    return out;
}

/// Second-order coherence <I^2>/<I>^2 at one angular-sensor pixel; 2 for
/// chaotic light.
inline double g2_at_pixel(const FrameStack& stack, std::size_t pixel) {
    detail::Kahan m1, m2;
    for (std::size_t f = 0; f < stack.n_frames; ++f) {
        const double v = stack.frames_b[f * stack.grid_b.n + pixel];
        m1.add(v);
        m2.add(v * v);
    }
    const double mean = m1.sum / double(stack.n_frames);
    return m2.sum / double(stack.n_frames) / (mean * mean);
}

}  // namespace cpi
