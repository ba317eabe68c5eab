#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>
#include <string>
#include <vector>

#include "cpi/errors.hpp"
#include "cpi/grid.hpp"

namespace cpi {

struct Slit {
    double center = 0.0;
    double width = 0.0;
    std::complex<double> amplitude{1.0, 0.0};
};

enum class MaskDim { one_d, two_d_separable };

/// Object transmission function A as a set of parametric slits.
class ApertureMask {
  public:
    ApertureMask(std::vector<Slit> slits, MaskDim dim = MaskDim::one_d)
        : slits_(std::move(slits)), dim_(dim) {
        if (slits_.empty()) throw PreconditionError("ApertureMask: no slits");
        for (const auto& s : slits_) {
            if (!(s.width > 0.0)) throw PreconditionError("ApertureMask: degenerate slit width");
            if (std::abs(s.amplitude) > 1.0 + 1e-12) {
                throw PreconditionError("ApertureMask: transmission amplitude above 1");
            }
        }
        std::sort(slits_.begin(), slits_.end(),
                  [](const Slit& a, const Slit& b) { return a.center < b.center; });
    }

    const std::vector<Slit>& slits() const { return slits_; }
    std::size_t n_slits() const { return slits_.size(); }
    MaskDim dimensionality() const { return dim_; }

    double min_edge() const { return slits_.front().center - 0.5 * slits_.front().width; }
    double max_edge() const { return slits_.back().center + 0.5 * slits_.back().width; }
    double extent() const { return max_edge() - min_edge(); }
    double half_extent() const { return std::max(std::abs(min_edge()), std::abs(max_edge())); }

    double smallest_feature() const {
        double a = slits_.front().width;
        for (const auto& s : slits_) a = std::min(a, s.width);
        return a;
    }

    /// Center-to-center distance of adjacent slits; 0 for a single slit.
    double pitch() const {
        if (slits_.size() < 2) return 0.0;
        return slits_[1].center - slits_[0].center;
    }

    /// True when A(x) = A(-x) within tolerance, as for every pitch-centered
    /// slit set.
    bool even_symmetric(double tol = 1e-9) const {
        const double scale = std::max(extent(), smallest_feature());
        for (std::size_t i = 0; i < slits_.size(); ++i) {
            const auto& a = slits_[i];
            const auto& b = slits_[slits_.size() - 1 - i];
            if (std::abs(a.center + b.center) > tol * scale) return false;
            if (std::abs(a.width - b.width) > tol * scale) return false;
            if (std::abs(a.amplitude - b.amplitude) > tol) return false;
        }
        return true;
    }

    /// Integral of |A|^2 over the line; positive for any valid mask.
    double total_transmission() const {
        double t = 0.0;
        for (const auto& s : slits_) t += std::norm(s.amplitude) * s.width;
        return t;
    }

    std::complex<double> transmission_at(double x) const {
        std::complex<double> a{0.0, 0.0};
        for (const auto& s : slits_) {
            if (x >= s.center - 0.5 * s.width && x < s.center + 0.5 * s.width) a += s.amplitude;
        }
        return a;
    }

    /// Area-weighted samples: each cell gets the covered fraction of every slit,
    /// so Riemann sums of sampled A integrate the hard-edged mask exactly.
    std::vector<std::complex<double>> sample(const SampledGrid& grid) const {
        std::vector<std::complex<double>> out(grid.n, {0.0, 0.0});
        const double half = 0.5 * grid.spacing;
        for (const auto& s : slits_) {
            const double lo = s.center - 0.5 * s.width;
            const double hi = s.center + 0.5 * s.width;
            for (std::size_t i = 0; i < grid.n; ++i) {
                const double x = grid.coord(i);
                const double o = std::max(0.0, std::min(hi, x + half) - std::max(lo, x - half));
                if (o > 0.0) out[i] += s.amplitude * (o / grid.spacing);
            }
        }
        return out;
    }

    std::vector<double> sample_intensity(const SampledGrid& grid) const {
        auto amp = sample(grid);
        std::vector<double> out(grid.n);
        for (std::size_t i = 0; i < grid.n; ++i) out[i] = std::norm(amp[i]);
        return out;
    }

  private:
    std::vector<Slit> slits_;
    MaskDim dim_;
};

/// n slits of width a on pitch d, centered at the origin.
inline ApertureMask make_slit_mask(std::size_t n_slits, double width_a, double pitch_d,
                                   std::complex<double> amplitude = {1.0, 0.0}) {
    if (n_slits < 1) throw PreconditionError("make_slit_mask: need at least one slit");
    if (!(width_a > 0.0)) throw PreconditionError("make_slit_mask: slit width must be positive");
    if (n_slits >= 2) {
        if (!(pitch_d > 0.0)) throw PreconditionError("make_slit_mask: pitch must be positive");
        if (pitch_d < width_a) throw PreconditionError("make_slit_mask: slits overlap (d < a)");
    }
    std::vector<Slit> slits;
    slits.reserve(n_slits);
    const double c0 = -0.5 * pitch_d * static_cast<double>(n_slits - 1);
    for (std::size_t i = 0; i < n_slits; ++i) {
        slits.push_back({c0 + pitch_d * static_cast<double>(i), width_a, amplitude});
    }
    return ApertureMask(std::move(slits));
}

/// Parses inline mask specs of the form "slits:n=3,a=99e-6,d=198e-6".
inline ApertureMask parse_mask_spec(const std::string& spec) {
    const std::string prefix = "slits:";
    if (spec.rfind(prefix, 0) != 0) {
        throw ConfigError("mask spec must start with 'slits:', got '" + spec + "'");
    }
    std::size_t n = 0;
    double a = 0.0, d = 0.0;
    bool has_n = false, has_a = false, has_d = false;
    std::stringstream ss(spec.substr(prefix.size()));
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ConfigError("mask spec: expected key=value in '" + item + "'");
        const std::string key = item.substr(0, eq);
        const std::string val = item.substr(eq + 1);
        try {
            if (key == "n") {
                n = static_cast<std::size_t>(std::stoul(val));
                has_n = true;
            } else if (key == "a") {
                a = std::stod(val);
                has_a = true;
            } else if (key == "d") {
                d = std::stod(val);
                has_d = true;
            } else {
                throw ConfigError("mask spec: unknown key '" + key + "'");
            }
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            throw ConfigError("mask spec: invalid value '" + val + "' for key '" + key + "'");
        }
    }
    if (!has_n || !has_a) throw ConfigError("mask spec: keys n and a are required");
    if (n >= 2 && !has_d) throw ConfigError("mask spec: key d is required for n >= 2");
    if (!has_d) d = a;
    try {
        return make_slit_mask(n, a, d);
    } catch (const PreconditionError& e) {
        throw ConfigError(std::string("mask spec: ") + e.what());
    }
}

}  // namespace cpi
