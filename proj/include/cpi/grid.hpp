#pragma once

#include <cmath>
#include <cstddef>
#include <sstream>
#include <vector>

#include "cpi/errors.hpp"

namespace cpi {

/// Uniform 1D sampling lattice. Node i sits at offset + i*spacing; each node
/// is the midpoint of a cell of width `spacing`.
struct SampledGrid {
    std::size_t n = 0;
    double spacing = 0.0;
    double offset = 0.0;

    SampledGrid() = default;
    SampledGrid(std::size_t n_points, double dx, double origin_offset)
        : n(n_points), spacing(dx), offset(origin_offset) {
        if (n < 2) throw PreconditionError("SampledGrid: need at least 2 points");
        if (!(spacing > 0.0)) throw PreconditionError("SampledGrid: spacing must be positive");
    }

    static SampledGrid centered(std::size_t n_points, double dx) {
        if (n_points < 2) throw PreconditionError("SampledGrid: need at least 2 points");
        return SampledGrid(n_points, dx, -0.5 * dx * static_cast<double>(n_points - 1));
    }

    double coord(std::size_t i) const { return offset + spacing * static_cast<double>(i); }
    double min() const { return coord(0); }
    double max() const { return coord(n - 1); }
    double extent() const { return spacing * static_cast<double>(n - 1); }

    bool covers(double lo, double hi) const {
        const double pad = 0.5 * spacing;
        return min() - pad <= lo && max() + pad >= hi;
    }

    /// Asserts at construction-time call sites that the grid spans the
    /// caller-declared support of whatever gets sampled on it.
    void require_covers(double lo, double hi, const char* what) const {
        if (!covers(lo, hi)) {
            std::ostringstream os;
            os << "grid [" << min() << ", " << max() << "] does not cover declared support ["
               << lo << ", " << hi << "] of " << what;
            throw PreconditionError(os.str());
        }
    }

    std::vector<double> coords() const {
        std::vector<double> xs(n);
        for (std::size_t i = 0; i < n; ++i) xs[i] = coord(i);
        return xs;
    }

    /// Index of the node nearest to x (clamped to the grid).
    std::size_t nearest_index(double x) const {
        double t = (x - offset) / spacing;
        if (t <= 0.0) return 0;
        auto i = static_cast<std::size_t>(std::lround(t));
        return i >= n ? n - 1 : i;
    }
};

/// Linear interpolation of `values` sampled on `grid` at position x.
/// Out-of-support positions yield 0 and set *clipped when provided.
inline double interp_linear(const SampledGrid& grid, const std::vector<double>& values, double x,
                            bool* clipped = nullptr) {
    const double t = (x - grid.offset) / grid.spacing;
    if (t < 0.0 || t > static_cast<double>(grid.n - 1)) {
        if (clipped) *clipped = true;
        return 0.0;
    }
    const auto i0 = static_cast<std::size_t>(t);
    if (i0 + 1 >= grid.n) return values[grid.n - 1];
    const double f = t - static_cast<double>(i0);
    return values[i0] * (1.0 - f) + values[i0 + 1] * f;
}

}  // namespace cpi
