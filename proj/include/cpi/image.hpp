#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "cpi/errors.hpp"
#include "cpi/grid.hpp"

namespace cpi {

enum class ImageKind { ghost, coherent, refocused, focused_reference };

inline const char* to_string(ImageKind k) {
    switch (k) {
        case ImageKind::ghost: return "ghost";
        case ImageKind::coherent: return "coherent";
        case ImageKind::refocused: return "refocused";
        case ImageKind::focused_reference: return "focused-reference";
    }
    return "?";
}

/// 1D intensity profile with grid metadata. `object_scale` maps profile
/// coordinates to object-plane coordinates (x_obj = object_scale * x);
/// refocused profiles carry the z_b/z_a pixel rescale in `pixel_rescale`.
struct ImageProfile {
    std::vector<double> values;
    SampledGrid grid;
    ImageKind kind = ImageKind::ghost;
    double object_scale = 1.0;
    double pixel_rescale = 1.0;
    double clipped_fraction = 0.0;
    std::string normalization = "unnormalized";

    double peak() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, v);
        return m;
    }

    ImageProfile& peak_normalize() {
        const double m = peak();
        if (m > 0.0) {
            for (auto& v : values) v /= m;
            normalization = "peak";
        }
        return *this;
    }

    void check() const {
        if (values.size() != grid.n) throw PreconditionError("ImageProfile: size mismatch");
        for (double v : values) {
            if (!(v >= 0.0)) throw PreconditionError("ImageProfile: negative or NaN intensity");
        }
    }
};

}  // namespace cpi
