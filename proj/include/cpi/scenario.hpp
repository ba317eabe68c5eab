#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

#include "cpi/errors.hpp"
#include "cpi/grid.hpp"

namespace cpi {

enum class SourceKind { gaussian };

/// Chaotic-source intensity profile. Only the Gaussian kind exists for now:
/// F(rho) = exp(-rho^2 / 2 sigma^2) / (2 pi sigma^2), normalized over the plane.
struct SourceProfile {
    double sigma = 0.0;
    SourceKind kind = SourceKind::gaussian;

    explicit SourceProfile(double s) : sigma(s) {
        if (!(sigma > 0.0)) throw ConfigError("SourceProfile: sigma must be positive");
    }

    double intensity_2d(double rho) const {
        const double s2 = sigma * sigma;
        return std::exp(-0.5 * rho * rho / s2) / (2.0 * std::numbers::pi * s2);
    }

    /// 1D marginal of the intensity profile, normalized to unit integral.
    double intensity_1d(double x) const {
        return std::exp(-0.5 * x * x / (sigma * sigma)) /
               (std::sqrt(2.0 * std::numbers::pi) * sigma);
    }

    /// Field envelope f with |f|^2 equal to the 1D intensity marginal.
    double field_envelope_1d(double x) const { return std::sqrt(intensity_1d(x)); }
};

/// Full optical geometry shared by every engine. Lengths in meters.
struct ScenarioConfig {
    double wavelength = 532e-9;   // lambda
    double source_sigma = 1.08e-3;
    double z_a = 92e-3;           // source -> ghost plane / spatial sensor
    double z_b = 92e-3;           // source -> object
    double M = 1.0;               // source -> angular-sensor imaging magnification
    double NA_b = 0.038;          // numerical aperture of the imaging lens
    double source_NA = 0.038;     // effective NA of the source seen from the ghost plane
    double pixel_dx = 7.2e-6;     // spatial-sensor pixel
    double pixel_du = 72e-6;      // angular-sensor pixel
    double f_b = 0.3;             // focal length of the imaging lens

    void validate() const {
        auto pos = [](double v, const char* name) {
            if (!(v > 0.0) || !std::isfinite(v)) {
                throw ConfigError(std::string("scenario: ") + name + " must be a positive length");
            }
        };
        pos(wavelength, "wavelength");
        pos(source_sigma, "source_sigma");
        pos(z_a, "z_a");
        pos(z_b, "z_b");
        pos(pixel_dx, "pixel_dx");
        pos(pixel_du, "pixel_du");
        pos(f_b, "f_b");
        if (M == 0.0 || !std::isfinite(M)) throw ConfigError("scenario: M must be nonzero");
        if (!(NA_b > 0.0 && NA_b < 1.0)) throw ConfigError("scenario: NA_b must lie in (0, 1)");
        if (!(source_NA > 0.0 && source_NA < 1.0)) {
            throw ConfigError("scenario: source_NA must lie in (0, 1)");
        }
        const double dxf = wavelength / source_NA;
        if (!(dxf > 0.0) || !std::isfinite(dxf)) {
            throw ConfigError("scenario: focused resolution wavelength/source_NA is degenerate");
        }
    }

    double wavenumber() const { return 2.0 * std::numbers::pi / wavelength; }
    SourceProfile source() const { return SourceProfile(source_sigma); }

    /// Diffraction-limited resolution of the focused ghost image.
    double focused_resolution() const { return wavelength / source_NA; }
    /// Depth of field of standard imaging at the resolution limit.
    double dof_standard() const { return wavelength / (source_NA * source_NA); }
    /// Effective source diameter implied by the calibrated NA.
    double source_diameter() const { return source_NA * z_a; }

    ScenarioConfig with(double new_z_b) const {
        ScenarioConfig c = *this;
        c.z_b = new_z_b;
        return c;
    }
};

/// Resolution/DOF summary for a scenario and a mask with smallest feature `a`
/// and pitch `d`.
struct DerivedSet {
    double dx_focused = 0.0;   // lambda / NA
    double dof_std = 0.0;      // lambda / NA^2
    double dx_projected = 0.0; // d z_a / z_b
    double du_source = 0.0;    // max(lambda z_b / a, 2 lambda / (M NA_b), 2 du / M)
};

inline double angular_resolution(const ScenarioConfig& cfg, double feature_a) {
    const double diffraction = cfg.wavelength * cfg.z_b / feature_a;
    const double lens = 2.0 * cfg.wavelength / (std::abs(cfg.M) * cfg.NA_b);
    const double pixel = 2.0 * cfg.pixel_du / std::abs(cfg.M);
    return std::max(diffraction, std::max(lens, pixel));
}

inline DerivedSet derived_quantities(const ScenarioConfig& cfg, double feature_a, double pitch_d) {
    cfg.validate();
    if (!(feature_a > 0.0)) throw PreconditionError("derived_quantities: mask feature must be positive");
    DerivedSet out;
    out.dx_focused = cfg.focused_resolution();
    out.dof_std = cfg.dof_standard();
    out.dx_projected = pitch_d * cfg.z_a / cfg.z_b;
    out.du_source = angular_resolution(cfg, feature_a);
    return out;
}

/// Sets source_NA so that the focused resolution equals the requested value.
inline ScenarioConfig calibrate_source_na(const ScenarioConfig& cfg, double target_dx_focused) {
    if (!(target_dx_focused > 0.0)) {
        throw PreconditionError("calibrate_source_na: target resolution must be positive");
    }
    ScenarioConfig out = cfg;
    out.source_NA = cfg.wavelength / target_dx_focused;
    out.validate();
    return out;
}

// --- scenario files: flat key = value, SI units, `#` comments ---

namespace detail {

inline const std::map<std::string, double ScenarioConfig::*>& scenario_fields() {
    static const std::map<std::string, double ScenarioConfig::*> fields = {
        {"wavelength", &ScenarioConfig::wavelength},
        {"source_sigma", &ScenarioConfig::source_sigma},
        {"z_a", &ScenarioConfig::z_a},
        {"z_b", &ScenarioConfig::z_b},
        {"M", &ScenarioConfig::M},
        {"NA_b", &ScenarioConfig::NA_b},
        {"source_NA", &ScenarioConfig::source_NA},
        {"pixel_dx", &ScenarioConfig::pixel_dx},
        {"pixel_du", &ScenarioConfig::pixel_du},
        {"f_b", &ScenarioConfig::f_b},
    };
    return fields;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

inline void scenario_set_key(ScenarioConfig& cfg, const std::string& key,
                             const std::string& value, int line = 0) {
    const auto& fields = detail::scenario_fields();
    auto it = fields.find(key);
    std::ostringstream where;
    if (line > 0) where << " (line " << line << ")";
    if (it == fields.end()) {
        throw ConfigError("scenario: unknown key '" + key + "'" + where.str());
    }
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (detail::trim(value.substr(used)).size() > 0) throw std::invalid_argument(value);
        cfg.*(it->second) = v;
    } catch (const std::exception&) {
        throw ConfigError("scenario: invalid numeric value '" + value + "' for key '" + key +
                          "'" + where.str());
    }
}

inline ScenarioConfig parse_scenario(std::istream& in) {
    ScenarioConfig cfg;
    std::map<std::string, bool> seen;
    for (const auto& [key, ptr] : detail::scenario_fields()) seen[key] = false;

    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = raw;
        if (auto hash = s.find('#'); hash != std::string::npos) s = s.substr(0, hash);
        s = detail::trim(s);
        if (s.empty()) continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("scenario: expected 'key = value' (line " + std::to_string(line) + ")");
        }
        const std::string key = detail::trim(s.substr(0, eq));
        const std::string value = detail::trim(s.substr(eq + 1));
        scenario_set_key(cfg, key, value, line);
        seen[key] = true;
    }
    for (const auto& [key, was_set] : seen) {
        if (!was_set) throw ConfigError("scenario: missing key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

inline ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scenario file: " + path);
    try {
        return parse_scenario(in);
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

/// Canonical serialization; also the hashing payload for manifests.
inline std::string serialize_scenario(const ScenarioConfig& cfg) {
    std::ostringstream os;
    os.precision(17);
    for (const auto& [key, ptr] : detail::scenario_fields()) {
        os << key << " = " << cfg.*ptr << "\n";
    }
    return os.str();
}

inline std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed = 1469598103934665603ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t scenario_hash(const ScenarioConfig& cfg) {
    const std::string s = serialize_scenario(cfg);
    return fnv1a64(s.data(), s.size());
}

}  // namespace cpi
