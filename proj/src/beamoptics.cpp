#include "trapablate/beamoptics.hpp"

#include "trapablate/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace trapablate {
namespace {

constexpr double kPi = std::numbers::pi;

// Surface points sit just above the plane, in the z > 0 half-space.
constexpr double kSurfaceLift = 1e-12;

struct AxisCoordinates {
    double along;  // signed distance from focus along the propagation axis
    double radial; // distance from the axis
};

AxisCoordinates axis_coordinates(const BeamSpec& spec, const Vec3& p) {
    const Vec3 axis = spec.propagation_axis.normalized();
    const Vec3 d = p - spec.focus_position;
    const double along = d.dot(axis);
    const double radial2 = std::max(0.0, d.squaredNorm() - along * along);
    return {along, std::sqrt(radial2)};
}

} // namespace

void BeamSpec::validate() const {
    if (!(wavelength > 0.0) || !(pulse_duration > 0.0) || !(max_pulse_energy > 0.0) ||
        !(input_waist_radius > 0.0) || !(lens_focal_length > 0.0)) {
        throw ConfigError("beam wavelength, duration, energy, waist and focal length must be positive");
    }
    if (!(propagation_axis.norm() > 0.0)) {
        throw ConfigError("beam propagation_axis must be non-zero");
    }
}

BeamSpec BeamSpec::offset(double dx, double dz) const {
    BeamSpec shifted = *this;
    shifted.focus_position += Vec3(dx, 0.0, dz);
    return shifted;
}

void PowerCalibration::validate() const {
    if (anchors.size() < 2) {
        throw ConfigError("power calibration needs at least two anchors");
    }
    for (std::size_t i = 1; i < anchors.size(); ++i) {
        if (!(anchors[i].first > anchors[i - 1].first) || !(anchors[i].second > anchors[i - 1].second)) {
            throw ConfigError("power calibration anchors must be strictly increasing in percent and fluence");
        }
    }
    if (anchors.front().second < 0.0) {
        throw ConfigError("power calibration fluences must be non-negative");
    }
}

double focused_waist(const BeamSpec& spec) {
    if (!(spec.input_waist_radius > 0.0)) {
        throw DomainError("input waist radius must be positive");
    }
    return spec.wavelength * spec.lens_focal_length / (kPi * spec.input_waist_radius);
}

double rayleigh_range(double w0, double wavelength) {
    if (!(w0 > 0.0) || !(wavelength > 0.0)) {
        throw DomainError("waist and wavelength must be positive");
    }
    return kPi * w0 * w0 / wavelength;
}

double beam_radius(double w0, double z, double wavelength) {
    const double zr = rayleigh_range(w0, wavelength);
    const double t = z / zr;
    return w0 * std::sqrt(1.0 + t * t);
}

double fluence_at(double energy, const BeamSpec& spec, const Vec3& p) {
    if (energy < 0.0) {
        throw DomainError("pulse energy must be non-negative");
    }
    if (energy == 0.0) {
        return 0.0;
    }
    const double w0 = focused_waist(spec);
    const auto [along, radial] = axis_coordinates(spec, p);
    const double w = beam_radius(w0, along, spec.wavelength);
    const double f = 2.0 * energy / (kPi * w * w) * std::exp(-2.0 * radial * radial / (w * w));
    return f / kJoulePerM2PerJoulePerCm2;
}

double peak_fluence(double energy, double w0) {
    return 2.0 * energy / (kPi * w0 * w0) / kJoulePerM2PerJoulePerCm2;
}

double pulse_energy_for_peak_fluence(double fluence, double w0) {
    if (fluence < 0.0) {
        throw DomainError("fluence must be non-negative");
    }
    return fluence * kJoulePerM2PerJoulePerCm2 * kPi * w0 * w0 / 2.0;
}

double percent_to_fluence(const PowerCalibration& cal, double percent) {
    cal.validate();
    if (!(percent >= cal.min_percent()) || !(percent <= cal.max_percent())) {
        throw RangeError(fmt::format("power {:g}% outside calibrated range [{:g}, {:g}]%", percent, cal.min_percent(),
                                     cal.max_percent()));
    }
    const auto upper = std::lower_bound(cal.anchors.begin(), cal.anchors.end(), percent,
                                        [](const auto& anchor, double v) { return anchor.first < v; });
    if (upper->first == percent) {
        return upper->second;
    }
    const auto lower = std::prev(upper);
    const double t = (percent - lower->first) / (upper->first - lower->first);
    return lower->second + t * (upper->second - lower->second);
}

ExposureProfile chip_exposure_profile(const BeamSpec& spec, double energy, const ChipLayout& chip,
                                      double grid) {
    if (!(grid > 0.0)) {
        throw DomainError("grid spacing must be positive");
    }
    const Interval xs = chip.x_span();
    const Interval ys = chip.y_span();
    const Vec3 axis = spec.propagation_axis.normalized();

    ExposureProfile profile;
    const bool parallel = std::abs(axis.z()) < 1e-9;
    if (!parallel || spec.focus_position.z() <= 0.0) {
        profile.axis_intersects_chip = true;
    }

    const auto nx = static_cast<std::size_t>(std::floor(xs.width() / grid + 1e-9)) + 1;
    const auto ny = static_cast<std::size_t>(std::floor(ys.width() / grid + 1e-9)) + 1;
    profile.samples.reserve(nx * ny + 1);
    auto push = [&](double x, double y) {
        const Vec3 p(x, y, kSurfaceLift);
        FluenceSample s{p, fluence_at(energy, spec, p)};
        if (profile.samples.empty() || s.fluence > profile.maximum.fluence) {
            profile.maximum = s;
        }
        profile.samples.push_back(s);
    };
    for (std::size_t i = 0; i < nx; ++i) {
        for (std::size_t j = 0; j < ny; ++j) {
            push(xs.min + static_cast<double>(i) * grid, ys.min + static_cast<double>(j) * grid);
        }
    }

    if (parallel && energy > 0.0) {
        // On the axis footprint F(s) ~ exp(-2h^2/w^2)/w^2 peaks at w^2 = 2h^2;
        // candidates are that point and the chip edge farthest from the focus.
        const double h = std::max(spec.focus_position.z(), 0.0);
        const double w0 = focused_waist(spec);
        const double zr = rayleigh_range(w0, spec.wavelength);
        const double ratio = 2.0 * h * h / (w0 * w0) - 1.0;
        const double s_star = ratio > 0.0 ? zr * std::sqrt(ratio) : 0.0;
        const Vec3 base(spec.focus_position.x(), spec.focus_position.y(), 0.0);
        for (double s : {0.0, s_star, -s_star}) {
            Vec3 q = base + s * axis;
            // Clip the candidate onto the chip outline along the axis footprint.
            q.x() = std::clamp(q.x(), xs.min, xs.max);
            q.y() = std::clamp(q.y(), ys.min, ys.max);
            push(q.x(), q.y());
        }
        if (xs.contains(base.x()) && ys.contains(base.y()) && h == 0.0) {
            profile.axis_intersects_chip = true;
        }
    }
    return profile;
}

} // namespace trapablate
