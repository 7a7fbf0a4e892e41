#pragma once

#include "trapablate/trapmodel.hpp"

#include <utility>
#include <vector>

namespace trapablate {

// Fluences in this module are reported in J/cm^2; lengths and energies are SI.
inline constexpr double kJoulePerM2PerJoulePerCm2 = 1.0e4;

struct BeamSpec {
    double wavelength = 532e-9;
    double pulse_duration = 1.5e-9;
    double max_pulse_energy = 2e-3;
    double input_waist_radius = 0.856e-3; // 1/e^2 radius of the expanded beam at the lens
    double lens_focal_length = 0.150;
    Vec3 focus_position = Vec3::Zero();
    Vec3 propagation_axis = Vec3::UnitY();

    void validate() const;
    /// Copy with the focus shifted by (dx axial, dz height).
    BeamSpec offset(double dx, double dz) const;
};

/// Monotone percent -> on-target fluence map defined by anchor points.
struct PowerCalibration {
    std::vector<std::pair<double, double>> anchors{{10.0, 0.56}, {80.0, 6.8}};

    void validate() const;
    double min_percent() const { return anchors.front().first; }
    double max_percent() const { return anchors.back().first; }
};

struct FluenceSample {
    Vec3 position = Vec3::Zero();
    double fluence = 0.0; // J/cm^2
};

struct ExposureProfile {
    std::vector<FluenceSample> samples;
    FluenceSample maximum;
    /// The beam axis meets or runs below the chip plane inside the chip outline.
    bool axis_intersects_chip = false;
};

/// Diffraction-limited focus of a collimated Gaussian beam, lambda f / (pi W).
double focused_waist(const BeamSpec& spec);
double rayleigh_range(double w0, double wavelength);
/// w(z) = w0 sqrt(1 + (z / z_R)^2).
double beam_radius(double w0, double z, double wavelength);

/// Gaussian pulse fluence [J/cm^2] at point p for pulse energy E [J].
double fluence_at(double energy, const BeamSpec& spec, const Vec3& p);

/// On-axis focal fluence [J/cm^2] for energy E, 2E / (pi w0^2).
double peak_fluence(double energy, double w0);
/// Inverse of peak_fluence: energy [J] delivering `fluence` [J/cm^2] on axis.
double pulse_energy_for_peak_fluence(double fluence, double w0);

/// Piecewise-linear interpolation between calibration anchors. RangeError
/// outside [first, last]; no extrapolation.
double percent_to_fluence(const PowerCalibration& cal, double percent);

/// Samples fluence on the chip surface (z = 0+) over the electrode outline at
/// the given grid spacing. The analytic maximum-exposure point is always
/// included when the axis is parallel to the chip.
ExposureProfile chip_exposure_profile(const BeamSpec& spec, double energy, const ChipLayout& chip,
                                      double grid);

} // namespace trapablate
