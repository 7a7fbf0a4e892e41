#pragma once

#include "trapablate/trapmodel.hpp"

#include <cstddef>
#include <utility>
#include <vector>

namespace trapablate {

inline constexpr double kElementaryCharge = 1.602176634e-19; // [C]
inline constexpr double kCoulombConstant = 8.9875517923e9;   // 1/(4 pi eps0) [N m^2/C^2]

struct IonSpecies {
    double mass = 2.838e-25; // 171Yb+ [kg]
    double charge = kElementaryCharge;
    double cooling_wavelength = 369e-9;
    double cooling_k_angle = 0.7853981633974483; // in-plane angle to the rails [rad]

    /// In-plane unit vector of the cooling beam.
    Vec3 k_hat() const;
    double k_magnitude() const;
    void validate() const;
};

struct RFDrive {
    double omega_rf = 2.0 * 3.141592653589793 * 20e6;
    double omega_sec = 2.0 * 3.141592653589793 * 1e6;
    /// Peak RF voltage on the RF rails. Zero means "not yet calibrated".
    double amplitude = 0.0;

    double mathieu_q() const;
    void validate() const;
};

struct PointCharge {
    Vec3 position = Vec3::Zero();
    double charge = 0.0;
};

/// Defect charges above the grounded chip plane; each has an image of
/// opposite sign mirrored in z = 0.
struct StrayFieldSource {
    std::vector<PointCharge> charges;

    static StrayFieldSource none() { return {}; }
    /// Charge Q on the intact particle, at its centre.
    static StrayFieldSource pre_ablation(const Vec3& defect_center, double charge);
    /// Residual charge left in the crater after removal.
    static StrayFieldSource post_ablation(const Vec3& crater_position, double crater_charge);

    StrayFieldSource scaled(double factor) const;
};

Vec3 stray_field(const StrayFieldSource& src, const Vec3& p);

/// Displacement from the RF null x0 = qE/(m w_sec^2).
double rf_null_displacement(const IonSpecies& ion, const RFDrive& rf, double field);
/// Excess micromotion amplitude u = (q_M/2) x0.
double excess_micromotion_amplitude(const IonSpecies& ion, const RFDrive& rf, double field);
Vec3 excess_micromotion_amplitude(const IonSpecies& ion, const RFDrive& rf, const Vec3& field);

/// |k . u| for the cooling beam.
double modulation_index(const IonSpecies& ion, const Vec3& u);
double signed_modulation_index(const IonSpecies& ion, const Vec3& u);

/// Voltage direction driven by one compensation scalar V.
struct CompensationActuator {
    std::vector<std::pair<std::size_t, double>> weights; // (electrode position, volts per volt)

    /// +V on RotationA, -V on RotationB.
    static CompensationActuator rotation_pair(const ChipLayout& chip);
    Voltages voltages(const ChipLayout& chip, double v) const;
};

struct CompensationConfig {
    double v_max = 10.0;
    double nulling_tolerance = 1e-3; // residual beta relative to the uncompensated beta

    void validate() const;
};

struct CompensationResult {
    double axial_position = 0.0;
    double compensation_field = 0.0;   // in-plane actuator field at the ion [V/m]
    double compensation_voltage = 0.0;
    double uncompensated_beta = 0.0;
    double residual_beta = 0.0;
    bool bounded = true;               // false: no null within +/- v_max
};

/// Ion rest point used for micromotion: the RF null line at this axial position.
Vec3 rf_null_point(const ChipLayout& chip, double axial_position);

CompensationResult solve_compensation(const ChipLayout& chip, const IonSpecies& ion, const RFDrive& rf,
                                      const StrayFieldSource& src, double axial_position,
                                      const CompensationActuator& actuator, const CompensationConfig& cfg);

std::vector<CompensationResult> compensation_profile(const ChipLayout& chip, const IonSpecies& ion,
                                                     const RFDrive& rf, const StrayFieldSource& src,
                                                     const std::vector<double>& positions,
                                                     const CompensationActuator& actuator,
                                                     const CompensationConfig& cfg);

struct ProfilePeaks {
    std::size_t peak = 0;
    /// Largest local maximum of the field other than the global peak; absent
    /// when the profile has none.
    std::ptrdiff_t next = -1;
};

ProfilePeaks profile_peaks(const std::vector<CompensationResult>& profile);

struct QuadraticFit {
    double c0 = 0.0;
    double c2 = 0.0;
    double r_squared = 0.0;
    std::size_t points = 0;
};

/// Least-squares fit of y = c0 + c2 (x - center)^2.
QuadraticFit fit_quadratic_about(const std::vector<double>& x, const std::vector<double>& y, double center);

/// Bounded frames before the first unbounded one, fitted about `center`.
QuadraticFit approach_region_fit(const std::vector<CompensationResult>& profile, double center);

/// Crater charge making the frame-sampled peak compensation field equal
/// `target_peak` (secant on Q).
double calibrate_crater_charge(const ChipLayout& chip, const IonSpecies& ion, const RFDrive& rf,
                               const Vec3& crater_position, const std::vector<double>& positions,
                               const CompensationActuator& actuator, const CompensationConfig& cfg,
                               double target_peak);

/// Pseudopotential energy q^2 |E_rf|^2 / (4 m Omega^2) [J].
double pseudopotential(const ChipLayout& chip, const IonSpecies& ion, const RFDrive& rf, const Vec3& p);

/// RF amplitude making the transverse (y) secular frequency, pseudopotential
/// plus DC, equal to omega_sec at the RF null point `p`.
double calibrate_rf_amplitude(const ChipLayout& chip, const IonSpecies& ion, const RFDrive& rf,
                              const Voltages& dc_voltages, const Vec3& p);

struct Equilibrium {
    Vec3 position = Vec3::Zero();
    Mat3 hessian = Mat3::Zero(); // of the total potential energy [J/m^2]
    int iterations = 0;
};

/// Minimum of q phi_dc + pseudopotential near `guess`. Throws SolverFailure
/// when the Hessian there is not positive definite.
Equilibrium find_equilibrium(const ChipLayout& chip, const IonSpecies& ion, const RFDrive& rf,
                             const Voltages& voltages, const Vec3& guess);

/// d(equilibrium)/dV, one column per entry of `electrodes`, central difference
/// with 1 mV steps. Rows are x, y, z [m/V].
Eigen::MatrixXd voltage_to_position_jacobian(const ChipLayout& chip, const IonSpecies& ion, const RFDrive& rf,
                                             const Voltages& voltages, const std::vector<std::size_t>& electrodes,
                                             const Vec3& guess, double step = 1e-3);

} // namespace trapablate
