#pragma once

#include "trapablate/trapmodel.hpp"

#include <string>
#include <vector>

namespace trapablate {

struct WellTarget {
    double axial_position = 0.0;          // [m]
    double target_axial_curvature = 0.0;  // d2(phi)/dx2 [V/m^2]
    /// Require all three static field components to vanish at the target.
    /// When false only the axial component (which places the well) is held.
    bool field_null = true;
};

struct SolverConfig {
    double v_max = 10.0;
    double smoothness_weight = 1e-3;  // lambda_s on ||v - warm_start||^2
    double voltage_weight = 3e-4;     // voltage-economy row weight mu on ||v||^2
    double field_weight = 1.0;
    double curvature_weight = 1.0;
    double field_scale = 1e-6;        // field rows are expressed as well offset in units of this length
    double position_tolerance = 0.1e-6;
    double curvature_tolerance = 0.05; // relative
    double convergence_tolerance = 1e-10;
    int max_iterations = 1000;

    void validate() const;
};

struct FrameSolution {
    Voltages voltages;             // one entry per chip electrode; non-DC entries are zero
    double well_position = 0.0;    // axial minimum of the realised potential
    double field_residual = 0.0;   // |static field| at the target [V/m]
    double curvature = 0.0;        // realised d2(phi)/dx2 at the target
    double projected_gradient_norm = 0.0;
    int iterations = 0;
};

struct Waveform {
    std::vector<std::string> electrode_names;
    std::vector<double> positions;   // target well position of each frame
    std::vector<Voltages> frames;
    double step_size = 3e-6;
    double start = 0.0;
    double end = 0.0;

    std::size_t size() const { return frames.size(); }
};

/// Curvature giving secular frequency omega for a particle of mass m and charge q.
double axial_curvature_for_frequency(double mass, double charge, double omega);

/// Frame target positions from start to end: full steps, then one short
/// remainder step if the span is not a multiple of `step`.
std::vector<double> transport_positions(double start, double end, double step);

/// Axial minimum of the potential near `guess` along (x, 0, ion_height).
double realized_well_position(const ChipLayout& chip, const Voltages& voltages, double guess);

/// Box-constrained regularised least squares on the DC electrodes:
/// min ||A v - b||^2 + mu ||v||^2 + lambda_s ||v - warm||^2, |v_i| <= V_max.
/// Throws SolverFailure when the realised well misses its tolerances.
FrameSolution solve_frame(const ChipLayout& chip, const WellTarget& target, const Voltages& warm_start,
                          const SolverConfig& cfg);

/// Sequential warm-started frame solves from start to end. The first frame
/// is solved without the smoothness term.
Waveform synthesize_waveform(const ChipLayout& chip, double start, double end, double step,
                             double target_curvature, const SolverConfig& cfg);

/// +dv on RotationA and -dv on RotationB in every frame.
Waveform apply_rotation_offset(const Waveform& waveform, double dv, const ChipLayout& chip);

} // namespace trapablate
