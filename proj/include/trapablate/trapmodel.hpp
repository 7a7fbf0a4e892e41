#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

namespace trapablate {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Voltages = Eigen::VectorXd;

enum class ElectrodeRole { DC, RF, RotationA, RotationB };

std::string to_string(ElectrodeRole role);
ElectrodeRole parse_electrode_role(const std::string& text);

struct Interval {
    double min = 0.0;
    double max = 0.0;

    double width() const { return max - min; }
    double center() const { return 0.5 * (min + max); }
    bool contains(double v) const { return v >= min && v <= max; }
};

struct Electrode {
    std::string name;
    int index = 0; // numbered from the central gap; shared by nothing else of the same role
    ElectrodeRole role = ElectrodeRole::DC;
    Interval x;    // axial extent [m]
    Interval y;    // transverse extent [m]
};

/// Planar chip: rectangular electrodes embedded in a grounded plane at z = 0.
/// Everything not covered by an electrode is ground.
struct ChipLayout {
    std::vector<Electrode> electrodes;
    double dc_pitch = 0.0;
    double ion_height = 0.0;

    std::size_t size() const { return electrodes.size(); }

    /// Position in `electrodes` of the electrode with this role and index.
    std::size_t find(ElectrodeRole role, int index) const;
    std::size_t dc(int index) const { return find(ElectrodeRole::DC, index); }
    /// The unique rail of the given role; throws ConfigError when absent.
    std::size_t rail(ElectrodeRole role) const;
    std::vector<std::size_t> indices_of(ElectrodeRole role) const;

    Interval x_span() const;
    Interval y_span() const;
    /// Axial extent covered by DC electrodes.
    Interval dc_span() const;

    /// Throws ConfigError on broken invariants.
    void validate() const;
};

/// Default geometry: 11 centre DC segments at 110 um pitch, RF rails whose
/// gapless null sits at 100 um, and rotation rails outboard of the RF.
ChipLayout default_layout();

struct DefectDescriptor {
    Vec3 center = Vec3::Zero();   // [m]; z is the mid-height of the particle
    double footprint_axial = 0.0; // [m]
    double footprint_transverse = 0.0;
    double height = 0.0;          // [m]
    double charge = 0.0;          // [C]
    double ablation_threshold = 0.0; // [J/cm^2]

    void validate() const;
};

/// Potential per applied volt of a single electrode, all others grounded.
/// Gapless half-space solution (solid angle / 2 pi); lies in [0, 1].
double electrode_basis_potential(const Electrode& e, const Vec3& p);
Vec3 electrode_basis_gradient(const Electrode& e, const Vec3& p);
Mat3 electrode_basis_hessian(const Electrode& e, const Vec3& p);

double total_potential(const ChipLayout& chip, const Voltages& voltages, const Vec3& p);

/// -grad(total_potential), evaluated from the analytic gradient.
Vec3 static_field(const ChipLayout& chip, const Voltages& voltages, const Vec3& p);
Mat3 potential_hessian(const ChipLayout& chip, const Voltages& voltages, const Vec3& p);

/// Height of the RF null above (x, 0), searched in [ion_height/2, 3 ion_height/2].
/// Returns ion_height for a chip without RF electrodes.
double rf_null_height(const ChipLayout& chip, double x);

/// Point on the trap axis: (x, 0, rf_null_height(x)).
Vec3 trap_axis_point(const ChipLayout& chip, double x);

} // namespace trapablate
