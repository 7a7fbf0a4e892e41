#pragma once

#include "trapablate/beamoptics.hpp"
#include "trapablate/trapmodel.hpp"

#include <optional>
#include <string>
#include <vector>

namespace trapablate {

enum class MaterialKind { Au, Al, Steel, Custom };

struct MaterialThreshold {
    MaterialKind kind = MaterialKind::Custom;
    std::string name;          // "Au", "Al", "Steel" or the custom name
    double min_fluence = 0.0;  // J/cm^2
    double max_fluence = 0.0;  // J/cm^2
    std::string pulse_regime_note;

    void validate() const;
};

MaterialKind material_kind_from_name(const std::string& name);

class MaterialTable {
public:
    MaterialTable() = default;
    explicit MaterialTable(std::vector<MaterialThreshold> entries);

    /// Throws ConfigError for unknown material names.
    const MaterialThreshold& lookup(const std::string& name) const;
    const std::vector<MaterialThreshold>& entries() const { return entries_; }

private:
    std::vector<MaterialThreshold> entries_;
};

/// Representative single-pulse ns thresholds for bulk Au, Al and stainless steel.
MaterialTable default_material_table();

struct ThermalModel {
    double diffusivity = 1.3e-4;       // m^2/s (gold)
    double characteristic_length = 100e-6;
    double relaxation_margin = 10.0;   // K

    void validate() const;
};

struct PulseBurst {
    double power_percent = 0.0;
    int pulse_count = 1;
};

struct PulsePlan {
    std::vector<PulseBurst> bursts;
    double interpulse_delay = 0.200;
};

struct ScheduleVerdict {
    bool ok = true;
    double required_delay = 0.0; // K * L^2 / alpha
    std::vector<std::string> violations;
};

/// t_diff = L^2 / alpha.
double thermal_relaxation_time(double length, double diffusivity);

/// ok iff interpulse_delay >= K * t_diff and the plan is well formed.
ScheduleVerdict validate_schedule(const PulsePlan& plan, const ThermalModel& thermal);

/// A region of the chip plane made of one material.
struct Surface {
    std::string id;
    std::string material;
    Interval x;
    Interval y;
};

struct SurfaceExposure {
    std::string surface_id;
    std::string material;
    double max_fluence = 0.0;    // J/cm^2
    double threshold_min = 0.0;  // J/cm^2
    double margin = 0.0;         // threshold_min / max_fluence, +inf when unexposed
    bool pass = true;
};

struct ExposureReport {
    double power_percent = 0.0;
    double pulse_energy = 0.0;      // J
    double defect_fluence = 0.0;    // J/cm^2 delivered to the defect
    double safety_factor = 10.0;
    bool axis_intersects_chip = false;
    std::vector<SurfaceExposure> entries;

    bool pass() const;
};

struct SafetyInputs {
    const BeamSpec& beam;
    const PowerCalibration& calibration;
    const ChipLayout& chip;
    const std::vector<Surface>& surfaces;
    const MaterialTable& materials;
    const DefectDescriptor& defect;
    double safety_factor = 10.0;
    double grid = 5e-6;
};

/// Energy delivered per pulse at the given power, E = F pi w0^2 / 2. Exactly
/// 0% means the laser is off.
double pulse_energy_at_power(const BeamSpec& beam, const PowerCalibration& cal, double power_percent);

/// Highest fluence anywhere on the defect's cross-section seen by the beam.
double defect_fluence(const BeamSpec& beam, double energy, const DefectDescriptor& defect);

/// Chip exposure at the implied pulse energy compared with each surface's
/// minimum ablation threshold. `beam` is used as given (alignment offsets
/// already applied).
ExposureReport safety_check(const SafetyInputs& in, double power_percent);

struct DefectState {
    DefectDescriptor descriptor;
    double height = 0.0;               // remaining height [m]
    double cross_section = 0.0;        // remaining side-view area [m^2]
    bool cleared = false;

    static DefectState intact(const DefectDescriptor& d);
};

/// Threshold removal: fluence >= threshold clears the defect, anything below
/// leaves it untouched. Idempotent once cleared.
DefectState apply_pulse(const DefectState& state, double fluence_at_defect);

} // namespace trapablate
