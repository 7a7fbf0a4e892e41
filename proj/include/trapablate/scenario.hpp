#pragma once

#include "trapablate/ablation.hpp"
#include "trapablate/beamoptics.hpp"
#include "trapablate/micromotion.hpp"
#include "trapablate/transport.hpp"
#include "trapablate/trapmodel.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace trapablate {

struct TransportSpec {
    double start = 660e-6;
    double end = 880e-6;
    double step = 3e-6;
};

struct MicromotionSpec {
    Vec3 crater_position = Vec3::Zero();
    /// Residual crater charge; empty means "calibrate to target_peak_field".
    std::optional<double> crater_charge;
    double target_peak_field = 88.95; // [V/m]
    CompensationConfig compensation;
};

struct MetrologySpec {
    double scan_min = -100e-6;
    double scan_max = 200e-6;
    std::size_t samples = 151;
    double noise_fraction = 0.02; // of the noiseless peak
    /// Guide-beam waist at the defect; empty means the focused waist of the beam.
    std::optional<double> guide_waist;
    double confidence = 0.95;
};

struct Scenario {
    std::string name;
    ChipLayout chip;
    BeamSpec beam;
    PowerCalibration calibration;
    MaterialTable materials;
    std::vector<Surface> surfaces;
    DefectDescriptor defect;
    ThermalModel thermal;
    double interpulse_delay = 0.200;
    double safety_factor = 10.0;
    double safety_grid = 5e-6;
    IonSpecies ion;
    RFDrive rf;
    SolverConfig solver;
    TransportSpec transport;
    MicromotionSpec micromotion;
    MetrologySpec metrology;

    /// The document this scenario was parsed from.
    nlohmann::json document;

    SafetyInputs safety_inputs(const BeamSpec& aligned_beam) const;
    double target_curvature() const;
    double guide_waist() const;
};

/// Strict parse: unknown keys, wrong types and broken invariants throw ConfigError.
Scenario parse_scenario(const nlohmann::json& doc);
Scenario load_scenario(const std::string& path);

/// Hex SHA-256 of the document's canonical (sorted-key, compact) serialisation.
std::string scenario_hash(const Scenario& scenario);

/// Path of the scenario named by TRAPABLATE_SCENARIO, if set.
std::optional<std::string> scenario_from_environment();

/// Crater charge from the scenario, or calibrated from the target peak field.
double resolve_crater_charge(const Scenario& scenario);

StrayFieldSource pre_ablation_source(const Scenario& scenario);
StrayFieldSource post_ablation_source(const Scenario& scenario, double crater_charge);

} // namespace trapablate
