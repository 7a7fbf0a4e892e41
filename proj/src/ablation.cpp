#include "trapablate/ablation.hpp"

#include "trapablate/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace trapablate {

void MaterialThreshold::validate() const {
    if (!(min_fluence > 0.0) || !(min_fluence <= max_fluence)) {
        throw ConfigError("material " + name + ": threshold range must satisfy 0 < min <= max");
    }
}

MaterialKind material_kind_from_name(const std::string& name) {
    if (name == "Au") {
        return MaterialKind::Au;
    }
    if (name == "Al") {
        return MaterialKind::Al;
    }
    if (name == "Steel") {
        return MaterialKind::Steel;
    }
    return MaterialKind::Custom;
}

MaterialTable::MaterialTable(std::vector<MaterialThreshold> entries) : entries_(std::move(entries)) {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        entries_[i].validate();
        for (std::size_t j = 0; j < i; ++j) {
            if (entries_[j].name == entries_[i].name) {
                throw ConfigError("duplicate material " + entries_[i].name);
            }
        }
    }
}

const MaterialThreshold& MaterialTable::lookup(const std::string& name) const {
    const auto it = std::find_if(entries_.begin(), entries_.end(),
                                 [&](const MaterialThreshold& m) { return m.name == name; });
    if (it == entries_.end()) {
        throw ConfigError("unknown material: " + name);
    }
    return *it;
}

MaterialTable default_material_table() {
    return MaterialTable({
        {MaterialKind::Au, "Au", 1.0, 4.0, "5-10 ns, bulk Au"},
        {MaterialKind::Al, "Al", 2.0, 8.0, "5-10 ns, bulk Al"},
        {MaterialKind::Steel, "Steel", 0.1, 0.3, "5 ns, bulk stainless steel"},
    });
}

void ThermalModel::validate() const {
    if (!(diffusivity > 0.0) || !(characteristic_length > 0.0) || !(relaxation_margin >= 1.0)) {
        throw ConfigError("thermal model needs alpha > 0, L > 0 and K >= 1");
    }
}

double thermal_relaxation_time(double length, double diffusivity) {
    if (!(diffusivity > 0.0)) {
        throw DomainError("thermal diffusivity must be positive");
    }
    if (length < 0.0) {
        throw DomainError("characteristic length must be non-negative");
    }
    return length * length / diffusivity;
}

ScheduleVerdict validate_schedule(const PulsePlan& plan, const ThermalModel& thermal) {
    ScheduleVerdict verdict;
    verdict.required_delay = thermal.relaxation_margin *
                             thermal_relaxation_time(thermal.characteristic_length, thermal.diffusivity);
    if (!(plan.interpulse_delay > 0.0)) {
        verdict.violations.push_back("interpulse delay must be positive");
    }
    if (plan.interpulse_delay < verdict.required_delay) {
        verdict.violations.push_back(fmt::format("interpulse delay {:.4g} s is shorter than K * t_diff = {:.4g} s",
                                                 plan.interpulse_delay, verdict.required_delay));
    }
    for (std::size_t i = 0; i < plan.bursts.size(); ++i) {
        if (plan.bursts[i].pulse_count < 1) {
            verdict.violations.push_back("burst " + std::to_string(i) + " has no pulses");
        }
    }
    verdict.ok = verdict.violations.empty();
    return verdict;
}

bool ExposureReport::pass() const {
    return std::all_of(entries.begin(), entries.end(), [](const SurfaceExposure& e) { return e.pass; });
}

double pulse_energy_at_power(const BeamSpec& beam, const PowerCalibration& cal, double power_percent) {
    if (power_percent == 0.0) {
        return 0.0;
    }
    return pulse_energy_for_peak_fluence(percent_to_fluence(cal, power_percent), focused_waist(beam));
}

double defect_fluence(const BeamSpec& beam, double energy, const DefectDescriptor& defect) {
    // Nearest point of the defect body to the beam axis; the axis runs along
    // the propagation direction through the focus.
    const Vec3 axis = beam.propagation_axis.normalized();
    const Vec3 lo(defect.center.x() - 0.5 * defect.footprint_axial,
                  defect.center.y() - 0.5 * defect.footprint_transverse, 0.0);
    const Vec3 hi(defect.center.x() + 0.5 * defect.footprint_axial,
                  defect.center.y() + 0.5 * defect.footprint_transverse, defect.height);
    // Closest point on the box to the axis line, found by projecting the focus
    // displacement perpendicular to the axis and clamping into the box.
    const Vec3 f = beam.focus_position;
    Vec3 target = f.cwiseMax(lo).cwiseMin(hi);
    for (int iter = 0; iter < 8; ++iter) {
        const double s = (target - f).dot(axis);
        const Vec3 foot = f + s * axis;
        target = foot.cwiseMax(lo).cwiseMin(hi);
    }
    target.z() = std::max(target.z(), 1e-12);
    return fluence_at(energy, beam, target);
}

ExposureReport safety_check(const SafetyInputs& in, double power_percent) {
    ExposureReport report;
    report.power_percent = power_percent;
    report.safety_factor = in.safety_factor;
    report.pulse_energy = pulse_energy_at_power(in.beam, in.calibration, power_percent);
    report.defect_fluence = defect_fluence(in.beam, report.pulse_energy, in.defect);

    const ExposureProfile profile = chip_exposure_profile(in.beam, report.pulse_energy, in.chip, in.grid);
    report.axis_intersects_chip = profile.axis_intersects_chip;

    for (const auto& surface : in.surfaces) {
        const MaterialThreshold& mat = in.materials.lookup(surface.material);
        SurfaceExposure entry;
        entry.surface_id = surface.id;
        entry.material = surface.material;
        entry.threshold_min = mat.min_fluence;
        for (const auto& s : profile.samples) {
            if (surface.x.contains(s.position.x()) && surface.y.contains(s.position.y())) {
                entry.max_fluence = std::max(entry.max_fluence, s.fluence);
            }
        }
        entry.margin = entry.max_fluence > 0.0 ? entry.threshold_min / entry.max_fluence
                                               : std::numeric_limits<double>::infinity();
        entry.pass = entry.margin >= in.safety_factor;
        report.entries.push_back(entry);
    }
    return report;
}

DefectState DefectState::intact(const DefectDescriptor& d) {
    DefectState s;
    s.descriptor = d;
    s.height = d.height;
    s.cross_section = d.height * d.footprint_axial;
    return s;
}

DefectState apply_pulse(const DefectState& state, double fluence_at_defect) {
    if (fluence_at_defect < 0.0) {
        throw DomainError("fluence must be non-negative");
    }
    if (state.cleared) {
        return state;
    }
    DefectState next = state;
    if (fluence_at_defect >= state.descriptor.ablation_threshold) {
        next.cleared = true;
        next.height = 0.0;
        next.cross_section = 0.0;
    }
    return next;
}

} // namespace trapablate
