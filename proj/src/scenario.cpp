#include "trapablate/scenario.hpp"

#include "trapablate/errors.hpp"
#include "trapablate/hashing.hpp"

#include <fmt/format.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <numbers>
#include <string_view>

namespace trapablate {
namespace {

using nlohmann::json;

class Section {
public:
    Section(const json& j, std::string path, std::initializer_list<std::string_view> allowed)
        : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            throw ConfigError(path_ + ": expected an object");
        }
        for (const auto& [key, value] : j_.items()) {
            bool known = false;
            for (auto a : allowed) {
                known = known || key == a;
            }
            if (!known) {
                throw ConfigError(fmt::format("{}: unknown key \"{}\"", path_, key));
            }
        }
    }

    bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }
    const json& at(const char* key) const {
        if (!j_.contains(key)) {
            throw ConfigError(fmt::format("{}: missing key \"{}\"", path_, key));
        }
        return j_.at(key);
    }
    std::string where(const char* key) const { return path_ + "." + key; }

    double num(const char* key) const { return number(at(key), where(key)); }
    double num(const char* key, double fallback) const { return has(key) ? num(key) : fallback; }

    std::string str(const char* key, std::string fallback) const {
        if (!has(key)) {
            return fallback;
        }
        if (!at(key).is_string()) {
            throw ConfigError(where(key) + ": expected a string");
        }
        return at(key).get<std::string>();
    }

    long long integer(const char* key, long long fallback) const {
        if (!has(key)) {
            return fallback;
        }
        const json& v = at(key);
        if (!v.is_number_integer()) {
            throw ConfigError(where(key) + ": expected an integer");
        }
        return v.get<long long>();
    }

    Vec3 vec3(const char* key, const Vec3& fallback) const {
        if (!has(key)) {
            return fallback;
        }
        const json& v = at(key);
        if (!v.is_array() || v.size() != 3) {
            throw ConfigError(where(key) + ": expected [x, y, z]");
        }
        return Vec3(number(v[0], where(key)), number(v[1], where(key)), number(v[2], where(key)));
    }

    Interval interval(const char* key) const {
        const json& v = at(key);
        if (!v.is_array() || v.size() != 2) {
            throw ConfigError(where(key) + ": expected [min, max]");
        }
        Interval out{number(v[0], where(key)), number(v[1], where(key))};
        if (!(out.max > out.min)) {
            throw ConfigError(where(key) + ": needs max > min");
        }
        return out;
    }

    static double number(const json& v, const std::string& where) {
        if (!v.is_number()) {
            throw ConfigError(where + ": expected a number");
        }
        const double d = v.get<double>();
        if (!std::isfinite(d)) {
            throw ConfigError(where + ": not finite");
        }
        return d;
    }

private:
    const json& j_;
    std::string path_;
};

ChipLayout parse_chip(const json& j) {
    Section s(j, "chip", {"preset", "ion_height", "dc_pitch", "electrodes"});
    if (s.has("preset")) {
        if (s.str("preset", "") != "default") {
            throw ConfigError("chip.preset: only \"default\" is known");
        }
        if (s.has("electrodes")) {
            throw ConfigError("chip: preset and electrodes are mutually exclusive");
        }
        ChipLayout chip = default_layout();
        chip.ion_height = s.num("ion_height", chip.ion_height);
        return chip;
    }
    ChipLayout chip;
    chip.ion_height = s.num("ion_height");
    chip.dc_pitch = s.num("dc_pitch");
    const json& list = s.at("electrodes");
    if (!list.is_array()) {
        throw ConfigError("chip.electrodes: expected an array");
    }
    for (std::size_t i = 0; i < list.size(); ++i) {
        Section e(list[i], fmt::format("chip.electrodes[{}]", i), {"name", "role", "index", "x", "y"});
        Electrode el;
        el.name = e.str("name", "");
        try {
            el.role = parse_electrode_role(e.str("role", ""));
        } catch (const std::exception& err) {
            throw ConfigError(e.where("role") + ": " + err.what());
        }
        el.index = static_cast<int>(e.integer("index", 0));
        el.x = e.interval("x");
        el.y = e.interval("y");
        chip.electrodes.push_back(el);
    }
    return chip;
}

BeamSpec parse_beam(const json& j) {
    Section s(j, "beam", {"wavelength", "pulse_duration", "max_pulse_energy", "input_waist_radius",
                          "lens_focal_length", "focus_position", "propagation_axis"});
    BeamSpec b;
    b.wavelength = s.num("wavelength", b.wavelength);
    b.pulse_duration = s.num("pulse_duration", b.pulse_duration);
    b.max_pulse_energy = s.num("max_pulse_energy", b.max_pulse_energy);
    b.input_waist_radius = s.num("input_waist_radius", b.input_waist_radius);
    b.lens_focal_length = s.num("lens_focal_length", b.lens_focal_length);
    b.focus_position = s.vec3("focus_position", b.focus_position);
    b.propagation_axis = s.vec3("propagation_axis", b.propagation_axis);
    return b;
}

PowerCalibration parse_calibration(const json& j) {
    Section s(j, "calibration", {"anchors"});
    PowerCalibration cal;
    const json& list = s.at("anchors");
    if (!list.is_array()) {
        throw ConfigError("calibration.anchors: expected an array");
    }
    cal.anchors.clear();
    for (const auto& a : list) {
        if (!a.is_array() || a.size() != 2) {
            throw ConfigError("calibration.anchors: expected [percent, fluence] pairs");
        }
        cal.anchors.emplace_back(Section::number(a[0], "calibration.anchors"),
                                 Section::number(a[1], "calibration.anchors"));
    }
    return cal;
}

MaterialTable parse_materials(const json& j) {
    if (!j.is_array()) {
        throw ConfigError("materials: expected an array");
    }
    std::vector<MaterialThreshold> entries;
    for (std::size_t i = 0; i < j.size(); ++i) {
        Section s(j[i], fmt::format("materials[{}]", i), {"material", "min", "max", "note"});
        MaterialThreshold m;
        m.name = s.str("material", "");
        m.kind = material_kind_from_name(m.name);
        m.min_fluence = s.num("min");
        m.max_fluence = s.num("max");
        m.pulse_regime_note = s.str("note", "");
        entries.push_back(m);
    }
    return MaterialTable(std::move(entries));
}

std::vector<Surface> parse_surfaces(const json& j) {
    if (!j.is_array()) {
        throw ConfigError("surfaces: expected an array");
    }
    std::vector<Surface> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        Section s(j[i], fmt::format("surfaces[{}]", i), {"id", "material", "x", "y"});
        out.push_back({s.str("id", ""), s.str("material", ""), s.interval("x"), s.interval("y")});
    }
    return out;
}

DefectDescriptor parse_defect(const json& j) {
    Section s(j, "defect",
              {"center", "footprint_axial", "footprint_transverse", "height", "charge", "ablation_threshold"});
    DefectDescriptor d;
    d.center = s.vec3("center", d.center);
    d.footprint_axial = s.num("footprint_axial");
    d.footprint_transverse = s.num("footprint_transverse");
    d.height = s.num("height");
    d.charge = s.num("charge", 0.0);
    d.ablation_threshold = s.num("ablation_threshold");
    return d;
}

SolverConfig parse_solver(const json& j) {
    Section s(j, "solver",
              {"v_max", "smoothness_weight", "voltage_weight", "field_weight", "curvature_weight", "field_scale",
               "position_tolerance", "curvature_tolerance", "convergence_tolerance", "max_iterations"});
    SolverConfig c;
    c.v_max = s.num("v_max", c.v_max);
    c.smoothness_weight = s.num("smoothness_weight", c.smoothness_weight);
    c.voltage_weight = s.num("voltage_weight", c.voltage_weight);
    c.field_weight = s.num("field_weight", c.field_weight);
    c.curvature_weight = s.num("curvature_weight", c.curvature_weight);
    c.field_scale = s.num("field_scale", c.field_scale);
    c.position_tolerance = s.num("position_tolerance", c.position_tolerance);
    c.curvature_tolerance = s.num("curvature_tolerance", c.curvature_tolerance);
    c.convergence_tolerance = s.num("convergence_tolerance", c.convergence_tolerance);
    c.max_iterations = static_cast<int>(s.integer("max_iterations", c.max_iterations));
    return c;
}

} // namespace

SafetyInputs Scenario::safety_inputs(const BeamSpec& aligned_beam) const {
    return SafetyInputs{aligned_beam, calibration, chip, surfaces, materials, defect, safety_factor, safety_grid};
}

double Scenario::target_curvature() const {
    return axial_curvature_for_frequency(ion.mass, ion.charge, rf.omega_sec);
}

double Scenario::guide_waist() const { return metrology.guide_waist.value_or(focused_waist(beam)); }

Scenario parse_scenario(const nlohmann::json& doc) {
    Section top(doc, "scenario",
                {"name", "chip", "beam", "calibration", "materials", "surfaces", "defect", "thermal", "schedule",
                 "safety", "ion", "rf", "solver", "transport", "micromotion", "metrology"});
    Scenario sc;
    sc.document = doc;
    sc.name = top.str("name", "unnamed");
    sc.chip = top.has("chip") ? parse_chip(top.at("chip")) : default_layout();
    if (top.has("beam")) {
        sc.beam = parse_beam(top.at("beam"));
    }
    if (top.has("calibration")) {
        sc.calibration = parse_calibration(top.at("calibration"));
    }
    sc.materials = top.has("materials") ? parse_materials(top.at("materials")) : default_material_table();
    if (top.has("surfaces")) {
        sc.surfaces = parse_surfaces(top.at("surfaces"));
    } else {
        sc.surfaces.push_back({"electrodes", "Au", sc.chip.x_span(), sc.chip.y_span()});
    }
    sc.defect = parse_defect(top.at("defect"));
    if (top.has("thermal")) {
        Section s(top.at("thermal"), "thermal", {"diffusivity", "characteristic_length", "relaxation_margin"});
        sc.thermal.diffusivity = s.num("diffusivity", sc.thermal.diffusivity);
        sc.thermal.characteristic_length = s.num("characteristic_length", sc.thermal.characteristic_length);
        sc.thermal.relaxation_margin = s.num("relaxation_margin", sc.thermal.relaxation_margin);
    }
    if (top.has("schedule")) {
        Section s(top.at("schedule"), "schedule", {"interpulse_delay"});
        sc.interpulse_delay = s.num("interpulse_delay", sc.interpulse_delay);
    }
    if (top.has("safety")) {
        Section s(top.at("safety"), "safety", {"safety_factor", "grid"});
        sc.safety_factor = s.num("safety_factor", sc.safety_factor);
        sc.safety_grid = s.num("grid", sc.safety_grid);
    }
    if (top.has("ion")) {
        Section s(top.at("ion"), "ion", {"mass", "charge", "cooling_wavelength", "cooling_k_angle_deg"});
        sc.ion.mass = s.num("mass", sc.ion.mass);
        sc.ion.charge = s.num("charge", sc.ion.charge);
        sc.ion.cooling_wavelength = s.num("cooling_wavelength", sc.ion.cooling_wavelength);
        sc.ion.cooling_k_angle =
            s.num("cooling_k_angle_deg", sc.ion.cooling_k_angle * 180.0 / std::numbers::pi) * std::numbers::pi /
            180.0;
    }
    if (top.has("rf")) {
        Section s(top.at("rf"), "rf", {"drive_frequency_hz", "secular_frequency_hz", "amplitude"});
        constexpr double two_pi = 2.0 * std::numbers::pi;
        sc.rf.omega_rf = two_pi * s.num("drive_frequency_hz", sc.rf.omega_rf / two_pi);
        sc.rf.omega_sec = two_pi * s.num("secular_frequency_hz", sc.rf.omega_sec / two_pi);
        sc.rf.amplitude = s.num("amplitude", sc.rf.amplitude);
    }
    if (top.has("solver")) {
        sc.solver = parse_solver(top.at("solver"));
    }
    if (top.has("transport")) {
        Section s(top.at("transport"), "transport", {"start", "end", "step"});
        sc.transport.start = s.num("start", sc.transport.start);
        sc.transport.end = s.num("end", sc.transport.end);
        sc.transport.step = s.num("step", sc.transport.step);
    }
    sc.micromotion.crater_position = sc.defect.center;
    if (top.has("micromotion")) {
        Section s(top.at("micromotion"), "micromotion",
                  {"crater_position", "crater_charge", "target_peak_field", "v_max", "nulling_tolerance"});
        sc.micromotion.crater_position = s.vec3("crater_position", sc.micromotion.crater_position);
        if (s.has("crater_charge")) {
            const json& q = s.at("crater_charge");
            if (q.is_string()) {
                if (q.get<std::string>() != "calibrate") {
                    throw ConfigError("micromotion.crater_charge: expected a number or \"calibrate\"");
                }
            } else {
                sc.micromotion.crater_charge = s.num("crater_charge");
            }
        }
        sc.micromotion.target_peak_field = s.num("target_peak_field", sc.micromotion.target_peak_field);
        sc.micromotion.compensation.v_max = s.num("v_max", sc.micromotion.compensation.v_max);
        sc.micromotion.compensation.nulling_tolerance =
            s.num("nulling_tolerance", sc.micromotion.compensation.nulling_tolerance);
    }
    if (top.has("metrology")) {
        Section s(top.at("metrology"), "metrology",
                  {"scan_min", "scan_max", "samples", "noise_fraction", "guide_waist", "confidence"});
        sc.metrology.scan_min = s.num("scan_min", sc.metrology.scan_min);
        sc.metrology.scan_max = s.num("scan_max", sc.metrology.scan_max);
        const long long n = s.integer("samples", static_cast<long long>(sc.metrology.samples));
        if (n < 20) {
            throw ConfigError("metrology.samples: need at least 20");
        }
        sc.metrology.samples = static_cast<std::size_t>(n);
        sc.metrology.noise_fraction = s.num("noise_fraction", sc.metrology.noise_fraction);
        if (s.has("guide_waist")) {
            sc.metrology.guide_waist = s.num("guide_waist");
        }
        sc.metrology.confidence = s.num("confidence", sc.metrology.confidence);
    }

    sc.chip.validate();
    sc.beam.validate();
    sc.calibration.validate();
    sc.defect.validate();
    sc.thermal.validate();
    sc.ion.validate();
    sc.rf.validate();
    sc.solver.validate();
    sc.micromotion.compensation.validate();
    for (const auto& surface : sc.surfaces) {
        sc.materials.lookup(surface.material);
    }
    if (!(sc.interpulse_delay > 0.0)) {
        throw ConfigError("schedule.interpulse_delay must be positive");
    }
    if (!(sc.safety_factor > 0.0) || !(sc.safety_grid > 0.0)) {
        throw ConfigError("safety factor and grid must be positive");
    }
    const Interval span = sc.chip.dc_span();
    if (!span.contains(sc.transport.start) || !span.contains(sc.transport.end) || !(sc.transport.step > 0.0)) {
        throw ConfigError("transport start/end must lie in the DC span and step must be positive");
    }
    if (!(sc.metrology.scan_max > sc.metrology.scan_min) || sc.metrology.noise_fraction < 0.0 ||
        !(sc.metrology.confidence > 0.0 && sc.metrology.confidence < 1.0) ||
        (sc.metrology.guide_waist && !(*sc.metrology.guide_waist > 0.0))) {
        throw ConfigError("metrology block out of range");
    }
    if (!(sc.micromotion.crater_position.z() > 0.0) || !(sc.micromotion.target_peak_field > 0.0)) {
        throw ConfigError("micromotion crater must sit above the plane with a positive target field");
    }
    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open scenario " + path);
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& err) {
        throw ConfigError("scenario " + path + ": " + err.what());
    }
    return parse_scenario(doc);
}

std::string scenario_hash(const Scenario& scenario) { return sha256_hex(scenario.document.dump()); }

std::optional<std::string> scenario_from_environment() {
    if (const char* env = std::getenv("TRAPABLATE_SCENARIO"); env != nullptr && *env != '\0') {
        return std::string(env);
    }
    return std::nullopt;
}

double resolve_crater_charge(const Scenario& sc) {
    if (sc.micromotion.crater_charge) {
        return *sc.micromotion.crater_charge;
    }
    const auto positions = transport_positions(sc.transport.start, sc.transport.end, sc.transport.step);
    return calibrate_crater_charge(sc.chip, sc.ion, sc.rf, sc.micromotion.crater_position, positions,
                                   CompensationActuator::rotation_pair(sc.chip), sc.micromotion.compensation,
                                   sc.micromotion.target_peak_field);
}

StrayFieldSource pre_ablation_source(const Scenario& sc) {
    return StrayFieldSource::pre_ablation(sc.defect.center, sc.defect.charge);
}

StrayFieldSource post_ablation_source(const Scenario& sc, double crater_charge) {
    return StrayFieldSource::post_ablation(sc.micromotion.crater_position, crater_charge);
}

} // namespace trapablate
