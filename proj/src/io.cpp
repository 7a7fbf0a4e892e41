#include "trapablate/io.hpp"

#include "trapablate/errors.hpp"

#include <fmt/format.h>

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace trapablate {
namespace {

using nlohmann::json;

constexpr double kUm = 1e6;

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        if (!cell.empty() && cell.back() == '\r') {
            cell.pop_back();
        }
        out.push_back(cell);
    }
    return out;
}

double parse_double(const std::string& s, std::size_t line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) {
            throw std::invalid_argument(s);
        }
        return v;
    } catch (const std::exception&) {
        throw ConfigError(fmt::format("CSV line {}: \"{}\" is not a number", line, s));
    }
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

} // namespace

void write_fluence_csv(std::ostream& out, const ExposureProfile& profile) {
    out << "x_um,y_um,fluence_j_per_cm2\n";
    for (const auto& s : profile.samples) {
        out << fmt::format("{:.6f},{:.6f},{:.9g}\n", s.position.x() * kUm, s.position.y() * kUm, s.fluence);
    }
}

json fluence_json(const ExposureProfile& profile) {
    json samples = json::array();
    for (const auto& s : profile.samples) {
        samples.push_back({s.position.x() * kUm, s.position.y() * kUm, s.fluence});
    }
    return {{"columns", {"x_um", "y_um", "fluence_j_per_cm2"}},
            {"samples", samples},
            {"maximum",
             {{"x_um", profile.maximum.position.x() * kUm},
              {"y_um", profile.maximum.position.y() * kUm},
              {"fluence_j_per_cm2", profile.maximum.fluence}}},
            {"axis_intersects_chip", profile.axis_intersects_chip}};
}

json exposure_report_json(const ExposureReport& report) {
    json entries = json::array();
    for (const auto& e : report.entries) {
        entries.push_back({{"surface", e.surface_id},
                           {"material", e.material},
                           {"max_fluence_j_per_cm2", e.max_fluence},
                           {"threshold_min_j_per_cm2", e.threshold_min},
                           {"margin", finite_or_null(e.margin)},
                           {"pass", e.pass}});
    }
    return {{"power_percent", report.power_percent},
            {"pulse_energy_j", report.pulse_energy},
            {"defect_fluence_j_per_cm2", report.defect_fluence},
            {"safety_factor", report.safety_factor},
            {"axis_intersects_chip", report.axis_intersects_chip},
            {"entries", entries},
            {"pass", report.pass()}};
}

std::string exposure_report_text(const ExposureReport& report) {
    std::string out = fmt::format("power {:g}%  pulse energy {:.4g} uJ  defect fluence {:.4g} J/cm^2\n",
                                  report.power_percent, report.pulse_energy * 1e6, report.defect_fluence);
    for (const auto& e : report.entries) {
        const std::string margin = std::isfinite(e.margin) ? fmt::format("{:.1f}", e.margin) : "inf";
        out += fmt::format("  {:<12} {:<6} max {:.4g} J/cm^2  threshold {:g}  margin {}  {}\n", e.surface_id,
                           e.material, e.max_fluence, e.threshold_min, margin, e.pass ? "PASS" : "FAIL");
    }
    if (report.axis_intersects_chip) {
        out += "  warning: beam axis meets the chip plane\n";
    }
    out += fmt::format("verdict: {} (safety factor {:g})\n", report.pass() ? "PASS" : "FAIL", report.safety_factor);
    return out;
}

json schedule_verdict_json(const ScheduleVerdict& verdict) {
    return {{"ok", verdict.ok}, {"required_delay_s", verdict.required_delay}, {"violations", verdict.violations}};
}

void write_waveform_csv(std::ostream& out, const Waveform& waveform) {
    out << "frame,position_um";
    for (const auto& name : waveform.electrode_names) {
        out << ',' << name;
    }
    out << '\n';
    for (std::size_t i = 0; i < waveform.frames.size(); ++i) {
        out << i << fmt::format(",{:.17g}", waveform.positions[i] * kUm);
        for (Eigen::Index j = 0; j < waveform.frames[i].size(); ++j) {
            out << fmt::format(",{:.17g}", waveform.frames[i][j]);
        }
        out << '\n';
    }
}

json waveform_json(const Waveform& waveform) {
    json frames = json::array();
    for (std::size_t i = 0; i < waveform.frames.size(); ++i) {
        const auto& f = waveform.frames[i];
        frames.push_back({{"position", waveform.positions[i]},
                          {"voltages", std::vector<double>(f.data(), f.data() + f.size())}});
    }
    return {{"electrodes", waveform.electrode_names},
            {"start", waveform.start},
            {"end", waveform.end},
            {"step_size", waveform.step_size},
            {"frames", frames}};
}

Waveform read_waveform_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ConfigError("waveform CSV is empty");
    }
    const auto header = split_csv(line);
    if (header.size() < 3 || header[0] != "frame" || header[1] != "position_um") {
        throw ConfigError("waveform CSV header must start with frame,position_um");
    }
    Waveform wf;
    wf.electrode_names.assign(header.begin() + 2, header.end());
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        const auto cells = split_csv(line);
        if (cells.size() != header.size()) {
            throw ConfigError(fmt::format("waveform CSV line {}: expected {} columns", lineno, header.size()));
        }
        if (parse_double(cells[0], lineno) != static_cast<double>(wf.frames.size())) {
            throw ConfigError(fmt::format("waveform CSV line {}: frames out of order", lineno));
        }
        wf.positions.push_back(parse_double(cells[1], lineno) / kUm);
        Voltages v(static_cast<Eigen::Index>(wf.electrode_names.size()));
        for (std::size_t j = 2; j < cells.size(); ++j) {
            v[static_cast<Eigen::Index>(j - 2)] = parse_double(cells[j], lineno);
        }
        wf.frames.push_back(v);
    }
    if (wf.frames.empty()) {
        throw ConfigError("waveform CSV has no frames");
    }
    wf.start = wf.positions.front();
    wf.end = wf.positions.back();
    wf.step_size = 0.0;
    for (std::size_t i = 1; i < wf.positions.size(); ++i) {
        wf.step_size = std::max(wf.step_size, std::abs(wf.positions[i] - wf.positions[i - 1]));
    }
    return wf;
}

Waveform waveform_from_json(const json& doc) {
    try {
        Waveform wf;
        wf.electrode_names = doc.at("electrodes").get<std::vector<std::string>>();
        wf.start = doc.at("start").get<double>();
        wf.end = doc.at("end").get<double>();
        wf.step_size = doc.at("step_size").get<double>();
        for (const auto& f : doc.at("frames")) {
            wf.positions.push_back(f.at("position").get<double>());
            const auto v = f.at("voltages").get<std::vector<double>>();
            if (v.size() != wf.electrode_names.size()) {
                throw ConfigError("waveform JSON frame has the wrong number of voltages");
            }
            wf.frames.push_back(Eigen::Map<const Voltages>(v.data(), static_cast<Eigen::Index>(v.size())));
        }
        return wf;
    } catch (const json::exception& err) {
        throw ConfigError(std::string("waveform JSON: ") + err.what());
    }
}

void write_compensation_csv(std::ostream& out, const std::vector<CompensationResult>& profile) {
    out << "axial_position_um,compensation_field_v_per_m,compensation_voltage_v,residual_beta,bounded\n";
    for (const auto& r : profile) {
        out << fmt::format("{:.6f},{:.9g},{:.9g},{:.6g},{}\n", r.axial_position * kUm, r.compensation_field,
                           r.compensation_voltage, r.residual_beta, r.bounded ? 1 : 0);
    }
}

json compensation_json(const std::vector<CompensationResult>& profile) {
    json rows = json::array();
    for (const auto& r : profile) {
        rows.push_back({{"axial_position_um", r.axial_position * kUm},
                        {"compensation_field_v_per_m", r.compensation_field},
                        {"compensation_voltage_v", r.compensation_voltage},
                        {"uncompensated_beta", r.uncompensated_beta},
                        {"residual_beta", r.residual_beta},
                        {"bounded", r.bounded}});
    }
    return rows;
}

void write_trace_csv(std::ostream& out, const HeightScanTrace& trace) {
    out << "height_um,intensity\n";
    for (const auto& s : trace.samples) {
        out << fmt::format("{:.6f},{:.9g}\n", s.beam_height * kUm, s.intensity);
    }
}

HeightScanTrace read_trace_csv(std::istream& in, double beam_waist) {
    std::string line;
    if (!std::getline(in, line) || split_csv(line) != std::vector<std::string>{"height_um", "intensity"}) {
        throw ConfigError("trace CSV header must be height_um,intensity");
    }
    HeightScanTrace trace;
    trace.beam_waist = beam_waist;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        const auto cells = split_csv(line);
        if (cells.size() != 2) {
            throw ConfigError(fmt::format("trace CSV line {}: expected 2 columns", lineno));
        }
        trace.samples.push_back({parse_double(cells[0], lineno) / kUm, parse_double(cells[1], lineno)});
    }
    trace.validate();
    return trace;
}

json height_estimate_json(const HeightEstimate& e) {
    return {{"height_um", e.height * kUm},
            {"uncertainty_um", e.uncertainty * kUm},
            {"fwhm_um", e.fwhm * kUm},
            {"peak", e.peak},
            {"noise", e.noise}};
}

json trial_stats_json(const TrialRecord& rec) {
    json out = {{"n_trials", rec.n_trials}, {"n_failures", rec.n_failures}, {"confidence", rec.confidence}};
    out["upper_bound"] = rec.n_failures == 0 ? zero_failure_upper_bound(rec) : clopper_pearson_upper(rec);
    out["method"] = rec.n_failures == 0 ? "zero-failure exact" : "clopper-pearson";
    return out;
}

} // namespace trapablate
