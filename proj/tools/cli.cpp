#include "trapablate/cli.hpp"

#include "trapablate/ablation.hpp"
#include "trapablate/campaign.hpp"
#include "trapablate/errors.hpp"
#include "trapablate/io.hpp"
#include "trapablate/metrology.hpp"
#include "trapablate/micromotion.hpp"
#include "trapablate/scenario.hpp"
#include "trapablate/service.hpp"
#include "trapablate/transport.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace trapablate {
namespace {

using nlohmann::json;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string scenario;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string out;
    std::string format = "csv";
};

Scenario require_scenario(const Common& c) {
    std::string path = c.scenario;
    if (path.empty()) {
        path = scenario_from_environment().value_or("");
    }
    if (path.empty()) {
        throw UsageError("no scenario: pass --scenario or set TRAPABLATE_SCENARIO");
    }
    return load_scenario(path);
}

void emit(const Common& c, std::ostream& out, const std::string& text) {
    if (c.out.empty() || c.out == "-") {
        out << text;
        return;
    }
    std::ofstream f(c.out, std::ios::binary);
    if (!f) {
        throw ConfigError("cannot write " + c.out);
    }
    f << text;
}

std::string json_text(const json& j) { return j.dump(2) + "\n"; }

} // namespace

std::string format_sci(double value, int digits) {
    if (value == 0.0 || !std::isfinite(value)) {
        return fmt::format("{:g}", value);
    }
    int exponent = static_cast<int>(std::floor(std::log10(std::abs(value))));
    double mantissa = value / std::pow(10.0, exponent);
    std::string m = fmt::format("{:.{}f}", mantissa, digits - 1);
    if (m.rfind("10.", 0) == 0 || m.rfind("-10.", 0) == 0) {
        ++exponent;
        m = fmt::format("{:.{}f}", value / std::pow(10.0, exponent), digits - 1);
    }
    return exponent == 0 ? m : fmt::format("{}e{}", m, exponent);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Trap-chip laser ablation toolkit: fluence safety, transport waveforms, micromotion "
                 "compensation, height metrology and campaign replay."};
    app.name(args.empty() ? "trapablate" : args.front());
    app.require_subcommand(1);
    app.fallthrough();

    Common c;
    app.add_option("--scenario", c.scenario, "Scenario JSON (default: $TRAPABLATE_SCENARIO)");
    app.add_option_function<std::uint64_t>(
        "--seed",
        [&](const std::uint64_t& s) {
            c.seed = s;
            c.seed_given = true;
        },
        "RNG seed");
    app.add_option("--out", c.out, "Output file (default: stdout)");
    app.add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json", "text"}));

    // fluence-map
    auto* fmap = app.add_subcommand("fluence-map", "Chip-surface fluence at a power setting");
    double fmap_power = 80.0;
    double fmap_grid_um = 10.0;
    fmap->add_option("--power", fmap_power, "Power percent")->required();
    fmap->add_option("--grid-um", fmap_grid_um, "Sample spacing [um]")->check(CLI::PositiveNumber);

    // safety-check
    auto* safety = app.add_subcommand("safety-check", "Exposure margins of every chip surface");
    double safety_power = 80.0;
    double safety_dx_um = 0.0;
    double safety_dz_um = 0.0;
    safety->add_option("--power", safety_power, "Power percent")->required();
    safety->add_option("--dx-um", safety_dx_um, "Axial focus offset [um]");
    safety->add_option("--dz-um", safety_dz_um, "Height focus offset [um]");

    // schedule-check
    auto* sched = app.add_subcommand("schedule-check", "Interpulse delay against thermal relaxation");
    std::optional<double> sched_delay;
    std::optional<double> sched_length_um;
    std::optional<double> sched_alpha;
    std::optional<double> sched_margin;
    int sched_count = 1;
    double sched_power = 80.0;
    sched->add_option("--delay", sched_delay, "Interpulse delay [s]");
    sched->add_option("--length-um", sched_length_um, "Characteristic length [um]");
    sched->add_option("--diffusivity", sched_alpha, "Thermal diffusivity [m^2/s]");
    sched->add_option("--margin", sched_margin, "Relaxation margin K");
    sched->add_option("--count", sched_count, "Pulses in the burst");
    sched->add_option("--power", sched_power, "Power percent of the burst");

    // waveform
    auto* wave = app.add_subcommand("waveform", "Synthesise the shuttling waveform");
    std::optional<double> wave_start_um;
    std::optional<double> wave_end_um;
    std::optional<double> wave_step_um;
    double wave_rot = 0.0;
    wave->add_option("--start-um", wave_start_um, "Start position [um]");
    wave->add_option("--end-um", wave_end_um, "End position [um]");
    wave->add_option("--step-um", wave_step_um, "Step [um]");
    wave->add_option("--rotation-offset", wave_rot, "Differential rotation-rail offset [V]");

    // compensation-profile
    auto* comp = app.add_subcommand("compensation-profile", "Micromotion compensation along the waveform");
    std::string comp_regime = "post";
    comp->add_option("--regime", comp_regime, "Defect state")->check(CLI::IsMember({"pre", "post"}));

    // height-scan
    auto* scan = app.add_subcommand("height-scan", "Simulated guide-laser height scan and estimate");
    std::optional<double> scan_height_um;
    std::optional<double> scan_noise;
    std::string scan_trace_in;
    std::string scan_trace_out;
    scan->add_option("--height-um", scan_height_um, "Defect height [um] (default: scenario defect)");
    scan->add_option("--noise-fraction", scan_noise, "Noise sigma as a fraction of the peak");
    scan->add_option("--trace", scan_trace_in, "Estimate from this trace CSV instead of simulating");
    scan->add_option("--trace-out", scan_trace_out, "Also write the simulated trace CSV here");

    // stats
    auto* stats = app.add_subcommand("stats", "Upper confidence bound on a failure rate");
    long long stats_trials = 0;
    long long stats_failures = 0;
    double stats_conf = 0.95;
    stats->add_option("--trials", stats_trials, "Number of trials")->required();
    stats->add_option("--failures", stats_failures, "Number of failures");
    stats->add_option("--confidence", stats_conf, "One-sided confidence level");

    // campaign
    auto* camp = app.add_subcommand("campaign", "Headless campaign scripting");
    camp->require_subcommand(1);
    auto* camp_run = camp->add_subcommand("run", "Execute a command script and write its event log");
    std::string camp_script;
    camp_run->add_option("script", camp_script, "Campaign script JSON")->required();
    auto* camp_replay = camp->add_subcommand("replay", "Verify an event log by re-execution");
    std::string camp_log;
    camp_replay->add_option("log", camp_log, "Event log (JSON lines)")->required();

    // serve
    auto* serve = app.add_subcommand("serve", "Start the campaign HTTP service");
    int serve_port = 8080;
    std::string serve_host = "127.0.0.1";
    serve->add_option("--port", serve_port, "TCP port")->check(CLI::Range(1, 65535));
    serve->add_option("--host", serve_host, "Bind address");

    std::vector<std::string> argv_rest(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
    std::reverse(argv_rest.begin(), argv_rest.end());
    try {
        app.parse(argv_rest);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        if (args.size() > 1) {
            err << "error: " << e.what() << "\n";
        }
        err << app.help();
        return kExitUsage;
    }

    try {
        if (*fmap) {
            const Scenario sc = require_scenario(c);
            const double energy = pulse_energy_at_power(sc.beam, sc.calibration, fmap_power);
            const ExposureProfile prof = chip_exposure_profile(sc.beam, energy, sc.chip, fmap_grid_um * 1e-6);
            if (c.format == "json") {
                emit(c, out, json_text(fluence_json(prof)));
            } else {
                std::ostringstream csv;
                write_fluence_csv(csv, prof);
                emit(c, out, csv.str());
            }
        } else if (*safety) {
            const Scenario sc = require_scenario(c);
            const BeamSpec beam = sc.beam.offset(safety_dx_um * 1e-6, safety_dz_um * 1e-6);
            const ExposureReport report = safety_check(sc.safety_inputs(beam), safety_power);
            emit(c, out, c.format == "json" ? json_text(exposure_report_json(report)) : exposure_report_text(report));
        } else if (*sched) {
            ThermalModel thermal;
            double delay = 0.200;
            if (!c.scenario.empty() || scenario_from_environment()) {
                const Scenario sc = require_scenario(c);
                thermal = sc.thermal;
                delay = sc.interpulse_delay;
            }
            delay = sched_delay.value_or(delay);
            thermal.characteristic_length =
                sched_length_um ? *sched_length_um * 1e-6 : thermal.characteristic_length;
            thermal.diffusivity = sched_alpha.value_or(thermal.diffusivity);
            thermal.relaxation_margin = sched_margin.value_or(thermal.relaxation_margin);
            thermal.validate();
            const ScheduleVerdict v = validate_schedule(PulsePlan{{{sched_power, sched_count}}, delay}, thermal);
            if (c.format == "json") {
                emit(c, out, json_text(schedule_verdict_json(v)));
            } else {
                std::string text = fmt::format("t_diff {} s, required delay {} s, delay {} s: {}\n",
                                               format_sci(thermal_relaxation_time(thermal.characteristic_length,
                                                                                  thermal.diffusivity)),
                                               format_sci(v.required_delay), format_sci(delay),
                                               v.ok ? "OK" : "VIOLATION");
                for (const auto& s : v.violations) {
                    text += "  " + s + "\n";
                }
                emit(c, out, text);
            }
        } else if (*wave) {
            const Scenario sc = require_scenario(c);
            const double start = wave_start_um ? *wave_start_um * 1e-6 : sc.transport.start;
            const double end = wave_end_um ? *wave_end_um * 1e-6 : sc.transport.end;
            const double step = wave_step_um ? *wave_step_um * 1e-6 : sc.transport.step;
            Waveform wf = synthesize_waveform(sc.chip, start, end, step, sc.target_curvature(), sc.solver);
            if (wave_rot != 0.0) {
                wf = apply_rotation_offset(wf, wave_rot, sc.chip);
            }
            if (c.format == "json") {
                emit(c, out, json_text(waveform_json(wf)));
            } else {
                std::ostringstream csv;
                write_waveform_csv(csv, wf);
                emit(c, out, csv.str());
            }
            err << fmt::format("{} frames\n", wf.size());
        } else if (*comp) {
            const Scenario sc = require_scenario(c);
            const auto positions = transport_positions(sc.transport.start, sc.transport.end, sc.transport.step);
            const bool post = comp_regime == "post";
            const double q = post ? resolve_crater_charge(sc) : sc.defect.charge;
            const StrayFieldSource src = post ? post_ablation_source(sc, q) : pre_ablation_source(sc);
            const auto prof = compensation_profile(sc.chip, sc.ion, sc.rf, src, positions,
                                                   CompensationActuator::rotation_pair(sc.chip),
                                                   sc.micromotion.compensation);
            if (c.format == "json") {
                emit(c, out, json_text({{"regime", comp_regime}, {"charge_c", q}, {"profile", compensation_json(prof)}}));
            } else {
                std::ostringstream csv;
                write_compensation_csv(csv, prof);
                emit(c, out, csv.str());
            }
        } else if (*scan) {
            const Scenario sc = require_scenario(c);
            HeightScanTrace trace;
            if (!scan_trace_in.empty()) {
                std::ifstream in(scan_trace_in);
                if (!in) {
                    throw ConfigError("cannot open " + scan_trace_in);
                }
                trace = read_trace_csv(in, sc.guide_waist());
            } else {
                const double h = scan_height_um ? *scan_height_um * 1e-6 : sc.defect.height;
                const double w = sc.guide_waist();
                const double sigma = scan_noise.value_or(sc.metrology.noise_fraction) *
                                     height_scan_overlap(h, w, 0.5 * h);
                trace = simulate_height_scan(
                    h, w, scan_heights(sc.metrology.scan_min, sc.metrology.scan_max, sc.metrology.samples), sigma,
                    c.seed);
                if (!scan_trace_out.empty()) {
                    std::ofstream f(scan_trace_out);
                    write_trace_csv(f, trace);
                }
            }
            if (c.format == "csv") {
                std::ostringstream csv;
                write_trace_csv(csv, trace);
                emit(c, out, csv.str());
            } else {
                const HeightEstimate e = estimate_height(trace);
                emit(c, out,
                     c.format == "json" ? json_text(height_estimate_json(e))
                                        : fmt::format("height {:.2f} um +/- {:.2f} um (FWHM {:.2f} um)\n",
                                                      e.height * 1e6, e.uncertainty * 1e6, e.fwhm * 1e6));
            }
        } else if (*stats) {
            const TrialRecord rec{stats_trials, stats_failures, stats_conf};
            const json j = trial_stats_json(rec);
            if (c.format == "json") {
                emit(c, out, json_text(j));
            } else {
                emit(c, out,
                     fmt::format("{}\n", format_sci(j.at("upper_bound").get<double>())));
            }
        } else if (*camp) {
            if (*camp_run) {
                const Scenario sc = require_scenario(c);
                const CampaignScript script = load_campaign_script(camp_script);
                const std::uint64_t seed = c.seed_given ? c.seed : script.seed.value_or(0);
                CampaignEngine engine(sc, seed);
                for (const auto& cmd : script.commands) {
                    engine.submit(cmd);
                }
                emit(c, out, engine.log_text());
                err << fmt::format("{} events, final phase {}, state {}\n", engine.events().size(),
                                   to_string(engine.state().phase), engine.state().hash());
            } else {
                std::ifstream in(camp_log, std::ios::binary);
                if (!in) {
                    throw ConfigError("cannot open " + camp_log);
                }
                const CampaignEngine engine = replay(in);
                emit(c, out,
                     fmt::format("replay ok: {} events, phase {}, state {}\n", engine.events().size(),
                                 to_string(engine.state().phase), engine.state().hash()));
            }
        } else if (*serve) {
            Scenario sc = require_scenario(c);
            CampaignService service(CampaignEngine(std::move(sc), c.seed));
            err << fmt::format("serving on http://{}:{}/api/v1\n", serve_host, serve_port);
            if (!service.listen(serve_host, serve_port)) {
                throw ConfigError(fmt::format("cannot listen on {}:{}", serve_host, serve_port));
            }
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitDomain;
    }
    return kExitOk;
}

} // namespace trapablate
