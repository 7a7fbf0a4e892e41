#include "trapablate/campaign.hpp"

#include "trapablate/errors.hpp"
#include "trapablate/hashing.hpp"
#include "trapablate/io.hpp"
#include "trapablate/metrology.hpp"
#include "trapablate/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

namespace trapablate {
namespace {

using nlohmann::json;

constexpr double kUm = 1e6;

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
    if (!j.is_object()) {
        throw ConfigError(where + ": expected an object");
    }
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError(fmt::format("{}: unknown key \"{}\"", where, key));
        }
    }
}

double get_number(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || !j.at(key).is_number()) {
        throw ConfigError(fmt::format("{}: \"{}\" must be a number", where, key));
    }
    const double v = j.at(key).get<double>();
    if (!std::isfinite(v)) {
        throw ConfigError(fmt::format("{}: \"{}\" is not finite", where, key));
    }
    return v;
}

long long get_integer(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || !j.at(key).is_number_integer()) {
        throw ConfigError(fmt::format("{}: \"{}\" must be an integer", where, key));
    }
    return j.at(key).get<long long>();
}

bool phase_allows(Phase phase, const Command& cmd) {
    return std::visit(Overloaded{
                          [&](const SetPower&) { return phase != Phase::Cleared; },
                          [&](const Align&) { return phase != Phase::Cleared; },
                          [&](const FireBurst&) {
                              return phase == Phase::Armed || phase == Phase::Firing || phase == Phase::Scanning ||
                                     phase == Phase::Verifying;
                          },
                          [](const auto&) { return true; },
                      },
                      cmd);
}

class Emitter {
public:
    explicit Emitter(Transition& tr) : tr_(tr) {}

    void emit(const std::string& kind, json payload) {
        CampaignState& s = tr_.state;
        Event e;
        e.seq = ++s.seq;
        e.t = s.clock;
        e.kind = kind;
        e.payload = std::move(payload);
        const json body = {{"seq", e.seq}, {"t", e.t}, {"kind", e.kind}, {"payload", e.payload}};
        s.log_digest = sha256_hex(s.log_digest + body.dump());
        e.state_hash = s.hash();
        tr_.events.push_back(std::move(e));
    }

private:
    Transition& tr_;
};

json focus_um(const BeamSpec& beam) {
    return {beam.focus_position.x() * kUm, beam.focus_position.y() * kUm, beam.focus_position.z() * kUm};
}

BeamSpec aligned_beam(const CampaignContext& ctx, const CampaignState& s) {
    return ctx.scenario().beam.offset(s.align_dx, s.align_dz);
}

bool path_blocked(const CampaignContext& ctx, const CampaignState& s) {
    if (s.defect.cleared) {
        return false;
    }
    const auto& prof = ctx.pre_ablation_profile();
    return std::any_of(prof.begin(), prof.end(), [](const CompensationResult& r) { return !r.bounded; });
}

json survey_summary(const std::vector<CompensationResult>& prof, double defect_x) {
    json out;
    const ProfilePeaks pk = profile_peaks(prof);
    const bool all_bounded =
        std::all_of(prof.begin(), prof.end(), [](const CompensationResult& r) { return r.bounded; });
    out["frames"] = prof.size();
    out["bounded_all"] = all_bounded;
    const auto onset =
        std::find_if(prof.begin(), prof.end(), [](const CompensationResult& r) { return !r.bounded; });
    out["unbounded_onset_um"] = onset == prof.end() ? json(nullptr) : json(onset->axial_position * kUm);
    if (all_bounded) {
        const auto& p = prof[pk.peak];
        out["peak_field_v_per_m"] = p.compensation_field;
        out["peak_position_um"] = p.axial_position * kUm;
        out["peak_voltage_v"] = p.compensation_voltage;
        if (pk.next >= 0) {
            const auto& n = prof[static_cast<std::size_t>(pk.next)];
            out["next_max_field_v_per_m"] = n.compensation_field;
            out["next_max_position_um"] = n.axial_position * kUm;
            out["peak_ratio"] = p.compensation_field / n.compensation_field;
        }
        out["approach_fit_r2"] = nullptr;
    } else {
        const auto bounded = static_cast<std::size_t>(onset - prof.begin());
        out["approach_fit_r2"] =
            bounded >= 3 ? json(approach_region_fit(prof, defect_x).r_squared) : json(nullptr);
    }
    return out;
}

} // namespace

std::string to_string(Phase phase) {
    switch (phase) {
    case Phase::Aligning:
        return "ALIGNING";
    case Phase::Armed:
        return "ARMED";
    case Phase::Firing:
        return "FIRING";
    case Phase::Scanning:
        return "SCANNING";
    case Phase::Verifying:
        return "VERIFYING";
    case Phase::Cleared:
        return "CLEARED";
    }
    return "ALIGNING";
}

Phase parse_phase(const std::string& text) {
    for (Phase p : {Phase::Aligning, Phase::Armed, Phase::Firing, Phase::Scanning, Phase::Verifying,
                    Phase::Cleared}) {
        if (to_string(p) == text) {
            return p;
        }
    }
    throw ConfigError("unknown phase " + text);
}

std::string command_name(const Command& cmd) {
    return std::visit(Overloaded{
                          [](const SetPower&) { return std::string("SetPower"); },
                          [](const Align&) { return std::string("Align"); },
                          [](const FireBurst&) { return std::string("FireBurst"); },
                          [](const ScanHeight&) { return std::string("ScanHeight"); },
                          [](const VerifyTransport&) { return std::string("VerifyTransport"); },
                          [](const CompensationSurvey&) { return std::string("CompensationSurvey"); },
                          [](const CaptureSnapshot&) { return std::string("CaptureSnapshot"); },
                      },
                      cmd);
}

json command_json(const Command& cmd) {
    json out = {{"type", command_name(cmd)}};
    std::visit(Overloaded{
                   [&](const SetPower& c) { out["percent"] = c.percent; },
                   [&](const Align& c) {
                       out["dx"] = c.dx;
                       out["dz"] = c.dz;
                   },
                   [&](const FireBurst& c) { out["count"] = c.count; },
                   [&](const ScanHeight& c) {
                       if (c.min) {
                           out["min"] = *c.min;
                       }
                       if (c.max) {
                           out["max"] = *c.max;
                       }
                       if (c.samples) {
                           out["samples"] = *c.samples;
                       }
                   },
                   [&](const VerifyTransport& c) { out["n_trials"] = c.n_trials; },
                   [](const auto&) {},
               },
               cmd);
    return out;
}

Command parse_command(const json& doc) {
    if (!doc.is_object() || !doc.contains("type") || !doc.at("type").is_string()) {
        throw ConfigError("command: expected an object with a string \"type\"");
    }
    const std::string type = doc.at("type").get<std::string>();
    const std::string where = "command " + type;
    if (type == "SetPower") {
        check_keys(doc, {"type", "percent"}, where);
        return SetPower{get_number(doc, "percent", where)};
    }
    if (type == "Align") {
        check_keys(doc, {"type", "dx", "dz"}, where);
        return Align{get_number(doc, "dx", where), get_number(doc, "dz", where)};
    }
    if (type == "FireBurst") {
        check_keys(doc, {"type", "count"}, where);
        const long long n = get_integer(doc, "count", where);
        if (n < 0 || n > 1000000) {
            throw ConfigError(where + ": count out of range");
        }
        return FireBurst{static_cast<int>(n)};
    }
    if (type == "ScanHeight") {
        check_keys(doc, {"type", "min", "max", "samples"}, where);
        ScanHeight c;
        if (doc.contains("min")) {
            c.min = get_number(doc, "min", where);
        }
        if (doc.contains("max")) {
            c.max = get_number(doc, "max", where);
        }
        if (doc.contains("samples")) {
            const long long n = get_integer(doc, "samples", where);
            if (n < 0 || n > 1000000) {
                throw ConfigError(where + ": samples out of range");
            }
            c.samples = static_cast<int>(n);
        }
        return c;
    }
    if (type == "VerifyTransport") {
        check_keys(doc, {"type", "n_trials"}, where);
        return VerifyTransport{get_integer(doc, "n_trials", where)};
    }
    if (type == "CompensationSurvey") {
        check_keys(doc, {"type"}, where);
        return CompensationSurvey{};
    }
    if (type == "CaptureSnapshot") {
        check_keys(doc, {"type"}, where);
        return CaptureSnapshot{};
    }
    throw ConfigError("unknown command type " + type);
}

json CampaignState::to_json() const {
    json out = {{"loaded", loaded},
                {"phase", to_string(phase)},
                {"power_percent", power_percent},
                {"alignment", {{"dx", align_dx}, {"dz", align_dz}}},
                {"defect",
                 {{"height", defect.height}, {"cross_section", defect.cross_section}, {"cleared", defect.cleared}}},
                {"clock", clock},
                {"seq", seq},
                {"seed", seed},
                {"pulses_fired", pulses_fired},
                {"scattering", scattering},
                {"log_digest", log_digest}};
    out["last_report"] = last_report ? exposure_report_json(*last_report) : json(nullptr);
    return out;
}

std::string CampaignState::hash() const { return sha256_hex(to_json().dump()); }

std::string Event::line() const {
    return json{{"seq", seq}, {"t", t}, {"kind", kind}, {"payload", payload}, {"state_hash", state_hash}}.dump();
}

Event Event::parse(const std::string& text) {
    const json j = json::parse(text);
    check_keys(j, {"seq", "t", "kind", "payload", "state_hash"}, "event");
    Event e;
    e.seq = j.at("seq").get<long long>();
    e.t = j.at("t").get<double>();
    e.kind = j.at("kind").get<std::string>();
    e.payload = j.at("payload");
    e.state_hash = j.at("state_hash").get<std::string>();
    return e;
}

CampaignContext::CampaignContext(Scenario scenario)
    : scenario_(std::move(scenario)), hash_(trapablate::scenario_hash(scenario_)) {}

const Waveform& CampaignContext::waveform() const {
    if (!waveform_) {
        const auto& t = scenario_.transport;
        waveform_ = synthesize_waveform(scenario_.chip, t.start, t.end, t.step, scenario_.target_curvature(),
                                        scenario_.solver);
    }
    return *waveform_;
}

double CampaignContext::crater_charge() const {
    if (!crater_charge_) {
        crater_charge_ = resolve_crater_charge(scenario_);
    }
    return *crater_charge_;
}

const std::vector<CompensationResult>& CampaignContext::pre_ablation_profile() const {
    if (!pre_profile_) {
        pre_profile_ = compensation_profile(scenario_.chip, scenario_.ion, scenario_.rf,
                                            pre_ablation_source(scenario_), waveform().positions,
                                            CompensationActuator::rotation_pair(scenario_.chip),
                                            scenario_.micromotion.compensation);
    }
    return *pre_profile_;
}

std::vector<CompensationResult> CampaignContext::post_ablation_profile() const {
    return compensation_profile(scenario_.chip, scenario_.ion, scenario_.rf,
                                post_ablation_source(scenario_, crater_charge()), waveform().positions,
                                CompensationActuator::rotation_pair(scenario_.chip),
                                scenario_.micromotion.compensation);
}

double CampaignContext::scan_reference_peak() const {
    const double h = scenario_.defect.height;
    return height_scan_overlap(h, scenario_.guide_waist(), 0.5 * h);
}

double scattering_for(const CampaignContext& ctx, const CampaignState& state) {
    const BeamSpec beam = aligned_beam(ctx, state);
    return guide_scattering(state.defect, beam.focus_position.x(), beam.focus_position.z(),
                            ctx.scenario().guide_waist());
}

CampaignState initial_state(const CampaignContext* ctx, std::uint64_t seed) {
    CampaignState s;
    s.seed = seed;
    if (ctx != nullptr) {
        s.loaded = true;
        s.defect = DefectState::intact(ctx->scenario().defect);
        s.scattering = scattering_for(*ctx, s);
    }
    return s;
}

Transition handle_command(const CampaignContext* ctx, const CampaignState& state, const Command& cmd) {
    Transition tr{state, {}, false};
    Emitter out(tr);
    const json cmd_json = command_json(cmd);
    auto reject = [&](const std::string& reason) {
        tr = Transition{state, {}, false};
        out.emit("rejected", {{"command", cmd_json}, {"reason", reason}, {"phase", to_string(state.phase)}});
        return tr;
    };

    if (ctx == nullptr || !state.loaded) {
        return reject("no scenario loaded");
    }
    if (!phase_allows(state.phase, cmd)) {
        return reject(fmt::format("{} not allowed in phase {}", command_name(cmd), to_string(state.phase)));
    }
    const Scenario& sc = ctx->scenario();
    CampaignState& s = tr.state;

    try {
        std::visit(
            Overloaded{
                [&](const SetPower& c) {
                    const bool off = c.percent == 0.0;
                    if (!off && !(c.percent >= sc.calibration.min_percent() &&
                                  c.percent <= sc.calibration.max_percent())) {
                        throw RangeError(fmt::format("power {:g}% outside calibration [{:g}, {:g}]%", c.percent,
                                                     sc.calibration.min_percent(), sc.calibration.max_percent()));
                    }
                    s.power_percent = c.percent;
                    s.phase = Phase::Armed;
                    out.emit("power_set",
                             {{"command", cmd_json},
                              {"power_percent", c.percent},
                              {"fluence_j_per_cm2", off ? 0.0 : percent_to_fluence(sc.calibration, c.percent)},
                              {"pulse_energy_j", pulse_energy_at_power(sc.beam, sc.calibration, c.percent)}});
                },
                [&](const Align& c) {
                    if (std::abs(c.dx) > kMaxAlignmentOffset || std::abs(c.dz) > kMaxAlignmentOffset) {
                        throw RangeError("alignment offset beyond 500 um");
                    }
                    s.align_dx = c.dx;
                    s.align_dz = c.dz;
                    s.phase = Phase::Aligning;
                    s.scattering = scattering_for(*ctx, s);
                    out.emit("aligned", {{"command", cmd_json},
                                         {"focus_um", focus_um(aligned_beam(*ctx, s))},
                                         {"scattering", s.scattering}});
                },
                [&](const FireBurst& c) {
                    if (c.count < 1 || c.count > kMaxBurstPulses) {
                        throw RangeError(fmt::format("burst count must lie in [1, {}]", kMaxBurstPulses));
                    }
                    const BeamSpec beam = aligned_beam(*ctx, s);
                    const ExposureReport report = safety_check(sc.safety_inputs(beam), s.power_percent);
                    const ScheduleVerdict verdict =
                        validate_schedule(PulsePlan{{{s.power_percent, c.count}}, sc.interpulse_delay}, sc.thermal);
                    s.last_report = report;
                    const json checks = {{"command", cmd_json},
                                         {"report", exposure_report_json(report)},
                                         {"schedule", schedule_verdict_json(verdict)}};
                    if (!report.pass() || !verdict.ok) {
                        out.emit("interlock", checks);
                        return;
                    }
                    tr.accepted = true;
                    s.phase = Phase::Firing;
                    out.emit("exposure", checks);
                    for (int i = 1; i <= c.count; ++i) {
                        s.clock += sc.interpulse_delay;
                        const double f = defect_fluence(beam, report.pulse_energy, sc.defect);
                        s.defect = apply_pulse(s.defect, f);
                        ++s.pulses_fired;
                        s.scattering = scattering_for(*ctx, s);
                        if (s.defect.cleared) {
                            s.phase = Phase::Cleared;
                        }
                        out.emit("pulse", {{"index", i},
                                           {"fluence_j_per_cm2", f},
                                           {"cleared", s.defect.cleared},
                                           {"scattering", s.scattering}});
                        if (s.defect.cleared) {
                            out.emit("defect_cleared", {{"power_percent", s.power_percent},
                                                        {"fluence_j_per_cm2", f},
                                                        {"pulses_fired", s.pulses_fired}});
                            break;
                        }
                    }
                },
                [&](const ScanHeight& c) {
                    const double lo = c.min.value_or(sc.metrology.scan_min);
                    const double hi = c.max.value_or(sc.metrology.scan_max);
                    const int n = c.samples.value_or(static_cast<int>(sc.metrology.samples));
                    if (!(hi > lo) || n < 20 || n > 100000) {
                        throw RangeError("scan needs max > min and 20..100000 samples");
                    }
                    const std::uint64_t seed = derive_seed(s.seed, static_cast<std::uint64_t>(s.seq + 1));
                    const double sigma = sc.metrology.noise_fraction * ctx->scan_reference_peak();
                    const HeightScanTrace trace = simulate_height_scan(
                        s.defect.height, sc.guide_waist(), scan_heights(lo, hi, static_cast<std::size_t>(n)), sigma,
                        seed);
                    json payload = {{"command", cmd_json}, {"seed", seed}, {"noise_sigma", sigma},
                                    {"scattering", s.scattering}};
                    try {
                        payload["estimate"] = height_estimate_json(estimate_height(trace));
                    } catch (const EstimationError& err) {
                        payload["estimate"] = nullptr;
                        payload["error"] = err.what();
                    }
                    if (s.phase != Phase::Cleared) {
                        s.phase = Phase::Scanning;
                    }
                    out.emit("height_scan", payload);
                },
                [&](const VerifyTransport& c) {
                    if (c.n_trials < 1 || c.n_trials > kMaxTransportTrials) {
                        throw RangeError(fmt::format("n_trials must lie in [1, {}]", kMaxTransportTrials));
                    }
                    const Waveform& wf = ctx->waveform();
                    const bool blocked = path_blocked(*ctx, s);
                    const double p_success = blocked ? 0.0 : 1.0;
                    NormalSource rng(derive_seed(s.seed, static_cast<std::uint64_t>(s.seq + 1)));
                    long long successes = 0;
                    for (long long i = 0; i < c.n_trials; ++i) {
                        successes += rng.uniform() <= p_success ? 1 : 0;
                    }
                    const long long failures = c.n_trials - successes;
                    const double conf = sc.metrology.confidence;
                    const TrialRecord fail_rec{c.n_trials, failures, conf};
                    const TrialRecord success_rec{c.n_trials, successes, conf};
                    if (s.phase != Phase::Cleared) {
                        s.phase = Phase::Verifying;
                    }
                    out.emit("transport_verified",
                             {{"command", cmd_json},
                              {"frames", wf.size()},
                              {"path_blocked", blocked},
                              {"successes", successes},
                              {"failures", failures},
                              {"confidence", conf},
                              {"failure_rate_upper_bound", failures == 0 ? zero_failure_upper_bound(fail_rec)
                                                                         : clopper_pearson_upper(fail_rec)},
                              {"success_rate_upper_bound", successes == 0 ? zero_failure_upper_bound(success_rec)
                                                                          : clopper_pearson_upper(success_rec)}});
                },
                [&](const CompensationSurvey&) {
                    const bool post = s.defect.cleared;
                    json payload = survey_summary(post ? ctx->post_ablation_profile() : ctx->pre_ablation_profile(),
                                                  sc.defect.center.x());
                    payload["command"] = cmd_json;
                    payload["regime"] = post ? "post-ablation" : "pre-ablation";
                    out.emit("compensation_survey", payload);
                },
                [&](const CaptureSnapshot&) {
                    out.emit("snapshot", {{"command", cmd_json}, {"state", s.to_json()}});
                },
            },
            cmd);
    } catch (const std::exception& err) {
        return reject(err.what());
    }
    if (!std::holds_alternative<FireBurst>(cmd)) {
        tr.accepted = true;
    }
    return tr;
}

CampaignEngine::CampaignEngine(std::uint64_t seed) : state_(initial_state(nullptr, seed)) {}

CampaignEngine::CampaignEngine(Scenario scenario, std::uint64_t seed)
    : ctx_(std::make_unique<CampaignContext>(std::move(scenario))), state_(initial_state(ctx_.get(), seed)) {}

CommandOutcome CampaignEngine::submit(const Command& cmd) {
    Transition tr = handle_command(ctx_.get(), state_, cmd);
    state_ = std::move(tr.state);
    for (auto& e : tr.events) {
        events_.push_back(std::move(e));
    }
    return {tr.accepted, state_.seq};
}

std::vector<Event> CampaignEngine::events_since(long long seq) const {
    std::vector<Event> out;
    for (const auto& e : events_) {
        if (e.seq > seq) {
            out.push_back(e);
        }
    }
    return out;
}

json CampaignEngine::header() const {
    return {{"schema", kEventLogSchema},
            {"hash", kStateHashAlgorithm},
            {"seed", state_.seed},
            {"scenario_hash", ctx_ ? json(ctx_->scenario_hash()) : json(nullptr)},
            {"scenario", ctx_ ? ctx_->scenario().document : json(nullptr)},
            {"initial_state_hash", initial_state(ctx_.get(), state_.seed).hash()}};
}

std::string CampaignEngine::log_text() const {
    std::string out = header_line() + "\n";
    for (const auto& e : events_) {
        out += e.line() + "\n";
    }
    return out;
}

CampaignEngine replay(std::istream& log) {
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(log, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (!line.empty()) {
            lines.push_back(line);
        }
    }
    if (lines.empty()) {
        throw CorruptionError("event log has no header", 0);
    }

    json header;
    try {
        header = json::parse(lines.front());
        check_keys(header, {"schema", "hash", "seed", "scenario_hash", "scenario", "initial_state_hash"}, "header");
    } catch (const std::exception& err) {
        throw CorruptionError(std::string("unreadable log header: ") + err.what(), 0);
    }
    if (header.value("schema", "") != kEventLogSchema || header.value("hash", "") != kStateHashAlgorithm) {
        throw CorruptionError("unsupported log schema or hash algorithm", 0);
    }
    const auto seed = header.at("seed").get<std::uint64_t>();
    std::unique_ptr<CampaignEngine> engine;
    if (header.at("scenario").is_null()) {
        engine = std::make_unique<CampaignEngine>(seed);
    } else {
        Scenario sc;
        try {
            sc = parse_scenario(header.at("scenario"));
        } catch (const std::exception& err) {
            throw CorruptionError(std::string("embedded scenario invalid: ") + err.what(), 0);
        }
        engine = std::make_unique<CampaignEngine>(std::move(sc), seed);
        if (!header.at("scenario_hash").is_string() ||
            header.at("scenario_hash").get<std::string>() != engine->context()->scenario_hash()) {
            throw CorruptionError("scenario hash does not match the embedded scenario", 0);
        }
    }
    if (engine->header().dump() != header.dump()) {
        throw CorruptionError("log header does not match its regenerated form", 0);
    }

    std::size_t i = 1;
    while (i < lines.size()) {
        const auto expected_seq = static_cast<long long>(i);
        Event recorded;
        Command cmd;
        try {
            recorded = Event::parse(lines[i]);
            if (!recorded.payload.is_object() || !recorded.payload.contains("command")) {
                throw ConfigError("event does not open a command");
            }
            cmd = parse_command(recorded.payload.at("command"));
        } catch (const std::exception& err) {
            throw CorruptionError(fmt::format("seq {}: {}", expected_seq, err.what()), expected_seq);
        }
        const std::size_t before = engine->events().size();
        engine->submit(cmd);
        const auto& regenerated = engine->events();
        for (std::size_t k = before; k < regenerated.size(); ++k, ++i) {
            const long long seq = regenerated[k].seq;
            if (i >= lines.size()) {
                throw CorruptionError(fmt::format("seq {}: log ends early", seq), seq);
            }
            if (regenerated[k].line() != lines[i]) {
                throw CorruptionError(fmt::format("seq {}: recorded event diverges from re-execution", seq), seq);
            }
        }
    }
    return std::move(*engine);
}

CampaignEngine replay_text(const std::string& log) {
    std::istringstream in(log);
    return replay(in);
}

CampaignScript parse_campaign_script(const json& doc) {
    check_keys(doc, {"seed", "commands", "description"}, "script");
    CampaignScript script;
    if (doc.contains("seed")) {
        if (!doc.at("seed").is_number_unsigned()) {
            throw ConfigError("script: seed must be a non-negative integer");
        }
        script.seed = doc.at("seed").get<std::uint64_t>();
    }
    if (!doc.contains("commands") || !doc.at("commands").is_array()) {
        throw ConfigError("script: \"commands\" must be an array");
    }
    for (const auto& c : doc.at("commands")) {
        script.commands.push_back(parse_command(c));
    }
    return script;
}

CampaignScript load_campaign_script(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open campaign script " + path);
    }
    try {
        return parse_campaign_script(json::parse(in));
    } catch (const json::exception& err) {
        throw ConfigError("campaign script " + path + ": " + err.what());
    }
}

} // namespace trapablate
