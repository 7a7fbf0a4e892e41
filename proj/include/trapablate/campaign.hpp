#pragma once

#include "trapablate/ablation.hpp"
#include "trapablate/micromotion.hpp"
#include "trapablate/scenario.hpp"
#include "trapablate/transport.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace trapablate {

inline constexpr const char* kEventLogSchema = "trapablate.eventlog/1";
inline constexpr const char* kStateHashAlgorithm = "sha256";

enum class Phase { Aligning, Armed, Firing, Scanning, Verifying, Cleared };

std::string to_string(Phase phase);
Phase parse_phase(const std::string& text);

struct SetPower {
    double percent = 0.0;
};
struct Align {
    double dx = 0.0; // axial focus offset [m]
    double dz = 0.0; // height offset [m]
};
struct FireBurst {
    int count = 1;
};
struct ScanHeight {
    std::optional<double> min; // scan range [m]; scenario default when empty
    std::optional<double> max;
    std::optional<int> samples;
};
struct VerifyTransport {
    long long n_trials = 1;
};
struct CompensationSurvey {};
struct CaptureSnapshot {};

using Command =
    std::variant<SetPower, Align, FireBurst, ScanHeight, VerifyTransport, CompensationSurvey, CaptureSnapshot>;

std::string command_name(const Command& cmd);
nlohmann::json command_json(const Command& cmd);
/// Strict: unknown types or keys throw ConfigError.
Command parse_command(const nlohmann::json& doc);

inline constexpr double kMaxAlignmentOffset = 500e-6;
inline constexpr int kMaxBurstPulses = 100;
inline constexpr long long kMaxTransportTrials = 1000000;

struct CampaignState {
    bool loaded = false;
    Phase phase = Phase::Aligning;
    double power_percent = 0.0;
    double align_dx = 0.0;
    double align_dz = 0.0;
    DefectState defect;
    double clock = 0.0; // simulated seconds
    long long seq = 0;  // last emitted event
    std::uint64_t seed = 0;
    long long pulses_fired = 0;
    double scattering = 0.0;
    std::optional<ExposureReport> last_report;
    /// Running SHA-256 over every emitted event body.
    std::string log_digest;

    nlohmann::json to_json() const;
    std::string hash() const;
};

struct Event {
    long long seq = 0;
    double t = 0.0;
    std::string kind;
    nlohmann::json payload;
    std::string state_hash;

    /// One JSON-lines record.
    std::string line() const;
    static Event parse(const std::string& line);
};

/// Scenario plus the derived data commands draw on (waveform, calibrated
/// crater charge, pre-ablation profile), computed on first use.
class CampaignContext {
public:
    explicit CampaignContext(Scenario scenario);

    const Scenario& scenario() const { return scenario_; }
    const std::string& scenario_hash() const { return hash_; }
    const Waveform& waveform() const;
    double crater_charge() const;
    const std::vector<CompensationResult>& pre_ablation_profile() const;
    std::vector<CompensationResult> post_ablation_profile() const;
    /// Intact-defect noiseless peak of the height scan; sets the noise scale.
    double scan_reference_peak() const;

private:
    Scenario scenario_;
    std::string hash_;
    mutable std::optional<Waveform> waveform_;
    mutable std::optional<double> crater_charge_;
    mutable std::optional<std::vector<CompensationResult>> pre_profile_;
};

struct Transition {
    CampaignState state;
    std::vector<Event> events;
    bool accepted = false;
};

/// Pure step. `ctx` is null when no scenario is loaded.
Transition handle_command(const CampaignContext* ctx, const CampaignState& state, const Command& cmd);

/// Guide-beam scattering for the current defect and alignment.
double scattering_for(const CampaignContext& ctx, const CampaignState& state);

CampaignState initial_state(const CampaignContext* ctx, std::uint64_t seed);

struct CommandOutcome {
    bool accepted = false;
    long long seq = 0; // last event emitted for the command
};

/// Single-writer engine holding the log. Not thread safe; the HTTP service
/// serialises access.
class CampaignEngine {
public:
    /// No scenario: every command is rejected.
    explicit CampaignEngine(std::uint64_t seed = 0);
    CampaignEngine(Scenario scenario, std::uint64_t seed);

    CommandOutcome submit(const Command& cmd);

    const CampaignState& state() const { return state_; }
    const std::vector<Event>& events() const { return events_; }
    std::vector<Event> events_since(long long seq) const;
    const CampaignContext* context() const { return ctx_.get(); }

    nlohmann::json header() const;
    std::string header_line() const { return header().dump(); }
    /// Header plus one line per event, newline terminated.
    std::string log_text() const;

private:
    std::unique_ptr<CampaignContext> ctx_;
    CampaignState state_;
    std::vector<Event> events_;
};

/// Re-executes the commands recorded in a log and checks every line and
/// state hash. Throws CorruptionError naming the first divergent seq.
CampaignEngine replay(std::istream& log);
CampaignEngine replay_text(const std::string& log);

struct CampaignScript {
    std::optional<std::uint64_t> seed;
    std::vector<Command> commands;
};

CampaignScript parse_campaign_script(const nlohmann::json& doc);
CampaignScript load_campaign_script(const std::string& path);

} // namespace trapablate
