#pragma once

#include "trapablate/ablation.hpp"
#include "trapablate/beamoptics.hpp"
#include "trapablate/metrology.hpp"
#include "trapablate/micromotion.hpp"
#include "trapablate/transport.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>

namespace trapablate {

/// Column layouts are listed in docs/schemas.md.

void write_fluence_csv(std::ostream& out, const ExposureProfile& profile);
nlohmann::json fluence_json(const ExposureProfile& profile);

nlohmann::json exposure_report_json(const ExposureReport& report);
std::string exposure_report_text(const ExposureReport& report);

nlohmann::json schedule_verdict_json(const ScheduleVerdict& verdict);

void write_waveform_csv(std::ostream& out, const Waveform& waveform);
nlohmann::json waveform_json(const Waveform& waveform);
Waveform read_waveform_csv(std::istream& in);
Waveform waveform_from_json(const nlohmann::json& doc);

void write_compensation_csv(std::ostream& out, const std::vector<CompensationResult>& profile);
nlohmann::json compensation_json(const std::vector<CompensationResult>& profile);

void write_trace_csv(std::ostream& out, const HeightScanTrace& trace);
HeightScanTrace read_trace_csv(std::istream& in, double beam_waist);
nlohmann::json height_estimate_json(const HeightEstimate& estimate);

nlohmann::json trial_stats_json(const TrialRecord& rec);

} // namespace trapablate
