#include "support.hpp"

#include "trapablate/errors.hpp"
#include "trapablate/hashing.hpp"
#include "trapablate/io.hpp"
#include "trapablate/metrology.hpp"
#include "trapablate/scenario.hpp"

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace trapablate;
using nlohmann::json;
using trapablate::test::golden;
using trapablate::test::scenario_path;

namespace {

json golden_document() {
    std::ifstream in(scenario_path("golden.json"));
    return json::parse(in);
}

std::vector<std::string> csv_header(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream line(text.substr(0, text.find('\n')));
    std::string cell;
    while (std::getline(line, cell, ',')) {
        out.push_back(cell);
    }
    return out;
}

} // namespace

TEST_SUITE("scenario") {

TEST_CASE("golden scenario carries the reference values") {
    const Scenario& s = golden();
    CHECK(s.name == "golden");
    CHECK(s.beam.wavelength == 532e-9);
    CHECK(s.beam.lens_focal_length == 0.150);
    CHECK(s.beam.input_waist_radius == 0.856e-3);
    CHECK(s.beam.focus_position.z() == 60e-6);
    CHECK(s.calibration.anchors.front() == std::pair{10.0, 0.56});
    CHECK(s.calibration.anchors.back() == std::pair{80.0, 6.8});
    CHECK(s.materials.lookup("Au").min_fluence == 1.0);
    CHECK(s.materials.lookup("Au").max_fluence == 4.0);
    CHECK(s.materials.lookup("Steel").min_fluence == 0.1);
    CHECK(s.defect.height == 65e-6);
    CHECK(s.defect.ablation_threshold == 5.6);
    CHECK(s.interpulse_delay == 0.2);
    CHECK(s.transport.end - s.transport.start == doctest::Approx(220e-6));
    CHECK(s.transport.step == 3e-6);
    CHECK(s.micromotion.target_peak_field == 88.95);
    CHECK_FALSE(s.micromotion.crater_charge.has_value());
    CHECK(s.chip.electrodes[s.chip.dc(9)].x.center() - s.chip.electrodes[s.chip.dc(7)].x.center() ==
          doctest::Approx(220e-6));
}

TEST_CASE("explicit golden electrodes match the default layout") {
    const ChipLayout d = default_layout();
    const ChipLayout& g = golden().chip;
    REQUIRE(g.size() == d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        CHECK(g.electrodes[i].name == d.electrodes[i].name);
        CHECK(g.electrodes[i].x.min == doctest::Approx(d.electrodes[i].x.min).epsilon(1e-12));
        CHECK(g.electrodes[i].y.max == doctest::Approx(d.electrodes[i].y.max).epsilon(1e-12));
    }
}

TEST_CASE("unknown keys are rejected at every level") {
    for (const char* pointer : {"/bogus", "/beam/bogus", "/defect/bogus", "/solver/bogus", "/micromotion/bogus",
                                "/metrology/bogus", "/chip/electrodes/0/bogus", "/materials/0/bogus"}) {
        json doc = golden_document();
        doc[json::json_pointer(pointer)] = 1;
        CHECK_THROWS_AS(parse_scenario(doc), ConfigError);
    }
}

TEST_CASE("type and invariant errors") {
    auto broken = [](const char* pointer, json value) {
        json doc = golden_document();
        doc[json::json_pointer(pointer)] = std::move(value);
        return doc;
    };
    CHECK_THROWS_AS(parse_scenario(broken("/beam/wavelength", "green")), ConfigError);
    CHECK_THROWS_AS(parse_scenario(broken("/defect/height", -1.0)), ConfigError);
    CHECK_THROWS_AS(parse_scenario(broken("/schedule/interpulse_delay", 0.0)), ConfigError);
    CHECK_THROWS_AS(parse_scenario(broken("/transport/end", 1.0)), ConfigError);
    CHECK_THROWS_AS(parse_scenario(broken("/micromotion/crater_charge", "guess")), ConfigError);
    CHECK_THROWS_AS(parse_scenario(broken("/surfaces/0/material", "Unobtainium")), ConfigError);
    CHECK_THROWS_AS(parse_scenario(broken("/calibration/anchors", json::array({json::array({10, 1.0})}))),
                    ConfigError);
    CHECK_THROWS_AS(parse_scenario(broken("/metrology/samples", 3)), ConfigError);
    json no_defect = golden_document();
    no_defect.erase("defect");
    CHECK_THROWS_AS(parse_scenario(no_defect), ConfigError);
    CHECK_THROWS_AS(load_scenario(scenario_path("missing.json")), ConfigError);
}

TEST_CASE("preset chip and defaults") {
    json doc = golden_document();
    doc["chip"] = {{"preset", "default"}};
    doc.erase("materials");
    doc.erase("surfaces");
    const Scenario s = parse_scenario(doc);
    CHECK(s.chip.size() == default_layout().size());
    CHECK(s.materials.lookup("Au").min_fluence == 1.0);
    REQUIRE(s.surfaces.size() == 1);
    CHECK(s.surfaces.front().material == "Au");
}

TEST_CASE("scenario hash") {
    const std::string h = scenario_hash(golden());
    CHECK(h.size() == 64);
    CHECK(h == sha256_hex(golden_document().dump()));
    json doc = golden_document();
    doc["name"] = "renamed";
    CHECK(scenario_hash(parse_scenario(doc)) != h);
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("scenario path from the environment") {
    ::setenv("TRAPABLATE_SCENARIO", "/tmp/x.json", 1);
    CHECK(scenario_from_environment().value_or("") == "/tmp/x.json");
    ::unsetenv("TRAPABLATE_SCENARIO");
    CHECK_FALSE(scenario_from_environment().has_value());
}

TEST_CASE("fixed crater charge bypasses calibration") {
    json doc = golden_document();
    doc["micromotion"]["crater_charge"] = 1e-16;
    CHECK(resolve_crater_charge(parse_scenario(doc)) == 1e-16);
}

}

TEST_SUITE("io") {

TEST_CASE("fluence CSV and JSON") {
    const Scenario& s = golden();
    const ExposureProfile p = chip_exposure_profile(s.beam, 9e-5, s.chip, 50e-6);
    std::ostringstream csv;
    write_fluence_csv(csv, p);
    CHECK(csv_header(csv.str()) == std::vector<std::string>{"x_um", "y_um", "fluence_j_per_cm2"});
    std::size_t lines = 0;
    std::istringstream in(csv.str());
    for (std::string line; std::getline(in, line);) {
        ++lines;
    }
    CHECK(lines == p.samples.size() + 1);
    const json j = fluence_json(p);
    CHECK(j.at("samples").size() == p.samples.size());
    CHECK(j.at("maximum").at("fluence_j_per_cm2").get<double>() == doctest::Approx(p.maximum.fluence));
}

TEST_CASE("exposure report JSON") {
    const Scenario& s = golden();
    const json j = exposure_report_json(safety_check(s.safety_inputs(s.beam), 0.0));
    CHECK(j.at("pass").get<bool>());
    CHECK(j.at("entries").at(0).at("margin").is_null());
    const json k = exposure_report_json(safety_check(s.safety_inputs(s.beam), 80.0));
    CHECK(k.at("entries").at(0).at("margin").get<double>() > 100.0);
    CHECK(exposure_report_text(safety_check(s.safety_inputs(s.beam), 80.0)).find("PASS") != std::string::npos);
}

TEST_CASE("waveform round trips") {
    Waveform wf;
    wf.electrode_names = {"A", "B", "C"};
    wf.start = 660e-6;
    wf.end = 666e-6;
    wf.step_size = 3e-6;
    wf.positions = {660e-6, 663e-6, 666e-6};
    for (int i = 0; i < 3; ++i) {
        Voltages v(3);
        v << 0.1 * i, -1.0 / 3.0, 9.999999999;
        wf.frames.push_back(v);
    }
    std::stringstream csv;
    write_waveform_csv(csv, wf);
    CHECK(csv_header(csv.str()) == std::vector<std::string>{"frame", "position_um", "A", "B", "C"});
    const Waveform back = read_waveform_csv(csv);
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back.frames[i] == wf.frames[i]);
        CHECK(back.positions[i] == doctest::Approx(wf.positions[i]).epsilon(1e-15));
    }
    CHECK(back.step_size == doctest::Approx(3e-6));

    const Waveform via_json = waveform_from_json(json::parse(waveform_json(wf).dump()));
    CHECK(via_json.frames[2] == wf.frames[2]);
    CHECK(via_json.positions == wf.positions);

    std::istringstream bad("frame,position_um,A\n0,660,x\n");
    CHECK_THROWS_AS(read_waveform_csv(bad), ConfigError);
    std::istringstream wrong("time,A\n");
    CHECK_THROWS_AS(read_waveform_csv(wrong), ConfigError);
    CHECK_THROWS_AS(waveform_from_json(json{{"electrodes", {"A"}}}), ConfigError);
}

TEST_CASE("compensation CSV") {
    std::vector<CompensationResult> rows(2);
    rows[0] = {681e-6, 88.95, -0.3, 1.0, 1e-4, true};
    rows[1] = {684e-6, 0.0, 10.0, 5.0, 2.0, false};
    std::ostringstream csv;
    write_compensation_csv(csv, rows);
    CHECK(csv_header(csv.str()) == std::vector<std::string>{"axial_position_um", "compensation_field_v_per_m",
                                                            "compensation_voltage_v", "residual_beta", "bounded"});
    CHECK(csv.str().find("681.000000,88.95,-0.3,0.0001,1") != std::string::npos);
    CHECK(compensation_json(rows).at(1).at("bounded") == false);
}

TEST_CASE("trace CSV round trip") {
    const HeightScanTrace t = simulate_height_scan(65e-6, 29.67e-6, scan_heights(-100e-6, 200e-6, 31), 0.01, 3);
    std::stringstream csv;
    write_trace_csv(csv, t);
    const HeightScanTrace back = read_trace_csv(csv, 29.67e-6);
    REQUIRE(back.samples.size() == t.samples.size());
    for (std::size_t i = 0; i < t.samples.size(); ++i) {
        CHECK(back.samples[i].beam_height == doctest::Approx(t.samples[i].beam_height).epsilon(1e-9));
        CHECK(back.samples[i].intensity == doctest::Approx(t.samples[i].intensity).epsilon(1e-8));
    }
    std::istringstream bad("z,i\n");
    CHECK_THROWS_AS(read_trace_csv(bad, 1e-5), ConfigError);
}

TEST_CASE("statistics JSON") {
    const json j = trial_stats_json({22500, 0, 0.95});
    CHECK(j.at("upper_bound").get<double>() == doctest::Approx(1.331e-4).epsilon(1e-3));
    CHECK(j.at("n_trials") == 22500);
    CHECK(height_estimate_json(HeightEstimate{65e-6, 1e-6, 66e-6, 1.0, 0.01}).at("height_um").get<double>() ==
          doctest::Approx(65.0));
}

}
