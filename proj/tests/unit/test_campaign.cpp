#include "support.hpp"

#include "trapablate/campaign.hpp"
#include "trapablate/errors.hpp"

#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

using namespace trapablate;
using nlohmann::json;
using trapablate::test::golden;
using trapablate::test::scenario_path;

namespace {

const CampaignScript& golden_script() {
    static const CampaignScript s = load_campaign_script(scenario_path("golden_ramp.json"));
    return s;
}

CampaignEngine run(const std::vector<Command>& commands, std::uint64_t seed) {
    CampaignEngine engine(golden(), seed);
    for (const auto& c : commands) {
        engine.submit(c);
    }
    return engine;
}

std::vector<Event> of_kind(const CampaignEngine& engine, const std::string& kind) {
    std::vector<Event> out;
    for (const auto& e : engine.events()) {
        if (e.kind == kind) {
            out.push_back(e);
        }
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_SUITE("campaign") {

TEST_CASE("commands parse strictly") {
    CHECK(std::holds_alternative<SetPower>(parse_command(json{{"type", "SetPower"}, {"percent", 70}})));
    CHECK(std::get<FireBurst>(parse_command(json{{"type", "FireBurst"}, {"count", 3}})).count == 3);
    CHECK_THROWS_AS(parse_command(json{{"type", "SetPower"}, {"percent", 70}, {"extra", 1}}), ConfigError);
    CHECK_THROWS_AS(parse_command(json{{"type", "Detonate"}}), ConfigError);
    CHECK_THROWS_AS(parse_command(json{{"type", "FireBurst"}, {"count", 2.5}}), ConfigError);
    CHECK_THROWS_AS(parse_command(json{{"percent", 70}}), ConfigError);
    for (const Command& c : golden_script().commands) {
        CHECK(command_json(parse_command(command_json(c))) == command_json(c));
    }
    CHECK_THROWS_AS(parse_campaign_script(json{{"commands", json::array()}, {"bogus", 1}}), ConfigError);
}

TEST_CASE("phase names") {
    for (Phase p : {Phase::Aligning, Phase::Armed, Phase::Firing, Phase::Scanning, Phase::Verifying, Phase::Cleared}) {
        CHECK(parse_phase(to_string(p)) == p);
    }
    CHECK(to_string(Phase::Aligning) == "ALIGNING");
    CHECK_THROWS_AS(parse_phase("LOST"), ConfigError);
}

TEST_CASE("without a scenario every command is rejected") {
    CampaignEngine engine(7);
    const std::vector<Command> all{SetPower{50}, Align{}, FireBurst{1}, ScanHeight{}, VerifyTransport{10},
                                   CompensationSurvey{}, CaptureSnapshot{}};
    long long seq = 0;
    for (const auto& c : all) {
        const CommandOutcome o = engine.submit(c);
        CHECK_FALSE(o.accepted);
        CHECK(o.seq == ++seq);
        CHECK(engine.events().back().kind == "rejected");
    }
    CHECK(engine.state().phase == Phase::Aligning);
    const CampaignEngine back = replay_text(engine.log_text());
    CHECK(back.state().hash() == engine.state().hash());
}

TEST_CASE("fresh state") {
    const CampaignEngine engine(golden(), 1);
    CHECK(engine.state().phase == Phase::Aligning);
    CHECK(engine.state().scattering > 0.0);
    CHECK_FALSE(engine.state().defect.cleared);
    const json h = engine.header();
    CHECK(h.at("schema") == "trapablate.eventlog/1");
    CHECK(h.at("hash") == "sha256");
    CHECK(h.at("seed") == 1);
    CHECK(h.at("scenario_hash") == scenario_hash(golden()));
    CHECK(h.at("initial_state_hash") == engine.state().hash());
    const CampaignEngine back = replay_text(engine.log_text());
    CHECK(back.state().hash() == engine.state().hash());
    CHECK(back.events().empty());
}

TEST_CASE("phase rules") {
    CampaignEngine engine(golden(), 3);
    CHECK_FALSE(engine.submit(FireBurst{1}).accepted);
    CHECK(engine.events().back().kind == "rejected");
    CHECK(engine.submit(SetPower{20}).accepted);
    CHECK(engine.state().phase == Phase::Armed);
    CHECK_FALSE(engine.submit(SetPower{95}).accepted);
    CHECK(engine.state().power_percent == 20);
    CHECK(engine.submit(FireBurst{2}).accepted);
    CHECK(engine.state().phase == Phase::Firing);
    CHECK(engine.submit(ScanHeight{}).accepted);
    CHECK(engine.state().phase == Phase::Scanning);
    CHECK(engine.submit(Align{0, 0}).accepted);
    CHECK(engine.state().phase == Phase::Aligning);
    CHECK_FALSE(engine.submit(Align{1e-3, 0}).accepted);
    CHECK_FALSE(engine.submit(FireBurst{0}).accepted);
}

TEST_CASE("firing at full power clears the defect and the scatter") {
    CampaignEngine engine(golden(), 11);
    engine.submit(SetPower{80});
    CHECK(engine.submit(FireBurst{5}).accepted);
    CHECK(engine.state().phase == Phase::Cleared);
    CHECK(engine.state().defect.cleared);
    CHECK(engine.state().scattering == 0.0);
    CHECK(engine.state().pulses_fired == 1);
    CHECK(engine.events().back().kind == "defect_cleared");
    CHECK_FALSE(engine.submit(SetPower{10}).accepted);
    CHECK_FALSE(engine.submit(FireBurst{1}).accepted);
    CHECK(engine.submit(CaptureSnapshot{}).accepted);
}

TEST_CASE("golden ramp clears at 70 percent") {
    const CampaignEngine engine = run(golden_script().commands, golden_script().seed.value_or(0));
    const auto cleared = of_kind(engine, "defect_cleared");
    REQUIRE(cleared.size() == 1);
    CHECK(cleared[0].payload.at("power_percent") == 70.0);
    CHECK(cleared[0].payload.at("fluence_j_per_cm2").get<double>() == doctest::Approx(5.91).epsilon(1e-3));
    for (const auto& p : of_kind(engine, "pulse")) {
        if (p.payload.at("fluence_j_per_cm2").get<double>() < 5.6) {
            CHECK_FALSE(p.payload.at("cleared").get<bool>());
        }
    }
    CHECK(engine.state().phase == Phase::Cleared);
}

TEST_CASE("transport verification before and after clearing") {
    const CampaignEngine engine = run(golden_script().commands, golden_script().seed.value_or(0));
    const auto v = of_kind(engine, "transport_verified");
    REQUIRE(v.size() == 2);
    CHECK(v[0].payload.at("path_blocked") == true);
    CHECK(v[0].payload.at("failures") == 300);
    CHECK(v[0].payload.at("success_rate_upper_bound").get<double>() == doctest::Approx(9.94e-3).epsilon(1e-3));
    CHECK(v[1].payload.at("path_blocked") == false);
    CHECK(v[1].payload.at("failures") == 0);
    CHECK(v[1].payload.at("successes") == 22500);
    CHECK(v[1].payload.at("failure_rate_upper_bound").get<double>() == doctest::Approx(1.33e-4).epsilon(1e-3));
}

TEST_CASE("height scan and survey payloads") {
    const CampaignEngine engine = run(golden_script().commands, golden_script().seed.value_or(0));
    const auto scans = of_kind(engine, "height_scan");
    REQUIRE(scans.size() == 2);
    CHECK(scans[0].payload.at("estimate").at("height_um").get<double>() == doctest::Approx(65.0).epsilon(5.0 / 65.0));
    CHECK(scans[1].payload.at("estimate").is_null());
    const auto surveys = of_kind(engine, "compensation_survey");
    REQUIRE(surveys.size() == 2);
    CHECK(surveys[0].payload.at("regime") == "pre-ablation");
    CHECK(surveys[0].payload.at("approach_fit_r2").get<double>() > 0.99);
    CHECK(surveys[1].payload.at("regime") == "post-ablation");
    CHECK(surveys[1].payload.at("peak_field_v_per_m").get<double>() == doctest::Approx(88.95).epsilon(0.01));
    CHECK(surveys[1].payload.at("bounded_all") == true);
}

TEST_CASE("identical inputs give byte-identical logs") {
    const auto& script = golden_script();
    const std::string a = run(script.commands, 2024).log_text();
    const std::string b = run(script.commands, 2024).log_text();
    CHECK(a == b);
    CHECK(run(script.commands, 2025).log_text() != a);
}

TEST_CASE("replay reproduces every state hash") {
    const auto& script = golden_script();
    CampaignEngine live(golden(), 2024);
    std::vector<std::string> hashes;
    for (const auto& c : script.commands) {
        live.submit(c);
        hashes.push_back(live.state().hash());
    }
    const CampaignEngine back = replay_text(live.log_text());
    CHECK(back.state().hash() == live.state().hash());
    CHECK(back.state().phase == Phase::Cleared);
    REQUIRE(back.events().size() == live.events().size());
    for (std::size_t i = 0; i < back.events().size(); ++i) {
        CHECK(back.events()[i].state_hash == live.events()[i].state_hash);
    }
}

TEST_CASE("committed golden log matches a fresh run") {
    const auto& script = golden_script();
    const std::string fresh = run(script.commands, script.seed.value_or(0)).log_text();
    CHECK(fresh == read_file(scenario_path("golden_ramp.log.jsonl")));
}

TEST_CASE("tampering is detected") {
    const std::string log = run(golden_script().commands, 2024).log_text();
    std::vector<std::string> lines;
    std::istringstream in(log);
    for (std::string l; std::getline(in, l);) {
        lines.push_back(l);
    }
    auto join = [](const std::vector<std::string>& ls) {
        std::string out;
        for (const auto& l : ls) {
            out += l + "\n";
        }
        return out;
    };

    SUBCASE("payload byte flipped") {
        auto t = lines;
        const std::size_t pos = t[7].find("\"fluence_j_per_cm2\":") + 21;
        t[7][pos] = t[7][pos] == '1' ? '2' : '1';
        try {
            replay_text(join(t));
            FAIL("tampered log replayed");
        } catch (const CorruptionError& e) {
            CHECK(e.seq() == 7);
        }
    }
    SUBCASE("state hash altered") {
        auto t = lines;
        const std::size_t pos = t[3].find("\"state_hash\":\"") + 14;
        t[3][pos] = t[3][pos] == 'a' ? 'b' : 'a';
        CHECK_THROWS_AS(replay_text(join(t)), CorruptionError);
    }
    SUBCASE("event dropped") {
        auto t = lines;
        t.erase(t.begin() + 8);
        CHECK_THROWS_AS(replay_text(join(t)), CorruptionError);
    }
    SUBCASE("header seed changed") {
        auto t = lines;
        json h = json::parse(t[0]);
        h["seed"] = 1;
        t[0] = h.dump();
        CHECK_THROWS_AS(replay_text(join(t)), CorruptionError);
    }
    SUBCASE("scenario edited") {
        auto t = lines;
        json h = json::parse(t[0]);
        h["scenario"]["defect"]["ablation_threshold"] = 1.0;
        t[0] = h.dump();
        try {
            replay_text(join(t));
            FAIL("tampered header replayed");
        } catch (const CorruptionError& e) {
            CHECK(e.seq() == 0);
        }
    }
    CHECK_THROWS_AS(replay_text(""), CorruptionError);
}

TEST_CASE("event lines round trip") {
    const CampaignEngine engine = run({SetPower{40}, FireBurst{2}}, 5);
    for (const auto& e : engine.events()) {
        CHECK(Event::parse(e.line()).line() == e.line());
    }
}

TEST_CASE("fuzzed sessions never fire through a failing interlock") {
    std::mt19937_64 rng(20240601);
    std::uniform_int_distribution<int> pick(0, 5);
    std::uniform_real_distribution<double> power(0.0, 90.0), off(-120e-6, 40e-6);
    std::uniform_int_distribution<int> burst(1, 4);
    for (int session = 0; session < 12; ++session) {
        CampaignEngine engine(golden(), rng());
        for (int step = 0; step < 25; ++step) {
            switch (pick(rng)) {
            case 0:
                engine.submit(SetPower{std::round(power(rng))});
                break;
            case 1:
                engine.submit(Align{0.25 * off(rng), off(rng)});
                break;
            case 5:
                engine.submit(ScanHeight{});
                break;
            default:
                engine.submit(FireBurst{burst(rng)});
            }
        }
        const auto& events = engine.events();
        bool armed = false;
        double last_pulse_t = -1.0;
        double last_t = 0.0;
        for (const auto& e : events) {
            CHECK(e.t >= last_t);
            last_t = e.t;
            if (e.kind == "interlock") {
                CHECK_FALSE((e.payload.at("report").at("pass").get<bool>() &&
                             e.payload.at("schedule").at("ok").get<bool>()));
                armed = false;
            } else if (e.kind == "exposure") {
                CHECK(e.payload.at("report").at("pass").get<bool>());
                CHECK(e.payload.at("schedule").at("ok").get<bool>());
                armed = true;
            } else if (e.kind == "pulse") {
                CHECK(armed);
                if (last_pulse_t >= 0.0) {
                    CHECK(e.t - last_pulse_t >= golden().interpulse_delay - 1e-12);
                }
                last_pulse_t = e.t;
            } else if (e.kind != "defect_cleared") {
                armed = false;
            }
        }
        CHECK(replay_text(engine.log_text()).state().hash() == engine.state().hash());
    }
}

TEST_CASE("surface-focused beam trips the interlock") {
    CampaignEngine engine(golden(), 9);
    engine.submit(Align{0.0, -golden().beam.focus_position.z()});
    engine.submit(SetPower{80});
    const CommandOutcome o = engine.submit(FireBurst{1});
    CHECK_FALSE(o.accepted);
    CHECK(engine.events().back().kind == "interlock");
    CHECK(engine.state().pulses_fired == 0);
    REQUIRE(engine.state().last_report.has_value());
    CHECK_FALSE(engine.state().last_report->pass());
}

}
