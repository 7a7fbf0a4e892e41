#include "support.hpp"

#include "trapablate/cli.hpp"

#include <doctest.h>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace trapablate;
using nlohmann::json;
using trapablate::test::scenario_path;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args, bool with_scenario = true) {
    if (with_scenario) {
        args.insert(args.begin(), {"--scenario", scenario_path("golden.json")});
    }
    args.insert(args.begin(), "trapablate");
    std::ostringstream out, err;
    Run r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("trapablate_cli_" + name);
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit 2") {
    CHECK(cli({}, false).code == kExitUsage);
    CHECK(cli({"stats", "--trials", "10", "--bogus"}).code == kExitUsage);
    CHECK(cli({"teleport"}).code == kExitUsage);
    CHECK(cli({"fluence-map"}).code == kExitUsage);
    CHECK(cli({"--format", "xml", "stats", "--trials", "10"}).code == kExitUsage);
}

TEST_CASE("domain errors exit 1") {
    const Run bad = cli({"--scenario", "/nonexistent/scenario.json", "safety-check", "--power", "50"}, false);
    CHECK(bad.code == kExitDomain);
    CHECK(bad.err.find("error") != std::string::npos);
    CHECK(cli({"safety-check", "--power", "150"}).code == kExitDomain);
    CHECK(cli({"stats", "--trials", "10", "--failures", "11"}).code == kExitDomain);
}

TEST_CASE("stats") {
    Run r = cli({"stats", "--trials", "22500", "--failures", "0"});
    CHECK(r.code == kExitOk);
    CHECK(r.out == "1.331e-4\n");
    r = cli({"stats", "--trials", "300"});
    CHECK(r.out == "9.936e-3\n");
    CHECK(format_sci(1.331e-4) == "1.331e-4");
    CHECK(format_sci(2.5) == "2.500");
    CHECK(format_sci(9.9996e-3) == "1.000e-2");
}

TEST_CASE("safety check") {
    Run r = cli({"safety-check", "--power", "80"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("verdict: PASS") != std::string::npos);
    r = cli({"safety-check", "--power", "80", "--dz-um", "-60"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("verdict: FAIL") != std::string::npos);
    r = cli({"--format", "json", "safety-check", "--power", "80"});
    const json j = json::parse(r.out);
    CHECK(j.at("pass") == true);
}

TEST_CASE("schedule check") {
    const Run r = cli({"schedule-check"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("t_diff 7.692e-5 s") != std::string::npos);
    CHECK(r.out.find("OK") != std::string::npos);
    CHECK(cli({"schedule-check", "--delay", "1e-4"}).out.find("VIOLATION") != std::string::npos);
}

TEST_CASE("fluence map to file") {
    const auto path = temp_file("fluence.csv");
    const Run r = cli({"--out", path.string(), "fluence-map", "--power", "50", "--grid-um", "25"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.empty());
    const std::string csv = read_file(path);
    CHECK(csv.rfind("x_um,y_um,fluence_j_per_cm2\n", 0) == 0);
    std::filesystem::remove(path);
}

TEST_CASE("waveform and compensation profile") {
    Run r = cli({"waveform"});
    CHECK(r.code == kExitOk);
    CHECK(r.err.find("75 frames") != std::string::npos);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 76);
    r = cli({"compensation-profile", "--regime", "post"});
    CHECK(r.code == kExitOk);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 76);
    CHECK(cli({"compensation-profile", "--regime", "mid"}).code == kExitUsage);
}

TEST_CASE("height scan") {
    const Run r = cli({"--seed", "3", "--format", "json", "height-scan"});
    CHECK(r.code == kExitOk);
    const json j = json::parse(r.out);
    CHECK(j.at("height_um").get<double>() == doctest::Approx(65.0).epsilon(5.0 / 65.0));
    CHECK(cli({"--seed", "3", "--format", "json", "height-scan"}).out == r.out);
    const Run trace = cli({"--seed", "3", "height-scan"});
    CHECK(trace.out.rfind("height_um,intensity\n", 0) == 0);
}

TEST_CASE("campaign run reproduces the committed log") {
    const Run r = cli({"campaign", "run", scenario_path("golden_ramp.json")});
    CHECK(r.code == kExitOk);
    CHECK(r.out == read_file(scenario_path("golden_ramp.log.jsonl")));
}

TEST_CASE("campaign replay") {
    const Run ok = cli({"campaign", "replay", scenario_path("golden_ramp.log.jsonl")}, false);
    CHECK(ok.code == kExitOk);
    CHECK(ok.out.rfind("replay ok: 44 events", 0) == 0);

    std::string log = read_file(scenario_path("golden_ramp.log.jsonl"));
    const std::size_t pos = log.find("\"scattering\":");
    REQUIRE(pos != std::string::npos);
    log.insert(pos + 13, "1");
    const auto path = temp_file("tampered.jsonl");
    std::ofstream(path, std::ios::binary) << log;
    const Run bad = cli({"campaign", "replay", path.string()}, false);
    CHECK(bad.code == kExitDomain);
    CHECK(bad.err.find("seq") != std::string::npos);
    std::filesystem::remove(path);
}

}
