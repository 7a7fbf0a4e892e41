#include "support.hpp"

#include "trapablate/service.hpp"

#include <doctest.h>
#include <httplib.h>

#include <cstdlib>
#include <sstream>
#include <thread>

using namespace trapablate;
using nlohmann::json;
using trapablate::test::golden;

namespace {

class RunningService {
public:
    explicit RunningService(CampaignEngine engine) : service(std::move(engine)) {
        port = service.bind_any_port("127.0.0.1");
        REQUIRE(port > 0);
        thread = std::thread([this] { service.listen_after_bind(); });
        for (int i = 0; i < 200 && !service.running(); ++i) {
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
        }
        REQUIRE(service.running());
    }
    ~RunningService() {
        service.stop();
        thread.join();
    }

    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port);
        c.set_read_timeout(30, 0);
        return c;
    }

    CampaignService service;
    int port = 0;
    std::thread thread;
};

httplib::Result post_command(httplib::Client& c, const json& body) {
    return c.Post("/api/v1/command", body.dump(), "application/json");
}

std::vector<std::string> csv_lines(const std::string& body) {
    std::vector<std::string> out;
    std::istringstream in(body);
    for (std::string l; std::getline(in, l);) {
        out.push_back(l);
    }
    return out;
}

struct SseMessage {
    long long id = -1;
    std::string event;
    json data;
};

std::vector<SseMessage> parse_sse(const std::string& body) {
    std::vector<SseMessage> out;
    SseMessage cur;
    std::istringstream in(body);
    for (std::string l; std::getline(in, l);) {
        if (l.empty()) {
            if (cur.id >= 0) {
                out.push_back(cur);
            }
            cur = {};
        } else if (l.rfind("id: ", 0) == 0) {
            cur.id = std::stoll(l.substr(4));
        } else if (l.rfind("event: ", 0) == 0) {
            cur.event = l.substr(7);
        } else if (l.rfind("data: ", 0) == 0) {
            cur.data = json::parse(l.substr(6));
        }
    }
    return out;
}

} // namespace

TEST_SUITE("service") {

TEST_CASE("state and command round trip") {
    RunningService svc(CampaignEngine(golden(), 42));
    auto c = svc.client();

    auto st = c.Get("/api/v1/state");
    REQUIRE(st);
    CHECK(st->status == 200);
    const json s0 = json::parse(st->body);
    CHECK(s0.at("phase") == "ALIGNING");
    CHECK(s0.at("seq") == 0);
    CHECK(s0.at("state_hash").get<std::string>().size() == 64);

    auto r = post_command(c, {{"type", "SetPower"}, {"percent", 40}});
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(json::parse(r->body) == json{{"accepted", true}, {"seq", 1}});

    r = post_command(c, {{"type", "SetPower"}, {"percent", 95}});
    REQUIRE(r);
    CHECK(json::parse(r->body) == json{{"accepted", false}, {"seq", 2}});

    r = post_command(c, {{"type", "Explode"}});
    REQUIRE(r);
    CHECK(r->status == 400);
    r = c.Post("/api/v1/command", "{not json", "application/json");
    REQUIRE(r);
    CHECK(r->status == 400);

    const json s1 = json::parse(c.Get("/api/v1/state")->body);
    CHECK(s1.at("phase") == "ARMED");
    CHECK(s1.at("power_percent") == 40.0);
    CHECK(s1.at("seq") == 2);
    CHECK(s1.at("state_hash") == svc.service.state_json().at("state_hash"));
}

TEST_CASE("event stream replays the backlog") {
    RunningService svc(CampaignEngine(golden(), 42));
    auto c = svc.client();
    post_command(c, {{"type", "SetPower"}, {"percent", 40}});
    post_command(c, {{"type", "FireBurst"}, {"count", 2}});

    auto r = c.Get("/api/v1/events?since=0&follow=0");
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(r->get_header_value("Content-Type") == "text/event-stream");
    const auto msgs = parse_sse(r->body);
    REQUIRE(msgs.size() == 4);
    for (std::size_t i = 0; i < msgs.size(); ++i) {
        CHECK(msgs[i].id == static_cast<long long>(i + 1));
        CHECK(msgs[i].data.at("seq") == msgs[i].id);
        CHECK(msgs[i].data.at("kind") == msgs[i].event);
    }
    CHECK(msgs[0].event == "power_set");
    CHECK(msgs[1].event == "exposure");
    CHECK(msgs[2].event == "pulse");

    CHECK(msgs[3].event == "pulse");

    const auto tail = parse_sse(c.Get("/api/v1/events?since=2&follow=0")->body);
    REQUIRE(tail.size() == 2);
    CHECK(tail[0].id == 3);

    CHECK(c.Get("/api/v1/events?since=abc")->status == 400);
}

TEST_CASE("event stream follows new commands") {
    RunningService svc(CampaignEngine(golden(), 42));
    std::string received;
    std::thread reader([&] {
        auto c = svc.client();
        c.Get("/api/v1/events?since=0", [&](const char* data, std::size_t len) {
            received.append(data, len);
            return parse_sse(received).size() < 2;
        });
    });
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    svc.service.submit(SetPower{30});
    svc.service.submit(Align{0.0, 1e-6});
    reader.join();
    const auto msgs = parse_sse(received);
    REQUIRE(msgs.size() >= 2);
    CHECK(msgs[0].event == "power_set");
    CHECK(msgs[1].event == "aligned");
}

TEST_CASE("fluence map csv") {
    RunningService svc(CampaignEngine(golden(), 42));
    auto c = svc.client();
    auto r = c.Get("/api/v1/fluence-map?power=80&grid_um=20");
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(r->get_header_value("Content-Type") == "text/csv");
    const auto lines = csv_lines(r->body);
    REQUIRE(lines.size() > 100);
    CHECK(lines[0] == "x_um,y_um,fluence_j_per_cm2");
    double peak = 0.0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        peak = std::max(peak, std::strtod(lines[i].c_str() + lines[i].rfind(',') + 1, nullptr));
    }
    CHECK(peak == doctest::Approx(2.023e-3).epsilon(0.01));

    CHECK(c.Get("/api/v1/fluence-map")->status == 400);
    CHECK(c.Get("/api/v1/fluence-map?power=abc")->status == 400);
    CHECK(c.Get("/api/v1/fluence-map?power=150")->status == 422);
}

TEST_CASE("compensation profile csv") {
    RunningService svc(CampaignEngine(golden(), 42));
    auto c = svc.client();
    auto r = c.Get("/api/v1/compensation-profile?regime=post");
    REQUIRE(r);
    CHECK(r->status == 200);
    const auto lines = csv_lines(r->body);
    REQUIRE(lines.size() == 76);
    CHECK(lines[0] == "axial_position_um,compensation_field_v_per_m,compensation_voltage_v,residual_beta,bounded");
    double peak = 0.0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        std::istringstream row(lines[i]);
        std::string x, e;
        std::getline(row, x, ',');
        std::getline(row, e, ',');
        peak = std::max(peak, std::stod(e));
    }
    CHECK(peak == doctest::Approx(88.95).epsilon(0.01));

    auto pre = c.Get("/api/v1/compensation-profile");
    REQUIRE(pre);
    CHECK(pre->status == 200);
    CHECK(pre->body.find(",0\n") != std::string::npos);
    CHECK(c.Get("/api/v1/compensation-profile?regime=sideways")->status == 400);
}

TEST_CASE("no scenario loaded") {
    RunningService svc(CampaignEngine(1));
    auto c = svc.client();
    CHECK(json::parse(c.Get("/api/v1/state")->body).at("loaded") == false);
    CHECK(json::parse(post_command(c, {{"type", "Align"}, {"dx", 0}, {"dz", 0}})->body).at("accepted") == false);
    CHECK(c.Get("/api/v1/fluence-map?power=50")->status == 409);
    CHECK(c.Get("/api/v1/compensation-profile")->status == 409);
}

TEST_CASE("log endpoint replays") {
    RunningService svc(CampaignEngine(golden(), 42));
    svc.service.submit(SetPower{50});
    auto r = svc.client().Get("/api/v1/log");
    REQUIRE(r);
    CHECK(r->body == svc.service.log_text());
    CHECK(replay_text(r->body).state().hash() == svc.service.state_json().at("state_hash"));
}

}
