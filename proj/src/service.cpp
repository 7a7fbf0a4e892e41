#include "trapablate/service.hpp"

#include "trapablate/errors.hpp"
#include "trapablate/io.hpp"

#include <fmt/format.h>
#include <httplib.h>

#include <chrono>
#include <sstream>

namespace trapablate {
namespace {

using nlohmann::json;

void send_json(httplib::Response& res, const json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, {{"error", message}}, status);
}

std::string sse_message(const Event& e) {
    return fmt::format("id: {}\nevent: {}\ndata: {}\n\n", e.seq, e.kind, e.line());
}

} // namespace

CampaignService::CampaignService(CampaignEngine engine, ServiceOptions options)
    : engine_(std::move(engine)), options_(options), server_(std::make_unique<httplib::Server>()) {
    const std::size_t workers = options_.worker_threads;
    server_->new_task_queue = [workers] { return new httplib::ThreadPool(workers); };
    install_routes();
}

CampaignService::~CampaignService() { stop(); }

bool CampaignService::listen(const std::string& host, int port) { return server_->listen(host, port); }

int CampaignService::bind_any_port(const std::string& host) { return server_->bind_to_any_port(host); }

bool CampaignService::listen_after_bind() { return server_->listen_after_bind(); }

void CampaignService::stop() {
    stopping_ = true;
    events_cv_.notify_all();
    if (server_) {
        server_->stop();
    }
}

bool CampaignService::running() const { return server_->is_running(); }

CommandOutcome CampaignService::submit(const Command& cmd) {
    CommandOutcome outcome;
    {
        std::lock_guard lock(mutex_);
        outcome = engine_.submit(cmd);
    }
    events_cv_.notify_all();
    return outcome;
}

json CampaignService::state_json() const {
    std::lock_guard lock(mutex_);
    json out = engine_.state().to_json();
    out["state_hash"] = engine_.state().hash();
    return out;
}

std::string CampaignService::log_text() const {
    std::lock_guard lock(mutex_);
    return engine_.log_text();
}

void CampaignService::install_routes() {
    httplib::Server& srv = *server_;
    srv.set_default_headers({{"Access-Control-Allow-Origin", "*"}});

    srv.Options(R"(/api/v1/.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });

    srv.Get("/api/v1/state", [this](const httplib::Request&, httplib::Response& res) { send_json(res, state_json()); });

    srv.Post("/api/v1/command", [this](const httplib::Request& req, httplib::Response& res) {
        Command cmd;
        try {
            cmd = parse_command(json::parse(req.body));
        } catch (const std::exception& err) {
            send_error(res, 400, err.what());
            return;
        }
        const CommandOutcome outcome = submit(cmd);
        send_json(res, {{"accepted", outcome.accepted}, {"seq", outcome.seq}});
    });

    srv.Get("/api/v1/events", [this](const httplib::Request& req, httplib::Response& res) {
        long long since = 0;
        bool follow = true;
        try {
            if (req.has_param("since")) {
                since = std::stoll(req.get_param_value("since"));
            }
            if (req.has_param("follow")) {
                const std::string f = req.get_param_value("follow");
                follow = !(f == "0" || f == "false");
            }
        } catch (const std::exception&) {
            send_error(res, 400, "since must be an integer");
            return;
        }
        res.set_header("Cache-Control", "no-cache");
        auto cursor = std::make_shared<long long>(since);
        res.set_chunked_content_provider(
            "text/event-stream", [this, cursor, follow](std::size_t, httplib::DataSink& sink) {
                std::vector<Event> batch;
                {
                    std::unique_lock lock(mutex_);
                    auto ready = [&] { return stopping_ || engine_.state().seq > *cursor; };
                    if (follow && !ready()) {
                        events_cv_.wait_for(lock, std::chrono::seconds(options_.keepalive_seconds), ready);
                    }
                    batch = engine_.events_since(*cursor);
                }
                if (stopping_) {
                    sink.done();
                    return false;
                }
                std::string chunk;
                for (const auto& e : batch) {
                    chunk += sse_message(e);
                    *cursor = e.seq;
                }
                if (chunk.empty()) {
                    chunk = ": keepalive\n\n";
                }
                if (!sink.write(chunk.data(), chunk.size())) {
                    return false;
                }
                if (!follow) {
                    sink.done();
                }
                return true;
            });
    });

    srv.Get("/api/v1/fluence-map", [this](const httplib::Request& req, httplib::Response& res) {
        if (!req.has_param("power")) {
            send_error(res, 400, "power query parameter required");
            return;
        }
        try {
            const double power = std::stod(req.get_param_value("power"));
            double grid = options_.fluence_grid;
            if (req.has_param("grid_um")) {
                grid = std::stod(req.get_param_value("grid_um")) * 1e-6;
            }
            if (!(grid >= 1e-6)) {
                throw DomainError("grid_um must be at least 1");
            }
            BeamSpec beam;
            const CampaignContext* ctx = nullptr;
            {
                std::lock_guard lock(mutex_);
                ctx = engine_.context();
                if (ctx == nullptr) {
                    send_error(res, 409, "no scenario loaded");
                    return;
                }
                beam = ctx->scenario().beam.offset(engine_.state().align_dx, engine_.state().align_dz);
            }
            const Scenario& sc = ctx->scenario();
            const double energy = pulse_energy_at_power(beam, sc.calibration, power);
            std::ostringstream csv;
            write_fluence_csv(csv, chip_exposure_profile(beam, energy, sc.chip, grid));
            res.set_content(csv.str(), "text/csv");
        } catch (const std::invalid_argument&) {
            send_error(res, 400, "power and grid_um must be numbers");
        } catch (const std::exception& err) {
            send_error(res, 422, err.what());
        }
    });

    srv.Get("/api/v1/compensation-profile", [this](const httplib::Request& req, httplib::Response& res) {
        try {
            const CampaignContext* ctx = nullptr;
            bool cleared = false;
            {
                std::lock_guard lock(mutex_);
                ctx = engine_.context();
                cleared = engine_.state().defect.cleared;
            }
            if (ctx == nullptr) {
                send_error(res, 409, "no scenario loaded");
                return;
            }
            if (req.has_param("regime")) {
                const std::string r = req.get_param_value("regime");
                if (r != "pre" && r != "post") {
                    send_error(res, 400, "regime must be pre or post");
                    return;
                }
                cleared = r == "post";
            }
            std::vector<CompensationResult> prof;
            {
                std::lock_guard lock(mutex_);
                prof = cleared ? ctx->post_ablation_profile() : ctx->pre_ablation_profile();
            }
            std::ostringstream csv;
            write_compensation_csv(csv, prof);
            res.set_content(csv.str(), "text/csv");
        } catch (const std::exception& err) {
            send_error(res, 500, err.what());
        }
    });

    srv.Get("/api/v1/log", [this](const httplib::Request&, httplib::Response& res) {
        res.set_content(log_text(), "application/x-ndjson");
    });
}

} // namespace trapablate
