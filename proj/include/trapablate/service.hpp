#pragma once

#include "trapablate/campaign.hpp"

#include <atomic>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <string>

namespace httplib {
class Server;
}

namespace trapablate {

struct ServiceOptions {
    double fluence_grid = 10e-6;      // default sample spacing of /fluence-map [m]
    int keepalive_seconds = 15;       // SSE comment interval
    std::size_t worker_threads = 16;
};

/// HTTP front end of one campaign. Endpoints (all under /api/v1):
///   GET  /state                  state JSON with state_hash
///   POST /command                command JSON -> {accepted, seq}
///   GET  /events?since=S         server-sent events for seq > S (follow=0 closes after the backlog)
///   GET  /fluence-map?power=P    chip-surface fluence CSV at the current alignment
///   GET  /compensation-profile   compensation CSV for the current defect state
///   GET  /log                    JSON-lines event log
class CampaignService {
public:
    explicit CampaignService(CampaignEngine engine, ServiceOptions options = {});
    ~CampaignService();

    CampaignService(const CampaignService&) = delete;
    CampaignService& operator=(const CampaignService&) = delete;

    /// Binds and serves until stop(); returns false if the port is unavailable.
    bool listen(const std::string& host, int port);
    /// Binds to an ephemeral port and returns it; serve with listen_after_bind().
    int bind_any_port(const std::string& host);
    bool listen_after_bind();
    void stop();
    bool running() const;

    CommandOutcome submit(const Command& cmd);
    nlohmann::json state_json() const;
    std::string log_text() const;

private:
    void install_routes();

    CampaignEngine engine_;
    ServiceOptions options_;
    mutable std::mutex mutex_;
    std::condition_variable events_cv_;
    std::atomic<bool> stopping_{false};
    std::unique_ptr<httplib::Server> server_;
};

} // namespace trapablate
