#pragma once

#include <chrono>
#include <memory>
#include <stop_token>
#include <string>
#include <thread>

#include <httplib.h>

#include "bridge.hpp"

namespace pilotsim {

// Serves a BridgeService over HTTP against wall-clock time. A background poller applies
// the flush policy, so flushes happen even when no request arrives.
class BridgeServer {
public:
    explicit BridgeServer(BufferOptions opt, BridgeService::FlushHandler on_flush = {}, double poll_interval_s = 0.1)
        : start_(std::chrono::steady_clock::now()),
          service_(opt, [this] { return elapsed_s(); }, std::move(on_flush)),
          poll_interval_(std::chrono::duration<double>(poll_interval_s)) {
        auto route = [this](const httplib::Request& req, httplib::Response& res) {
            const auto r = service_.handle(req.method, req.path, req.body);
            res.status = r.status;
            res.set_content(r.body, "application/json");
        };
        server_.Get(".*", route);
        server_.Post(".*", route);
        server_.Put(".*", route);
        server_.Delete(".*", route);
    }

    ~BridgeServer() { stop(); }

    BridgeServer(const BridgeServer&) = delete;
    BridgeServer& operator=(const BridgeServer&) = delete;

    // Binds to an ephemeral port and returns it; serve() then blocks until stop().
    int bind_any(const std::string& host = "127.0.0.1") { return server_.bind_to_any_port(host); }
    bool bind(const std::string& host, int port) { return server_.bind_to_port(host, port); }

    bool serve() {
        poller_ = std::jthread([this](std::stop_token st) {
            while (!st.stop_requested()) {
                service_.poll();
                std::this_thread::sleep_for(poll_interval_);
            }
        });
        return server_.listen_after_bind();
    }

    void wait_until_ready() const { server_.wait_until_ready(); }

    void stop() {
        server_.stop();
        if (poller_.joinable()) {
            poller_.request_stop();
            poller_.join();
        }
    }

    BridgeService& service() { return service_; }

private:
    double elapsed_s() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

    std::chrono::steady_clock::time_point start_;
    BridgeService service_;
    std::chrono::duration<double> poll_interval_;
    httplib::Server server_;
    std::jthread poller_;
};

}  // namespace pilotsim
