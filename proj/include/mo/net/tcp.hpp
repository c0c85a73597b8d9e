#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <thread>
#include <vector>

#include <boost/asio/io_context.hpp>

#include "mo/net/environment.hpp"

namespace mo::net {

inline constexpr std::uint64_t kDefaultCallTimeoutMs = 5000;
// The server may spend several remote timeouts on one local request.
inline constexpr std::uint64_t kDefaultLocalCallTimeoutMs = 60'000;

std::uint64_t wall_clock_ms();

// Real-network Environment: an io_context driven by a small thread pool.
// Outbound calls open one stream connection per request.
class TcpRuntime final : public Environment {
public:
    explicit TcpRuntime(std::size_t threads = 2, std::uint64_t call_timeout_ms = kDefaultCallTimeoutMs);
    ~TcpRuntime() override;
    TcpRuntime(const TcpRuntime&) = delete;
    TcpRuntime& operator=(const TcpRuntime&) = delete;

    boost::asio::io_context& io() noexcept { return io_; }

    std::uint64_t now_ms() const override { return wall_clock_ms(); }
    void post_after(std::uint64_t delay_ms, std::function<void()> task) override;
    void call(const Address& to, Message request, CallHandler done) override;

    // Idempotent; pending work is abandoned.
    void stop();

private:
    boost::asio::io_context io_;
    std::uint64_t call_timeout_ms_;
    std::optional<boost::asio::executor_work_guard<boost::asio::io_context::executor_type>> work_;
    std::vector<std::thread> threads_;
    std::atomic<bool> stopped_{false};
};

// Accepts connections on the remote address and, optionally, on a separate
// local (trusted) address. Local-only message types arriving on the remote
// listener are refused with an ERROR(untrusted_channel) frame. The handler
// must outlive the runtime's threads: stop the runtime before destroying it.
class TcpListener {
public:
    // Throws Error(bind_failure).
    TcpListener(TcpRuntime& runtime, RequestHandler& handler, const Address& remote,
                std::optional<Address> local = std::nullopt);
    ~TcpListener();
    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;

    void close();

private:
    struct Impl;
    std::shared_ptr<Impl> impl_;
};

// One request/response exchange on a fresh connection, on a private
// io_context. Transport errors: connect_failure, timeout, protocol_error.
CallResult tcp_call_blocking(const Address& to, const Message& request,
                             std::uint64_t timeout_ms = kDefaultCallTimeoutMs);

class TcpLocalLink final : public LocalLink {
public:
    explicit TcpLocalLink(Address server, std::uint64_t timeout_ms = kDefaultLocalCallTimeoutMs)
        : server_(std::move(server)), timeout_ms_(timeout_ms) {}

    CallResult call(Message request) override { return tcp_call_blocking(server_, request, timeout_ms_); }
    std::uint64_t now_ms() const override { return wall_clock_ms(); }

private:
    Address server_;
    std::uint64_t timeout_ms_;
};

} // namespace mo::net
