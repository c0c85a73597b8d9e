#pragma once

#include <cstdint>
#include <functional>

#include "mo/core/token.hpp"
#include "mo/net/message.hpp"

namespace mo::net {

struct CallResult {
    Errc error = Errc::ok; // transport-level outcome
    Message response;

    bool ok() const noexcept { return error == Errc::ok; }
};

using CallHandler = std::function<void(CallResult)>;
using Reply = std::function<void(Message)>;

// Everything server logic needs from the outside world. Server code never
// reads a wall clock or opens a socket itself, so the same logic runs on the
// simulator and on TCP.
class Environment {
public:
    virtual ~Environment() = default;

    virtual std::uint64_t now_ms() const = 0;
    virtual void post_after(std::uint64_t delay_ms, std::function<void()> task) = 0;
    // Sends one request to a peer server; `done` runs exactly once.
    virtual void call(const Address& to, Message request, CallHandler done) = 0;
};

// Implemented by a server; transports deliver inbound requests here.
// `reply` must be invoked exactly once, from any thread.
class RequestHandler {
public:
    virtual ~RequestHandler() = default;
    virtual void on_remote(Message request, Reply reply) = 0;
    virtual void on_local(Message request, Reply reply) = 0;
};

// Blocking request/response to the local MO server, used by the lib-server.
class LocalLink {
public:
    virtual ~LocalLink() = default;

    virtual CallResult call(Message request) = 0;
    virtual std::uint64_t now_ms() const = 0;
    // True when the link owns the clock (simulation): waiting must then be
    // done by advancing the link instead of sleeping.
    virtual bool drives_time() const { return false; }
    virtual void advance(std::uint64_t /*ms*/) {}
};

} // namespace mo::net
