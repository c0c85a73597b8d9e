#include "mo/net/tcp.hpp"

#include <array>
#include <chrono>
#include <mutex>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/read.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/asio/strand.hpp>
#include <boost/asio/write.hpp>
#include <spdlog/spdlog.h>

#include "mo/net/protocol.hpp"

namespace mo::net {

namespace asio = boost::asio;
using asio::ip::tcp;
using boost::system::error_code;

std::uint64_t wall_clock_ms() {
    using namespace std::chrono;
    return static_cast<std::uint64_t>(duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count());
}

namespace {

// State of one outbound request. Every handler runs on the op's strand, so
// the timer and the socket never race on `finished`.
class CallOp : public std::enable_shared_from_this<CallOp> {
public:
    CallOp(asio::any_io_executor ex, CallHandler done)
        : strand_(asio::make_strand(ex)), resolver_(strand_), socket_(strand_), timer_(strand_),
          done_(std::move(done)) {}

    void start(const Address& to, const Message& request, std::uint64_t timeout_ms) {
        request_id_ = request.request_id;
        out_ = encode_message(request);
        asio::post(strand_, [self = shared_from_this(), to, timeout_ms] {
            self->timer_.expires_after(std::chrono::milliseconds(timeout_ms));
            self->timer_.async_wait([self](error_code ec) {
                if (!ec) self->finish(Errc::timeout);
            });
            self->resolver_.async_resolve(to.host(), std::to_string(to.port()),
                                          [self](error_code ec, tcp::resolver::results_type results) {
                                              if (ec) return self->finish(Errc::connect_failure);
                                              self->connect(results);
                                          });
        });
    }

private:
    void connect(const tcp::resolver::results_type& results) {
        asio::async_connect(socket_, results, [self = shared_from_this()](error_code ec, const tcp::endpoint&) {
            if (ec) return self->finish(Errc::connect_failure);
            asio::async_write(self->socket_, asio::buffer(self->out_), [self](error_code ec, std::size_t) {
                if (ec) return self->finish(Errc::protocol_error);
                self->read_header();
            });
        });
    }

    void read_header() {
        asio::async_read(socket_, asio::buffer(header_), [self = shared_from_this()](error_code ec, std::size_t) {
            if (ec) return self->finish(Errc::protocol_error);
            FrameHeader h{};
            try {
                h = decode_header(self->header_);
            } catch (const Error&) {
                return self->finish(Errc::protocol_error);
            }
            self->frame_.assign(self->header_.begin(), self->header_.end());
            self->frame_.resize(kHeaderSize + h.body_length);
            asio::async_read(self->socket_, asio::buffer(self->frame_.data() + kHeaderSize, h.body_length),
                             [self](error_code ec, std::size_t) {
                                 if (ec) return self->finish(Errc::protocol_error);
                                 try {
                                     auto m = decode_message(self->frame_);
                                     if (m.request_id != self->request_id_)
                                         return self->finish(Errc::protocol_error);
                                     self->finish(Errc::ok, std::move(m));
                                 } catch (const Error&) {
                                     self->finish(Errc::protocol_error);
                                 }
                             });
        });
    }

    void finish(Errc error, Message response = {}) {
        if (finished_) return;
        finished_ = true;
        error_code ignored;
        timer_.cancel();
        resolver_.cancel();
        socket_.close(ignored);
        auto done = std::move(done_);
        done(CallResult{error, std::move(response)});
    }

    asio::strand<asio::any_io_executor> strand_;
    tcp::resolver resolver_;
    tcp::socket socket_;
    asio::steady_timer timer_;
    CallHandler done_;
    std::uint64_t request_id_ = 0;
    Bytes out_;
    std::array<std::uint8_t, kHeaderSize> header_{};
    Bytes frame_;
    bool finished_ = false;
};

tcp::endpoint resolve_one(asio::io_context& io, const Address& a) {
    tcp::resolver resolver(io);
    auto results = resolver.resolve(a.host(), std::to_string(a.port()));
    if (results.empty()) throw Error(Errc::bind_failure, "cannot resolve " + a.to_string());
    return *results.begin();
}

} // namespace

TcpRuntime::TcpRuntime(std::size_t threads, std::uint64_t call_timeout_ms) : call_timeout_ms_(call_timeout_ms) {
    work_.emplace(asio::make_work_guard(io_));
    for (std::size_t i = 0; i < std::max<std::size_t>(threads, 1); ++i) {
        threads_.emplace_back([this] {
            for (;;) {
                try {
                    io_.run();
                    return;
                } catch (const std::exception& e) {
                    spdlog::error("handler raised: {}", e.what());
                }
            }
        });
    }
}

TcpRuntime::~TcpRuntime() { stop(); }

void TcpRuntime::stop() {
    if (stopped_.exchange(true)) return;
    work_.reset();
    io_.stop();
    for (auto& t : threads_) {
        if (t.get_id() == std::this_thread::get_id())
            t.detach();
        else if (t.joinable())
            t.join();
    }
}

void TcpRuntime::post_after(std::uint64_t delay_ms, std::function<void()> task) {
    auto timer = std::make_shared<asio::steady_timer>(io_, std::chrono::milliseconds(delay_ms));
    timer->async_wait([timer, task = std::move(task)](error_code ec) {
        if (!ec) task();
    });
}

void TcpRuntime::call(const Address& to, Message request, CallHandler done) {
    auto op = std::make_shared<CallOp>(io_.get_executor(), std::move(done));
    op->start(to, request, call_timeout_ms_);
}

CallResult tcp_call_blocking(const Address& to, const Message& request, std::uint64_t timeout_ms) {
    asio::io_context io;
    CallResult result{Errc::timeout, {}};
    auto op = std::make_shared<CallOp>(io.get_executor(), [&result](CallResult r) { result = std::move(r); });
    op->start(to, request, timeout_ms);
    op.reset();
    io.run();
    return result;
}

namespace {

// Server side of one connection: read a frame, hand it to the handler, write
// the reply, repeat. At most one request is in flight per connection.
class Session : public std::enable_shared_from_this<Session> {
public:
    Session(tcp::socket socket, RequestHandler& handler, bool trusted)
        : socket_(std::move(socket)), handler_(handler), trusted_(trusted) {}

    void start() { read_header(); }

    void close() {
        asio::post(socket_.get_executor(), [self = shared_from_this()] {
            error_code ignored;
            self->socket_.close(ignored);
        });
    }

private:
    void read_header() {
        asio::async_read(socket_, asio::buffer(header_), [self = shared_from_this()](error_code ec, std::size_t) {
            if (ec) return;
            FrameHeader h{};
            try {
                h = decode_header(self->header_);
            } catch (const Error& e) {
                return self->write(ErrorBody{e.code(), e.what()}.to_message(0), true);
            }
            self->frame_.assign(self->header_.begin(), self->header_.end());
            self->frame_.resize(kHeaderSize + h.body_length);
            asio::async_read(self->socket_, asio::buffer(self->frame_.data() + kHeaderSize, h.body_length),
                             [self](error_code ec, std::size_t) {
                                 if (!ec) self->dispatch();
                             });
        });
    }

    void dispatch() {
        Message m;
        try {
            m = decode_message(frame_);
        } catch (const Error& e) {
            return write(ErrorBody{e.code(), e.what()}.to_message(0), true);
        }
        if (!trusted_ && is_local_type(m.type)) {
            return write(ErrorBody{Errc::untrusted_channel, "local request on remote channel"}.to_message(m.request_id),
                         false);
        }
        auto self = shared_from_this();
        Reply reply = [self](Message response) {
            asio::post(self->socket_.get_executor(),
                       [self, response = std::move(response)]() mutable { self->write(std::move(response), false); });
        };
        try {
            if (trusted_)
                handler_.on_local(std::move(m), std::move(reply));
            else
                handler_.on_remote(std::move(m), std::move(reply));
        } catch (const Error& e) {
            write(ErrorBody{e.code(), e.what()}.to_message(m.request_id), true);
        }
    }

    void write(const Message& m, bool close_after) {
        out_ = encode_message(m);
        asio::async_write(socket_, asio::buffer(out_), [self = shared_from_this(), close_after](error_code ec, std::size_t) {
            if (ec || close_after) {
                error_code ignored;
                self->socket_.shutdown(tcp::socket::shutdown_both, ignored);
                self->socket_.close(ignored);
                return;
            }
            self->read_header();
        });
    }

    tcp::socket socket_;
    RequestHandler& handler_;
    bool trusted_;
    std::array<std::uint8_t, kHeaderSize> header_{};
    Bytes frame_;
    Bytes out_;
};

} // namespace

struct TcpListener::Impl : std::enable_shared_from_this<TcpListener::Impl> {
    struct Port {
        tcp::acceptor acceptor;
        bool trusted;
    };

    TcpRuntime& runtime;
    RequestHandler& handler;
    std::vector<std::unique_ptr<Port>> ports;
    std::mutex mu;
    std::vector<std::weak_ptr<Session>> sessions;
    bool closed = false;

    Impl(TcpRuntime& rt, RequestHandler& h) : runtime(rt), handler(h) {}

    void open(const Address& addr, bool trusted) {
        auto port = std::make_unique<Port>(Port{tcp::acceptor(asio::make_strand(runtime.io())), trusted});
        try {
            auto ep = resolve_one(runtime.io(), addr);
            port->acceptor.open(ep.protocol());
            port->acceptor.set_option(tcp::acceptor::reuse_address(true));
            port->acceptor.bind(ep);
            port->acceptor.listen();
        } catch (const boost::system::system_error& e) {
            throw Error(Errc::bind_failure, addr.to_string() + ": " + e.what());
        }
        accept(*port);
        ports.push_back(std::move(port));
    }

    void accept(Port& port) {
        port.acceptor.async_accept(asio::make_strand(runtime.io()),
                                   [self = shared_from_this(), &port](error_code ec, tcp::socket socket) {
                                       if (ec) return;
                                       auto session = std::make_shared<Session>(std::move(socket), self->handler,
                                                                                port.trusted);
                                       {
                                           std::lock_guard lock(self->mu);
                                           if (self->closed) return;
                                           std::erase_if(self->sessions, [](const auto& w) { return w.expired(); });
                                           self->sessions.push_back(session);
                                       }
                                       session->start();
                                       self->accept(port);
                                   });
    }

    void close() {
        std::vector<std::weak_ptr<Session>> live;
        {
            std::lock_guard lock(mu);
            if (closed) return;
            closed = true;
            live.swap(sessions);
        }
        for (auto& p : ports) {
            asio::post(p->acceptor.get_executor(), [self = shared_from_this(), &acceptor = p->acceptor] {
                error_code ignored;
                acceptor.close(ignored);
            });
        }
        for (auto& w : live)
            if (auto s = w.lock()) s->close();
    }
};

TcpListener::TcpListener(TcpRuntime& runtime, RequestHandler& handler, const Address& remote,
                         std::optional<Address> local)
    : impl_(std::make_shared<Impl>(runtime, handler)) {
    impl_->open(remote, false);
    if (local) impl_->open(*local, true);
}

TcpListener::~TcpListener() { close(); }

void TcpListener::close() { impl_->close(); }

} // namespace mo::net
