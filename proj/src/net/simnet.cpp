#include "mo/net/simnet.hpp"

#include <sstream>

#include "mo/net/protocol.hpp"

namespace mo::net {

class SimNet::NodeEnvironment final : public Environment {
public:
    NodeEnvironment(SimNet& net, Address self) : net_(net), self_(std::move(self)) {}

    std::uint64_t now_ms() const override { return net_.now_ms(); }
    void post_after(std::uint64_t delay_ms, std::function<void()> task) override {
        net_.schedule_at(net_.now_ms() + delay_ms, std::move(task));
    }
    void call(const Address& to, Message request, CallHandler done) override {
        net_.send_request(self_, to, std::move(request), std::move(done));
    }

private:
    SimNet& net_;
    Address self_;
};

std::string TraceEvent::to_line() const {
    std::ostringstream out;
    out << at_ms << ' ' << from << ' ' << to << ' ' << type << ' ' << token;
    if (!note.empty()) out << ' ' << note;
    return out.str();
}

SimNet::SimNet(SimConfig config) : config_(config), rng_(config.seed), now_(config.epoch_ms) {}

SimNet::~SimNet() = default;

std::string SimNet::node_name(const Address& a) {
    return a.port() == 7000 ? a.host() : a.to_string();
}

Environment& SimNet::environment(const Address& node) {
    auto& slot = nodes_[node];
    if (!slot) slot = std::make_unique<NodeEnvironment>(*this, node);
    return *slot;
}

void SimNet::bind(const Address& node, RequestHandler* handler) {
    environment(node);
    handlers_[node] = handler;
}

void SimNet::schedule_at(std::uint64_t at_ms, std::function<void()> task) {
    events_.push(Event{std::max(at_ms, now_), seq_++, std::move(task)});
}

bool SimNet::step() {
    if (events_.empty()) return false;
    Event ev = events_.top();
    events_.pop();
    now_ = ev.at;
    ev.task();
    return true;
}

void SimNet::run_until(std::uint64_t at_ms) {
    while (!events_.empty() && events_.top().at <= at_ms) step();
    if (now_ < at_ms) now_ = at_ms;
}

std::uint64_t SimNet::latency() {
    auto span = config_.max_latency_ms - config_.min_latency_ms + 1;
    return config_.min_latency_ms + rng_() % span;
}

bool SimNet::dropped(const Address& a, const Address& b) {
    auto pa = partition_of_.find(a);
    auto pb = partition_of_.find(b);
    int ga = pa == partition_of_.end() ? -1 : pa->second;
    int gb = pb == partition_of_.end() ? -1 : pb->second;
    if (!partition_of_.empty() && ga != gb) return true;
    auto it = drop_.find({a, b});
    if (it == drop_.end() || it->second <= 0.0) return false;
    double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    return u < it->second;
}

std::uint64_t SimNet::delivery_time(const std::string& from, const std::string& to, std::uint64_t delay) {
    auto& last = last_delivery_[{from, to}];
    last = std::max(last, now_ + delay);
    return last;
}

void SimNet::record(const std::string& from, const std::string& to, const Message& m, const std::string& suffix,
                    const std::optional<Token>& token) {
    TraceEvent ev;
    ev.at_ms = elapsed_ms();
    ev.from = from;
    ev.to = to;
    ev.type = std::string(message_type_name(m.type)) + suffix;
    ev.token = token ? token_prefix(*token) : "-";
    trace_.push_back(std::move(ev));
}

void SimNet::send_request(const Address& from, const Address& to, Message request, CallHandler done) {
    const auto from_name = node_name(from);
    const auto to_name = node_name(to);
    auto token = message_token(request);
    auto handler_it = handlers_.find(to);
    if (handler_it == handlers_.end() || !online(to) || !online(from)) {
        record(from_name, to_name, request, "/refused", token);
        schedule_at(now_ + latency(), [done = std::move(done)] { done(CallResult{Errc::connect_failure, {}}); });
        return;
    }
    const std::uint64_t started = now_;
    if (dropped(from, to)) {
        record(from_name, to_name, request, "/drop", token);
        schedule_at(started + config_.call_timeout_ms,
                    [done = std::move(done)] { done(CallResult{Errc::timeout, {}}); });
        return;
    }
    auto at = delivery_time(from_name, to_name, latency());
    schedule_at(at, [this, from, to, from_name, to_name, token, started, request = std::move(request),
                     done = std::move(done)]() mutable {
        if (!online(to)) {
            schedule_at(started + config_.call_timeout_ms, [done] { done(CallResult{Errc::timeout, {}}); });
            return;
        }
        if (tamper_) tamper_(from, to, request);
        record(from_name, to_name, request, "", token);
        auto reply = [this, from, to, from_name, to_name, token, started, done](Message response) mutable {
            if (dropped(to, from)) {
                record(to_name, from_name, response, "/drop", token);
                schedule_at(started + config_.call_timeout_ms, [done] { done(CallResult{Errc::timeout, {}}); });
                return;
            }
            auto back = delivery_time(to_name, from_name, latency());
            schedule_at(back, [this, from, to, from_name, to_name, token, done,
                               response = std::move(response)]() mutable {
                if (tamper_) tamper_(to, from, response);
                record(to_name, from_name, response, "", token);
                done(CallResult{Errc::ok, std::move(response)});
            });
        };
        handlers_.at(to)->on_remote(std::move(request), std::move(reply));
    });
}

CallResult SimNet::local_call(const Address& server, const std::string& client, Message request) {
    auto handler_it = handlers_.find(server);
    const auto server_name = node_name(server);
    auto token = message_token(request);
    if (handler_it == handlers_.end() || !online(server)) {
        record(client, server_name, request, "/refused", token);
        return CallResult{Errc::connect_failure, {}};
    }
    auto result = std::make_shared<std::optional<CallResult>>();
    auto at = delivery_time(client, server_name, config_.local_latency_ms);
    schedule_at(at, [this, server, server_name, client, token, result, request = std::move(request)]() mutable {
        record(client, server_name, request, "", token);
        auto reply = [this, server_name, client, token, result](Message response) {
            auto back = delivery_time(server_name, client, config_.local_latency_ms);
            schedule_at(back, [this, server_name, client, token, result, response = std::move(response)]() mutable {
                record(server_name, client, response, "", token);
                *result = CallResult{Errc::ok, std::move(response)};
            });
        };
        handlers_.at(server)->on_local(std::move(request), std::move(reply));
    });
    const std::uint64_t deadline = now_ + config_.local_call_timeout_ms;
    while (!*result) {
        if (events_.empty() || events_.top().at > deadline) {
            now_ = std::max(now_, deadline);
            return CallResult{Errc::timeout, {}};
        }
        step();
    }
    return std::move(**result);
}

void SimNet::set_drop(const Address& a, const Address& b, double probability) {
    drop_[{a, b}] = probability;
    drop_[{b, a}] = probability;
}

void SimNet::partition(const std::vector<std::set<Address>>& groups) {
    partition_of_.clear();
    int g = 0;
    for (const auto& group : groups) {
        for (const auto& a : group) partition_of_[a] = g;
        ++g;
    }
}

void SimNet::heal() { partition_of_.clear(); }

void SimNet::set_online(const Address& node, bool up) {
    if (up)
        offline_.erase(node);
    else
        offline_.insert(node);
}

bool SimNet::online(const Address& node) const { return !offline_.contains(node); }

void SimNet::note(const std::string& actor, const std::string& text) {
    TraceEvent ev;
    ev.at_ms = elapsed_ms();
    ev.from = actor;
    ev.to = "-";
    ev.type = "STATE";
    ev.token = "-";
    ev.note = text;
    trace_.push_back(std::move(ev));
}

std::string SimNet::trace_text() const {
    std::string out;
    for (const auto& ev : trace_) {
        out += ev.to_line();
        out += '\n';
    }
    return out;
}

std::size_t SimNet::count(MessageType type, std::optional<Address> from) const {
    const auto name = std::string(message_type_name(type));
    const auto from_name = from ? node_name(*from) : std::string();
    std::size_t n = 0;
    for (const auto& ev : trace_)
        if (ev.type == name && (!from || ev.from == from_name)) ++n;
    return n;
}

} // namespace mo::net
