#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "mo/net/environment.hpp"

namespace mo::net {

struct SimConfig {
    std::uint64_t seed = 1;
    std::uint64_t epoch_ms = 1'000'000'000'000; // simulated time zero, as wall time
    std::uint64_t min_latency_ms = 5;
    std::uint64_t max_latency_ms = 15;
    std::uint64_t local_latency_ms = 1;
    std::uint64_t call_timeout_ms = 5000;
    // Local calls wait for the server's own retries behind them.
    std::uint64_t local_call_timeout_ms = 60'000;
};

struct TraceEvent {
    std::uint64_t at_ms = 0; // relative to simulated time zero
    std::string from;
    std::string to;
    std::string type; // message type name, "/drop" suffix for losses, or STATE
    std::string token; // token prefix or "-"
    std::string note;  // STATE lines only

    std::string to_line() const;
    friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

// Deterministic, single-threaded discrete-event network. Links are FIFO,
// latencies and drops come from one seeded generator, and the only clock is
// the event queue, so identical seed and inputs give an identical trace.
class SimNet {
public:
    explicit SimNet(SimConfig config = {});
    ~SimNet();
    SimNet(const SimNet&) = delete;
    SimNet& operator=(const SimNet&) = delete;

    const SimConfig& config() const noexcept { return config_; }

    // Environment for the server at `node`; stable for the SimNet's lifetime.
    Environment& environment(const Address& node);
    void bind(const Address& node, RequestHandler* handler);

    std::uint64_t now_ms() const noexcept { return now_; }
    std::uint64_t elapsed_ms() const noexcept { return now_ - config_.epoch_ms; }

    void schedule_at(std::uint64_t at_ms, std::function<void()> task);
    bool step();
    void run_until(std::uint64_t at_ms);
    void run_for(std::uint64_t ms) { run_until(now_ + ms); }

    // Request on the trusted local channel of `server`, issued by `client`.
    // Runs the simulation until the answer arrives.
    CallResult local_call(const Address& server, const std::string& client, Message request);

    void send_request(const Address& from, const Address& to, Message request, CallHandler done);

    // Faults.
    void set_drop(const Address& a, const Address& b, double probability);
    void partition(const std::vector<std::set<Address>>& groups);
    void heal();
    void set_online(const Address& node, bool online);
    bool online(const Address& node) const;
    using Tamper = std::function<void(const Address& from, const Address& to, Message& m)>;
    void set_tamper(Tamper tamper) { tamper_ = std::move(tamper); }

    // Trace.
    void note(const std::string& actor, const std::string& text);
    const std::vector<TraceEvent>& trace() const noexcept { return trace_; }
    std::string trace_text() const;
    std::size_t count(MessageType type, std::optional<Address> from = std::nullopt) const;
    void clear_trace() { trace_.clear(); }

    static std::string node_name(const Address& a);

private:
    struct Event {
        std::uint64_t at;
        std::uint64_t seq;
        std::function<void()> task;
    };
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            return a.at != b.at ? a.at > b.at : a.seq > b.seq;
        }
    };
    class NodeEnvironment;

    std::uint64_t latency();
    bool dropped(const Address& a, const Address& b);
    std::uint64_t delivery_time(const std::string& from, const std::string& to, std::uint64_t delay);
    void record(const std::string& from, const std::string& to, const Message& m, const std::string& suffix,
                const std::optional<Token>& token);

    SimConfig config_;
    std::mt19937_64 rng_;
    std::uint64_t now_;
    std::uint64_t seq_ = 0;
    std::priority_queue<Event, std::vector<Event>, Later> events_;
    std::map<Address, std::unique_ptr<NodeEnvironment>> nodes_;
    std::map<Address, RequestHandler*> handlers_;
    std::map<std::pair<std::string, std::string>, std::uint64_t> last_delivery_;
    std::map<std::pair<Address, Address>, double> drop_;
    std::map<Address, int> partition_of_;
    std::set<Address> offline_;
    Tamper tamper_;
    std::vector<TraceEvent> trace_;
};

} // namespace mo::net
