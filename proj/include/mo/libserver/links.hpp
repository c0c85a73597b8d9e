#pragma once

#include <string>

#include "mo/net/environment.hpp"
#include "mo/net/simnet.hpp"

namespace mo {

// Local channel into a server running on the simulator. Calls pump the
// simulation until the answer arrives.
class SimLocalLink final : public net::LocalLink {
public:
    SimLocalLink(net::SimNet& net, Address server, std::string client)
        : net_(net), server_(std::move(server)), client_(std::move(client)) {}

    net::CallResult call(net::Message request) override;
    std::uint64_t now_ms() const override { return net_.now_ms(); }
    bool drives_time() const override { return true; }
    void advance(std::uint64_t ms) override { net_.run_for(ms); }

    const Address& server() const noexcept { return server_; }

private:
    net::SimNet& net_;
    Address server_;
    std::string client_;
};

} // namespace mo
