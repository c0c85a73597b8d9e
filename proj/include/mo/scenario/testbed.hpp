#pragma once

#include <map>
#include <memory>
#include <string>

#include "mo/libserver/links.hpp"
#include "mo/libserver/session.hpp"
#include "mo/net/simnet.hpp"
#include "mo/server/server.hpp"

namespace mo::scenario {

inline constexpr std::uint16_t kSimPort = 7000;

// A set of MO servers on one SimNet, each with an application session
// attached through its local channel.
class Testbed {
public:
    explicit Testbed(net::SimConfig sim = {});
    ~Testbed();

    // Config fields listen and secret are filled in.
    Server& add_server(const std::string& name, ServerConfig config = {});

    net::SimNet& sim() noexcept { return sim_; }
    Server& server(const std::string& name);
    Session& session(const std::string& name);
    Address address(const std::string& name) const { return Address(name, kSimPort); }
    bool has_server(const std::string& name) const { return nodes_.contains(name); }
    std::vector<std::string> names() const;
    // Actor name for an address, or its text form.
    std::string actor_of(const Address& a) const;

    static net::LocalSecret secret_for(const std::string& name);

private:
    struct Node {
        std::unique_ptr<Server> server;
        std::unique_ptr<SimLocalLink> link;
        std::unique_ptr<Session> session;
    };
    net::SimNet sim_;
    std::map<std::string, Node> nodes_;
};

} // namespace mo::scenario
