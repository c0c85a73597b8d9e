#include "mo/scenario/testbed.hpp"

#include <algorithm>

namespace mo::scenario {

Testbed::Testbed(net::SimConfig sim) : sim_(sim) {}

Testbed::~Testbed() {
    // Sessions and servers go before the simulator that still holds their events.
    for (auto& [name, node] : nodes_) {
        node.session.reset();
        if (node.server) node.server->stop();
    }
    nodes_.clear();
}

net::LocalSecret Testbed::secret_for(const std::string& name) {
    auto d = hash_bytes(as_bytes("local-channel:" + name));
    net::LocalSecret s{};
    std::copy(d.begin(), d.end(), s.begin());
    return s;
}

Server& Testbed::add_server(const std::string& name, ServerConfig config) {
    if (nodes_.contains(name)) throw Error(Errc::bad_config, "duplicate server " + name);
    const auto addr = address(name);
    config.listen = addr;
    config.secret = secret_for(name);
    Node node;
    node.server = std::make_unique<Server>(std::move(config), sim_.environment(addr));
    sim_.bind(addr, node.server.get());
    node.server->start();
    node.link = std::make_unique<SimLocalLink>(sim_, addr, name + "-app");
    node.session = std::make_unique<Session>(*node.link, SessionOptions{addr, secret_for(name)});
    auto& slot = nodes_[name] = std::move(node);
    return *slot.server;
}

Server& Testbed::server(const std::string& name) {
    auto it = nodes_.find(name);
    if (it == nodes_.end()) throw Error(Errc::bad_config, "no server " + name);
    return *it->second.server;
}

Session& Testbed::session(const std::string& name) {
    auto it = nodes_.find(name);
    if (it == nodes_.end()) throw Error(Errc::bad_config, "no server " + name);
    return *it->second.session;
}

std::vector<std::string> Testbed::names() const {
    std::vector<std::string> out;
    for (const auto& [name, node] : nodes_) out.push_back(name);
    return out;
}

std::string Testbed::actor_of(const Address& a) const {
    if (a.port() == kSimPort && nodes_.contains(a.host())) return a.host();
    return a.to_string();
}

} // namespace mo::scenario
