#include "mo/server/server.hpp"

#include <algorithm>

#include <sodium.h>
#include <spdlog/spdlog.h>

#include "mo/cluster/digest.hpp"
#include "server_impl.hpp"

namespace mo {

using net::Message;
using net::MessageType;
using net::Reply;

void ServerConfig::validate() const {
    if (!listen.valid()) throw Error(Errc::bad_config, "listen address required");
    if (grace_period_ms <= clock_skew_bound_ms)
        throw Error(Errc::bad_config, "grace period must exceed the clock skew bound");
    if (cache_capacity == 0) throw Error(Errc::bad_config, "cache capacity must be positive");
    if (ditto_max == 0 || ditto_max > 255) throw Error(Errc::bad_config, "ditto_max must be 1-255");
    if (busy_threshold == 0) throw Error(Errc::bad_config, "busy threshold must be positive");
    if (home_attempts == 0) throw Error(Errc::bad_config, "home attempts must be positive");
    if (sample_max == 0) throw Error(Errc::bad_config, "sample_max must be positive");
}

// ---- index -----------------------------------------------------------------

EntryPtr Server::Impl::lookup(const Token& t, bool touch) {
    std::lock_guard lock(index_mu);
    auto it = entries.find(t);
    if (it == entries.end()) return nullptr;
    if (touch) cache.get(t);
    return it->second;
}

EntryPtr Server::Impl::get_or_create(const Token& t, bool stored) {
    EntryPtr e;
    {
        std::lock_guard lock(index_mu);
        auto it = entries.find(t);
        if (it != entries.end()) {
            e = it->second;
        } else {
            e = std::make_shared<Entry>();
            e->dist.token = t;
            e->stored = stored;
            entries.emplace(t, e);
            if (!stored) {
                for (auto& [victim, unused] : cache.put(t, {})) {
                    spdlog::debug("{} evicts {}", cfg.listen.to_string(), token_prefix(victim));
                    entries.erase(victim);
                }
            }
            return e;
        }
    }
    if (stored) move_to_store(t, e);
    return e;
}

void Server::Impl::move_to_store(const Token& t, const EntryPtr& e) {
    {
        std::lock_guard lock(index_mu);
        cache.erase(t);
        // An eviction may have raced with us; put the entry back.
        entries.try_emplace(t, e);
    }
    std::lock_guard lock(e->mu);
    e->stored = true;
}

std::optional<Cluster> Server::Impl::cluster_of(const Token& t) {
    auto e = lookup(t);
    if (!e) return std::nullopt;
    std::lock_guard lock(e->mu);
    return e->dist.cluster;
}

std::vector<std::pair<Token, EntryPtr>> Server::Impl::snapshot_entries() const {
    std::vector<std::pair<Token, EntryPtr>> out;
    {
        std::lock_guard lock(index_mu);
        out.assign(entries.begin(), entries.end());
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    return out;
}

DistributedPart Server::Impl::snapshot(const EntryPtr& e) const {
    std::lock_guard lock(e->mu);
    return e->dist;
}

// ---- replication engine ----------------------------------------------------

std::vector<std::pair<Token, ReplicationPolicy>> Server::Impl::flooding_roots() {
    std::vector<std::pair<Token, ReplicationPolicy>> out;
    for (auto& [t, e] : snapshot_entries()) {
        std::lock_guard lock(e->mu);
        if (auto* p = e->repl.find(PolicyKind::flooding)) out.emplace_back(t, *p);
    }
    return out;
}

std::vector<Token> Server::Impl::roots_covering(const Token& x) {
    std::vector<Token> out;
    ClusterLookup lookup = [this](const Token& t) { return cluster_of(t); };
    for (auto& [root, policy] : flooding_roots()) {
        if (root == x) {
            out.push_back(root);
            continue;
        }
        auto items = subgraph_tokens(root, policy.level, lookup, true);
        if (std::find(items.begin(), items.end(), SubgraphItem{x, false}) != items.end()) out.push_back(root);
    }
    return out;
}

void Server::Impl::cluster_changed(const Token& x) {
    if (stopped) return;
    for (const auto& root : roots_covering(x)) schedule_flood(root);
}

void Server::Impl::schedule_flood(const Token& root) {
    {
        std::lock_guard lock(pending_mu);
        if (!flood_scheduled.insert(root).second) return;
    }
    env.post_after(0, [self = shared_from_this(), root] {
        {
            std::lock_guard lock(self->pending_mu);
            self->flood_scheduled.erase(root);
        }
        if (self->stopped) return;
        if (self->cfg.flood_on_change) {
            self->flood_step(root);
        } else {
            auto e = self->lookup(root);
            if (!e) return;
            unsigned level = 0;
            {
                std::lock_guard lock(e->mu);
                auto* p = e->repl.find(PolicyKind::flooding);
                if (!p) return;
                level = p->level;
            }
            self->pull_payloads(root, level);
        }
    });
}

void Server::Impl::flood_step(const Token& root) {
    auto root_entry = lookup(root);
    if (!root_entry) return;
    unsigned level = 0;
    std::vector<std::pair<Address, std::uint64_t>> peers;
    {
        std::lock_guard lock(root_entry->mu);
        auto* p = root_entry->repl.find(PolicyKind::flooding);
        if (!p) return;
        level = p->level;
        for (const auto& [addr, last] : root_entry->repl.peers())
            if (addr != cfg.listen) peers.emplace_back(addr, last);
    }
    pull_payloads(root, level);

    ClusterLookup lookup_fn = [this](const Token& t) { return cluster_of(t); };
    const auto now_ms = now();
    for (const auto& item : subgraph_tokens(root, level, lookup_fn)) {
        if (item.needs_payload) continue;
        auto e = lookup(item.token);
        if (!e) continue;
        std::vector<std::pair<std::uint64_t, Address>> stale;
        {
            std::lock_guard lock(e->mu);
            for (const auto& [addr, unused] : peers) {
                auto it = e->sync.find(addr);
                if (it == e->sync.end()) {
                    stale.emplace_back(0, addr);
                    continue;
                }
                const auto& s = it->second;
                if (s.outstanding) continue;
                bool behind = !s.synced || s.upto < e->arrival.size();
                bool aged = cfg.flood_interval_ms > 0 && now_ms - s.last >= cfg.flood_interval_ms;
                if (behind || aged) stale.emplace_back(s.last, addr);
            }
        }
        std::stable_sort(stale.begin(), stale.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        if (cfg.flood_fanout > 0 && stale.size() > cfg.flood_fanout) stale.resize(cfg.flood_fanout);
        for (const auto& [unused, addr] : stale) send_assent(item.token, e, addr, std::nullopt);
    }
}

void Server::Impl::pull_payloads(const Token& root, unsigned level) {
    if (level == 0) return;
    ClusterLookup lookup_fn = [this](const Token& t) { return cluster_of(t); };
    for (const auto& item : subgraph_tokens(root, level, lookup_fn)) {
        if (!item.needs_payload || item.token.home == cfg.listen) continue;
        if (auto e = lookup(item.token)) {
            std::lock_guard lock(e->mu);
            if (e->dist.payload) continue;
        }
        remote_fetch(item.token, [self = shared_from_this(), t = item.token](FetchOutcome o) {
            if (!o.part) return;
            // Pulled under a policy: keep it out of reach of cache eviction.
            if (auto e = self->lookup(t)) self->move_to_store(t, e);
        });
    }
}

void Server::Impl::send_assent(const Token& x, const EntryPtr& e, const Address& peer,
                               std::optional<std::vector<Token>> push) {
    net::AssentRequest req;
    req.sender = cfg.listen;
    req.token = x;
    {
        std::lock_guard lock(e->mu);
        auto& s = e->sync[peer];
        if (s.outstanding) return;
        s.outstanding = true;
        if (push) {
            req.sample = std::move(*push);
        } else if (s.synced) {
            req.sample.assign(e->arrival.begin() + static_cast<std::ptrdiff_t>(std::min(s.upto, e->arrival.size())),
                              e->arrival.end());
        } else {
            auto members = e->dist.cluster.members();
            auto first = members.size() > cfg.sample_max ? members.size() - cfg.sample_max : 0;
            req.sample.assign(members.begin() + static_cast<std::ptrdiff_t>(first), members.end());
        }
        if (req.sample.size() > cfg.sample_max)
            req.sample.erase(req.sample.begin(),
                             req.sample.end() - static_cast<std::ptrdiff_t>(cfg.sample_max));
        req.digest = cluster_digest(e->dist.cluster);
    }
    auto sample = req.sample;
    env.call(peer, req.to_message(request_id()),
             [self = shared_from_this(), x, e, peer, sample = std::move(sample), was_push = push.has_value()](
                 net::CallResult r) mutable {
                 self->on_assent_response(x, e, peer, std::move(sample), was_push, std::move(r));
             });
}

void Server::Impl::on_assent_response(const Token& x, const EntryPtr& e, const Address& peer,
                                      std::vector<Token> sample, bool was_push, net::CallResult r) {
    std::vector<Token> added;
    std::vector<Token> push;
    {
        std::lock_guard lock(e->mu);
        auto& s = e->sync[peer];
        s.outstanding = false;
        if (!r.ok() || r.response.type != MessageType::assent_resp) {
            spdlog::debug("{}: assent {} to {} failed: {}", cfg.listen.to_string(), token_prefix(x), peer.to_string(),
                          r.ok() ? "protocol error" : errc_name(r.error));
            return;
        }
        net::AssentResponse resp;
        try {
            resp = net::AssentResponse::from(r.response);
        } catch (const Error& err) {
            spdlog::warn("{}: bad assent response from {}: {}", cfg.listen.to_string(), peer.to_string(), err.what());
            return;
        }
        s.last = now();
        switch (resp.status) {
        case net::AssentStatus::not_found:
            e->repl.forget_peer(peer);
            s.synced = true;
            s.upto = e->arrival.size();
            return;
        case net::AssentStatus::declined:
            s.synced = true;
            s.upto = e->arrival.size();
            return;
        case net::AssentStatus::ok:
            break;
        }
        added = e->absorb(resp.missing);
        sample.insert(sample.end(), resp.missing.begin(), resp.missing.end());
        std::sort(sample.begin(), sample.end());
        if (!was_push) push = cluster_diff(e->dist.cluster, resp.digest, sample);
        s.synced = true;
        if (push.empty()) s.upto = e->arrival.size();
    }
    if (!push.empty()) send_assent(x, e, peer, std::move(push));
    if (!added.empty()) cluster_changed(x);
}

void Server::Impl::periodic_flood() {
    if (!running || cfg.flood_interval_ms == 0) return;
    env.post_after(cfg.flood_interval_ms, [self = shared_from_this()] {
        if (!self->running) return;
        for (auto& [root, unused] : self->flooding_roots()) self->flood_step(root);
        self->periodic_flood();
    });
}

void Server::Impl::periodic_gc() {
    if (!running || cfg.gc_interval_ms == 0) return;
    env.post_after(cfg.gc_interval_ms, [self = shared_from_this()] {
        if (!self->running) return;
        self->gc_sweep();
        self->periodic_gc();
    });
}

std::vector<Token> Server::Impl::gc_sweep() {
    const auto now_ms = now();
    std::vector<Token> removed;
    for (auto& [t, e] : snapshot_entries()) {
        std::lock_guard lock(e->mu);
        std::uint64_t keep_until = t.expire.millis;
        if (e->stored) {
            if (auto until = e->sustain_until()) keep_until = std::max(keep_until, until->millis);
        }
        if (now_ms > keep_until + cfg.grace_period_ms) removed.push_back(t);
    }
    if (!removed.empty()) {
        std::lock_guard lock(index_mu);
        for (const auto& t : removed) {
            entries.erase(t);
            cache.erase(t);
        }
    }
    return removed;
}

// ---- remote handlers -------------------------------------------------------

namespace {

void record_requester(net::DittoList& list, const Address& who, std::size_t max) {
    std::erase(list, who);
    list.insert(list.begin(), who);
    if (list.size() > max) list.resize(max);
}

net::DittoList ditto_for(const net::DittoList& list, const Address& requester) {
    net::DittoList out;
    for (const auto& a : list)
        if (a != requester) out.push_back(a);
    return out;
}

} // namespace

void Server::Impl::handle_fetch(const Message& m, Reply reply) {
    auto req = net::FetchRequest::from(m);
    auto e = lookup(req.token, true);
    if (!e) {
        reply(net::FetchResponse{net::FetchStatus::not_found, {}, std::nullopt}.to_message(m.request_id));
        return;
    }
    std::unique_lock lock(e->mu);
    auto ditto = ditto_for(e->requesters, req.sender);
    record_requester(e->requesters, req.sender, cfg.ditto_max);
    if (e->in_flight + 1 > cfg.busy_threshold) {
        lock.unlock();
        reply(net::BusyResponse{req.token, std::move(ditto)}.to_message(m.request_id));
        return;
    }
    if (!e->dist.payload) {
        lock.unlock();
        reply(net::FetchResponse{net::FetchStatus::not_found, std::move(ditto), std::nullopt}.to_message(m.request_id));
        return;
    }
    ++e->in_flight;
    net::FetchResponse resp{net::FetchStatus::found, std::move(ditto), e->dist};
    lock.unlock();
    auto finish = [e, reply = std::move(reply), msg = resp.to_message(m.request_id)]() mutable {
        {
            std::lock_guard l(e->mu);
            --e->in_flight;
        }
        reply(std::move(msg));
    };
    if (cfg.fetch_service_ms > 0)
        env.post_after(cfg.fetch_service_ms, std::move(finish));
    else
        finish();
}

void Server::Impl::handle_assent(const Message& m, Reply reply) {
    auto req = net::AssentRequest::from(m);
    const bool matching = !roots_covering(req.token).empty();
    auto e = lookup(req.token);
    if (!e && matching) e = get_or_create(req.token, true);
    if (!e) {
        reply(net::AssentResponse{net::AssentStatus::not_found, {}, {}}.to_message(m.request_id));
        return;
    }
    if (!matching) {
        reply(net::AssentResponse{net::AssentStatus::declined, {}, {}}.to_message(m.request_id));
        return;
    }
    net::AssentResponse resp;
    std::vector<Token> added;
    {
        std::lock_guard lock(e->mu);
        const auto now_ms = now();
        if (req.sender != cfg.listen) e->repl.learn_peer(req.sender, now_ms);
        added = e->absorb(req.sample);
        for (const auto& t : added)
            if (t.home != cfg.listen) e->repl.learn_peer(t.home, now_ms);
        resp.status = net::AssentStatus::ok;
        resp.missing = cluster_diff(e->dist.cluster, req.digest, req.sample);
        resp.digest = cluster_digest(e->dist.cluster);
        auto& s = e->sync[req.sender];
        s.synced = true;
        s.upto = e->arrival.size();
        s.last = now_ms;
    }
    reply(resp.to_message(m.request_id));
    if (!added.empty()) cluster_changed(req.token);
}

// ---- local handlers --------------------------------------------------------

namespace {

Message local_reply(std::uint64_t id, Errc status, std::optional<DistributedPart> part = std::nullopt) {
    return net::LocalResponse{status, std::move(part)}.to_message(id);
}

} // namespace

void Server::Impl::check_secret(const net::LocalSecret& s) const {
    if (sodium_memcmp(s.data(), cfg.secret.data(), s.size()) != 0)
        throw Error(Errc::untrusted_channel, "bad local secret");
}

void Server::Impl::handle_request_payload(const Message& m, Reply reply) {
    auto req = net::RequestPayload::from(m);
    check_secret(req.secret);
    const auto id = m.request_id;
    const bool cluster_only = req.flags & net::kClusterOnly;
    const bool local_only = (req.flags & net::kLocalOnly) || req.token.home == cfg.listen;
    if (auto e = lookup(req.token, true)) {
        bool placeholder;
        {
            std::lock_guard lock(e->mu);
            placeholder = e->placeholder;
        }
        auto part = snapshot(e);
        if (part.payload || (cluster_only && (local_only || !placeholder)))
            return reply(local_reply(id, Errc::ok, std::move(part)));
    }
    auto fallback = [self = shared_from_this(), token = req.token, cluster_only, id](Errc status) {
        if (!cluster_only) return local_reply(id, status);
        // The caller only wants something to hang a cluster on.
        auto e = self->get_or_create(token, false);
        if (status != Errc::ok) {
            std::lock_guard lock(e->mu);
            if (e->dist.cluster.empty()) e->placeholder = true;
        }
        return local_reply(id, Errc::ok, self->snapshot(e));
    };
    if (local_only) return reply(fallback(Errc::not_found));
    remote_fetch(req.token, [reply = std::move(reply), fallback, id](FetchOutcome o) {
        if (o.status == Errc::ok && o.part) return reply(local_reply(id, Errc::ok, std::move(o.part)));
        reply(fallback(o.status));
    });
}

void Server::Impl::handle_adopt(const Message& m, Reply reply) {
    auto req = net::AdoptRequest::from(m);
    check_secret(req.secret);
    const auto& t = req.part.token;
    if (t.home != cfg.listen) throw Error(Errc::wrong_home, t.home.to_string());
    if (!req.part.payload || !token_verify(t, *req.part.payload)) throw Error(Errc::verify_failed);
    if (req.part.payload->size() > cfg.max_payload_size) throw Error(Errc::payload_too_large);
    auto e = get_or_create(t, true);
    std::vector<Token> added;
    DistributedPart part;
    {
        std::lock_guard lock(e->mu);
        if (!e->dist.payload) e->dist.payload = req.part.payload;
        added = e->absorb(req.part.cluster.members());
        if (!e->adopted) {
            e->adopted = true;
            e->adopted_at = now();
        }
        part = e->dist;
    }
    reply(local_reply(m.request_id, Errc::ok, std::move(part)));
    if (!added.empty()) cluster_changed(t);
}

void Server::Impl::handle_replicate(const Message& m, Reply reply) {
    auto req = net::ReplicateRequest::from(m);
    check_secret(req.secret);
    auto kind = policy_kind_from(req.kind);
    if (!kind) throw Error(Errc::unknown_policy, "kind " + std::to_string(req.kind));
    if (!req.start) {
        if (auto e = lookup(req.token)) {
            std::lock_guard lock(e->mu);
            e->repl.stop(*kind);
        }
        return reply(local_reply(m.request_id, Errc::ok));
    }
    ReplicationPolicy policy{*kind, req.level, std::nullopt};
    if (req.sustain_until != 0) policy.sustain_until = ExpireDate{req.sustain_until};
    policy.validate();

    auto e = get_or_create(req.token, true);
    bool need_payload = false;
    DistributedPart part;
    {
        std::lock_guard lock(e->mu);
        e->repl.set(policy);
        if (req.token.home != cfg.listen) e->repl.learn_peer(req.token.home, now());
        need_payload = *kind == PolicyKind::sustain && !e->dist.payload && req.token.home != cfg.listen;
        part = e->dist;
    }
    reply(local_reply(m.request_id, Errc::ok, std::move(part)));
    if (need_payload) remote_fetch(req.token, [](FetchOutcome) {});
    if (*kind == PolicyKind::flooding && cfg.flood_on_change && !stopped) schedule_flood(req.token);
}

void Server::Impl::handle_update(const Message& m, Reply reply) {
    auto req = net::UpdateRequest::from(m);
    check_secret(req.secret);
    auto e = lookup(req.token, true);
    if (!e) throw Error(Errc::unknown_object, token_prefix(req.token));
    std::vector<Token> added;
    DistributedPart part;
    {
        std::lock_guard lock(e->mu);
        added = e->absorb(req.tokens);
        part = e->dist;
    }
    reply(local_reply(m.request_id, Errc::ok, std::move(part)));
    if (!added.empty()) cluster_changed(req.token);
}

// ---- Server facade ---------------------------------------------------------

Server::Server(ServerConfig config, net::Environment& env) {
    ensure_crypto_ready();
    config.validate();
    impl_ = std::make_shared<Impl>(std::move(config), env);
}

Server::~Server() { stop(); }

const ServerConfig& Server::config() const noexcept { return impl_->cfg; }

// Handlers get a copy of `reply` so that a parse error thrown before they
// take ownership can still be answered here.
void Server::on_remote(Message request, Reply reply) {
    const auto id = request.request_id;
    try {
        switch (request.type) {
        case MessageType::fetch:
            return impl_->handle_fetch(request, reply);
        case MessageType::assent:
            return impl_->handle_assent(request, reply);
        default:
            if (net::is_local_type(request.type))
                throw Error(Errc::untrusted_channel, "local request on remote channel");
            throw Error(Errc::protocol_error, "not a request");
        }
    } catch (const Error& e) {
        reply(net::ErrorBody{e.code(), e.what()}.to_message(id));
    }
}

void Server::on_local(Message request, Reply reply) {
    const auto id = request.request_id;
    try {
        switch (request.type) {
        case MessageType::request_payload:
            return impl_->handle_request_payload(request, reply);
        case MessageType::adopt:
            return impl_->handle_adopt(request, reply);
        case MessageType::replicate:
            return impl_->handle_replicate(request, reply);
        case MessageType::update:
            return impl_->handle_update(request, reply);
        default:
            throw Error(Errc::protocol_error, "not a local request");
        }
    } catch (const Error& e) {
        reply(local_reply(id, e.code()));
    }
}

void Server::start() {
    if (impl_->running.exchange(true)) return;
    impl_->stopped = false;
    impl_->periodic_flood();
    impl_->periodic_gc();
}

void Server::stop() {
    impl_->running = false;
    impl_->stopped = true;
}

void Server::flood_step(const Token& root) { impl_->flood_step(root); }

void Server::flood_all() {
    for (auto& [root, unused] : impl_->flooding_roots()) impl_->flood_step(root);
}

std::vector<Token> Server::gc_sweep() { return impl_->gc_sweep(); }

std::optional<DistributedPart> Server::find(const Token& token) const {
    auto e = impl_->lookup(token);
    if (!e) return std::nullopt;
    return impl_->snapshot(e);
}

std::vector<Address> Server::peers(const Token& token) const {
    std::vector<Address> out;
    if (auto e = impl_->lookup(token)) {
        std::lock_guard lock(e->mu);
        for (const auto& [addr, unused] : e->repl.peers()) out.push_back(addr);
    }
    return out;
}

std::vector<ReplicationPolicy> Server::policies(const Token& token) const {
    if (auto e = impl_->lookup(token)) {
        std::lock_guard lock(e->mu);
        return e->repl.policies();
    }
    return {};
}

bool Server::in_store(const Token& token) const {
    auto e = impl_->lookup(token);
    if (!e) return false;
    std::lock_guard lock(e->mu);
    return e->stored;
}

bool Server::in_cache(const Token& token) const {
    std::lock_guard lock(impl_->index_mu);
    return impl_->cache.contains(token);
}

std::vector<Token> Server::cache_order() const {
    std::lock_guard lock(impl_->index_mu);
    return impl_->cache.keys();
}

std::size_t Server::entry_count() const {
    std::lock_guard lock(impl_->index_mu);
    return impl_->entries.size();
}

std::vector<StoreRecord> Server::export_store() const {
    std::vector<StoreRecord> out;
    for (auto& [t, e] : impl_->snapshot_entries()) {
        std::lock_guard lock(e->mu);
        if (!e->stored) continue;
        out.push_back(StoreRecord{e->dist, e->adopted, e->adopted_at, e->repl.policies(), e->repl.peers()});
    }
    return out;
}

void Server::import_store(const std::vector<StoreRecord>& records) {
    for (const auto& r : records) {
        auto e = impl_->get_or_create(r.part.token, true);
        std::lock_guard lock(e->mu);
        if (!e->dist.payload) e->dist.payload = r.part.payload;
        e->absorb(r.part.cluster.members());
        e->adopted = e->adopted || r.adopted;
        e->adopted_at = r.adopted_at;
        for (const auto& p : r.policies) e->repl.set(p);
        for (const auto& [addr, last] : r.peers) e->repl.learn_peer(addr, last);
    }
}

} // namespace mo
