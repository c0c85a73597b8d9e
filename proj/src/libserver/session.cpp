#include "mo/libserver/session.hpp"

#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <thread>

#include <spdlog/spdlog.h>

namespace mo {

using net::LocalResponse;
using net::Message;
using net::MessageType;

namespace {

struct Sub {
    Token object;
    Cluster seen; // tracker plus everything already queued
    ClusterCallback fn;
    std::deque<Token> queue;
    bool active = true;
    bool queued = false; // present in State::ready
};

struct Obj {
    MicroObject mo;
    std::vector<std::shared_ptr<Sub>> subs;
    int watchers = 0;
};

void check_cluster_policy(const SecurityPolicy& csec) {
    if (csec.mode() == SealMode::encrypt || csec.mode() == SealMode::encrypt_authenticate)
        throw Error(Errc::unsupported_policy, "encrypted clusters are not supported");
}

} // namespace

struct Session::State : std::enable_shared_from_this<Session::State> {
    State(net::LocalLink& l, SessionOptions o) : link(l), opt(std::move(o)), sim(l.drives_time()) {}

    net::LocalLink& link;
    SessionOptions opt;
    const bool sim;

    mutable std::mutex mu;
    std::condition_variable changed; // some cluster grew
    std::condition_variable work;    // notifications pending or closing
    std::condition_variable stop;    // closing, for the poller
    std::map<Token, Obj> objects;
    std::deque<std::shared_ptr<Sub>> ready;
    ClusterFilter filter;
    bool closing = false;
    std::uint64_t next_id = 1;
    std::thread notifier;
    std::thread poller;

    Obj& obj(const Token& t) {
        auto it = objects.find(t);
        if (it == objects.end()) throw Error(Errc::unknown_object, "not open in this session: " + token_prefix(t));
        return it->second;
    }
    const Obj& obj(const Token& t) const { return const_cast<State*>(this)->obj(t); }

    std::uint64_t id() {
        std::lock_guard lock(mu);
        return next_id++;
    }

    LocalResponse rpc(const Message& request) {
        auto r = link.call(request);
        if (!r.ok()) throw Error(Errc::disconnected, std::string(errc_name(r.error)));
        if (r.response.type == MessageType::error) {
            auto e = net::ErrorBody::from(r.response);
            throw Error(e.code, e.detail);
        }
        if (r.response.type != MessageType::local_resp) throw Error(Errc::protocol_error, "unexpected reply type");
        return LocalResponse::from(r.response);
    }

    // Folds a server view into the local one; call with `mu` held.
    void merge(Obj& o, const DistributedPart& part) {
        if (!o.mo.dist.payload && part.payload && token_verify(o.mo.dist.token, *part.payload))
            o.mo.dist.payload = part.payload;
        std::vector<Token> incoming;
        const bool filtered = filter && o.mo.csec.mode() == SealMode::authenticate;
        for (const auto& t : part.cluster)
            if (!filtered || filter(o.mo.dist.token, t)) incoming.push_back(t);
        auto added = o.mo.dist.cluster.add_all(incoming);
        if (!added.empty()) enqueue(o, added);
    }

    void enqueue(Obj& o, const std::vector<Token>& added) {
        for (auto& sub : o.subs) {
            if (!sub->active) continue;
            for (const auto& t : added)
                if (sub->seen.add(t)) sub->queue.push_back(t);
            if (!sub->queue.empty() && !sub->queued) {
                sub->queued = true;
                ready.push_back(sub);
            }
        }
        changed.notify_all();
        work.notify_one();
    }

    // Runs pending callbacks on this thread (simulation only).
    void drain_inline() {
        if (!sim) return;
        std::unique_lock lock(mu);
        run_ready(lock);
    }

    void run_ready(std::unique_lock<std::mutex>& lock) {
        while (!ready.empty()) {
            auto sub = ready.front();
            ready.pop_front();
            sub->queued = false;
            while (sub->active && !sub->queue.empty()) {
                auto t = sub->queue.front();
                sub->queue.pop_front();
                auto fn = sub->fn;
                lock.unlock();
                try {
                    fn(t);
                } catch (const std::exception& e) {
                    spdlog::error("cluster callback raised: {}", e.what());
                }
                lock.lock();
            }
        }
    }

    void notifier_loop() {
        std::unique_lock lock(mu);
        for (;;) {
            work.wait(lock, [&] { return closing || !ready.empty(); });
            if (closing) return;
            run_ready(lock);
        }
    }

    void poller_loop() {
        std::unique_lock lock(mu);
        for (;;) {
            stop.wait_for(lock, std::chrono::milliseconds(opt.poll_interval_ms), [&] { return closing; });
            if (closing) return;
            std::vector<Token> watched;
            for (const auto& [t, o] : objects)
                if (!o.subs.empty() || o.watchers > 0) watched.push_back(t);
            lock.unlock();
            for (const auto& t : watched) {
                try {
                    refresh(t, true);
                } catch (const Error& e) {
                    spdlog::debug("poll of {} failed: {}", token_prefix(t), e.what());
                }
            }
            lock.lock();
        }
    }

    void refresh(const Token& t, bool local_only) {
        std::uint8_t flags = net::kClusterOnly | (local_only ? net::kLocalOnly : 0);
        auto resp = rpc(net::RequestPayload{opt.secret, flags, t}.to_message(id()));
        if (resp.status != Errc::ok || !resp.part) return;
        std::lock_guard lock(mu);
        merge(obj(t), *resp.part);
    }

    std::optional<Token> first_new(const Token& object, const Cluster& tracker) {
        auto fresh = cluster_new_since(obj(object).mo.dist.cluster, tracker);
        if (fresh.empty()) return std::nullopt;
        return fresh.front();
    }

    // Shared body of the two waits; `deadline_ms` is on the link's clock.
    std::optional<Token> wait(const Token& object, const Cluster& tracker, std::optional<std::uint64_t> timeout_us) {
        const auto start = link.now_ms();
        const auto wall_start = std::chrono::steady_clock::now();
        auto expired = [&] {
            if (!timeout_us) return false;
            if (sim) return (link.now_ms() - start) * 1000 >= *timeout_us;
            return std::chrono::steady_clock::now() - wall_start >= std::chrono::microseconds(*timeout_us);
        };
        {
            std::lock_guard lock(mu);
            if (auto t = first_new(object, tracker)) return t;
        }
        refresh(object, true);
        if (sim) {
            for (;;) {
                {
                    std::lock_guard lock(mu);
                    if (auto t = first_new(object, tracker)) return t;
                }
                if (expired()) return std::nullopt;
                auto step = opt.poll_interval_ms;
                if (timeout_us) {
                    auto left_ms = (*timeout_us + 999) / 1000 - (link.now_ms() - start);
                    step = std::max<std::uint64_t>(1, std::min(step, left_ms));
                }
                link.advance(step);
                refresh(object, true);
                drain_inline();
            }
        }
        std::unique_lock lock(mu);
        auto& o = obj(object);
        ++o.watchers;
        std::optional<Token> found;
        for (;;) {
            if ((found = first_new(object, tracker)) || closing || expired()) break;
            auto slice = std::chrono::milliseconds(opt.poll_interval_ms);
            if (timeout_us) {
                auto left = std::chrono::microseconds(*timeout_us) -
                            std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() -
                                                                                  wall_start);
                slice = std::min(slice, std::chrono::ceil<std::chrono::milliseconds>(left));
            }
            changed.wait_for(lock, slice);
        }
        --o.watchers;
        if (!found && !closing && !timeout_us) throw Error(Errc::disconnected);
        return found;
    }
};

Session::Session(net::LocalLink& link, SessionOptions options)
    : state_(std::make_shared<State>(link, std::move(options))) {
    ensure_crypto_ready();
    if (!state_->sim) {
        state_->notifier = std::thread([s = state_.get()] { s->notifier_loop(); });
        state_->poller = std::thread([s = state_.get()] { s->poller_loop(); });
    }
}

Session::~Session() {
    {
        std::lock_guard lock(state_->mu);
        state_->closing = true;
    }
    state_->work.notify_all();
    state_->stop.notify_all();
    state_->changed.notify_all();
    if (state_->notifier.joinable()) state_->notifier.join();
    if (state_->poller.joinable()) state_->poller.join();
}

Token Session::create_new(ExpireDate expire, ByteView plaintext, const SecurityPolicy& psec,
                          const SecurityPolicy& csec, AuxTag aux) {
    check_cluster_policy(csec);
    auto mo = mo_new(state_->opt.home, expire, plaintext, psec, csec, aux, state_->opt.max_payload_size);
    auto resp = state_->rpc(net::AdoptRequest{state_->opt.secret, mo.dist}.to_message(state_->id()));
    if (resp.status != Errc::ok) throw Error(Errc::adopt_refused, std::string(errc_name(resp.status)));
    const auto token = mo.dist.token;
    {
        std::lock_guard lock(state_->mu);
        auto [it, fresh] = state_->objects.try_emplace(token, Obj{std::move(mo), {}, 0});
        if (resp.part) state_->merge(it->second, *resp.part);
    }
    state_->drain_inline();
    return token;
}

Token Session::create_copy(const Token& token, const SecurityPolicy& psec, const SecurityPolicy& csec) {
    check_cluster_policy(csec);
    std::lock_guard lock(state_->mu);
    state_->objects.try_emplace(token, Obj{mo_from_token(token, psec, csec), {}, 0});
    return token;
}

void Session::add_to_cluster(const Token& parent, const Token& child) { add_tokens(parent, {child}); }

void Session::add_tokens(const Token& parent, const std::vector<Token>& tokens) {
    {
        std::lock_guard lock(state_->mu);
        state_->obj(parent);
    }
    auto update = [&] {
        return state_->rpc(net::UpdateRequest{state_->opt.secret, parent, tokens}.to_message(state_->id()));
    };
    auto resp = update();
    if (resp.status == Errc::unknown_object) {
        // The server has never seen this copy: have it materialize one.
        auto got = state_->rpc(net::RequestPayload{state_->opt.secret, net::kClusterOnly, parent}.to_message(
            state_->id()));
        if (got.status != Errc::ok) throw Error(got.status, "cannot materialize " + token_prefix(parent));
        resp = update();
    }
    if (resp.status != Errc::ok) throw Error(resp.status);
    {
        std::lock_guard lock(state_->mu);
        auto& o = state_->obj(parent);
        if (resp.part) state_->merge(o, *resp.part);
        auto added = o.mo.dist.cluster.add_all(tokens);
        if (!added.empty()) state_->enqueue(o, added);
    }
    state_->drain_inline();
}

void Session::put_repl(const Token& object, const ReplicationPolicy& policy) {
    policy.validate();
    put_repl_raw(object, true, static_cast<std::uint8_t>(policy.kind), policy.level,
                 policy.sustain_until ? policy.sustain_until->millis : 0);
}

void Session::stop_repl(const Token& object, PolicyKind kind) {
    put_repl_raw(object, false, static_cast<std::uint8_t>(kind), 0, 0);
}

void Session::put_repl_raw(const Token& object, bool start, std::uint8_t kind, std::uint8_t level,
                           std::uint64_t sustain_until) {
    {
        std::lock_guard lock(state_->mu);
        state_->obj(object);
    }
    net::ReplicateRequest req{state_->opt.secret, object, start, kind, level, sustain_until};
    auto resp = state_->rpc(req.to_message(state_->id()));
    if (resp.status != Errc::ok) throw Error(resp.status);
    std::lock_guard lock(state_->mu);
    auto& o = state_->obj(object);
    if (start) {
        ReplicationPolicy p{*policy_kind_from(kind), level, std::nullopt};
        if (sustain_until) p.sustain_until = ExpireDate{sustain_until};
        o.mo.repl.set(p);
    } else if (auto k = policy_kind_from(kind)) {
        o.mo.repl.stop(*k);
    }
    if (resp.part) state_->merge(o, *resp.part);
}

Token Session::get_token(const Token& object) const {
    std::lock_guard lock(state_->mu);
    return state_->obj(object).mo.dist.token;
}

Cluster Session::get_cluster(const Token& object) {
    {
        std::lock_guard lock(state_->mu);
        state_->obj(object);
    }
    state_->refresh(object, false);
    state_->drain_inline();
    return cached_cluster(object);
}

Cluster Session::cached_cluster(const Token& object) const {
    std::lock_guard lock(state_->mu);
    return state_->obj(object).mo.dist.cluster;
}

Bytes Session::get_payload(const Token& object) {
    {
        std::lock_guard lock(state_->mu);
        auto& o = state_->obj(object);
        if (o.mo.dist.payload) return mo_plaintext(o.mo);
    }
    auto resp = state_->rpc(net::RequestPayload{state_->opt.secret, 0, object}.to_message(state_->id()));
    if (resp.status != Errc::ok) throw Error(resp.status, token_prefix(object));
    if (!resp.part || !resp.part->payload) throw Error(Errc::payload_absent, token_prefix(object));
    Bytes plain;
    {
        std::lock_guard lock(state_->mu);
        auto& o = state_->obj(object);
        if (!o.mo.dist.payload) mo_attach_payload(o.mo, *resp.part->payload);
        try {
            plain = mo_plaintext(o.mo);
        } catch (const Error&) {
            // A bogus object: do not keep it around as if it were valid.
            o.mo.dist.payload.reset();
            throw;
        }
        state_->merge(o, *resp.part);
    }
    state_->drain_inline();
    return plain;
}

bool Session::has_payload(const Token& object) const {
    std::lock_guard lock(state_->mu);
    return state_->obj(object).mo.dist.payload.has_value();
}

MicroObject Session::snapshot(const Token& object) const {
    std::lock_guard lock(state_->mu);
    return state_->obj(object).mo;
}

Subscription Session::put_cluster_callback(const Token& object, const Cluster& tracker, ClusterCallback callback) {
    auto sub = std::make_shared<Sub>();
    sub->object = object;
    sub->seen = tracker;
    sub->fn = std::move(callback);
    {
        std::lock_guard lock(state_->mu);
        auto& o = state_->obj(object);
        o.subs.push_back(sub);
        for (const auto& t : cluster_new_since(o.mo.dist.cluster, tracker)) {
            sub->seen.add(t);
            sub->queue.push_back(t);
        }
        if (!sub->queue.empty()) {
            sub->queued = true;
            state_->ready.push_back(sub);
            state_->work.notify_one();
        }
    }
    state_->drain_inline();
    std::weak_ptr<State> weak = state_;
    return Subscription([weak, sub] {
        auto s = weak.lock();
        if (!s) return;
        std::lock_guard lock(s->mu);
        sub->active = false;
        sub->queue.clear();
        if (auto it = s->objects.find(sub->object); it != s->objects.end()) std::erase(it->second.subs, sub);
    });
}

Token Session::cluster_wait(const Token& object, const Cluster& tracker) {
    return *state_->wait(object, tracker, std::nullopt);
}

std::optional<Token> Session::cluster_try_wait(const Token& object, const Cluster& tracker,
                                               std::chrono::microseconds timeout) {
    return state_->wait(object, tracker, static_cast<std::uint64_t>(std::max<std::int64_t>(0, timeout.count())));
}

void Session::refresh(const Token& object) {
    state_->refresh(object, true);
    state_->drain_inline();
}

void Session::poll_all() {
    std::vector<Token> all;
    {
        std::lock_guard lock(state_->mu);
        for (const auto& [t, o] : state_->objects) all.push_back(t);
    }
    for (const auto& t : all) state_->refresh(t, true);
    state_->drain_inline();
}

void Session::set_cluster_filter(ClusterFilter filter) {
    std::lock_guard lock(state_->mu);
    state_->filter = std::move(filter);
}

std::uint64_t Session::now_ms() const { return state_->link.now_ms(); }

} // namespace mo
