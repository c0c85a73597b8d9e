// Remote payload retrieval: home first, then servers from ditto lists, with
// retries for an unreachable home and backoff rounds while servers are busy.

#include <algorithm>
#include <deque>

#include <spdlog/spdlog.h>

#include "server_impl.hpp"

namespace mo {

namespace {

class FetchJob : public std::enable_shared_from_this<FetchJob> {
public:
    FetchJob(std::shared_ptr<Server::Impl> srv, Token token) : srv_(std::move(srv)), token_(std::move(token)) {}

    void start() { ask(token_.home, true); }

private:
    void ask(const Address& to, bool home) {
        net::FetchRequest req{srv_->cfg.listen, token_};
        srv_->env.call(to, req.to_message(srv_->request_id()),
                       [self = shared_from_this(), to, home](net::CallResult r) { self->on_reply(to, home, std::move(r)); });
    }

    void on_reply(const Address& from, bool home, net::CallResult r) {
        if (!r.ok()) {
            if (home && round_ == 0) {
                if (++home_failures_ < srv_->cfg.home_attempts) {
                    auto delay = srv_->cfg.retry_base_ms << (home_failures_ - 1);
                    srv_->env.post_after(delay, [self = shared_from_this()] { self->ask(self->token_.home, true); });
                    return;
                }
                home_unreachable_ = true;
            }
            return next();
        }
        try {
            switch (r.response.type) {
            case net::MessageType::fetch_resp: {
                auto resp = net::FetchResponse::from(r.response);
                add_candidates(resp.ditto);
                if (resp.status == net::FetchStatus::found && resp.part) {
                    if (resp.part->token == token_ && resp.part->payload &&
                        token_verify(token_, *resp.part->payload))
                        return finish(Errc::ok, std::move(resp.part));
                    spdlog::warn("{}: {} sent a payload that does not verify for {}", srv_->cfg.listen.to_string(),
                                 from.to_string(), token_prefix(token_));
                    saw_bad_ = true;
                }
                break;
            }
            case net::MessageType::busy: {
                auto resp = net::BusyResponse::from(r.response);
                add_candidates(resp.ditto);
                saw_busy_ = saw_busy_ever_ = true;
                break;
            }
            default:
                break;
            }
        } catch (const Error& e) {
            spdlog::warn("{}: bad fetch reply from {}: {}", srv_->cfg.listen.to_string(), from.to_string(), e.what());
        }
        next();
    }

    void add_candidates(const net::DittoList& ditto) {
        for (const auto& a : ditto) {
            if (a == srv_->cfg.listen || a == token_.home) continue;
            if (std::find(known_.begin(), known_.end(), a) != known_.end()) continue;
            known_.push_back(a);
            queue_.push_back(a);
        }
    }

    void next() {
        if (!queue_.empty()) {
            auto a = queue_.front();
            queue_.pop_front();
            return ask(a, false);
        }
        if (home_last_) {
            home_last_ = false;
            return ask(token_.home, true);
        }
        if (saw_busy_ && round_ + 1 < srv_->cfg.busy_rounds) {
            ++round_;
            saw_busy_ = false;
            queue_.assign(known_.begin(), known_.end());
            home_last_ = !home_unreachable_;
            auto delay = srv_->cfg.retry_base_ms << std::min(round_ - 1, 6u);
            srv_->env.post_after(delay, [self = shared_from_this()] { self->next(); });
            return;
        }
        Errc status = home_unreachable_ ? Errc::unreachable_home
                      : saw_busy_ever_  ? Errc::busy_exhausted
                      : saw_bad_        ? Errc::verify_failed
                                        : Errc::not_found_everywhere;
        finish(status, std::nullopt);
    }

    void finish(Errc status, std::optional<DistributedPart> part) {
        srv_->complete_fetch(token_, FetchOutcome{status, std::move(part)});
    }

    std::shared_ptr<Server::Impl> srv_;
    Token token_;
    unsigned home_failures_ = 0;
    unsigned round_ = 0;
    bool home_unreachable_ = false;
    bool home_last_ = false;
    bool saw_busy_ = false;
    bool saw_busy_ever_ = false;
    bool saw_bad_ = false;
    std::vector<Address> known_;
    std::deque<Address> queue_;
};

} // namespace

void Server::Impl::remote_fetch(const Token& t, FetchDone done) {
    {
        std::lock_guard lock(pending_mu);
        auto [it, fresh] = pending.try_emplace(t);
        it->second.push_back(std::move(done));
        if (!fresh) return;
    }
    std::make_shared<FetchJob>(shared_from_this(), t)->start();
}

void Server::Impl::complete_fetch(const Token& t, FetchOutcome outcome) {
    if (outcome.status == Errc::ok && outcome.part) outcome.part = install_fetched(*outcome.part);
    std::vector<FetchDone> waiters;
    {
        std::lock_guard lock(pending_mu);
        auto it = pending.find(t);
        if (it != pending.end()) {
            waiters = std::move(it->second);
            pending.erase(it);
        }
    }
    for (auto& w : waiters) w(outcome);
}

std::optional<DistributedPart> Server::Impl::install_fetched(const DistributedPart& part) {
    auto e = get_or_create(part.token, false);
    std::vector<Token> added;
    DistributedPart out;
    {
        std::lock_guard lock(e->mu);
        if (!e->dist.payload) e->dist.payload = part.payload;
        e->placeholder = false;
        added = e->absorb(part.cluster.members());
        out = e->dist;
    }
    if (!added.empty()) cluster_changed(part.token);
    return out;
}

} // namespace mo
