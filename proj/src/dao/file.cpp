#include "mo/dao/file.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace mo {

namespace {

constexpr AuxTag role(DaoRole r) { return static_cast<AuxTag>(r); }

std::vector<Token> members_with_role(const Cluster& c, DaoRole r) {
    std::vector<Token> out;
    for (const auto& t : c)
        if (t.aux == role(r)) out.push_back(t);
    return out;
}

// Expire date strictly after every member of `c` and no earlier than now + lifetime.
ExpireDate next_expire(const Cluster& c, std::uint64_t now_ms, std::uint64_t lifetime_ms) {
    std::uint64_t floor = now_ms + lifetime_ms;
    if (!c.empty()) floor = std::max(floor, c.back().expire.millis);
    if (floor == std::numeric_limits<std::uint64_t>::max())
        throw Error(Errc::expire_order_violation, "no later expire date available");
    return ExpireDate{floor + 1};
}

} // namespace

FileDao FileDao::create(Session& session, std::string_view name, FileOptions options) {
    ExpireDate expire{session.now_ms() + options.lifetime_ms};
    std::string description = "file:" + std::string(name);
    auto root = session.create_new(expire, as_bytes(description), options.psec, SecurityPolicy::none(),
                                   role(DaoRole::file));
    return FileDao(session, root, std::move(options));
}

FileDao FileDao::open(Session& session, const Token& root, FileOptions options) {
    session.create_copy(root, options.psec, SecurityPolicy::none());
    return FileDao(session, root, std::move(options));
}

std::vector<Token> FileDao::blocks() { return members_with_role(session_->get_cluster(root_), DaoRole::block); }

std::optional<Token> FileDao::current_content(const Token& block) {
    session_->create_copy(block, options_.psec, SecurityPolicy::none());
    auto contents = members_with_role(session_->get_cluster(block), DaoRole::content);
    if (contents.empty()) return std::nullopt;
    return contents.back();
}

Bytes FileDao::read() {
    Bytes out;
    for (const auto& block : blocks()) {
        // Every block is created together with its first content, so an
        // empty block means its cluster could not be obtained.
        auto content = current_content(block);
        if (!content) throw Error(Errc::unreachable_content, "no content known for block " + token_prefix(block));
        session_->create_copy(*content, options_.psec, SecurityPolicy::none());
        Bytes part;
        try {
            part = session_->get_payload(*content);
        } catch (const Error& e) {
            if (e.code() == Errc::authentication_failure) throw;
            throw Error(Errc::unreachable_content, token_prefix(*content) + ": " + e.what());
        }
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

Token FileDao::write_block(std::size_t index, ByteView content) {
    auto current = blocks();
    if (index > current.size()) throw Error(Errc::not_found, "block " + std::to_string(index) + " does not exist");
    const auto now = session_->now_ms();
    Token block;
    if (index == current.size()) {
        auto expire = next_expire(session_->get_cluster(root_), now, options_.lifetime_ms);
        std::string description = "block:" + std::to_string(index);
        block = session_->create_new(expire, as_bytes(description), options_.psec, SecurityPolicy::none(),
                                     role(DaoRole::block));
        session_->add_to_cluster(root_, block);
    } else {
        block = current[index];
        session_->create_copy(block, options_.psec, SecurityPolicy::none());
    }
    auto expire = next_expire(session_->get_cluster(block), now, options_.lifetime_ms);
    auto c = session_->create_new(expire, content, options_.psec, SecurityPolicy::none(), role(DaoRole::content));
    session_->add_to_cluster(block, c);
    return c;
}

} // namespace mo
