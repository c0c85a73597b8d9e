#include "mo/cluster/cluster.hpp"

#include <algorithm>

namespace mo {

namespace {
struct TokenLess {
    bool operator()(const Token& a, const Token& b) const { return token_order(a, b) < 0; }
};
} // namespace

Cluster::Cluster(std::initializer_list<Token> tokens) {
    for (const auto& t : tokens) add(t);
}

bool Cluster::add(const Token& token) {
    auto it = std::lower_bound(members_.begin(), members_.end(), token, TokenLess{});
    if (it != members_.end() && *it == token) return false;
    members_.insert(it, token);
    return true;
}

std::vector<Token> Cluster::add_all(std::span<const Token> tokens) {
    std::vector<Token> incoming(tokens.begin(), tokens.end());
    std::sort(incoming.begin(), incoming.end(), TokenLess{});
    incoming.erase(std::unique(incoming.begin(), incoming.end()), incoming.end());
    auto result = cluster_merge(*this, Cluster::from_sorted(std::move(incoming)));
    *this = std::move(result.merged);
    return std::move(result.missing_from_a);
}

bool Cluster::contains(const Token& token) const {
    return std::binary_search(members_.begin(), members_.end(), token, TokenLess{});
}

Cluster Cluster::from_sorted(std::vector<Token> members) {
    Cluster c;
    c.members_ = std::move(members);
    return c;
}

MergeResult cluster_merge(const Cluster& a, const Cluster& b) {
    MergeResult r;
    std::vector<Token> merged;
    merged.reserve(a.size() + b.size());
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        auto c = token_order(*ia, *ib);
        if (c < 0) {
            merged.push_back(*ia);
            r.missing_from_b.push_back(*ia++);
        } else if (c > 0) {
            merged.push_back(*ib);
            r.missing_from_a.push_back(*ib++);
        } else {
            merged.push_back(*ia++);
            ++ib;
        }
    }
    for (; ia != a.end(); ++ia) {
        merged.push_back(*ia);
        r.missing_from_b.push_back(*ia);
    }
    for (; ib != b.end(); ++ib) {
        merged.push_back(*ib);
        r.missing_from_a.push_back(*ib);
    }
    r.merged = Cluster::from_sorted(std::move(merged));
    return r;
}

std::vector<Token> cluster_new_since(const Cluster& c, const Cluster& tracker) {
    return cluster_merge(tracker, c).missing_from_a;
}

void token_list_encode_to(ByteWriter& out, std::span<const Token> tokens) {
    out.u32(static_cast<std::uint32_t>(tokens.size()));
    for (const auto& t : tokens) token_encode_to(out, t);
}

void cluster_encode_to(ByteWriter& out, const Cluster& c) { token_list_encode_to(out, c.members()); }

Bytes cluster_encode(const Cluster& c) {
    Bytes out;
    ByteWriter w(out);
    cluster_encode_to(w, c);
    return out;
}

std::vector<Token> token_list_read(ByteReader& in) {
    auto count = in.u32();
    // Smallest token encoding is 47 bytes; reject counts the buffer cannot hold
    // before reserving anything.
    if (count > in.remaining() / 47) in.fail("token count exceeds buffer");
    std::vector<Token> tokens;
    tokens.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) tokens.push_back(token_read(in));
    return tokens;
}

Cluster cluster_read(ByteReader& in) {
    auto tokens = token_list_read(in);
    for (std::size_t i = 1; i < tokens.size(); ++i)
        if (token_order(tokens[i - 1], tokens[i]) >= 0) in.fail("cluster members out of order");
    return Cluster::from_sorted(std::move(tokens));
}

Cluster cluster_decode(ByteView bytes) {
    ByteReader r(bytes, Errc::malformed_message);
    auto c = cluster_read(r);
    r.expect_done();
    return c;
}

} // namespace mo
