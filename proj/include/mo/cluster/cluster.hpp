#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mo/core/token.hpp"

namespace mo {

// Grow-only token set kept strictly ascending under token_order. There is
// deliberately no removal operation.
class Cluster {
public:
    Cluster() = default;
    Cluster(std::initializer_list<Token> tokens);

    // Returns false when the token was already a member.
    bool add(const Token& token);
    // Adds every token; returns the ones that were new, in token order.
    std::vector<Token> add_all(std::span<const Token> tokens);

    bool contains(const Token& token) const;
    std::size_t size() const noexcept { return members_.size(); }
    bool empty() const noexcept { return members_.empty(); }
    std::span<const Token> members() const noexcept { return members_; }
    auto begin() const noexcept { return members_.begin(); }
    auto end() const noexcept { return members_.end(); }
    const Token& back() const { return members_.back(); }

    friend bool operator==(const Cluster&, const Cluster&) = default;

    // Builds from an already strictly-ascending sequence.
    static Cluster from_sorted(std::vector<Token> members);

private:
    std::vector<Token> members_;
};

struct MergeResult {
    Cluster merged;
    std::vector<Token> missing_from_a; // in b, not in a
    std::vector<Token> missing_from_b; // in a, not in b
};

MergeResult cluster_merge(const Cluster& a, const Cluster& b);

// Members of c not in tracker, in token order.
std::vector<Token> cluster_new_since(const Cluster& c, const Cluster& tracker);

// Wire form: count(4) followed by canonical token encodings in order.
void cluster_encode_to(ByteWriter& out, const Cluster& c);
Bytes cluster_encode(const Cluster& c);
Cluster cluster_read(ByteReader& in); // rejects out-of-order or duplicate members
Cluster cluster_decode(ByteView bytes);

// Same framing for an arbitrary token list (order preserved, duplicates allowed).
void token_list_encode_to(ByteWriter& out, std::span<const Token> tokens);
std::vector<Token> token_list_read(ByteReader& in);

} // namespace mo
