#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "mo/libserver/session.hpp"

namespace mo {

// Role of an object inside a file DAO, carried in the token's aux tag.
enum class DaoRole : AuxTag { file = 1, block = 2, content = 3 };

struct FileOptions {
    std::uint64_t lifetime_ms = 24ull * 3600 * 1000;
    SecurityPolicy psec; // applied to block and content payloads
};

// A mutable file built from immutable objects. The root's cluster holds the
// blocks in expire order; a block's current content is the last content
// object in its cluster.
class FileDao {
public:
    static FileDao create(Session& session, std::string_view name, FileOptions options = {});
    static FileDao open(Session& session, const Token& root, FileOptions options = {});

    const Token& root() const noexcept { return root_; }

    std::vector<Token> blocks();
    std::size_t block_count() { return blocks().size(); }

    // Concatenated current contents. Errors: unreachable_content,
    // authentication_failure.
    Bytes read();

    // Replaces block `index`, or appends a block when index == block_count().
    // Returns the new content object's token.
    Token write_block(std::size_t index, ByteView content);

    // Current content object of a block, if any.
    std::optional<Token> current_content(const Token& block);

private:
    FileDao(Session& session, Token root, FileOptions options)
        : session_(&session), root_(std::move(root)), options_(std::move(options)) {}

    Session* session_;
    Token root_;
    FileOptions options_;
};

} // namespace mo
