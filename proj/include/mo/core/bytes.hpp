#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mo/core/error.hpp"

namespace mo {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline ByteView as_bytes(std::string_view s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

inline Bytes to_bytes(std::string_view s) {
    auto v = as_bytes(s);
    return {v.begin(), v.end()};
}

inline std::string to_string(ByteView b) {
    return {reinterpret_cast<const char*>(b.data()), b.size()};
}

std::string to_hex(ByteView b);
Bytes from_hex(std::string_view hex); // throws Error(malformed_message) on bad input

// Big-endian appender over a byte vector.
class ByteWriter {
public:
    explicit ByteWriter(Bytes& out) : out_(out) {}

    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v);
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void raw(ByteView v) { out_.insert(out_.end(), v.begin(), v.end()); }

private:
    Bytes& out_;
};

// Big-endian cursor. Every short read throws Error(error_code); the reader
// never looks past the view it was given.
class ByteReader {
public:
    ByteReader(ByteView in, Errc error_code) : in_(in), error_(error_code) {}

    std::uint8_t u8();
    std::uint16_t u16();
    std::uint32_t u32();
    std::uint64_t u64();
    ByteView raw(std::size_t n);

    std::size_t remaining() const noexcept { return in_.size() - pos_; }
    std::size_t position() const noexcept { return pos_; }
    bool done() const noexcept { return pos_ == in_.size(); }
    Errc error_code() const noexcept { return error_; }
    [[noreturn]] void fail(const char* what) const;
    void expect_done() const;

private:
    void need(std::size_t n) const;

    ByteView in_;
    std::size_t pos_ = 0;
    Errc error_;
};

} // namespace mo
