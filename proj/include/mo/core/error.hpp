#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mo {

// Error codes shared by every layer. Values are stable: they travel inside
// ERROR and LOCAL_RESP bodies.
enum class Errc : std::uint8_t {
    ok = 0,
    // core
    payload_too_large = 1,
    invalid_expire = 2,
    malformed_token = 3,
    invalid_home = 4,
    // security
    oversize_after_seal = 10,
    authentication_failure = 11,
    mode_mismatch = 12,
    invalid_policy = 13,
    malformed_sealed = 14,
    // mobject
    payload_absent = 20,
    // server
    not_found = 30,
    unreachable_home = 31,
    not_found_everywhere = 32,
    busy_exhausted = 33,
    untrusted_channel = 34,
    wrong_home = 35,
    verify_failed = 36,
    unknown_policy = 37,
    unknown_object = 38,
    declined = 39,
    // net
    bad_magic = 50,
    bad_version = 51,
    length_mismatch = 52,
    unknown_type = 53,
    malformed_message = 54,
    connect_failure = 55,
    timeout = 56,
    protocol_error = 57,
    // libserver / dao / cli
    adopt_refused = 70,
    disconnected = 71,
    unsupported_policy = 72,
    expire_order_violation = 73,
    unreachable_content = 74,
    script_malformed = 80,
    assertion_failure = 81,
    bad_config = 82,
    bind_failure = 83,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    explicit Error(Errc code);
    Error(Errc code, const std::string& detail);

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace mo
