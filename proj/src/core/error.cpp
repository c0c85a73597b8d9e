#include "mo/core/error.hpp"

namespace mo {

std::string_view errc_name(Errc code) noexcept {
    switch (code) {
    case Errc::ok: return "ok";
    case Errc::payload_too_large: return "payload-too-large";
    case Errc::invalid_expire: return "invalid-expire";
    case Errc::malformed_token: return "malformed-token";
    case Errc::invalid_home: return "invalid-home";
    case Errc::oversize_after_seal: return "oversize-after-seal";
    case Errc::authentication_failure: return "authentication-failure";
    case Errc::mode_mismatch: return "mode-mismatch";
    case Errc::invalid_policy: return "invalid-policy";
    case Errc::malformed_sealed: return "malformed-sealed";
    case Errc::payload_absent: return "payload-absent";
    case Errc::not_found: return "not-found";
    case Errc::unreachable_home: return "unreachable-home";
    case Errc::not_found_everywhere: return "not-found-everywhere";
    case Errc::busy_exhausted: return "busy-exhausted";
    case Errc::untrusted_channel: return "untrusted-channel";
    case Errc::wrong_home: return "wrong-home";
    case Errc::verify_failed: return "verify-failed";
    case Errc::unknown_policy: return "unknown-policy";
    case Errc::unknown_object: return "unknown-object";
    case Errc::declined: return "declined";
    case Errc::bad_magic: return "bad-magic";
    case Errc::bad_version: return "bad-version";
    case Errc::length_mismatch: return "length-mismatch";
    case Errc::unknown_type: return "unknown-type";
    case Errc::malformed_message: return "malformed-message";
    case Errc::connect_failure: return "connect-failure";
    case Errc::timeout: return "timeout";
    case Errc::protocol_error: return "protocol-error";
    case Errc::adopt_refused: return "adopt-refused";
    case Errc::disconnected: return "disconnected";
    case Errc::unsupported_policy: return "unsupported-policy";
    case Errc::expire_order_violation: return "expire-order-violation";
    case Errc::unreachable_content: return "unreachable-content";
    case Errc::script_malformed: return "script-malformed";
    case Errc::assertion_failure: return "assertion-failure";
    case Errc::bad_config: return "bad-config";
    case Errc::bind_failure: return "bind-failure";
    }
    return "unknown-error";
}

Error::Error(Errc code) : std::runtime_error(std::string(errc_name(code))), code_(code) {}

Error::Error(Errc code, const std::string& detail)
    : std::runtime_error(std::string(errc_name(code)) + ": " + detail), code_(code) {}

} // namespace mo
