#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

// Keyed-MAC, counter, nonce and canonical-encoding services shared by the
// tagger, the reference monitor and the NIB.

namespace nbac::auth {

using Bytes = std::vector<std::uint8_t>;
using Mac = std::array<std::uint8_t, 32>;
using Digest = std::array<std::uint8_t, 32>;

std::string to_hex(std::span<const std::uint8_t> data);
Bytes from_hex(std::string_view hex);

// 32-byte shared secret. key_id names the channel the key protects
// ("K" tagger<->monitor, "K_NIB" monitor<->NIB). Keys are never serialized
// into reports or audit events.
struct MacKey {
    std::array<std::uint8_t, 32> bytes{};
    std::string key_id;

    static MacKey from_hex(std::string_view hex, std::string key_id);
};

// Monotone per-tagger sequence counter. Values are never reused after a
// restart within one scenario.
struct Counter {
    std::uint64_t value = 0;
    std::string owner;
};

struct CounterOverflow : std::runtime_error {
    CounterOverflow() : std::runtime_error("sequence counter overflow") {}
};

// value' = value + 1; throws CounterOverflow at the 2^64-1 ceiling.
Counter next_counter(const Counter& c);

// 16 random bytes; uniqueness within a scenario run is asserted by the
// harness (a collision is a harness error, not a protocol event).
struct Nonce {
    std::array<std::uint8_t, 16> value{};

    bool operator==(const Nonce&) const = default;
    auto operator<=>(const Nonce&) const = default;
};

/// Canonical field encoding.
///
/// Wire contract: each field is encoded as a 4-byte big-endian length prefix
/// followed by the payload; the payload is a 1-byte kind tag followed by the
/// body. Bodies: utf-8 bytes (string), raw bytes (bytes), 8-byte big-endian
/// (u64), sorted+deduplicated byte codes (u8 set), a nested canonical
/// encoding (nested). The encoding is injective on field sequences: equal
/// encodings imply field-wise equal inputs.
struct U8Set {
    std::vector<std::uint8_t> codes;  // sorted and deduplicated on encode
};

struct Nested {
    Bytes encoded;  // output of a nested canonical_encode
};

using Field = std::variant<std::string, Bytes, std::uint64_t, U8Set, Nested>;

Bytes canonical_encode(const std::vector<Field>& fields);

// Incremental writer producing the same wire format without intermediate
// field copies; the hot paths (tags, query seals) build on it.
class Encoder {
public:
    Encoder& string(std::string_view value);
    Encoder& bytes(std::span<const std::uint8_t> value);
    Encoder& u64(std::uint64_t value);
    Encoder& u8_set(std::vector<std::uint8_t> codes);
    Encoder& nested(std::span<const std::uint8_t> encoded);

    // In-place nested field: everything written between begin and end forms
    // the nested body; the length prefix is patched at end.
    std::size_t begin_nested();
    void end_nested(std::size_t mark);

    Bytes take() { return std::move(out_); }

private:
    void frame(std::uint8_t tag, std::span<const std::uint8_t> body);

    Bytes out_;
};

// SHA-256 of the given message.
Digest sha256(std::span<const std::uint8_t> message);

// HMAC-SHA-256 under the given key.
Mac mac_compute(const MacKey& key, std::span<const std::uint8_t> message);

// Constant-time comparison of mac against mac_compute(key, message).
bool mac_verify(const MacKey& key, std::span<const std::uint8_t> message, const Mac& mac);

}  // namespace nbac::auth
