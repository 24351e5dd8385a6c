#include "nbac/authcode.hpp"

#include <openssl/core_names.h>
#include <openssl/evp.h>
#include <openssl/params.h>
#include <openssl/sha.h>

#include <algorithm>
#include <limits>
#include <map>

namespace nbac::auth {

namespace {

int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

void append_u32_be(Bytes& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

enum class FieldTag : std::uint8_t {
    string = 1,
    bytes = 2,
    u64 = 3,
    u8set = 4,
    nested = 5,
};

}  // namespace

std::string to_hex(std::span<const std::uint8_t> data) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (std::uint8_t b : data) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0f]);
    }
    return out;
}

Bytes from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) throw std::invalid_argument("hex string has odd length");
    Bytes out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        int hi = hex_nibble(hex[i]);
        int lo = hex_nibble(hex[i + 1]);
        if (hi < 0 || lo < 0) throw std::invalid_argument("invalid hex digit");
        out.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
    }
    return out;
}

MacKey MacKey::from_hex(std::string_view hex, std::string key_id) {
    Bytes raw = nbac::auth::from_hex(hex);
    if (raw.size() != 32) throw std::invalid_argument("mac key must be exactly 32 bytes");
    MacKey key;
    std::copy(raw.begin(), raw.end(), key.bytes.begin());
    key.key_id = std::move(key_id);
    return key;
}

Counter next_counter(const Counter& c) {
    if (c.value == std::numeric_limits<std::uint64_t>::max()) throw CounterOverflow{};
    return Counter{c.value + 1, c.owner};
}

void Encoder::frame(std::uint8_t tag, std::span<const std::uint8_t> body) {
    if (body.size() + 1 > std::numeric_limits<std::uint32_t>::max())
        throw std::length_error("canonical field too large");
    append_u32_be(out_, static_cast<std::uint32_t>(body.size() + 1));
    out_.push_back(tag);
    out_.insert(out_.end(), body.begin(), body.end());
}

Encoder& Encoder::string(std::string_view value) {
    frame(static_cast<std::uint8_t>(FieldTag::string),
          {reinterpret_cast<const std::uint8_t*>(value.data()), value.size()});
    return *this;
}

Encoder& Encoder::bytes(std::span<const std::uint8_t> value) {
    frame(static_cast<std::uint8_t>(FieldTag::bytes), value);
    return *this;
}

Encoder& Encoder::u64(std::uint64_t value) {
    std::array<std::uint8_t, 8> body{};
    for (int i = 0; i < 8; ++i) body[i] = static_cast<std::uint8_t>(value >> (56 - 8 * i));
    frame(static_cast<std::uint8_t>(FieldTag::u64), body);
    return *this;
}

Encoder& Encoder::u8_set(std::vector<std::uint8_t> codes) {
    std::sort(codes.begin(), codes.end());
    codes.erase(std::unique(codes.begin(), codes.end()), codes.end());
    frame(static_cast<std::uint8_t>(FieldTag::u8set), codes);
    return *this;
}

Encoder& Encoder::nested(std::span<const std::uint8_t> encoded) {
    frame(static_cast<std::uint8_t>(FieldTag::nested), encoded);
    return *this;
}

std::size_t Encoder::begin_nested() {
    std::size_t mark = out_.size();
    append_u32_be(out_, 0);  // patched by end_nested
    out_.push_back(static_cast<std::uint8_t>(FieldTag::nested));
    return mark;
}

void Encoder::end_nested(std::size_t mark) {
    std::size_t payload = out_.size() - mark - 4;  // tag byte plus body
    if (payload > std::numeric_limits<std::uint32_t>::max())
        throw std::length_error("canonical field too large");
    out_[mark] = static_cast<std::uint8_t>(payload >> 24);
    out_[mark + 1] = static_cast<std::uint8_t>(payload >> 16);
    out_[mark + 2] = static_cast<std::uint8_t>(payload >> 8);
    out_[mark + 3] = static_cast<std::uint8_t>(payload);
}

Bytes canonical_encode(const std::vector<Field>& fields) {
    Encoder encoder;
    for (const Field& field : fields) {
        std::visit(
            [&encoder](const auto& v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, std::string>) {
                    encoder.string(v);
                } else if constexpr (std::is_same_v<T, Bytes>) {
                    encoder.bytes(v);
                } else if constexpr (std::is_same_v<T, std::uint64_t>) {
                    encoder.u64(v);
                } else if constexpr (std::is_same_v<T, U8Set>) {
                    encoder.u8_set(v.codes);
                } else if constexpr (std::is_same_v<T, Nested>) {
                    encoder.nested(v.encoded);
                }
            },
            field);
    }
    return encoder.take();
}

Digest sha256(std::span<const std::uint8_t> message) {
    Digest digest{};
    SHA256(message.data(), message.size(), digest.data());
    return digest;
}

namespace {

// Per-thread HMAC-SHA-256 engine that keeps one keyed template context per
// key and duplicates it per computation. Duplication skips the key schedule
// on the per-query hot path. (Keyless re-init is unreliable on the 3.0.x
// providers, so templates are never reused in place.)
struct HmacEngine {
    EVP_MAC* algorithm = nullptr;
    std::map<std::array<std::uint8_t, 32>, EVP_MAC_CTX*> templates;

    HmacEngine() {
        algorithm = EVP_MAC_fetch(nullptr, "HMAC", nullptr);
        if (algorithm == nullptr) throw std::runtime_error("HMAC engine unavailable");
    }
    HmacEngine(const HmacEngine&) = delete;
    ~HmacEngine() {
        for (auto& [key, ctx] : templates) EVP_MAC_CTX_free(ctx);
        EVP_MAC_free(algorithm);
    }

    EVP_MAC_CTX* template_for(const MacKey& key) {
        auto it = templates.find(key.bytes);
        if (it != templates.end()) return it->second;
        if (templates.size() > 16) {  // random-key churn in tests; keep it bounded
            for (auto& [k, ctx] : templates) EVP_MAC_CTX_free(ctx);
            templates.clear();
        }
        EVP_MAC_CTX* ctx = EVP_MAC_CTX_new(algorithm);
        if (ctx == nullptr) throw std::runtime_error("HMAC context allocation failed");
        char digest_name[] = "SHA256";
        OSSL_PARAM params[] = {
            OSSL_PARAM_construct_utf8_string(OSSL_MAC_PARAM_DIGEST, digest_name, 0),
            OSSL_PARAM_construct_end()};
        if (EVP_MAC_init(ctx, key.bytes.data(), key.bytes.size(), params) != 1) {
            EVP_MAC_CTX_free(ctx);
            throw std::runtime_error("HMAC keying failed");
        }
        templates.emplace(key.bytes, ctx);
        return ctx;
    }
};

}  // namespace

Mac mac_compute(const MacKey& key, std::span<const std::uint8_t> message) {
    thread_local HmacEngine engine;
    EVP_MAC_CTX* ctx = EVP_MAC_CTX_dup(engine.template_for(key));
    if (ctx == nullptr) throw std::runtime_error("HMAC context duplication failed");
    Mac mac{};
    std::size_t len = 0;
    bool ok = EVP_MAC_update(ctx, message.data(), message.size()) == 1 &&
              EVP_MAC_final(ctx, mac.data(), &len, mac.size()) == 1 && len == mac.size();
    EVP_MAC_CTX_free(ctx);
    if (!ok) throw std::runtime_error("HMAC computation failed");
    return mac;
}

bool mac_verify(const MacKey& key, std::span<const std::uint8_t> message, const Mac& mac) {
    Mac expected = mac_compute(key, message);
    unsigned int diff = 0;
    for (std::size_t i = 0; i < expected.size(); ++i) diff |= expected[i] ^ mac[i];
    return diff == 0;
}

}  // namespace nbac::auth
