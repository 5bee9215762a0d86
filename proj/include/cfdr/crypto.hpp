#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>

#include <openssl/evp.h>

#include "cfdr/bytes.hpp"
#include "cfdr/errors.hpp"

namespace cfdr {

// This build pins one algorithm set; the names are written into the ledger
// file header so a verifier knows what to recompute with.
inline constexpr std::string_view kHashAlgorithm = "sha-256";
inline constexpr std::string_view kSignatureAlgorithm = "ed25519";

inline Hash32 sha256(std::span<const std::uint8_t> data) {
    Hash32 out;
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.v.data(), &len, EVP_sha256(), nullptr) != 1 || len != 32)
        throw Error(ErrorCode::IoError, "sha-256 computation failed");
    return out;
}

inline Hash32 sha256(const Bytes& data) { return sha256(std::span<const std::uint8_t>(data)); }

inline Hash32 sha256(std::string_view s) {
    return sha256(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

/// On-chain party identifier: the hash of the party's public key bytes.
struct Pseudonym {
    Hash32 id{};

    auto operator<=>(const Pseudonym&) const = default;
};

inline Pseudonym pseudonym_of(std::span<const std::uint8_t> public_key) {
    return Pseudonym{sha256(public_key)};
}

namespace detail {
struct PkeyDeleter {
    void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyDeleter>;

struct MdCtxDeleter {
    void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;

struct CipherCtxDeleter {
    void operator()(EVP_CIPHER_CTX* c) const { EVP_CIPHER_CTX_free(c); }
};
using CipherCtxPtr = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter>;
}  // namespace detail

/// Ed25519 signing identity. Private keys are 32 raw bytes, so key material
/// can be derived deterministically from any 32-byte seed.
class Keypair {
public:
    static Keypair from_seed(const Hash32& seed) {
        detail::PkeyPtr key(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, seed.v.data(), 32));
        if (!key) throw Error(ErrorCode::IoError, "ed25519 key construction failed");
        Keypair kp;
        kp.private_seed_ = seed;
        std::size_t publen = 32;
        kp.public_key_.resize(32);
        if (EVP_PKEY_get_raw_public_key(key.get(), kp.public_key_.data(), &publen) != 1 || publen != 32)
            throw Error(ErrorCode::IoError, "ed25519 public key extraction failed");
        kp.id_ = pseudonym_of(kp.public_key_);
        return kp;
    }

    /// Stable per-label identity; two runs naming the same party get the same keys.
    static Keypair from_label(std::string_view label) {
        return from_seed(sha256(std::string("cfdr/key/v1/") + std::string(label)));
    }

    Bytes sign(std::span<const std::uint8_t> msg) const {
        detail::PkeyPtr key(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, private_seed_.v.data(), 32));
        detail::MdCtxPtr ctx(EVP_MD_CTX_new());
        if (!key || !ctx || EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1)
            throw Error(ErrorCode::IoError, "ed25519 sign init failed");
        Bytes sig(64);
        std::size_t siglen = sig.size();
        if (EVP_DigestSign(ctx.get(), sig.data(), &siglen, msg.data(), msg.size()) != 1 || siglen != 64)
            throw Error(ErrorCode::IoError, "ed25519 signing failed");
        return sig;
    }

    const Bytes& public_key() const { return public_key_; }
    const Pseudonym& id() const { return id_; }

private:
    Keypair() = default;

    Hash32 private_seed_{};
    Bytes public_key_;
    Pseudonym id_;
};

inline bool signature_valid(std::span<const std::uint8_t> public_key, std::span<const std::uint8_t> msg,
                            std::span<const std::uint8_t> sig) {
    if (public_key.size() != 32) return false;
    detail::PkeyPtr key(EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, public_key.data(), 32));
    if (!key) return false;
    detail::MdCtxPtr ctx(EVP_MD_CTX_new());
    if (!ctx || EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1) return false;
    return EVP_DigestVerify(ctx.get(), sig.data(), sig.size(), msg.data(), msg.size()) == 1;
}

/// Client-side symmetric encryption (ChaCha20 keystream). The key may be any
/// non-empty byte string; it is hashed down to the cipher key. Empty input
/// encrypts to empty output.
inline Bytes stream_crypt(std::span<const std::uint8_t> input, std::span<const std::uint8_t> key) {
    if (key.empty()) throw Error(ErrorCode::SchemaError, "cipher key must be non-empty");
    if (input.empty()) return {};
    Hash32 k = sha256(key);
    std::uint8_t iv[16] = {0};
    detail::CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
    if (!ctx || EVP_EncryptInit_ex(ctx.get(), EVP_chacha20(), nullptr, k.v.data(), iv) != 1)
        throw Error(ErrorCode::IoError, "chacha20 init failed");
    Bytes out(input.size());
    int outl = 0;
    if (EVP_EncryptUpdate(ctx.get(), out.data(), &outl, input.data(), static_cast<int>(input.size())) != 1 ||
        outl != static_cast<int>(input.size()))
        throw Error(ErrorCode::IoError, "chacha20 update failed");
    return out;
}

inline Bytes encrypt(std::span<const std::uint8_t> plaintext, std::span<const std::uint8_t> key) {
    return stream_crypt(plaintext, key);
}

inline Bytes decrypt(std::span<const std::uint8_t> ciphertext, std::span<const std::uint8_t> key) {
    return stream_crypt(ciphertext, key);  // XOR keystream is its own inverse
}

/// SplitMix64: tiny, portable, and stable across platforms. Used wherever a
/// scenario needs reproducible pseudo-random bytes.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    Bytes bytes(std::size_t n) {
        Bytes out;
        out.reserve(n);
        while (out.size() < n) {
            std::uint64_t w = next();
            for (int i = 0; i < 8 && out.size() < n; ++i) out.push_back(static_cast<std::uint8_t>(w >> (8 * i)));
        }
        return out;
    }

private:
    std::uint64_t state_;
};

}  // namespace cfdr
