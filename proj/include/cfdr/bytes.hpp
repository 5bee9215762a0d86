#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cfdr/errors.hpp"

namespace cfdr {

using Bytes = std::vector<std::uint8_t>;

inline Bytes to_bytes(std::string_view s) {
    return Bytes(s.begin(), s.end());
}

/// Fixed 256-bit value: hashes, pseudonym ids, digests.
struct Hash32 {
    std::array<std::uint8_t, 32> v{};

    auto operator<=>(const Hash32&) const = default;
    bool is_zero() const {
        for (auto b : v)
            if (b != 0) return false;
        return true;
    }
};

inline std::string to_hex(std::span<const std::uint8_t> data) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (auto b : data) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0f]);
    }
    return out;
}

inline std::string to_hex(const Hash32& h) { return to_hex(std::span<const std::uint8_t>(h.v)); }

/// Short prefix used in human-readable listings.
inline std::string hex_prefix(const Hash32& h, std::size_t chars = 8) {
    auto s = to_hex(h);
    return s.substr(0, chars);
}

inline Bytes from_hex(std::string_view hex) {
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    if (hex.size() % 2 != 0) throw Error(ErrorCode::MalformedInput, "odd hex length");
    Bytes out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        int hi = nibble(hex[2 * i]), lo = nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) throw Error(ErrorCode::MalformedInput, "invalid hex digit");
        out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return out;
}

inline Hash32 hash32_from_hex(std::string_view hex) {
    auto b = from_hex(hex);
    if (b.size() != 32) throw Error(ErrorCode::MalformedInput, "expected 32-byte hex value");
    Hash32 h;
    std::memcpy(h.v.data(), b.data(), 32);
    return h;
}

// Canonical wire encoding, shared by hashing and the ledger file format:
//   unsigned integers  -> 8-byte big-endian
//   fixed 32-byte hash -> raw bytes
//   byte strings       -> 4-byte big-endian length, then bytes
//   lists              -> 4-byte big-endian count, then elements
// Booleans ride as integers restricted to {0,1}.

class Encoder {
public:
    void put_u64(std::uint64_t x) {
        for (int i = 7; i >= 0; --i) out_.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
    }

    void put_u32(std::uint32_t x) {
        for (int i = 3; i >= 0; --i) out_.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
    }

    void put_u16(std::uint16_t x) {
        out_.push_back(static_cast<std::uint8_t>(x >> 8));
        out_.push_back(static_cast<std::uint8_t>(x));
    }

    void put_bool(bool b) { put_u64(b ? 1 : 0); }

    void put_hash(const Hash32& h) { out_.insert(out_.end(), h.v.begin(), h.v.end()); }

    void put_var(std::span<const std::uint8_t> data) {
        put_u32(static_cast<std::uint32_t>(data.size()));
        out_.insert(out_.end(), data.begin(), data.end());
    }

    void put_var(const std::string& s) {
        put_var(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
    }

    void put_raw(std::span<const std::uint8_t> data) { out_.insert(out_.end(), data.begin(), data.end()); }

    const Bytes& bytes() const { return out_; }
    Bytes take() { return std::move(out_); }
    std::size_t size() const { return out_.size(); }

private:
    Bytes out_;
};

class Decoder {
public:
    explicit Decoder(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint64_t get_u64() {
        need(8, "u64");
        std::uint64_t x = 0;
        for (int i = 0; i < 8; ++i) x = (x << 8) | data_[pos_ + i];
        pos_ += 8;
        return x;
    }

    std::uint32_t get_u32() {
        need(4, "u32");
        std::uint32_t x = 0;
        for (int i = 0; i < 4; ++i) x = (x << 8) | data_[pos_ + i];
        pos_ += 4;
        return x;
    }

    std::uint16_t get_u16() {
        need(2, "u16");
        std::uint16_t x = static_cast<std::uint16_t>((data_[pos_] << 8) | data_[pos_ + 1]);
        pos_ += 2;
        return x;
    }

    bool get_bool() {
        auto x = get_u64();
        if (x > 1) throw MalformedInput(pos_ - 8, "boolean must be 0 or 1");
        return x == 1;
    }

    std::uint8_t get_byte() {
        need(1, "byte");
        return data_[pos_++];
    }

    Hash32 get_hash() {
        need(32, "32-byte value");
        Hash32 h;
        std::memcpy(h.v.data(), data_.data() + pos_, 32);
        pos_ += 32;
        return h;
    }

    Bytes get_var() {
        auto len = get_u32();
        need(len, "byte string body");
        Bytes out(data_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  data_.begin() + static_cast<std::ptrdiff_t>(pos_ + len));
        pos_ += len;
        return out;
    }

    std::string get_string() {
        auto b = get_var();
        return std::string(b.begin(), b.end());
    }

    bool done() const { return pos_ == data_.size(); }
    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return data_.size() - pos_; }

    void expect_done(const char* what) const {
        if (!done()) throw MalformedInput(pos_, std::string("trailing bytes after ") + what);
    }

private:
    void need(std::size_t n, const char* what) const {
        if (data_.size() - pos_ < n)
            throw MalformedInput(pos_, std::string("truncated input while reading ") + what);
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

}  // namespace cfdr
