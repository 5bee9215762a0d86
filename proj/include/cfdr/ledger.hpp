#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "cfdr/bytes.hpp"
#include "cfdr/crypto.hpp"
#include "cfdr/payload.hpp"

namespace cfdr {

struct Signature {
    Pseudonym signer;
    Bytes sig;
    bool operator==(const Signature&) const = default;
};

/// A pseudonymous ledger event. `tx_id` is the hash of the canonical encoding
/// of everything except the id itself and the signatures; signatures are over
/// the 32 bytes of `tx_id`.
struct Transaction {
    Hash32 tx_id{};
    std::uint64_t logical_time = 0;
    Pseudonym sender;
    Pseudonym recipient;
    Payload payload;
    std::uint64_t nonce = 0;
    std::vector<Signature> signatures;

    bool operator==(const Transaction&) const = default;
};

struct Block {
    std::uint64_t index = 0;
    Hash32 prev_hash{};
    std::uint64_t logical_time = 0;
    std::vector<Transaction> txs;
    Hash32 block_hash{};

    bool operator==(const Block&) const = default;
};

// --- canonical encodings -----------------------------------------------

/// Hash preimage of a transaction: every field except tx_id and signatures.
inline Bytes tx_core_bytes(const Transaction& tx) {
    Encoder e;
    e.put_u64(tx.logical_time);
    e.put_hash(tx.sender.id);
    e.put_hash(tx.recipient.id);
    encode_payload(e, tx.payload);
    e.put_u64(tx.nonce);
    return e.take();
}

inline Hash32 compute_tx_id(const Transaction& tx) { return sha256(tx_core_bytes(tx)); }

inline void encode_tx(Encoder& e, const Transaction& tx) {
    e.put_hash(tx.tx_id);
    e.put_raw(tx_core_bytes(tx));
    e.put_u32(static_cast<std::uint32_t>(tx.signatures.size()));
    for (const auto& s : tx.signatures) {
        e.put_hash(s.signer.id);
        e.put_var(s.sig);
    }
}

inline Bytes tx_bytes(const Transaction& tx) {
    Encoder e;
    encode_tx(e, tx);
    return e.take();
}

inline Transaction decode_tx(Decoder& d) {
    Transaction tx;
    tx.tx_id = d.get_hash();
    tx.logical_time = d.get_u64();
    tx.sender = Pseudonym{d.get_hash()};
    tx.recipient = Pseudonym{d.get_hash()};
    tx.payload = decode_payload(d);
    tx.nonce = d.get_u64();
    auto nsigs = d.get_u32();
    if (nsigs < 1 || nsigs > 2) throw MalformedInput(d.pos() - 4, "transaction must carry 1 or 2 signatures");
    for (std::uint32_t i = 0; i < nsigs; ++i) {
        Signature s;
        s.signer = Pseudonym{d.get_hash()};
        s.sig = d.get_var();
        tx.signatures.push_back(std::move(s));
    }
    return tx;
}

/// Hash preimage of a block: index, prev_hash, seal time, and the full
/// transaction encodings (ids and signatures included).
inline Bytes block_core_bytes(const Block& b) {
    Encoder e;
    e.put_u64(b.index);
    e.put_hash(b.prev_hash);
    e.put_u64(b.logical_time);
    e.put_u32(static_cast<std::uint32_t>(b.txs.size()));
    for (const auto& tx : b.txs) encode_tx(e, tx);
    return e.take();
}

inline Hash32 compute_block_hash(const Block& b) { return sha256(block_core_bytes(b)); }

// --- verification result -------------------------------------------------

enum class VerifyReason { BadBlockHash, BadLink, BadTxHash, BadSignature };

inline const char* verify_reason_name(VerifyReason r) {
    switch (r) {
        case VerifyReason::BadBlockHash: return "BadBlockHash";
        case VerifyReason::BadLink: return "BadLink";
        case VerifyReason::BadTxHash: return "BadTxHash";
        case VerifyReason::BadSignature: return "BadSignature";
    }
    return "unknown";
}

struct Inconsistency {
    std::uint64_t block_index = 0;
    VerifyReason reason = VerifyReason::BadBlockHash;
    bool operator==(const Inconsistency&) const = default;
};

/// Empty optional means the chain verified clean.
using VerifyResult = std::optional<Inconsistency>;

struct QueryFilter {
    std::optional<Pseudonym> sender;
    std::optional<Pseudonym> recipient;
    std::optional<PayloadKind> kind;
    std::optional<std::string> file_id;
    std::optional<std::pair<std::uint64_t, std::uint64_t>> time_range;  // inclusive
};

struct QueryHit {
    std::uint64_t block_index = 0;
    std::size_t tx_index = 0;
    Transaction tx;
};

struct RegistryEntry {
    Pseudonym id;
    Bytes public_key;
    bool operator==(const RegistryEntry&) const = default;
};

inline constexpr char kLedgerMagic[4] = {'C', 'F', 'D', 'R'};
inline constexpr std::uint16_t kLedgerFormatVersion = 1;

/// Append-only hash-chained transaction log. Single writer; sealed content is
/// immutable. The tamper entry point exists for tests and demos only.
class Ledger {
public:
    Ledger() = default;

    // -- configuration ----------------------------------------------------

    void set_max_block_txs(std::size_t n) { max_block_txs_ = n == 0 ? 1 : n; }
    std::size_t max_block_txs() const { return max_block_txs_; }

    /// Payload kinds that must carry signatures from both counterparties.
    void set_double_signed(std::set<PayloadKind> kinds) { double_signed_ = std::move(kinds); }
    const std::set<PayloadKind>& double_signed() const { return double_signed_; }

    // -- key registry (off-chain metadata, never hashed into blocks) -------

    Pseudonym register_party(const Bytes& public_key) {
        Pseudonym id = pseudonym_of(public_key);
        for (const auto& entry : registry_) {
            if (entry.id == id) {
                if (entry.public_key != public_key)
                    throw Error(ErrorCode::PseudonymCollision, "two distinct keys hash to one pseudonym");
                return id;  // re-registration of the same key is a no-op
            }
        }
        registry_.push_back(RegistryEntry{id, public_key});
        return id;
    }

    const std::vector<RegistryEntry>& registry() const { return registry_; }

    const Bytes* find_public_key(const Pseudonym& id) const {
        for (const auto& e : registry_)
            if (e.id == id) return &e.public_key;
        return nullptr;
    }

    // -- core operations ----------------------------------------------------

    /// Validates signatures and time ordering, then parks the transaction in
    /// the pending pool. Returns the transaction id as the receipt.
    Hash32 submit(const Transaction& tx) {
        if (compute_tx_id(tx) != tx.tx_id)
            throw Error(ErrorCode::InvalidSignature, "tx_id does not match canonical content");
        check_signatures(tx);
        if (tx.logical_time < last_sealed_time_)
            throw Error(ErrorCode::TimeRegression, "logical_time " + std::to_string(tx.logical_time) +
                                                       " precedes sealed time " +
                                                       std::to_string(last_sealed_time_));
        pending_.push_back(tx);
        return tx.tx_id;
    }

    /// Moves up to max_block_txs pending transactions into a new block. An
    /// empty genesis block is allowed; an empty seal later is not.
    const Block& seal_block(std::uint64_t logical_time) {
        if (pending_.empty() && !chain_.empty())
            throw Error(ErrorCode::NothingToSeal, "pending pool is empty");
        if (logical_time < last_sealed_time_)
            throw Error(ErrorCode::TimeRegression, "seal time precedes sealed time");
        Block b;
        b.index = chain_.size();
        b.prev_hash = chain_.empty() ? Hash32{} : chain_.back().block_hash;
        b.logical_time = logical_time;
        std::size_t take = std::min(max_block_txs_, pending_.size());
        b.txs.assign(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(take));
        pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(take));
        b.block_hash = compute_block_hash(b);
        chain_.push_back(std::move(b));
        last_sealed_time_ = logical_time;
        return chain_.back();
    }

    /// Seals repeatedly until the pending pool drains (or seals the genesis
    /// block when the chain is empty).
    void seal_pending(std::uint64_t logical_time) {
        if (chain_.empty()) seal_block(logical_time);
        while (!pending_.empty()) seal_block(logical_time);
    }

    /// Recomputes every hash, link and signature. Reports the lowest failing
    /// block; within one block the precedence is link, tx hash, signature,
    /// block hash.
    VerifyResult verify() const {
        if (raw_tamper_) return Inconsistency{raw_tamper_->block_index, VerifyReason::BadTxHash};

        // Cheap pass first: links and hashes. Within a block the precedence
        // is link, tx hash, signature, block hash.
        std::optional<Inconsistency> cheap;
        int cheap_rank = 0;  // 1 link, 2 txhash, 4 blockhash
        for (std::uint64_t i = 0; i < chain_.size() && !cheap; ++i) {
            const Block& b = chain_[i];
            Hash32 want_prev = (i == 0) ? Hash32{} : chain_[i - 1].block_hash;
            if (b.prev_hash != want_prev) {
                cheap = Inconsistency{i, VerifyReason::BadLink};
                cheap_rank = 1;
                break;
            }
            for (const auto& tx : b.txs) {
                if (compute_tx_id(tx) != tx.tx_id) {
                    cheap = Inconsistency{i, VerifyReason::BadTxHash};
                    cheap_rank = 2;
                    break;
                }
            }
            if (cheap) break;
            if (compute_block_hash(b) != b.block_hash) {
                cheap = Inconsistency{i, VerifyReason::BadBlockHash};
                cheap_rank = 4;
            }
        }

        // Signature pass over the blocks where a signature failure would
        // outrank the cheap one: everything before it, plus the cheap block
        // itself only when the cheap reason is the lower-precedence BadBlockHash.
        std::uint64_t sig_limit = chain_.size();
        if (cheap) sig_limit = cheap->block_index + (cheap_rank == 4 ? 1 : 0);
        for (std::uint64_t i = 0; i < sig_limit; ++i)
            for (const auto& tx : chain_[i].txs)
                if (!tx_signatures_ok(tx)) return Inconsistency{i, VerifyReason::BadSignature};
        return cheap;
    }

    /// Sealed transactions matching every supplied filter field, chain order.
    std::vector<QueryHit> query(const QueryFilter& f) const {
        std::vector<QueryHit> out;
        for (const auto& b : chain_) {
            for (std::size_t ti = 0; ti < b.txs.size(); ++ti) {
                const auto& tx = b.txs[ti];
                if (f.sender && tx.sender != *f.sender) continue;
                if (f.recipient && tx.recipient != *f.recipient) continue;
                if (f.kind && payload_kind(tx.payload) != *f.kind) continue;
                if (f.file_id) {
                    auto fid = payload_file_id(tx.payload);
                    if (!fid || *fid != *f.file_id) continue;
                }
                if (f.time_range &&
                    (tx.logical_time < f.time_range->first || tx.logical_time > f.time_range->second))
                    continue;
                out.push_back(QueryHit{b.index, ti, tx});
            }
        }
        return out;
    }

    std::optional<QueryHit> find_tx(const Hash32& tx_id) const {
        for (const auto& b : chain_)
            for (std::size_t ti = 0; ti < b.txs.size(); ++ti)
                if (b.txs[ti].tx_id == tx_id) return QueryHit{b.index, ti, b.txs[ti]};
        return std::nullopt;
    }

    // -- tampering (test/demo tool; deliberately does NOT rehash) -----------

    /// Byte span of one transaction inside the serialized ledger file.
    std::pair<std::size_t, std::size_t> tx_file_span(std::uint64_t block_index, std::size_t tx_index) const {
        if (block_index >= chain_.size() || tx_index >= chain_[block_index].txs.size())
            throw Error(ErrorCode::IndexOutOfRange, "no such block/tx");
        std::size_t off = header_bytes().size();
        off += 4;  // chain block count
        for (std::uint64_t bi = 0; bi < block_index; ++bi) {
            Encoder e;
            encode_tx_list_block(e, chain_[bi]);
            off += e.size();
        }
        off += 8 + 32 + 8 + 4;  // index, prev_hash, logical_time, tx count
        for (std::size_t ti = 0; ti < tx_index; ++ti) off += tx_bytes(chain_[block_index].txs[ti]).size();
        return {off, tx_bytes(chain_[block_index].txs[tx_index]).size()};
    }

    /// Returns a copy in which one byte of the addressed transaction's
    /// canonical encoding is replaced. Hashes are left as they were; detecting
    /// the edit is verify()'s job. If the mutated bytes no longer decode as a
    /// transaction, the copy remembers the raw bytes so serialization stays
    /// byte-exact and verification still reports the damaged block.
    Ledger tamper(std::uint64_t block_index, std::size_t tx_index, std::size_t byte_offset,
                  std::uint8_t new_byte) const {
        if (block_index >= chain_.size() || tx_index >= chain_[block_index].txs.size())
            throw Error(ErrorCode::IndexOutOfRange, "no such block/tx");
        Bytes raw = tx_bytes(chain_[block_index].txs[tx_index]);
        if (byte_offset >= raw.size()) throw Error(ErrorCode::IndexOutOfRange, "byte offset beyond tx encoding");
        Ledger out = *this;
        raw[byte_offset] = new_byte;
        try {
            Decoder d(raw);
            Transaction mutated = decode_tx(d);
            d.expect_done("transaction");
            out.chain_[block_index].txs[tx_index] = std::move(mutated);
            out.raw_tamper_.reset();
        } catch (const MalformedInput&) {
            out.raw_tamper_ = RawTamper{block_index, tx_index, std::move(raw)};
        }
        return out;
    }

    // -- serialization ------------------------------------------------------

    /// Ledger file: magic, format version, algorithm names, pseudonym→key
    /// registry, then the canonical chain encoding. Pending transactions are
    /// ephemeral and must be sealed (or dropped) before writing.
    Bytes serialize() const {
        if (!pending_.empty())
            throw Error(ErrorCode::PendingNotSealed, "seal pending transactions before serializing");
        Encoder e;
        e.put_raw(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(kLedgerMagic), 4));
        e.put_u16(kLedgerFormatVersion);
        e.put_var(std::string(kHashAlgorithm));
        e.put_var(std::string(kSignatureAlgorithm));
        e.put_u32(static_cast<std::uint32_t>(registry_.size()));
        for (const auto& r : registry_) {
            e.put_hash(r.id.id);
            e.put_var(r.public_key);
        }
        e.put_u32(static_cast<std::uint32_t>(chain_.size()));
        for (std::uint64_t bi = 0; bi < chain_.size(); ++bi) encode_tx_list_block(e, chain_[bi]);
        return e.take();
    }

    static Ledger deserialize(std::span<const std::uint8_t> data) {
        Decoder d(data);
        Ledger out;
        std::uint8_t magic[4];
        for (int i = 0; i < 4; ++i) magic[i] = d.get_byte();
        if (std::memcmp(magic, kLedgerMagic, 4) != 0) throw MalformedInput(0, "bad magic, not a ledger file");
        auto version = d.get_u16();
        if (version != kLedgerFormatVersion) throw MalformedInput(4, "unsupported format version");
        auto hash_alg = d.get_string();
        if (hash_alg != kHashAlgorithm) throw MalformedInput(6, "unsupported hash algorithm '" + hash_alg + "'");
        auto sig_alg = d.get_string();
        if (sig_alg != kSignatureAlgorithm)
            throw MalformedInput(6, "unsupported signature algorithm '" + sig_alg + "'");
        auto nreg = d.get_u32();
        for (std::uint32_t i = 0; i < nreg; ++i) {
            RegistryEntry r;
            r.id = Pseudonym{d.get_hash()};
            std::size_t at = d.pos();
            r.public_key = d.get_var();
            if (pseudonym_of(r.public_key) != r.id)
                throw MalformedInput(at, "registry entry pseudonym does not match key");
            out.registry_.push_back(std::move(r));
        }
        auto nblocks = d.get_u32();
        for (std::uint32_t i = 0; i < nblocks; ++i) {
            std::size_t at = d.pos();
            Block b;
            b.index = d.get_u64();
            if (b.index != i) throw MalformedInput(at, "block index out of sequence");
            b.prev_hash = d.get_hash();
            b.logical_time = d.get_u64();
            auto ntx = d.get_u32();
            if (ntx == 0 && i != 0) throw MalformedInput(at, "non-genesis block with no transactions");
            for (std::uint32_t t = 0; t < ntx; ++t) b.txs.push_back(decode_tx(d));
            b.block_hash = d.get_hash();
            out.chain_.push_back(std::move(b));
        }
        d.expect_done("ledger file");
        if (!out.chain_.empty()) out.last_sealed_time_ = out.chain_.back().logical_time;
        return out;
    }

    void save(const std::filesystem::path& path) const {
        auto bytes = serialize();
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
        f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!f) throw Error(ErrorCode::IoError, "short write to " + path.string());
    }

    static Ledger load(const std::filesystem::path& path) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw Error(ErrorCode::IoError, "cannot open " + path.string());
        Bytes data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
        return deserialize(data);
    }

    // -- accessors ----------------------------------------------------------

    const std::vector<Block>& chain() const { return chain_; }
    const std::vector<Transaction>& pending() const { return pending_; }
    std::uint64_t last_sealed_time() const { return last_sealed_time_; }

    std::size_t sealed_tx_count() const {
        std::size_t n = 0;
        for (const auto& b : chain_) n += b.txs.size();
        return n;
    }

    /// Content equality: registry plus chain plus pending pool. Block policy
    /// and double-signing configuration are runtime knobs, not ledger state.
    bool operator==(const Ledger& o) const {
        return registry_ == o.registry_ && chain_ == o.chain_ && pending_ == o.pending_ &&
               raw_tamper_ == o.raw_tamper_;
    }

private:
    struct RawTamper {
        std::uint64_t block_index = 0;
        std::size_t tx_index = 0;
        Bytes bytes;
        bool operator==(const RawTamper&) const = default;
    };

    Bytes header_bytes() const {
        Encoder e;
        e.put_raw(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(kLedgerMagic), 4));
        e.put_u16(kLedgerFormatVersion);
        e.put_var(std::string(kHashAlgorithm));
        e.put_var(std::string(kSignatureAlgorithm));
        e.put_u32(static_cast<std::uint32_t>(registry_.size()));
        for (const auto& r : registry_) {
            e.put_hash(r.id.id);
            e.put_var(r.public_key);
        }
        return e.take();
    }

    /// Encodes one block, honoring a raw-tamper override for its target tx.
    void encode_tx_list_block(Encoder& e, const Block& b) const {
        e.put_u64(b.index);
        e.put_hash(b.prev_hash);
        e.put_u64(b.logical_time);
        e.put_u32(static_cast<std::uint32_t>(b.txs.size()));
        for (std::size_t ti = 0; ti < b.txs.size(); ++ti) {
            if (raw_tamper_ && raw_tamper_->block_index == b.index && raw_tamper_->tx_index == ti)
                e.put_raw(raw_tamper_->bytes);
            else
                encode_tx(e, b.txs[ti]);
        }
        e.put_hash(b.block_hash);
    }

    void check_signatures(const Transaction& tx) const {
        bool wants_double = double_signed_.count(payload_kind(tx.payload)) > 0;
        std::size_t want = wants_double ? 2 : 1;
        if (tx.signatures.size() != want)
            throw Error(ErrorCode::InvalidSignature,
                        "expected " + std::to_string(want) + " signature(s), got " +
                            std::to_string(tx.signatures.size()));
        if (!tx_signatures_ok(tx)) throw Error(ErrorCode::InvalidSignature, "signature check failed");
    }

    bool tx_signatures_ok(const Transaction& tx) const {
        if (tx.signatures.empty() || tx.signatures.size() > 2) return false;
        if (tx.signatures[0].signer != tx.sender) return false;
        if (tx.signatures.size() == 2) {
            if (tx.signatures[1].signer != tx.recipient) return false;
            if (tx.signatures[0].signer == tx.signatures[1].signer) return false;
        }
        for (const auto& s : tx.signatures) {
            const Bytes* pk = find_public_key(s.signer);
            if (!pk) return false;
            if (!signature_valid(*pk, std::span<const std::uint8_t>(tx.tx_id.v), s.sig)) return false;
        }
        return true;
    }

    std::vector<RegistryEntry> registry_;
    std::vector<Block> chain_;
    std::vector<Transaction> pending_;
    std::uint64_t last_sealed_time_ = 0;
    std::size_t max_block_txs_ = 16;
    std::set<PayloadKind> double_signed_;
    std::optional<RawTamper> raw_tamper_;
};

// --- transaction building -----------------------------------------------

struct TxDraft {
    std::uint64_t logical_time = 0;
    Pseudonym sender;
    Pseudonym recipient;
    Payload payload;
    std::uint64_t nonce = 0;
};

inline Transaction sign_single(const TxDraft& draft, const Keypair& signer) {
    Transaction tx;
    tx.logical_time = draft.logical_time;
    tx.sender = draft.sender;
    tx.recipient = draft.recipient;
    tx.payload = draft.payload;
    tx.nonce = draft.nonce;
    tx.tx_id = compute_tx_id(tx);
    tx.signatures.push_back(Signature{signer.id(), signer.sign(std::span<const std::uint8_t>(tx.tx_id.v))});
    return tx;
}

/// Both counterparties sign; the sender's signature is listed first.
inline Transaction make_double_signed(const TxDraft& draft, const Keypair& a, const Keypair& b) {
    if (a.id() == b.id()) throw Error(ErrorCode::DuplicateSigner, "double signing needs two distinct parties");
    Transaction tx;
    tx.logical_time = draft.logical_time;
    tx.sender = draft.sender;
    tx.recipient = draft.recipient;
    tx.payload = draft.payload;
    tx.nonce = draft.nonce;
    tx.tx_id = compute_tx_id(tx);
    const Keypair& first = (a.id() == draft.sender) ? a : b;
    const Keypair& second = (a.id() == draft.sender) ? b : a;
    tx.signatures.push_back(Signature{first.id(), first.sign(std::span<const std::uint8_t>(tx.tx_id.v))});
    tx.signatures.push_back(Signature{second.id(), second.sign(std::span<const std::uint8_t>(tx.tx_id.v))});
    return tx;
}

/// File-level tamper helper shared by the CLI and tests: flips one byte of
/// one transaction inside an already-serialized ledger image.
inline Bytes tamper_ledger_bytes(const Ledger& ledger, std::uint64_t block_index, std::size_t tx_index,
                                 std::size_t byte_offset, std::uint8_t new_byte) {
    auto [off, len] = ledger.tx_file_span(block_index, tx_index);
    if (byte_offset >= len) throw Error(ErrorCode::IndexOutOfRange, "byte offset beyond tx encoding");
    Bytes data = ledger.serialize();
    data[off + byte_offset] = new_byte;
    return data;
}

}  // namespace cfdr
