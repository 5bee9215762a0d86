#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cfdr/arbitrator.hpp"
#include "cfdr/crypto.hpp"
#include "cfdr/ledger.hpp"

namespace cfdr {

/// Ciphertext held by the Cloud for one file id. The digest always tracks the
/// bytes actually held, which is what a ReadGrant must advertise.
struct StoredObject {
    std::string file_id;
    Bytes ciphertext;
    Hash32 digest;

    bool operator==(const StoredObject&) const = default;
};

enum class BehaviorMode { Honest, DropAfterUpload, AlterAfterUpload, RetainAfterDelete, RefuseUploadAck };

inline const char* behavior_mode_name(BehaviorMode m) {
    switch (m) {
        case BehaviorMode::Honest: return "honest";
        case BehaviorMode::DropAfterUpload: return "drop_after_upload";
        case BehaviorMode::AlterAfterUpload: return "alter_after_upload";
        case BehaviorMode::RetainAfterDelete: return "retain_after_delete";
        case BehaviorMode::RefuseUploadAck: return "refuse_upload_ack";
    }
    return "unknown";
}

/// Byzantine fault the Cloud applies to one file. At most one behavior may
/// target a given file id; files without one get honest treatment.
struct CloudBehavior {
    BehaviorMode mode = BehaviorMode::Honest;
    std::string file_id;
    std::uint64_t alter_offset = 0;
    std::uint8_t alter_xor = 0xFF;
};

/// Shared tick source. Every protocol arrow, on- or off-chain, consumes one
/// tick, so transaction times mirror the arrow numbering of the sequences.
struct LogicalClock {
    std::uint64_t t = 0;
    std::uint64_t tick() { return ++t; }
    std::uint64_t now() const { return t; }
    void advance_to(std::uint64_t target) {
        if (target > t) t = target;
    }
};

class UserActor {
public:
    UserActor(std::string label, Keypair kp) : label_(std::move(label)), kp_(std::move(kp)) {}

    const Keypair& keys() const { return kp_; }
    const Pseudonym& id() const { return kp_.id(); }
    const std::string& label() const { return label_; }

    /// Per-file symmetric key; stable across runs so ciphertexts (and hence
    /// digests) are reproducible.
    Bytes file_key(const std::string& file_id) const {
        auto h = sha256("cfdr/filekey/v1/" + label_ + "/" + file_id);
        return Bytes(h.v.begin(), h.v.end());
    }

    void set_reject_digest(const std::string& file_id, bool reject) {
        if (reject)
            reject_.insert(file_id);
        else
            reject_.erase(file_id);
    }
    bool rejects(const std::string& file_id) const { return reject_.count(file_id) > 0; }

    void remember_accepted_digest(const std::string& file_id, const Hash32& digest) {
        accepted_digest_[file_id] = digest;
    }
    std::optional<Hash32> accepted_digest(const std::string& file_id) const {
        auto it = accepted_digest_.find(file_id);
        if (it == accepted_digest_.end()) return std::nullopt;
        return it->second;
    }

private:
    std::string label_;
    Keypair kp_;
    std::set<std::string> reject_;
    std::map<std::string, Hash32> accepted_digest_;
};

class CloudActor {
public:
    CloudActor(std::string label, Keypair kp) : label_(std::move(label)), kp_(std::move(kp)) {}

    const Keypair& keys() const { return kp_; }
    const Pseudonym& id() const { return kp_.id(); }
    const std::string& label() const { return label_; }

    void add_behavior(CloudBehavior b) {
        if (behaviors_.count(b.file_id))
            throw Error(ErrorCode::SchemaError, "file '" + b.file_id + "' already has a behavior");
        behaviors_[b.file_id] = b;
    }

    BehaviorMode behavior_for(const std::string& file_id) const {
        auto it = behaviors_.find(file_id);
        return it == behaviors_.end() ? BehaviorMode::Honest : it->second.mode;
    }

    bool holds(const std::string& file_id) const { return storage_.count(file_id) > 0; }

    const StoredObject* object(const std::string& file_id) const {
        auto it = storage_.find(file_id);
        return it == storage_.end() ? nullptr : &it->second;
    }

    const std::map<std::string, StoredObject>& storage() const { return storage_; }

    /// Accept a finished upload into storage, then apply any post-upload fault.
    void store(const std::string& file_id, Bytes ciphertext) {
        StoredObject obj{file_id, std::move(ciphertext), {}};
        obj.digest = sha256(obj.ciphertext);
        storage_[file_id] = std::move(obj);
        auto it = behaviors_.find(file_id);
        if (it == behaviors_.end()) return;
        if (it->second.mode == BehaviorMode::DropAfterUpload) {
            storage_.erase(file_id);
        } else if (it->second.mode == BehaviorMode::AlterAfterUpload) {
            auto& obj2 = storage_[file_id];
            if (!obj2.ciphertext.empty()) {
                auto off = static_cast<std::size_t>(it->second.alter_offset % obj2.ciphertext.size());
                obj2.ciphertext[off] ^= it->second.alter_xor;
                obj2.digest = sha256(obj2.ciphertext);
            }
        }
    }

    /// Honest deletion, unless the retain fault keeps the bytes around.
    void erase(const std::string& file_id) {
        if (behavior_for(file_id) == BehaviorMode::RetainAfterDelete) return;
        storage_.erase(file_id);
    }

    std::string url_for(const std::string& file_id) const { return "store://" + label_ + "/" + file_id; }

    /// Resolves a URL minted by url_for back to the current bytes.
    std::optional<Bytes> fetch(const std::string& url) const {
        std::string prefix = "store://" + label_ + "/";
        if (url.rfind(prefix, 0) != 0) return std::nullopt;
        auto it = storage_.find(url.substr(prefix.size()));
        if (it == storage_.end()) return std::nullopt;
        return it->second.ciphertext;
    }

private:
    std::string label_;
    Keypair kp_;
    std::map<std::string, StoredObject> storage_;
    std::map<std::string, CloudBehavior> behaviors_;
};

/// The smart-contract party: adjudicates over the sealed chain and records
/// verdicts under its own pseudonym.
class ContractActor {
public:
    ContractActor(std::string label, Keypair kp, std::uint64_t base_penalty = 100)
        : label_(std::move(label)), kp_(std::move(kp)), base_penalty_(base_penalty) {}

    const Keypair& keys() const { return kp_; }
    const Pseudonym& id() const { return kp_.id(); }
    const std::string& label() const { return label_; }
    std::uint64_t base_penalty() const { return base_penalty_; }
    void set_base_penalty(std::uint64_t p) { base_penalty_ = p; }

    Hash32 record(Ledger& ledger, const Verdict& verdict, const Pseudonym& recipient, std::uint64_t time) {
        return record_verdict(ledger, verdict, kp_, recipient, time, /*nonce=*/time);
    }

private:
    std::string label_;
    Keypair kp_;
    std::uint64_t base_penalty_;
};

// --- interaction sequences ------------------------------------------------

enum class UploadStatus { Accepted, Rejected, Refused };

struct UploadOutcome {
    UploadStatus status = UploadStatus::Accepted;
    std::vector<Hash32> tx_ids;  // on-chain transactions, in submission order
    Hash32 digest{};             // cloud-advertised digest (unset when refused)
};

struct DeleteOutcome {
    std::vector<Hash32> tx_ids;
    bool object_was_stored = false;
};

struct ReadOutcome {
    bool found = false;
    bool match = false;
    std::optional<Verdict> verdict;  // set on the missing path
    std::vector<Hash32> tx_ids;
};

/// Builds a transaction under the ledger's signing policy: single-signed by
/// the sender, or agreed by both counterparties for double-signed kinds.
/// Nonces are the transaction's own tick, which keeps runs deterministic and
/// keeps faults on one file from shifting another file's transactions.
inline Transaction make_tx(const Ledger& ledger, TxDraft draft, const Keypair& sender_keys,
                           const Keypair& recipient_keys) {
    draft.nonce = draft.logical_time;
    if (ledger.double_signed().count(payload_kind(draft.payload)))
        return make_double_signed(draft, sender_keys, recipient_keys);
    return sign_single(draft, sender_keys);
}

/// Upload sequence: init and ack on-chain, ciphertext off-chain, then the
/// cloud's digest and the user's accept/reject, both on-chain. On acceptance
/// the cloud commits the object to storage; on rejection it discards the
/// received bytes.
inline UploadOutcome run_upload(UserActor& user, CloudActor& cloud, Ledger& ledger, LogicalClock& clock,
                                const std::string& file_id, std::span<const std::uint8_t> plaintext) {
    UploadOutcome out;
    auto t1 = clock.tick();
    out.tx_ids.push_back(ledger.submit(
        make_tx(ledger, TxDraft{t1, user.id(), cloud.id(), UploadInit{file_id}, 0}, user.keys(), cloud.keys())));

    if (cloud.behavior_for(file_id) == BehaviorMode::RefuseUploadAck) {
        out.status = UploadStatus::Refused;
        return out;  // the dangling UploadInit stays on-chain as evidence
    }

    auto t2 = clock.tick();
    out.tx_ids.push_back(ledger.submit(
        make_tx(ledger, TxDraft{t2, cloud.id(), user.id(), UploadAck{file_id}, 0}, cloud.keys(), user.keys())));

    clock.tick();  // off-chain ciphertext transfer
    Bytes ciphertext = encrypt(plaintext, user.file_key(file_id));
    Hash32 received_digest = sha256(ciphertext);

    auto t4 = clock.tick();
    out.digest = received_digest;
    out.tx_ids.push_back(ledger.submit(make_tx(
        ledger, TxDraft{t4, cloud.id(), user.id(), UploadDone{file_id, received_digest}, 0}, cloud.keys(),
        user.keys())));

    bool accept = !user.rejects(file_id) && received_digest == sha256(ciphertext);
    auto t5 = clock.tick();
    out.tx_ids.push_back(ledger.submit(make_tx(
        ledger, TxDraft{t5, user.id(), cloud.id(), DigestAck{file_id, accept}, 0}, user.keys(), cloud.keys())));

    if (accept) {
        user.remember_accepted_digest(file_id, received_digest);
        cloud.store(file_id, std::move(ciphertext));
        out.status = UploadStatus::Accepted;
    } else {
        out.status = UploadStatus::Rejected;  // cloud discards the received bytes
    }
    return out;
}

/// Delete sequence: request and acknowledgement, both on-chain. A retain
/// fault still acknowledges but quietly keeps the object.
inline DeleteOutcome run_delete(UserActor& user, CloudActor& cloud, Ledger& ledger, LogicalClock& clock,
                                const std::string& file_id) {
    DeleteOutcome out;
    out.object_was_stored = cloud.holds(file_id);
    auto t1 = clock.tick();
    out.tx_ids.push_back(ledger.submit(
        make_tx(ledger, TxDraft{t1, user.id(), cloud.id(), DeleteReq{file_id}, 0}, user.keys(), cloud.keys())));
    cloud.erase(file_id);
    auto t2 = clock.tick();
    out.tx_ids.push_back(ledger.submit(
        make_tx(ledger, TxDraft{t2, cloud.id(), user.id(), DeleteAck{file_id}, 0}, cloud.keys(), user.keys())));
    return out;
}

/// Read sequence. Found: grant with the currently-held digest, off-chain
/// fetch, digest comparison against the accepted upload digest. Missing:
/// the cloud reports absence, the request pair is sealed, and the user
/// triggers the contract, whose verdict lands on-chain.
inline ReadOutcome run_read(UserActor& user, CloudActor& cloud, ContractActor& contract, Ledger& ledger,
                            LogicalClock& clock, const std::string& file_id) {
    ReadOutcome out;
    auto t1 = clock.tick();
    Hash32 req_id = ledger.submit(
        make_tx(ledger, TxDraft{t1, user.id(), cloud.id(), ReadReq{file_id}, 0}, user.keys(), cloud.keys()));
    out.tx_ids.push_back(req_id);

    if (cloud.holds(file_id)) {
        const StoredObject* obj = cloud.object(file_id);
        auto t2 = clock.tick();
        out.tx_ids.push_back(ledger.submit(make_tx(
            ledger, TxDraft{t2, cloud.id(), user.id(), ReadGrant{file_id, cloud.url_for(file_id), obj->digest}, 0},
            cloud.keys(), user.keys())));
        out.found = true;
        clock.tick();  // off-chain fetch
        auto fetched = cloud.fetch(cloud.url_for(file_id));
        auto expected = user.accepted_digest(file_id);
        out.match = fetched.has_value() && expected.has_value() && sha256(*fetched) == *expected;
        return out;
    }

    auto t2 = clock.tick();
    out.tx_ids.push_back(ledger.submit(
        make_tx(ledger, TxDraft{t2, cloud.id(), user.id(), ReadMissing{file_id}, 0}, cloud.keys(), user.keys())));
    ledger.seal_pending(t2);  // the contract adjudicates over sealed history

    auto t3 = clock.tick();
    out.tx_ids.push_back(ledger.submit(make_tx(
        ledger, TxDraft{t3, user.id(), contract.id(), ContractTrigger{file_id, req_id}, 0}, user.keys(),
        contract.keys())));

    Verdict verdict = adjudicate_missing(ledger, file_id, req_id, contract.base_penalty());
    auto t4 = clock.tick();
    out.tx_ids.push_back(contract.record(ledger, verdict, user.id(), t4));
    out.verdict = std::move(verdict);
    return out;
}

/// Every sealed transaction's payload kind must match its sender's role. With
/// pseudonymous parties the roles are inferred from the kinds themselves, so
/// the check is: no pseudonym ever sends kinds belonging to two roles.
inline bool scan_role_discipline(const Ledger& ledger) {
    std::map<Pseudonym, Role> inferred;
    for (const auto& b : ledger.chain()) {
        for (const auto& tx : b.txs) {
            Role r = required_sender_role(payload_kind(tx.payload));
            auto [it, fresh] = inferred.emplace(tx.sender, r);
            if (!fresh && it->second != r) return false;
        }
    }
    return true;
}

}  // namespace cfdr
