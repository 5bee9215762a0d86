#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cfdr/ledger.hpp"
#include "cfdr/verdict.hpp"

namespace cfdr {

/// Out-of-band evidence: a ciphertext copy allegedly still held by the Cloud
/// after a deletion. Only its digest matters to the arbitrator.
struct OutOfBandCopy {
    std::string file_id;
    Bytes ciphertext;
    std::string provenance;
};

/// Flat per-violation penalty. Percentile-breach compensation has its own
/// shortfall formula in the SLA evaluator.
inline std::uint64_t compensation_for(Violation v, std::uint64_t base_penalty) {
    switch (v) {
        case Violation::DataLoss:
        case Violation::DataAlteration:
        case Violation::UnauthorizedRetention: return base_penalty;
        case Violation::NoViolation:
        case Violation::UserAtFault:
        case Violation::SlaPercentileBreach: return 0;
    }
    return 0;
}

namespace detail {

struct ChainPos {
    std::uint64_t block = 0;
    std::size_t tx = 0;
    auto operator<=>(const ChainPos&) const = default;
};

inline ChainPos pos_of(const QueryHit& h) { return ChainPos{h.block_index, h.tx_index}; }

/// An UploadDone paired with the first DigestAck that follows it.
struct UploadPair {
    QueryHit done;
    QueryHit ack;
    bool accepted = false;
    Hash32 digest{};
};

inline std::vector<UploadPair> upload_pairs(const std::vector<QueryHit>& file_history) {
    std::vector<UploadPair> pairs;
    std::optional<QueryHit> pending_done;
    for (const auto& h : file_history) {
        auto kind = payload_kind(h.tx.payload);
        if (kind == PayloadKind::UploadDone) {
            pending_done = h;
        } else if (kind == PayloadKind::DigestAck && pending_done) {
            const auto& ack = std::get<DigestAck>(h.tx.payload);
            const auto& done = std::get<UploadDone>(pending_done->tx.payload);
            pairs.push_back(UploadPair{*pending_done, h, ack.accept, done.digest});
            pending_done.reset();
        }
    }
    return pairs;
}

/// Latest accepted upload completed strictly before `before`.
inline std::optional<UploadPair> latest_accepted_before(const std::vector<QueryHit>& history, ChainPos before) {
    std::optional<UploadPair> out;
    for (const auto& p : upload_pairs(history))
        if (p.accepted && pos_of(p.ack) < before) out = p;
    return out;
}

/// DeleteReq+DeleteAck pair strictly inside the (optional) position bounds.
inline std::optional<std::pair<QueryHit, QueryHit>> delete_pair_between(
    const std::vector<QueryHit>& history, std::optional<ChainPos> after, std::optional<ChainPos> before) {
    std::optional<QueryHit> req;
    for (const auto& h : history) {
        if (after && pos_of(h) <= *after) continue;
        if (before && pos_of(h) >= *before) continue;
        auto kind = payload_kind(h.tx.payload);
        if (kind == PayloadKind::DeleteReq) req = h;
        else if (kind == PayloadKind::DeleteAck && req) return std::make_pair(*req, h);
    }
    return std::nullopt;
}

}  // namespace detail

/// Who lost the data? Decided purely from chain order before the read
/// request: an accepted upload with no later acknowledged delete convicts the
/// Cloud; an acknowledged delete clears it; no accepted upload points back at
/// the User, unless the last upload attempt went unanswered (custody then
/// never began).
inline Verdict adjudicate_missing(const Ledger& ledger, const std::string& file_id,
                                  const Hash32& read_req_tx_id, std::uint64_t base_penalty = 100) {
    auto req = ledger.find_tx(read_req_tx_id);
    if (!req || payload_kind(req->tx.payload) != PayloadKind::ReadReq ||
        std::get<ReadReq>(req->tx.payload).file_id != file_id)
        throw Error(ErrorCode::MissingPrerequisiteTxs, "no sealed ReadReq with that id for file '" + file_id + "'");
    auto req_pos = detail::pos_of(*req);

    QueryFilter f;
    f.file_id = file_id;
    auto history = ledger.query(f);

    std::optional<QueryHit> missing;
    for (const auto& h : history)
        if (payload_kind(h.tx.payload) == PayloadKind::ReadMissing && detail::pos_of(h) > req_pos) {
            missing = h;
            break;
        }
    if (!missing)
        throw Error(ErrorCode::MissingPrerequisiteTxs, "no ReadMissing follows the read request for '" + file_id + "'");

    Verdict v;
    v.subject_kind = SubjectKind::File;
    v.subject = file_id;

    auto accepted = detail::latest_accepted_before(history, req_pos);
    if (accepted) {
        auto deleted =
            detail::delete_pair_between(history, detail::pos_of(accepted->ack), req_pos);
        if (deleted) {
            v.violation = Violation::NoViolation;
            v.evidence = {accepted->done.tx.tx_id, accepted->ack.tx.tx_id, deleted->first.tx.tx_id,
                          deleted->second.tx.tx_id};
        } else {
            v.violation = Violation::DataLoss;
            v.responsible = accepted->done.tx.sender;  // the cloud acknowledged custody
            v.compensation = compensation_for(v.violation, base_penalty);
            v.evidence = {accepted->done.tx.tx_id, accepted->ack.tx.tx_id, req->tx.tx_id,
                          missing->tx.tx_id};
        }
        return v;
    }

    // No accepted upload. If the latest attempt is a dangling UploadInit the
    // data never entered the cloud's custody.
    std::optional<QueryHit> last_init;
    bool answered = false;
    for (const auto& h : history) {
        if (detail::pos_of(h) >= req_pos) break;
        auto kind = payload_kind(h.tx.payload);
        if (kind == PayloadKind::UploadInit) {
            last_init = h;
            answered = false;
        } else if (kind == PayloadKind::UploadAck) {
            answered = true;
        }
    }
    if (last_init && !answered) {
        v.violation = Violation::NoViolation;
        v.evidence = {last_init->tx.tx_id, req->tx.tx_id, missing->tx.tx_id};
        return v;
    }

    v.violation = Violation::UserAtFault;
    v.responsible = req->tx.sender;
    v.compensation = 0;
    v.evidence = {req->tx.tx_id, missing->tx.tx_id};
    return v;
}

/// Does the granted content match what the chain says was uploaded? Compares
/// the grant's digest with the latest accepted upload digest before the grant.
inline Verdict adjudicate_altered(const Ledger& ledger, const std::string& file_id,
                                  const Hash32& read_grant_tx_id, std::uint64_t base_penalty = 100) {
    auto grant = ledger.find_tx(read_grant_tx_id);
    if (!grant || payload_kind(grant->tx.payload) != PayloadKind::ReadGrant ||
        std::get<ReadGrant>(grant->tx.payload).file_id != file_id)
        throw Error(ErrorCode::MissingPrerequisiteTxs, "no sealed ReadGrant with that id for file '" + file_id + "'");

    QueryFilter f;
    f.file_id = file_id;
    auto history = ledger.query(f);

    Verdict v;
    v.subject_kind = SubjectKind::File;
    v.subject = file_id;

    auto accepted = detail::latest_accepted_before(history, detail::pos_of(*grant));
    if (!accepted) {
        v.violation = Violation::UserAtFault;  // disputing a file it never confirmed
        v.responsible = grant->tx.recipient;
        v.compensation = 0;
        v.evidence = {grant->tx.tx_id};
        return v;
    }

    const auto& grant_payload = std::get<ReadGrant>(grant->tx.payload);
    if (grant_payload.digest != accepted->digest) {
        v.violation = Violation::DataAlteration;
        v.responsible = grant->tx.sender;
        v.compensation = compensation_for(v.violation, base_penalty);
    } else {
        v.violation = Violation::NoViolation;
    }
    v.evidence = {accepted->done.tx.tx_id, accepted->ack.tx.tx_id, grant->tx.tx_id};
    return v;
}

/// Out-of-band copy found: a violation only when the chain shows an
/// acknowledged delete AND the copy's digest matches an accepted upload.
inline Verdict adjudicate_retention(const Ledger& ledger, const std::string& file_id,
                                    const OutOfBandCopy& evidence, std::uint64_t base_penalty = 100) {
    QueryFilter f;
    f.file_id = file_id;
    auto history = ledger.query(f);

    Verdict v;
    v.subject_kind = SubjectKind::File;
    v.subject = file_id;
    v.violation = Violation::NoViolation;

    auto del = detail::delete_pair_between(history, std::nullopt, std::nullopt);
    if (!del) return v;  // no acknowledged delete: retention was legitimate

    Hash32 copy_digest = sha256(evidence.ciphertext);
    std::optional<QueryHit> matching_done;
    for (const auto& p : detail::upload_pairs(history))
        if (p.accepted && p.digest == copy_digest) matching_done = p.done;

    if (!matching_done) {
        v.evidence = {del->first.tx.tx_id, del->second.tx.tx_id};
        return v;  // copy does not match any accepted version
    }

    v.violation = Violation::UnauthorizedRetention;
    v.responsible = del->second.tx.sender;  // the cloud that acknowledged the delete
    v.compensation = compensation_for(v.violation, base_penalty);
    v.evidence = {matching_done->tx.tx_id, del->first.tx.tx_id, del->second.tx.tx_id};
    return v;
}

/// Submits the verdict from the contract's pseudonym. Every cited evidence
/// transaction must already be sealed; a verdict citing unknown ids is
/// rejected before it reaches the pool.
inline Hash32 record_verdict(Ledger& ledger, const Verdict& verdict, const Keypair& contract_keys,
                             const Pseudonym& recipient, std::uint64_t logical_time, std::uint64_t nonce) {
    for (const auto& ev : verdict.evidence)
        if (!ledger.find_tx(ev))
            throw Error(ErrorCode::UnknownEvidenceTx, "verdict cites tx " + to_hex(ev) + " not on chain");
    TxDraft draft{logical_time, contract_keys.id(), recipient, VerdictRecord{verdict}, nonce};
    return ledger.submit(sign_single(draft, contract_keys));
}

}  // namespace cfdr
