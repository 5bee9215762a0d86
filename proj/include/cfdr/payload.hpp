#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "cfdr/bytes.hpp"
#include "cfdr/rational.hpp"
#include "cfdr/verdict.hpp"

namespace cfdr {

enum class Role : std::uint64_t { User = 0, Cloud = 1, Oracle = 2, Contract = 3 };

inline const char* role_name(Role r) {
    switch (r) {
        case Role::User: return "user";
        case Role::Cloud: return "cloud";
        case Role::Oracle: return "oracle";
        case Role::Contract: return "contract";
    }
    return "unknown";
}

// The twelve event kinds a ledger transaction can carry. Digest fields are
// always hashes of ciphertext; plaintext never appears on-chain.

struct UploadInit {
    std::string file_id;
    bool operator==(const UploadInit&) const = default;
};
struct UploadAck {
    std::string file_id;
    bool operator==(const UploadAck&) const = default;
};
struct UploadDone {
    std::string file_id;
    Hash32 digest;
    bool operator==(const UploadDone&) const = default;
};
struct DigestAck {
    std::string file_id;
    bool accept = false;
    bool operator==(const DigestAck&) const = default;
};
struct DeleteReq {
    std::string file_id;
    bool operator==(const DeleteReq&) const = default;
};
struct DeleteAck {
    std::string file_id;
    bool operator==(const DeleteAck&) const = default;
};
struct ReadReq {
    std::string file_id;
    bool operator==(const ReadReq&) const = default;
};
struct ReadGrant {
    std::string file_id;
    std::string url;
    Hash32 digest;
    bool operator==(const ReadGrant&) const = default;
};
struct ReadMissing {
    std::string file_id;
    bool operator==(const ReadMissing&) const = default;
};
struct ContractTrigger {
    std::string file_id;
    Hash32 read_req_tx_id;
    bool operator==(const ContractTrigger&) const = default;
};
struct VerdictRecord {
    Verdict verdict;
    bool operator==(const VerdictRecord&) const = default;
};
struct Measurement {
    std::string metric;
    URational value;
    Hash32 op_tx_id;
    bool operator==(const Measurement&) const = default;
};

using Payload = std::variant<UploadInit, UploadAck, UploadDone, DigestAck, DeleteReq, DeleteAck, ReadReq,
                             ReadGrant, ReadMissing, ContractTrigger, VerdictRecord, Measurement>;

enum class PayloadKind : std::uint64_t {
    UploadInit = 0,
    UploadAck = 1,
    UploadDone = 2,
    DigestAck = 3,
    DeleteReq = 4,
    DeleteAck = 5,
    ReadReq = 6,
    ReadGrant = 7,
    ReadMissing = 8,
    ContractTrigger = 9,
    VerdictRecord = 10,
    Measurement = 11,
};

inline PayloadKind payload_kind(const Payload& p) { return static_cast<PayloadKind>(p.index()); }

inline const char* payload_kind_name(PayloadKind k) {
    switch (k) {
        case PayloadKind::UploadInit: return "upload_init";
        case PayloadKind::UploadAck: return "upload_ack";
        case PayloadKind::UploadDone: return "upload_done";
        case PayloadKind::DigestAck: return "digest_ack";
        case PayloadKind::DeleteReq: return "delete_req";
        case PayloadKind::DeleteAck: return "delete_ack";
        case PayloadKind::ReadReq: return "read_req";
        case PayloadKind::ReadGrant: return "read_grant";
        case PayloadKind::ReadMissing: return "read_missing";
        case PayloadKind::ContractTrigger: return "contract_trigger";
        case PayloadKind::VerdictRecord: return "verdict_record";
        case PayloadKind::Measurement: return "measurement";
    }
    return "unknown";
}

inline std::optional<PayloadKind> payload_kind_from_name(std::string_view name) {
    for (std::uint64_t i = 0; i <= 11; ++i) {
        auto k = static_cast<PayloadKind>(i);
        if (name == payload_kind_name(k)) return k;
    }
    return std::nullopt;
}

/// Which role is allowed to send each payload kind.
inline Role required_sender_role(PayloadKind k) {
    switch (k) {
        case PayloadKind::UploadInit:
        case PayloadKind::DigestAck:
        case PayloadKind::DeleteReq:
        case PayloadKind::ReadReq:
        case PayloadKind::ContractTrigger: return Role::User;
        case PayloadKind::UploadAck:
        case PayloadKind::UploadDone:
        case PayloadKind::DeleteAck:
        case PayloadKind::ReadGrant:
        case PayloadKind::ReadMissing: return Role::Cloud;
        case PayloadKind::Measurement: return Role::Oracle;
        case PayloadKind::VerdictRecord: return Role::Contract;
    }
    return Role::User;
}

/// The file a payload is about, when it is about one. Measurements name a
/// metric instead; verdict records expose their subject only if it is a file.
inline std::optional<std::string> payload_file_id(const Payload& p) {
    return std::visit(
        [](const auto& v) -> std::optional<std::string> {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, VerdictRecord>) {
                if (v.verdict.subject_kind == SubjectKind::File) return v.verdict.subject;
                return std::nullopt;
            } else if constexpr (std::is_same_v<T, Measurement>) {
                return std::nullopt;
            } else {
                return v.file_id;
            }
        },
        p);
}

inline void encode_payload(Encoder& e, const Payload& p) {
    e.put_u64(static_cast<std::uint64_t>(p.index()));
    std::visit(
        [&e](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, UploadInit> || std::is_same_v<T, UploadAck> ||
                          std::is_same_v<T, DeleteReq> || std::is_same_v<T, DeleteAck> ||
                          std::is_same_v<T, ReadReq> || std::is_same_v<T, ReadMissing>) {
                e.put_var(v.file_id);
            } else if constexpr (std::is_same_v<T, UploadDone>) {
                e.put_var(v.file_id);
                e.put_hash(v.digest);
            } else if constexpr (std::is_same_v<T, DigestAck>) {
                e.put_var(v.file_id);
                e.put_bool(v.accept);
            } else if constexpr (std::is_same_v<T, ReadGrant>) {
                e.put_var(v.file_id);
                e.put_var(v.url);
                e.put_hash(v.digest);
            } else if constexpr (std::is_same_v<T, ContractTrigger>) {
                e.put_var(v.file_id);
                e.put_hash(v.read_req_tx_id);
            } else if constexpr (std::is_same_v<T, VerdictRecord>) {
                encode_verdict(e, v.verdict);
            } else if constexpr (std::is_same_v<T, Measurement>) {
                e.put_var(v.metric);
                e.put_u64(v.value.num);
                e.put_u64(v.value.den);
                e.put_hash(v.op_tx_id);
            }
        },
        p);
}

inline Payload decode_payload(Decoder& d) {
    auto tag = d.get_u64();
    switch (tag) {
        case 0: return UploadInit{d.get_string()};
        case 1: return UploadAck{d.get_string()};
        case 2: {
            UploadDone v;
            v.file_id = d.get_string();
            v.digest = d.get_hash();
            return v;
        }
        case 3: {
            DigestAck v;
            v.file_id = d.get_string();
            v.accept = d.get_bool();
            return v;
        }
        case 4: return DeleteReq{d.get_string()};
        case 5: return DeleteAck{d.get_string()};
        case 6: return ReadReq{d.get_string()};
        case 7: {
            ReadGrant v;
            v.file_id = d.get_string();
            v.url = d.get_string();
            v.digest = d.get_hash();
            return v;
        }
        case 8: return ReadMissing{d.get_string()};
        case 9: {
            ContractTrigger v;
            v.file_id = d.get_string();
            v.read_req_tx_id = d.get_hash();
            return v;
        }
        case 10: return VerdictRecord{decode_verdict(d)};
        case 11: {
            Measurement v;
            v.metric = d.get_string();
            auto num = d.get_u64();
            auto den = d.get_u64();
            if (den == 0) throw MalformedInput(d.pos() - 8, "rational denominator zero");
            URational r(num, den);
            if (r.num != num || r.den != den) throw MalformedInput(d.pos() - 16, "non-canonical rational");
            v.value = r;
            v.op_tx_id = d.get_hash();
            return v;
        }
        default: throw MalformedInput(d.pos() - 8, "unknown payload tag");
    }
}

}  // namespace cfdr
