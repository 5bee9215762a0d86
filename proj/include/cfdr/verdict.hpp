#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cfdr/bytes.hpp"
#include "cfdr/crypto.hpp"

namespace cfdr {

enum class Violation : std::uint64_t {
    NoViolation = 0,
    DataLoss = 1,
    DataAlteration = 2,
    UnauthorizedRetention = 3,
    UserAtFault = 4,
    SlaPercentileBreach = 5,
};

inline const char* violation_name(Violation v) {
    switch (v) {
        case Violation::NoViolation: return "no_violation";
        case Violation::DataLoss: return "data_loss";
        case Violation::DataAlteration: return "data_alteration";
        case Violation::UnauthorizedRetention: return "unauthorized_retention";
        case Violation::UserAtFault: return "user_at_fault";
        case Violation::SlaPercentileBreach: return "sla_percentile_breach";
    }
    return "unknown";
}

enum class SubjectKind : std::uint64_t { File = 0, Metric = 1 };

/// Arbitration outcome. `subject` names the disputed file or the SLA metric.
struct Verdict {
    Violation violation = Violation::NoViolation;
    std::optional<Pseudonym> responsible;
    std::uint64_t compensation = 0;
    std::vector<Hash32> evidence;
    SubjectKind subject_kind = SubjectKind::File;
    std::string subject;

    bool operator==(const Verdict&) const = default;
};

inline void encode_verdict(Encoder& e, const Verdict& v) {
    e.put_u64(static_cast<std::uint64_t>(v.violation));
    e.put_bool(v.responsible.has_value());
    if (v.responsible) e.put_hash(v.responsible->id);
    e.put_u64(v.compensation);
    e.put_u32(static_cast<std::uint32_t>(v.evidence.size()));
    for (const auto& tx : v.evidence) e.put_hash(tx);
    e.put_u64(static_cast<std::uint64_t>(v.subject_kind));
    e.put_var(v.subject);
}

inline Verdict decode_verdict(Decoder& d) {
    Verdict v;
    auto raw = d.get_u64();
    if (raw > 5) throw MalformedInput(d.pos() - 8, "unknown violation tag");
    v.violation = static_cast<Violation>(raw);
    if (d.get_bool()) v.responsible = Pseudonym{d.get_hash()};
    v.compensation = d.get_u64();
    auto n = d.get_u32();
    v.evidence.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) v.evidence.push_back(d.get_hash());
    auto sk = d.get_u64();
    if (sk > 1) throw MalformedInput(d.pos() - 8, "unknown subject kind");
    v.subject_kind = static_cast<SubjectKind>(sk);
    v.subject = d.get_string();
    return v;
}

/// One-line structured record, used both by the CLI and by traces so a
/// third-party re-run can be compared byte for byte.
inline std::string format_verdict(const Verdict& v) {
    std::string out = "violation=";
    out += violation_name(v.violation);
    out += " responsible=";
    out += v.responsible ? to_hex(v.responsible->id) : "none";
    out += " compensation=" + std::to_string(v.compensation);
    out += " subject=";
    out += (v.subject_kind == SubjectKind::File) ? "file:" : "metric:";
    out += v.subject;
    out += " evidence=";
    for (std::size_t i = 0; i < v.evidence.size(); ++i) {
        if (i) out += ",";
        out += to_hex(v.evidence[i]);
    }
    if (v.evidence.empty()) out += "-";
    return out;
}

}  // namespace cfdr
