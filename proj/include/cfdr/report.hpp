#pragma once

#include <string>

#include "cfdr/ledger.hpp"

namespace cfdr {

/// Human-readable chain listing; stable byte-for-byte across invocations.
inline std::string render_report(const Ledger& ledger) {
    std::string out = "ledger: blocks=" + std::to_string(ledger.chain().size()) +
                      " txs=" + std::to_string(ledger.sealed_tx_count()) + " hash=" +
                      std::string(kHashAlgorithm) + " sig=" + std::string(kSignatureAlgorithm) + "\n";
    for (const auto& b : ledger.chain()) {
        for (const auto& tx : b.txs) {
            out += "[b" + std::to_string(b.index) + " t" + std::to_string(tx.logical_time) + "] ";
            out += hex_prefix(tx.sender.id) + "->" + hex_prefix(tx.recipient.id) + " ";
            out += payload_kind_name(payload_kind(tx.payload));
            if (auto fid = payload_file_id(tx.payload)) out += " file=" + *fid;
            std::visit(
                [&out](const auto& p) {
                    using T = std::decay_t<decltype(p)>;
                    if constexpr (std::is_same_v<T, UploadDone> || std::is_same_v<T, ReadGrant>) {
                        out += " digest=" + hex_prefix(p.digest);
                    } else if constexpr (std::is_same_v<T, DigestAck>) {
                        out += p.accept ? " accept=true" : " accept=false";
                    } else if constexpr (std::is_same_v<T, Measurement>) {
                        out += " metric=" + p.metric + " value=" + p.value.str();
                    } else if constexpr (std::is_same_v<T, VerdictRecord>) {
                        out += " verdict=" + std::string(violation_name(p.verdict.violation));
                    }
                },
                tx.payload);
            if (tx.signatures.size() == 2) out += " double_signed";
            out += "\n";
        }
    }
    return out;
}

}  // namespace cfdr
