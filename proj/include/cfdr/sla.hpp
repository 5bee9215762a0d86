#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "cfdr/arbitrator.hpp"
#include "cfdr/ledger.hpp"
#include "cfdr/rational.hpp"

namespace cfdr {

/// Percentile response-time clause: within a window of `window` logical
/// ticks, at least `required_fraction` of measurements must fall strictly
/// below `threshold_t`.
struct SlaSpec {
    std::string metric = "response_time";
    URational threshold_t{1};
    URational required_fraction{99, 100};
    std::uint64_t window = 1;
    std::uint64_t base_penalty = 0;
    std::uint64_t penalty_rate = 0;

    void validate() const {
        if (metric.empty()) throw Error(ErrorCode::SchemaError, "sla metric must be non-empty");
        if (threshold_t.is_zero()) throw Error(ErrorCode::SchemaError, "sla threshold_t must be positive");
        if (required_fraction.is_zero() || URational(1) < required_fraction)
            throw Error(ErrorCode::SchemaError, "sla required_fraction must be in (0, 1]");
        if (window == 0) throw Error(ErrorCode::SchemaError, "sla window must be at least 1");
    }
};

inline std::uint64_t compensation_for(Violation v, const SlaSpec& sla) {
    return compensation_for(v, sla.base_penalty);
}

/// Shortfall penalty: base plus rate times the percentage-point gap, rounded
/// up to whole points.
inline std::uint64_t breach_compensation(const SlaSpec& sla, const URational& achieved) {
    URational shortfall = sla.required_fraction.minus(achieved);
    return sla.base_penalty + sla.penalty_rate * shortfall.scaled_ceil(100);
}

/// Oracle feed: one measurement about one already-sealed operation.
inline Hash32 post_measurement(Ledger& ledger, const Keypair& oracle_keys, const Pseudonym& recipient,
                               const std::string& metric, const Hash32& op_tx_id, const URational& value,
                               std::uint64_t logical_time, std::uint64_t nonce) {
    if (!ledger.find_tx(op_tx_id))
        throw Error(ErrorCode::UnknownOperationTx, "measured operation " + to_hex(op_tx_id) + " is not on chain");
    TxDraft draft{logical_time, oracle_keys.id(), recipient, Measurement{metric, value, op_tx_id}, nonce};
    return ledger.submit(sign_single(draft, oracle_keys));
}

/// The sealed measurements for one metric inside one window, chain order.
struct MeasurementBatch {
    std::uint64_t window_start = 0;
    std::uint64_t window_end = 0;  // exclusive
    struct Entry {
        Hash32 measurement_tx_id;
        Hash32 op_tx_id;
        URational value;
    };
    std::vector<Entry> entries;
};

/// A measurement belongs to the window by its own transaction's logical time.
inline MeasurementBatch collect_measurements(const Ledger& ledger, const std::string& metric,
                                             std::uint64_t window_start, std::uint64_t window_end) {
    MeasurementBatch batch;
    batch.window_start = window_start;
    batch.window_end = window_end;
    if (window_end == window_start) return batch;
    QueryFilter f;
    f.kind = PayloadKind::Measurement;
    f.time_range = {window_start, window_end - 1};
    for (const auto& h : ledger.query(f)) {
        const auto& m = std::get<Measurement>(h.tx.payload);
        if (m.metric != metric) continue;
        batch.entries.push_back(MeasurementBatch::Entry{h.tx.tx_id, m.op_tx_id, m.value});
    }
    return batch;
}

struct WindowReport {
    std::uint64_t window_start = 0;
    std::uint64_t window_end = 0;  // exclusive
    std::uint64_t total = 0;
    std::uint64_t below = 0;
    URational achieved{1};  // vacuously 1 when total == 0
    bool compliant = true;
    Verdict verdict;  // NoViolation when compliant
};

/// Evaluates one window [start, start+window). "Below" is strict: a value
/// exactly at the threshold does not count. An empty window is vacuously
/// compliant. `now_hint` lets a live scheduler stand in for sealed time when
/// deciding whether the window has elapsed.
inline WindowReport evaluate_window(const Ledger& ledger, const SlaSpec& sla, std::uint64_t window_start,
                                    std::optional<std::uint64_t> now_hint = std::nullopt) {
    sla.validate();
    WindowReport rep;
    rep.window_start = window_start;
    rep.window_end = window_start + sla.window;

    std::uint64_t now = ledger.last_sealed_time();
    if (now_hint && *now_hint > now) now = *now_hint;
    if (now < rep.window_end)
        throw Error(ErrorCode::WindowNotElapsed, "window ends at " + std::to_string(rep.window_end) +
                                                     " but time is " + std::to_string(now));

    MeasurementBatch batch = collect_measurements(ledger, sla.metric, window_start, rep.window_end);
    std::optional<Pseudonym> responsible;
    std::vector<Hash32> failing;
    for (const auto& e : batch.entries) {
        ++rep.total;
        if (e.value < sla.threshold_t) {
            ++rep.below;
        } else {
            failing.push_back(e.measurement_tx_id);
        }
        if (!responsible) {
            // the party answerable for the measured operation
            if (auto op = ledger.find_tx(e.op_tx_id)) responsible = op->tx.recipient;
        }
    }

    if (rep.total > 0) rep.achieved = URational(rep.below, rep.total);
    rep.compliant = rep.total == 0 || sla.required_fraction <= rep.achieved;

    rep.verdict.subject_kind = SubjectKind::Metric;
    rep.verdict.subject = sla.metric;
    if (rep.compliant) {
        rep.verdict.violation = Violation::NoViolation;
    } else {
        rep.verdict.violation = Violation::SlaPercentileBreach;
        rep.verdict.responsible = responsible;
        rep.verdict.compensation = breach_compensation(sla, rep.achieved);
        rep.verdict.evidence = std::move(failing);
    }
    return rep;
}

}  // namespace cfdr
