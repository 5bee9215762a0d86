#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "cfdr/arbitrator.hpp"
#include "cfdr/ledger.hpp"
#include "cfdr/protocol.hpp"
#include "cfdr/sla.hpp"

namespace cfdr {

/// Each scripted step owns a fixed band of logical time, so a fault that
/// shortens one interaction never shifts the timeline of unrelated files.
inline constexpr std::uint64_t kStepStride = 16;

struct PartySpec {
    Role role = Role::User;
    std::string label;
};

enum class StepOp { Upload, Delete, Read, Measure, EvaluateSla, Adjudicate, TamperTest };

inline const char* step_op_name(StepOp op) {
    switch (op) {
        case StepOp::Upload: return "upload";
        case StepOp::Delete: return "delete";
        case StepOp::Read: return "read";
        case StepOp::Measure: return "measure";
        case StepOp::EvaluateSla: return "evaluate_sla";
        case StepOp::Adjudicate: return "adjudicate";
        case StepOp::TamperTest: return "tamper_test";
    }
    return "unknown";
}

enum class AdjudicateKind { Missing, Altered, Retention };

inline const char* adjudicate_kind_name(AdjudicateKind k) {
    switch (k) {
        case AdjudicateKind::Missing: return "missing";
        case AdjudicateKind::Altered: return "altered";
        case AdjudicateKind::Retention: return "retention";
    }
    return "unknown";
}

struct StepSpec {
    StepOp op = StepOp::Upload;
    std::string user;           // upload/delete/read
    std::string file_id;        // upload/delete/read/adjudicate
    std::optional<std::uint64_t> size;  // upload: generated plaintext
    std::optional<std::string> data;    // upload: inline plaintext
    bool reject_digest = false;
    std::string metric;            // measure
    URational value;               // measure
    std::size_t ref_step = 0;      // measure
    std::uint64_t window_start = 0;  // evaluate_sla
    AdjudicateKind kind = AdjudicateKind::Missing;
    std::uint64_t tamper_block = 0;  // tamper_test
    std::size_t tamper_tx = 0;
    std::size_t tamper_offset = 0;
    std::uint8_t tamper_byte = 0;
};

struct ScenarioScript {
    std::uint64_t seed = 0;
    std::vector<PartySpec> parties;
    std::vector<CloudBehavior> behaviors;
    std::set<PayloadKind> double_signed;
    std::size_t max_block_txs = 16;
    std::optional<SlaSpec> sla;
    std::vector<StepSpec> steps;
};

// --- strict JSON parsing ---------------------------------------------------

namespace scenario_detail {

using json = nlohmann::json;

inline void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                                const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) ok = true;
        if (!ok) throw Error(ErrorCode::SchemaError, "unknown key '" + it.key() + "' in " + where);
    }
}

inline std::uint64_t get_uint(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) throw Error(ErrorCode::SchemaError, where + " is missing '" + key + "'");
    const auto& v = obj.at(key);
    if (!v.is_number_unsigned()) throw Error(ErrorCode::SchemaError, where + "." + key + " must be an unsigned integer");
    return v.get<std::uint64_t>();
}

inline std::string get_string(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) throw Error(ErrorCode::SchemaError, where + " is missing '" + key + "'");
    const auto& v = obj.at(key);
    if (!v.is_string()) throw Error(ErrorCode::SchemaError, where + "." + key + " must be a string");
    return v.get<std::string>();
}

inline URational get_rational(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) throw Error(ErrorCode::SchemaError, where + " is missing '" + key + "'");
    const auto& v = obj.at(key);
    if (v.is_number_unsigned()) return URational(v.get<std::uint64_t>());
    if (v.is_string()) return URational::parse(v.get<std::string>());
    throw Error(ErrorCode::SchemaError, where + "." + key + " must be an unsigned integer or \"num/den\" string");
}

}  // namespace scenario_detail

inline SlaSpec sla_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error(ErrorCode::SchemaError, "sla spec must be an object");
    scenario_detail::reject_unknown_keys(
        j, {"metric", "threshold", "required_fraction", "window", "base_penalty", "penalty_rate"}, "sla");
    SlaSpec spec;
    spec.metric = scenario_detail::get_string(j, "metric", "sla");
    spec.threshold_t = scenario_detail::get_rational(j, "threshold", "sla");
    spec.required_fraction = scenario_detail::get_rational(j, "required_fraction", "sla");
    spec.window = scenario_detail::get_uint(j, "window", "sla");
    spec.base_penalty = scenario_detail::get_uint(j, "base_penalty", "sla");
    spec.penalty_rate = scenario_detail::get_uint(j, "penalty_rate", "sla");
    spec.validate();
    return spec;
}

/// Parses a standalone SLA spec file (the sla-eval input format).
inline SlaSpec parse_sla_spec(const std::string& text) {
    try {
        return sla_from_json(nlohmann::json::parse(text));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::SchemaError, std::string("sla spec is not valid JSON: ") + e.what());
    }
}

inline ScenarioScript parse_scenario(const std::string& text) {
    using scenario_detail::get_rational;
    using scenario_detail::get_string;
    using scenario_detail::get_uint;
    using scenario_detail::reject_unknown_keys;
    using json = nlohmann::json;

    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::SchemaError, std::string("scenario is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw Error(ErrorCode::SchemaError, "scenario root must be an object");
    reject_unknown_keys(root, {"seed", "parties", "behaviors", "double_signed", "max_block_txs", "sla", "steps"},
                        "scenario");

    ScenarioScript s;
    s.seed = get_uint(root, "seed", "scenario");

    if (!root.contains("parties") || !root.at("parties").is_array())
        throw Error(ErrorCode::SchemaError, "scenario.parties must be an array");
    std::set<std::string> labels;
    std::size_t clouds = 0, contracts = 0;
    for (const auto& p : root.at("parties")) {
        if (!p.is_object()) throw Error(ErrorCode::SchemaError, "party entries must be objects");
        reject_unknown_keys(p, {"role", "label"}, "party");
        PartySpec ps;
        auto role = get_string(p, "role", "party");
        if (role == "user") ps.role = Role::User;
        else if (role == "cloud") ps.role = Role::Cloud;
        else if (role == "oracle") ps.role = Role::Oracle;
        else if (role == "contract") ps.role = Role::Contract;
        else throw Error(ErrorCode::SchemaError, "unknown party role '" + role + "'");
        ps.label = get_string(p, "label", "party");
        if (ps.label.empty()) throw Error(ErrorCode::SchemaError, "party label must be non-empty");
        if (!labels.insert(ps.label).second)
            throw Error(ErrorCode::SchemaError, "duplicate party label '" + ps.label + "'");
        if (ps.role == Role::Cloud) ++clouds;
        if (ps.role == Role::Contract) ++contracts;
        s.parties.push_back(std::move(ps));
    }
    if (clouds != 1) throw Error(ErrorCode::SchemaError, "scenario needs exactly one cloud party");
    if (contracts != 1) throw Error(ErrorCode::SchemaError, "scenario needs exactly one contract party");

    auto find_party = [&s](const std::string& label) -> const PartySpec* {
        for (const auto& p : s.parties)
            if (p.label == label) return &p;
        return nullptr;
    };
    bool has_oracle = false;
    for (const auto& p : s.parties)
        if (p.role == Role::Oracle) has_oracle = true;

    if (root.contains("double_signed")) {
        if (!root.at("double_signed").is_array())
            throw Error(ErrorCode::SchemaError, "scenario.double_signed must be an array of payload kind names");
        for (const auto& k : root.at("double_signed")) {
            if (!k.is_string()) throw Error(ErrorCode::SchemaError, "double_signed entries must be strings");
            auto kind = payload_kind_from_name(k.get<std::string>());
            if (!kind) throw Error(ErrorCode::SchemaError, "unknown payload kind '" + k.get<std::string>() + "'");
            if (*kind == PayloadKind::Measurement || *kind == PayloadKind::VerdictRecord)
                throw Error(ErrorCode::SchemaError,
                            "oracle and contract records are single-signed; '" + k.get<std::string>() +
                                "' cannot be double-signed");
            s.double_signed.insert(*kind);
        }
    }

    if (root.contains("max_block_txs")) {
        s.max_block_txs = static_cast<std::size_t>(get_uint(root, "max_block_txs", "scenario"));
        if (s.max_block_txs == 0) throw Error(ErrorCode::SchemaError, "max_block_txs must be at least 1");
    }

    if (root.contains("sla")) s.sla = sla_from_json(root.at("sla"));

    if (!root.contains("steps") || !root.at("steps").is_array())
        throw Error(ErrorCode::SchemaError, "scenario.steps must be an array");
    std::set<std::string> seen_files;  // file ids introduced by earlier steps
    std::size_t index = 0;
    for (const auto& j : root.at("steps")) {
        std::string where = "steps[" + std::to_string(index) + "]";
        if (!j.is_object()) throw Error(ErrorCode::SchemaError, where + " must be an object");
        auto op = get_string(j, "op", where);
        StepSpec st;
        if (op == "upload" || op == "delete" || op == "read") {
            st.op = op == "upload" ? StepOp::Upload : (op == "delete" ? StepOp::Delete : StepOp::Read);
            if (op == "upload")
                reject_unknown_keys(j, {"op", "user", "file_id", "size", "data", "reject_digest"}, where);
            else
                reject_unknown_keys(j, {"op", "user", "file_id"}, where);
            st.user = get_string(j, "user", where);
            const PartySpec* p = find_party(st.user);
            if (!p) throw Error(ErrorCode::DanglingReference, where + " references undefined party '" + st.user + "'");
            if (p->role != Role::User)
                throw Error(ErrorCode::SchemaError, where + " party '" + st.user + "' is not a user");
            st.file_id = get_string(j, "file_id", where);
            if (st.file_id.empty()) throw Error(ErrorCode::SchemaError, where + ".file_id must be non-empty");
            if (st.op == StepOp::Upload) {
                bool has_size = j.contains("size"), has_data = j.contains("data");
                if (has_size == has_data)
                    throw Error(ErrorCode::SchemaError, where + " needs exactly one of 'size' or 'data'");
                if (has_size) st.size = get_uint(j, "size", where);
                if (has_data) st.data = get_string(j, "data", where);
                if (j.contains("reject_digest")) {
                    if (!j.at("reject_digest").is_boolean())
                        throw Error(ErrorCode::SchemaError, where + ".reject_digest must be a boolean");
                    st.reject_digest = j.at("reject_digest").get<bool>();
                }
            }
            seen_files.insert(st.file_id);
        } else if (op == "measure") {
            st.op = StepOp::Measure;
            reject_unknown_keys(j, {"op", "metric", "value", "ref_step"}, where);
            if (!has_oracle) throw Error(ErrorCode::SchemaError, where + " requires an oracle party");
            st.metric = get_string(j, "metric", where);
            st.value = get_rational(j, "value", where);
            st.ref_step = static_cast<std::size_t>(get_uint(j, "ref_step", where));
            if (st.ref_step >= index)
                throw Error(ErrorCode::DanglingReference, where + ".ref_step must point to an earlier step");
        } else if (op == "evaluate_sla") {
            st.op = StepOp::EvaluateSla;
            reject_unknown_keys(j, {"op", "window_start"}, where);
            if (!s.sla) throw Error(ErrorCode::SchemaError, where + " requires a scenario-level sla");
            st.window_start = get_uint(j, "window_start", where);
        } else if (op == "adjudicate") {
            st.op = StepOp::Adjudicate;
            reject_unknown_keys(j, {"op", "kind", "file_id"}, where);
            auto kind = get_string(j, "kind", where);
            if (kind == "missing") st.kind = AdjudicateKind::Missing;
            else if (kind == "altered") st.kind = AdjudicateKind::Altered;
            else if (kind == "retention") st.kind = AdjudicateKind::Retention;
            else throw Error(ErrorCode::SchemaError, where + " has unknown adjudication kind '" + kind + "'");
            st.file_id = get_string(j, "file_id", where);
            if (!seen_files.count(st.file_id))
                throw Error(ErrorCode::DanglingReference,
                            where + " adjudicates file '" + st.file_id + "' that no earlier step mentions");
        } else if (op == "tamper_test") {
            st.op = StepOp::TamperTest;
            reject_unknown_keys(j, {"op", "block", "tx", "offset", "byte"}, where);
            st.tamper_block = get_uint(j, "block", where);
            st.tamper_tx = static_cast<std::size_t>(get_uint(j, "tx", where));
            st.tamper_offset = static_cast<std::size_t>(get_uint(j, "offset", where));
            auto b = get_uint(j, "byte", where);
            if (b > 0xFF) throw Error(ErrorCode::SchemaError, where + ".byte must fit in one byte");
            st.tamper_byte = static_cast<std::uint8_t>(b);
        } else {
            throw Error(ErrorCode::SchemaError, where + " has unknown op '" + op + "'");
        }
        s.steps.push_back(std::move(st));
        ++index;
    }

    // behaviors may only target files some step actually touches
    if (root.contains("behaviors")) {
        if (!root.at("behaviors").is_array())
            throw Error(ErrorCode::SchemaError, "scenario.behaviors must be an array");
        std::set<std::string> behavior_files;
        for (const auto& j : root.at("behaviors")) {
            if (!j.is_object()) throw Error(ErrorCode::SchemaError, "behavior entries must be objects");
            reject_unknown_keys(j, {"mode", "file_id", "offset", "xor"}, "behavior");
            CloudBehavior b;
            auto mode = get_string(j, "mode", "behavior");
            if (mode == "honest") b.mode = BehaviorMode::Honest;
            else if (mode == "drop_after_upload") b.mode = BehaviorMode::DropAfterUpload;
            else if (mode == "alter_after_upload") b.mode = BehaviorMode::AlterAfterUpload;
            else if (mode == "retain_after_delete") b.mode = BehaviorMode::RetainAfterDelete;
            else if (mode == "refuse_upload_ack") b.mode = BehaviorMode::RefuseUploadAck;
            else throw Error(ErrorCode::SchemaError, "unknown behavior mode '" + mode + "'");
            b.file_id = get_string(j, "file_id", "behavior");
            if (j.contains("offset")) {
                if (b.mode != BehaviorMode::AlterAfterUpload)
                    throw Error(ErrorCode::SchemaError, "behavior.offset only applies to alter_after_upload");
                b.alter_offset = get_uint(j, "offset", "behavior");
            }
            if (j.contains("xor")) {
                if (b.mode != BehaviorMode::AlterAfterUpload)
                    throw Error(ErrorCode::SchemaError, "behavior.xor only applies to alter_after_upload");
                auto x = get_uint(j, "xor", "behavior");
                if (x == 0 || x > 0xFF)
                    throw Error(ErrorCode::SchemaError, "behavior.xor must be 1..255");
                b.alter_xor = static_cast<std::uint8_t>(x);
            }
            if (!seen_files.count(b.file_id))
                throw Error(ErrorCode::DanglingReference,
                            "behavior targets file '" + b.file_id + "' that no step mentions");
            if (!behavior_files.insert(b.file_id).second)
                throw Error(ErrorCode::SchemaError, "file '" + b.file_id + "' has more than one behavior");
            s.behaviors.push_back(std::move(b));
        }
    }

    return s;
}

// --- execution ---------------------------------------------------------------

/// How the acceptance harness (or any third party) can reproduce a recorded
/// adjudication from the ledger file alone.
struct AdjudicationNote {
    std::string kind;
    std::string file_id;
    std::uint64_t penalty = 100;
    std::optional<std::string> evidence_hex;  // retention: the inspected copy
};

struct StepRecord {
    std::size_t index = 0;
    std::string op;
    std::string detail;
    std::vector<Hash32> tx_ids;
    std::vector<std::string> offchain;
    std::string outcome;
    std::optional<std::string> verdict_line;
    std::optional<AdjudicationNote> adjudication;
    std::optional<std::string> error;
};

struct RunTrace {
    std::uint64_t seed = 0;
    std::vector<StepRecord> steps;
    std::uint64_t final_blocks = 0;
    std::uint64_t final_txs = 0;
    Hash32 tip{};
};

struct RunResult {
    RunTrace trace;
    Ledger ledger;
    std::map<std::string, StoredObject> cloud_storage;  // post-run snapshot
};

inline nlohmann::ordered_json trace_to_json(const RunTrace& t) {
    nlohmann::ordered_json out;
    out["seed"] = t.seed;
    out["steps"] = nlohmann::ordered_json::array();
    for (const auto& s : t.steps) {
        nlohmann::ordered_json js;
        js["index"] = s.index;
        js["op"] = s.op;
        if (!s.detail.empty()) js["detail"] = s.detail;
        js["txs"] = nlohmann::ordered_json::array();
        for (const auto& id : s.tx_ids) js["txs"].push_back(to_hex(id));
        if (!s.offchain.empty()) js["offchain"] = s.offchain;
        if (!s.outcome.empty()) js["outcome"] = s.outcome;
        if (s.verdict_line) js["verdict"] = *s.verdict_line;
        if (s.adjudication) {
            nlohmann::ordered_json ja;
            ja["kind"] = s.adjudication->kind;
            ja["file_id"] = s.adjudication->file_id;
            ja["penalty"] = s.adjudication->penalty;
            if (s.adjudication->evidence_hex) ja["evidence_hex"] = *s.adjudication->evidence_hex;
            js["adjudication"] = ja;
        }
        if (s.error) js["error"] = *s.error;
        out["steps"].push_back(js);
    }
    out["ledger"]["blocks"] = t.final_blocks;
    out["ledger"]["txs"] = t.final_txs;
    out["ledger"]["tip"] = to_hex(t.tip);
    return out;
}

inline std::string trace_to_string(const RunTrace& t) { return trace_to_json(t).dump(2) + "\n"; }

/// Latest ReadReq for a file that a ReadMissing answers; what a third party
/// would pick when asked to adjudicate a missing read from the chain alone.
inline Hash32 latest_disputed_read(const Ledger& ledger, const std::string& file_id) {
    QueryFilter f;
    f.file_id = file_id;
    auto history = ledger.query(f);
    std::optional<Hash32> req;
    std::optional<Hash32> candidate;
    for (const auto& h : history) {
        auto kind = payload_kind(h.tx.payload);
        if (kind == PayloadKind::ReadReq) candidate = h.tx.tx_id;
        else if (kind == PayloadKind::ReadMissing && candidate) {
            req = candidate;
            candidate.reset();
        }
    }
    if (!req) throw Error(ErrorCode::MissingPrerequisiteTxs, "no disputed read for file '" + file_id + "'");
    return *req;
}

inline Hash32 latest_grant(const Ledger& ledger, const std::string& file_id) {
    QueryFilter f;
    f.file_id = file_id;
    f.kind = PayloadKind::ReadGrant;
    auto hits = ledger.query(f);
    if (hits.empty()) throw Error(ErrorCode::MissingPrerequisiteTxs, "no read grant for file '" + file_id + "'");
    return hits.back().tx.tx_id;
}

/// Deterministic, single-threaded execution of a parsed script. Step errors
/// are recorded in the trace, never thrown.
inline RunResult run_scenario(const ScenarioScript& script) {
    RunResult result;
    Ledger& ledger = result.ledger;
    ledger.set_max_block_txs(script.max_block_txs);
    ledger.set_double_signed(script.double_signed);

    std::map<std::string, UserActor> users;
    std::optional<CloudActor> cloud;
    std::optional<ContractActor> contract;
    struct OracleState {
        Keypair keys;
    };
    std::optional<OracleState> oracle;

    for (const auto& p : script.parties) {
        Keypair kp = Keypair::from_label(p.label);
        ledger.register_party(kp.public_key());
        switch (p.role) {
            case Role::User: users.emplace(p.label, UserActor(p.label, kp)); break;
            case Role::Cloud: cloud.emplace(p.label, kp); break;
            case Role::Oracle:
                if (!oracle) oracle = OracleState{kp};
                break;
            case Role::Contract: contract.emplace(p.label, kp); break;
        }
    }
    if (!cloud || !contract)
        throw Error(ErrorCode::SchemaError, "scenario needs exactly one cloud and one contract party");
    std::uint64_t penalty = script.sla ? script.sla->base_penalty : 100;
    contract->set_base_penalty(penalty);
    for (const auto& b : script.behaviors) cloud->add_behavior(b);

    LogicalClock clock;
    SplitMix64 rng(script.seed);
    ledger.seal_pending(0);  // genesis anchor

    RunTrace& trace = result.trace;
    trace.seed = script.seed;

    for (std::size_t i = 0; i < script.steps.size(); ++i) {
        const StepSpec& st = script.steps[i];
        clock.advance_to(static_cast<std::uint64_t>(i) * kStepStride);
        StepRecord rec;
        rec.index = i;
        rec.op = step_op_name(st.op);
        try {
            switch (st.op) {
                case StepOp::Upload: {
                    rec.detail = st.file_id;
                    UserActor& user = users.at(st.user);
                    Bytes plaintext = st.data ? to_bytes(*st.data) : rng.bytes(st.size.value_or(0));
                    if (st.reject_digest) user.set_reject_digest(st.file_id, true);
                    auto out = run_upload(user, *cloud, ledger, clock, st.file_id, plaintext);
                    if (st.reject_digest) user.set_reject_digest(st.file_id, false);
                    rec.tx_ids = out.tx_ids;
                    rec.offchain.push_back("transfer file=" + st.file_id +
                                           " bytes=" + std::to_string(plaintext.size()));
                    rec.outcome = out.status == UploadStatus::Accepted
                                      ? "accepted"
                                      : (out.status == UploadStatus::Rejected ? "rejected" : "refused");
                    break;
                }
                case StepOp::Delete: {
                    rec.detail = st.file_id;
                    UserActor& user = users.at(st.user);
                    auto out = run_delete(user, *cloud, ledger, clock, st.file_id);
                    rec.tx_ids = out.tx_ids;
                    rec.outcome = out.object_was_stored ? "deleted" : "no_object";
                    break;
                }
                case StepOp::Read: {
                    rec.detail = st.file_id;
                    UserActor& user = users.at(st.user);
                    auto out = run_read(user, *cloud, *contract, ledger, clock, st.file_id);
                    rec.tx_ids = out.tx_ids;
                    if (out.found) {
                        rec.offchain.push_back("fetch file=" + st.file_id +
                                               " match=" + (out.match ? std::string("true") : std::string("false")));
                        rec.outcome = out.match ? "found_match" : "found_mismatch";
                    } else {
                        rec.outcome = "missing";
                        rec.verdict_line = format_verdict(*out.verdict);
                        rec.adjudication = AdjudicationNote{"missing", st.file_id, penalty, std::nullopt};
                    }
                    break;
                }
                case StepOp::Measure: {
                    rec.detail = st.metric;
                    if (st.ref_step >= trace.steps.size() || trace.steps[st.ref_step].tx_ids.empty())
                        throw Error(ErrorCode::UnknownOperationTx,
                                    "referenced step produced no on-chain transaction");
                    Hash32 op_tx = trace.steps[st.ref_step].tx_ids.front();
                    auto t = clock.tick();
                    auto id = post_measurement(ledger, oracle->keys, contract->id(), st.metric, op_tx, st.value,
                                               t, /*nonce=*/t);
                    rec.tx_ids.push_back(id);
                    rec.outcome = "posted";
                    break;
                }
                case StepOp::EvaluateSla: {
                    clock.advance_to(st.window_start + script.sla->window);
                    auto rep = evaluate_window(ledger, *script.sla, st.window_start, clock.now());
                    rec.detail = script.sla->metric;
                    rec.outcome = (rep.compliant ? "compliant " : "breach ") + rep.achieved.str();
                    if (!rep.compliant) {
                        rec.verdict_line = format_verdict(rep.verdict);
                        rec.tx_ids.push_back(contract->record(ledger, rep.verdict, cloud->id(), clock.tick()));
                    }
                    break;
                }
                case StepOp::Adjudicate: {
                    rec.detail = st.file_id;
                    Verdict verdict;
                    AdjudicationNote note{adjudicate_kind_name(st.kind), st.file_id, penalty, std::nullopt};
                    if (st.kind == AdjudicateKind::Missing) {
                        auto req = latest_disputed_read(ledger, st.file_id);
                        verdict = adjudicate_missing(ledger, st.file_id, req, penalty);
                    } else if (st.kind == AdjudicateKind::Altered) {
                        auto grant = latest_grant(ledger, st.file_id);
                        verdict = adjudicate_altered(ledger, st.file_id, grant, penalty);
                    } else {
                        const StoredObject* obj = cloud->object(st.file_id);
                        OutOfBandCopy copy{st.file_id, obj ? obj->ciphertext : Bytes{}, "cloud storage inspection"};
                        note.evidence_hex = to_hex(copy.ciphertext);
                        verdict = adjudicate_retention(ledger, st.file_id, copy, penalty);
                    }
                    rec.verdict_line = format_verdict(verdict);
                    rec.adjudication = std::move(note);
                    rec.tx_ids.push_back(contract->record(ledger, verdict, cloud->id(), clock.tick()));
                    rec.outcome = violation_name(verdict.violation);
                    break;
                }
                case StepOp::TamperTest: {
                    Ledger copy = ledger.tamper(st.tamper_block, st.tamper_tx, st.tamper_offset, st.tamper_byte);
                    auto res = copy.verify();
                    rec.detail = "block " + std::to_string(st.tamper_block) + " tx " + std::to_string(st.tamper_tx);
                    rec.outcome = res ? std::string("detected ") + verify_reason_name(res->reason) +
                                            " at block " + std::to_string(res->block_index)
                                      : "undetected";
                    break;
                }
            }
        } catch (const Error& e) {
            rec.error = e.what();
        }
        if (!ledger.pending().empty()) ledger.seal_pending(clock.now());
        trace.steps.push_back(std::move(rec));
    }

    trace.final_blocks = ledger.chain().size();
    trace.final_txs = ledger.sealed_tx_count();
    trace.tip = ledger.chain().empty() ? Hash32{} : ledger.chain().back().block_hash;
    result.cloud_storage = cloud->storage();
    return result;
}

// --- fault matrix ---------------------------------------------------------

struct FaultCase {
    std::string name;
    ScenarioScript script;
    Violation expected;
};

/// Expands a base script (its seed, parties and first upload) into the five
/// canonical behavior variants with the verdict each one must produce.
inline std::vector<FaultCase> fault_matrix(const ScenarioScript& base) {
    const StepSpec* upload = nullptr;
    for (const auto& st : base.steps)
        if (st.op == StepOp::Upload) {
            upload = &st;
            break;
        }
    if (!upload) throw Error(ErrorCode::SchemaError, "fault matrix needs a base script with an upload step");

    auto skeleton = [&](BehaviorMode mode) {
        ScenarioScript s;
        s.seed = base.seed;
        s.parties = base.parties;
        s.max_block_txs = base.max_block_txs;
        s.double_signed = base.double_signed;
        if (mode != BehaviorMode::Honest)
            s.behaviors.push_back(CloudBehavior{mode, upload->file_id, 0, 0xFF});
        s.steps.push_back(*upload);
        return s;
    };
    auto step_read = [&] {
        StepSpec st;
        st.op = StepOp::Read;
        st.user = upload->user;
        st.file_id = upload->file_id;
        return st;
    };
    auto step_delete = [&] {
        StepSpec st;
        st.op = StepOp::Delete;
        st.user = upload->user;
        st.file_id = upload->file_id;
        return st;
    };
    auto step_adjudicate = [&](AdjudicateKind kind) {
        StepSpec st;
        st.op = StepOp::Adjudicate;
        st.kind = kind;
        st.file_id = upload->file_id;
        return st;
    };

    std::vector<FaultCase> out;
    {
        auto s = skeleton(BehaviorMode::Honest);
        s.steps.push_back(step_read());
        s.steps.push_back(step_adjudicate(AdjudicateKind::Altered));
        out.push_back(FaultCase{"honest", std::move(s), Violation::NoViolation});
    }
    {
        auto s = skeleton(BehaviorMode::DropAfterUpload);
        s.steps.push_back(step_read());
        out.push_back(FaultCase{"drop_after_upload", std::move(s), Violation::DataLoss});
    }
    {
        auto s = skeleton(BehaviorMode::AlterAfterUpload);
        s.steps.push_back(step_read());
        s.steps.push_back(step_adjudicate(AdjudicateKind::Altered));
        out.push_back(FaultCase{"alter_after_upload", std::move(s), Violation::DataAlteration});
    }
    {
        auto s = skeleton(BehaviorMode::RetainAfterDelete);
        s.steps.push_back(step_delete());
        s.steps.push_back(step_adjudicate(AdjudicateKind::Retention));
        out.push_back(FaultCase{"retain_after_delete", std::move(s), Violation::UnauthorizedRetention});
    }
    {
        auto s = skeleton(BehaviorMode::RefuseUploadAck);
        s.steps.push_back(step_read());
        out.push_back(FaultCase{"refuse_upload_ack", std::move(s), Violation::NoViolation});
    }
    return out;
}

/// The verdict a run is judged by: the last one any step produced.
inline std::optional<std::string> last_verdict_line(const RunTrace& trace) {
    std::optional<std::string> out;
    for (const auto& s : trace.steps)
        if (s.verdict_line) out = s.verdict_line;
    return out;
}

}  // namespace cfdr
