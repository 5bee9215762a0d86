// cfdr: run accountability scenarios, verify ledgers, adjudicate disputes,
// evaluate SLA windows, tamper with ledgers (demo), and print reports.
//
// Exit codes: 0 success / no violation; 1 verification or adjudication found
// a violation; 2 usage or input error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cfdr/cfdr.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kViolation = 1;
constexpr int kInputError = 2;

std::string read_file(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw cfdr::Error(cfdr::ErrorCode::IoError, "cannot open " + path.string());
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

void write_file(const fs::path& path, std::string_view data) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw cfdr::Error(cfdr::ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    f.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!f) throw cfdr::Error(cfdr::ErrorCode::IoError, "short write to " + path.string());
}

int cmd_run(const std::string& scenario_path, std::optional<std::string> ledger_out,
            std::optional<std::string> trace_out, std::optional<std::uint64_t> seed_override) {
    auto script = cfdr::parse_scenario(read_file(scenario_path));
    if (seed_override) script.seed = *seed_override;
    auto result = cfdr::run_scenario(script);

    std::string stem = fs::path(scenario_path).stem().string();
    fs::path ledger_path = ledger_out ? fs::path(*ledger_out) : fs::path(stem + ".ledger");
    fs::path trace_path = trace_out ? fs::path(*trace_out) : fs::path(stem + ".trace.json");
    result.ledger.save(ledger_path);
    write_file(trace_path, cfdr::trace_to_string(result.trace));

    std::cout << "ran " << result.trace.steps.size() << " steps: " << result.trace.final_blocks << " blocks, "
              << result.trace.final_txs << " transactions\n";
    std::cout << "ledger: " << ledger_path.string() << "\ntrace:  " << trace_path.string() << "\n";
    for (const auto& s : result.trace.steps) {
        if (s.verdict_line) std::cout << "step " << s.index << " " << *s.verdict_line << "\n";
        if (s.error) std::cout << "step " << s.index << " error " << *s.error << "\n";
    }
    return kOk;
}

int cmd_verify(const std::string& ledger_path) {
    auto ledger = cfdr::Ledger::load(ledger_path);
    auto res = ledger.verify();
    if (!res) {
        std::cout << "OK: " << ledger.chain().size() << " blocks, " << ledger.sealed_tx_count()
                  << " transactions verified\n";
        return kOk;
    }
    std::cout << "INCONSISTENT: block " << res->block_index << " " << cfdr::verify_reason_name(res->reason)
              << "\n";
    return kViolation;
}

int cmd_adjudicate(const std::string& ledger_path, const std::string& file_id, const std::string& kind,
                   std::optional<std::string> evidence_path, std::uint64_t penalty) {
    auto ledger = cfdr::Ledger::load(ledger_path);
    if (auto res = ledger.verify()) {
        std::cerr << "ledger fails verification (block " << res->block_index << " "
                  << cfdr::verify_reason_name(res->reason) << "); refusing to adjudicate\n";
        return kInputError;
    }
    cfdr::Verdict verdict;
    if (kind == "missing") {
        verdict = cfdr::adjudicate_missing(ledger, file_id, cfdr::latest_disputed_read(ledger, file_id), penalty);
    } else if (kind == "altered") {
        verdict = cfdr::adjudicate_altered(ledger, file_id, cfdr::latest_grant(ledger, file_id), penalty);
    } else if (kind == "retention") {
        if (!evidence_path)
            throw cfdr::Error(cfdr::ErrorCode::SchemaError, "retention adjudication requires --evidence");
        auto blob = read_file(*evidence_path);
        cfdr::OutOfBandCopy copy{file_id, cfdr::Bytes(blob.begin(), blob.end()), *evidence_path};
        verdict = cfdr::adjudicate_retention(ledger, file_id, copy, penalty);
    } else {
        throw cfdr::Error(cfdr::ErrorCode::SchemaError, "unknown adjudication kind '" + kind + "'");
    }
    std::cout << cfdr::format_verdict(verdict) << "\n";
    return verdict.violation == cfdr::Violation::NoViolation ? kOk : kViolation;
}

int cmd_sla_eval(const std::string& ledger_path, const std::string& sla_path, std::uint64_t window_start) {
    auto ledger = cfdr::Ledger::load(ledger_path);
    auto sla = cfdr::parse_sla_spec(read_file(sla_path));
    auto rep = cfdr::evaluate_window(ledger, sla, window_start);
    std::cout << "window [" << rep.window_start << "," << rep.window_end << ") measurements=" << rep.total
              << " below=" << rep.below << " achieved=" << rep.achieved.str()
              << " required=" << sla.required_fraction.str() << "\n";
    std::cout << (rep.compliant ? "COMPLIANT" : "BREACH") << " compensation=" << rep.verdict.compensation
              << "\n";
    if (!rep.compliant) {
        std::cout << cfdr::format_verdict(rep.verdict) << "\n";
        return kViolation;
    }
    return kOk;
}

int cmd_tamper(const std::string& ledger_path, std::uint64_t block, std::size_t tx, std::size_t offset,
               std::uint64_t byte_value, const std::string& out_path) {
    if (byte_value > 0xFF) throw cfdr::Error(cfdr::ErrorCode::SchemaError, "--byte must be 0..255");
    auto ledger = cfdr::Ledger::load(ledger_path);
    auto bytes = cfdr::tamper_ledger_bytes(ledger, block, tx, offset, static_cast<std::uint8_t>(byte_value));
    write_file(out_path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    std::cout << "wrote tampered ledger to " << out_path << " (block " << block << ", tx " << tx << ", offset "
              << offset << ")\n";
    return kOk;
}

int cmd_report(const std::string& ledger_path) {
    auto ledger = cfdr::Ledger::load(ledger_path);
    std::cout << cfdr::render_report(ledger);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cfdr - tamper-evident flight data recorder for cloud storage accountability"};
    app.require_subcommand(1);

    std::string scenario_path, ledger_path, file_id, kind, sla_path, out_path;
    std::optional<std::string> ledger_out, trace_out, evidence_path;
    std::optional<std::uint64_t> seed_override;
    std::uint64_t penalty = 100;
    std::uint64_t window_start = 0;
    std::uint64_t tb = 0, tbyte = 0;
    std::size_t ttx = 0, toff = 0;

    auto* run = app.add_subcommand("run", "execute a scenario script");
    run->add_option("scenario", scenario_path, "scenario JSON file")->required();
    run->add_option("--ledger-out", ledger_out, "ledger output path (default: <scenario>.ledger)");
    run->add_option("--trace-out", trace_out, "trace output path (default: <scenario>.trace.json)");
    run->add_option("--seed", seed_override, "override the script seed");

    auto* verify = app.add_subcommand("verify", "verify a ledger file");
    verify->add_option("ledger", ledger_path, "ledger file")->required();

    auto* adjudicate = app.add_subcommand("adjudicate", "adjudicate a dispute from a ledger file");
    adjudicate->add_option("ledger", ledger_path, "ledger file")->required();
    adjudicate->add_option("--file-id", file_id, "disputed file id")->required();
    adjudicate->add_option("--kind", kind, "missing|altered|retention")->required();
    adjudicate->add_option("--evidence", evidence_path, "out-of-band ciphertext copy (retention)");
    adjudicate->add_option("--penalty", penalty, "base penalty in currency units (default 100)");

    auto* sla_eval = app.add_subcommand("sla-eval", "evaluate a percentile SLA window");
    sla_eval->add_option("ledger", ledger_path, "ledger file")->required();
    sla_eval->add_option("--sla", sla_path, "SLA spec JSON file")->required();
    sla_eval->add_option("--window", window_start, "window start (logical time)")->required();

    auto* tamper = app.add_subcommand("tamper", "flip one byte of one transaction (demo tool)");
    tamper->add_option("ledger", ledger_path, "ledger file")->required();
    tamper->add_option("--block", tb, "block index")->required();
    tamper->add_option("--tx", ttx, "transaction index within the block")->required();
    tamper->add_option("--offset", toff, "byte offset within the transaction encoding")->required();
    tamper->add_option("--byte", tbyte, "replacement byte value 0..255")->required();
    tamper->add_option("--out", out_path, "output path for the mutated ledger")->required();

    auto* report = app.add_subcommand("report", "print a human-readable chain listing");
    report->add_option("ledger", ledger_path, "ledger file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kInputError;
    }

    try {
        if (run->parsed()) return cmd_run(scenario_path, ledger_out, trace_out, seed_override);
        if (verify->parsed()) return cmd_verify(ledger_path);
        if (adjudicate->parsed()) return cmd_adjudicate(ledger_path, file_id, kind, evidence_path, penalty);
        if (sla_eval->parsed()) return cmd_sla_eval(ledger_path, sla_path, window_start);
        if (tamper->parsed()) return cmd_tamper(ledger_path, tb, ttx, toff, tbyte, out_path);
        if (report->parsed()) return cmd_report(ledger_path);
    } catch (const cfdr::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInputError;
    }
    return kInputError;
}
