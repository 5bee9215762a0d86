#include "catch_amalgamated.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cfdr/cfdr.hpp"

namespace fs = std::filesystem;
using namespace cfdr;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

const fs::path& work_dir() {
    static fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / ("cfdr-cli-test-" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& data) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    f << data;
}

CliResult cli(const std::string& args) {
    CliResult r;
    fs::path out = work_dir() / "stdout.txt";
    fs::path err = work_dir() / "stderr.txt";
    std::string cmd = std::string(CFDR_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
    int rc = std::system(cmd.c_str());
    r.code = WEXITSTATUS(rc);
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

const std::string kHonestScenario = R"({
  "seed": 11,
  "parties": [
    {"role": "user", "label": "alice"},
    {"role": "cloud", "label": "nimbus"},
    {"role": "contract", "label": "arbiter"}
  ],
  "steps": [
    {"op": "upload", "user": "alice", "file_id": "F", "size": 48},
    {"op": "read", "user": "alice", "file_id": "F"}
  ]
})";

const std::string kDropScenario = R"({
  "seed": 11,
  "parties": [
    {"role": "user", "label": "alice"},
    {"role": "cloud", "label": "nimbus"},
    {"role": "contract", "label": "arbiter"}
  ],
  "behaviors": [{"mode": "drop_after_upload", "file_id": "F"}],
  "steps": [
    {"op": "upload", "user": "alice", "file_id": "F", "size": 48},
    {"op": "read", "user": "alice", "file_id": "F"}
  ]
})";

/// Runs a scenario through the CLI and returns the ledger path.
fs::path run_to_ledger(const std::string& scenario_text, const std::string& tag) {
    fs::path scen = work_dir() / (tag + ".json");
    fs::path ledger = work_dir() / (tag + ".ledger");
    fs::path trace = work_dir() / (tag + ".trace.json");
    spit(scen, scenario_text);
    auto r = cli("run " + q(scen) + " --ledger-out " + q(ledger) + " --trace-out " + q(trace));
    REQUIRE(r.code == 0);
    REQUIRE(fs::exists(ledger));
    REQUIRE(fs::exists(trace));
    return ledger;
}

}  // namespace

TEST_CASE("run writes the ledger and trace and exits zero") {
    fs::path ledger = run_to_ledger(kHonestScenario, "honest");
    auto v = cli("verify " + q(ledger));
    CHECK(v.code == 0);
    CHECK(v.out.find("OK") == 0);
}

TEST_CASE("run on a missing scenario file exits two") {
    auto r = cli("run " + q(work_dir() / "does-not-exist.json"));
    CHECK(r.code == 2);
    CHECK_FALSE(r.err.empty());
}

TEST_CASE("run on an invalid scenario exits two with a diagnostic") {
    fs::path scen = work_dir() / "bad.json";
    spit(scen, R"({"seed":1,"parties":[],"steps":[]})");
    auto r = cli("run " + q(scen));
    CHECK(r.code == 2);
    CHECK(r.err.find("SchemaError") != std::string::npos);
}

TEST_CASE("a seed override changes the ledger exactly when data is generated") {
    fs::path scen = work_dir() / "seeded.json";
    spit(scen, kHonestScenario);
    fs::path l1 = work_dir() / "seeded1.ledger";
    fs::path l2 = work_dir() / "seeded2.ledger";
    fs::path tr = work_dir() / "seeded.trace.json";
    REQUIRE(cli("run " + q(scen) + " --ledger-out " + q(l1) + " --trace-out " + q(tr)).code == 0);
    REQUIRE(cli("run " + q(scen) + " --ledger-out " + q(l2) + " --trace-out " + q(tr) + " --seed 999").code == 0);
    CHECK(slurp(l1) != slurp(l2));

    std::string inline_scen = R"({
      "seed": 11,
      "parties": [
        {"role": "user", "label": "alice"},
        {"role": "cloud", "label": "nimbus"},
        {"role": "contract", "label": "arbiter"}
      ],
      "steps": [{"op": "upload", "user": "alice", "file_id": "F", "data": "pinned contents"}]
    })";
    fs::path scen2 = work_dir() / "inline.json";
    spit(scen2, inline_scen);
    fs::path l3 = work_dir() / "inline1.ledger";
    fs::path l4 = work_dir() / "inline2.ledger";
    REQUIRE(cli("run " + q(scen2) + " --ledger-out " + q(l3) + " --trace-out " + q(tr)).code == 0);
    REQUIRE(cli("run " + q(scen2) + " --ledger-out " + q(l4) + " --trace-out " + q(tr) + " --seed 999").code == 0);
    CHECK(slurp(l3) == slurp(l4));
}

TEST_CASE("tampering flips the verify exit code") {
    fs::path ledger = run_to_ledger(kHonestScenario, "tamperme");
    fs::path mutated = work_dir() / "tampered.ledger";
    auto t = cli("tamper " + q(ledger) + " --block 1 --tx 0 --offset 0 --byte 255 --out " + q(mutated));
    REQUIRE(t.code == 0);

    auto v = cli("verify " + q(mutated));
    CHECK(v.code == 1);
    CHECK(v.out.find("INCONSISTENT") == 0);
    CHECK(v.out.find("block 1") != std::string::npos);

    // the input ledger was not modified
    CHECK(cli("verify " + q(ledger)).code == 0);
}

TEST_CASE("tamper rejects out-of-range coordinates") {
    fs::path ledger = run_to_ledger(kHonestScenario, "tamper-oor");
    auto r = cli("tamper " + q(ledger) + " --block 99 --tx 0 --offset 0 --byte 1 --out " +
                 q(work_dir() / "x.ledger"));
    CHECK(r.code == 2);
}

TEST_CASE("verify on a truncated file exits two") {
    fs::path ledger = run_to_ledger(kHonestScenario, "trunc");
    auto bytes = slurp(ledger);
    fs::path cut = work_dir() / "cut.ledger";
    spit(cut, bytes.substr(0, bytes.size() / 2));
    auto r = cli("verify " + q(cut));
    CHECK(r.code == 2);
    CHECK(r.err.find("MalformedInput") != std::string::npos);
}

TEST_CASE("adjudicating a drop ledger reports data loss and exits one") {
    fs::path ledger = run_to_ledger(kDropScenario, "drop");
    auto r = cli("adjudicate " + q(ledger) + " --file-id F --kind missing");
    CHECK(r.code == 1);
    CHECK(r.out.find("violation=data_loss") == 0);

    // byte-identical to the in-process adjudication
    Ledger l = Ledger::load(ledger);
    auto verdict = adjudicate_missing(l, "F", latest_disputed_read(l, "F"), 100);
    CHECK(r.out == format_verdict(verdict) + "\n");
}

TEST_CASE("adjudicating a missing-read dispute that never happened exits two") {
    fs::path ledger = run_to_ledger(kHonestScenario, "no-dispute");
    auto r = cli("adjudicate " + q(ledger) + " --file-id F --kind missing");
    CHECK(r.code == 2);
    CHECK(r.err.find("MissingPrerequisiteTxs") != std::string::npos);
}

TEST_CASE("adjudication refuses a tampered ledger") {
    fs::path ledger = run_to_ledger(kDropScenario, "drop-tampered");
    fs::path mutated = work_dir() / "drop-mutated.ledger";
    REQUIRE(cli("tamper " + q(ledger) + " --block 1 --tx 0 --offset 40 --byte 9 --out " + q(mutated)).code == 0);
    auto r = cli("adjudicate " + q(mutated) + " --file-id F --kind missing");
    CHECK(r.code == 2);
    CHECK(r.err.find("refusing to adjudicate") != std::string::npos);
}

TEST_CASE("retention adjudication takes evidence from a file") {
    std::string retain = R"({
      "seed": 11,
      "parties": [
        {"role": "user", "label": "alice"},
        {"role": "cloud", "label": "nimbus"},
        {"role": "contract", "label": "arbiter"}
      ],
      "behaviors": [{"mode": "retain_after_delete", "file_id": "F"}],
      "steps": [
        {"op": "upload", "user": "alice", "file_id": "F", "size": 48},
        {"op": "delete", "user": "alice", "file_id": "F"}
      ]
    })";
    // run in-process to capture the retained ciphertext the auditor "found"
    auto res = run_scenario(parse_scenario(retain));
    REQUIRE(res.cloud_storage.count("F") == 1);
    fs::path ledger = work_dir() / "retain.ledger";
    res.ledger.save(ledger);
    fs::path evidence = work_dir() / "copy.bin";
    const Bytes& ct = res.cloud_storage.at("F").ciphertext;
    spit(evidence, std::string(ct.begin(), ct.end()));

    auto r = cli("adjudicate " + q(ledger) + " --file-id F --kind retention --evidence " + q(evidence));
    CHECK(r.code == 1);
    CHECK(r.out.find("violation=unauthorized_retention") == 0);

    SECTION("non-matching evidence clears the cloud") {
        fs::path junk = work_dir() / "junk.bin";
        spit(junk, "unrelated bytes");
        auto ok = cli("adjudicate " + q(ledger) + " --file-id F --kind retention --evidence " + q(junk));
        CHECK(ok.code == 0);
        CHECK(ok.out.find("violation=no_violation") == 0);
    }
    SECTION("retention without evidence is a usage error") {
        CHECK(cli("adjudicate " + q(ledger) + " --file-id F --kind retention").code == 2);
    }
}

TEST_CASE("sla-eval reports compliance and breach with matching exit codes") {
    std::string measured = R"({
      "seed": 3,
      "parties": [
        {"role": "user", "label": "alice"},
        {"role": "cloud", "label": "nimbus"},
        {"role": "oracle", "label": "probe"},
        {"role": "contract", "label": "arbiter"}
      ],
      "sla": {"metric": "response_time", "threshold": 250, "required_fraction": "99/100",
              "window": 64, "base_penalty": 100, "penalty_rate": 10},
      "steps": [
        {"op": "upload", "user": "alice", "file_id": "F", "size": 16},
        {"op": "read", "user": "alice", "file_id": "F"},
        {"op": "measure", "metric": "response_time", "value": 400, "ref_step": 1},
        {"op": "evaluate_sla", "window_start": 0}
      ]
    })";
    fs::path ledger = run_to_ledger(measured, "sla-breach");
    fs::path spec = work_dir() / "sla.json";
    spit(spec, R"({"metric": "response_time", "threshold": 250, "required_fraction": "99/100",
                   "window": 64, "base_penalty": 100, "penalty_rate": 10})");

    auto breach = cli("sla-eval " + q(ledger) + " --sla " + q(spec) + " --window 0");
    CHECK(breach.code == 1);
    CHECK(breach.out.find("BREACH") != std::string::npos);
    CHECK(breach.out.find("compensation=1090") != std::string::npos);

    SECTION("a later, empty window is vacuously compliant") {
        fs::path spec2 = work_dir() / "sla2.json";
        spit(spec2, R"({"metric": "response_time", "threshold": 250, "required_fraction": "99/100",
                        "window": 16, "base_penalty": 100, "penalty_rate": 10})");
        auto ok = cli("sla-eval " + q(ledger) + " --sla " + q(spec2) + " --window 0");
        CHECK(ok.code == 0);
        CHECK(ok.out.find("COMPLIANT") != std::string::npos);
    }
    SECTION("malformed spec exits two") {
        fs::path bad = work_dir() / "bad-sla.json";
        spit(bad, R"({"metric": "m"})");
        CHECK(cli("sla-eval " + q(ledger) + " --sla " + q(bad) + " --window 0").code == 2);
    }
    SECTION("a window that has not elapsed exits two") {
        fs::path spec3 = work_dir() / "sla3.json";
        spit(spec3, R"({"metric": "response_time", "threshold": 250, "required_fraction": "99/100",
                        "window": 100000, "base_penalty": 100, "penalty_rate": 10})");
        auto r = cli("sla-eval " + q(ledger) + " --sla " + q(spec3) + " --window 0");
        CHECK(r.code == 2);
        CHECK(r.err.find("WindowNotElapsed") != std::string::npos);
    }
}

TEST_CASE("a constructed 98.5 percent window breaches through the CLI") {
    // 197 of 200 responses below the threshold: achieved 0.985 under a 0.99
    // clause, shortfall rounds up to one percentage point
    Keypair user = Keypair::from_label("alice");
    Keypair cloud = Keypair::from_label("nimbus");
    Keypair oracle = Keypair::from_label("probe");
    Keypair contract = Keypair::from_label("arbiter");
    Ledger l;
    l.register_party(user.public_key());
    l.register_party(cloud.public_key());
    l.register_party(oracle.public_key());
    l.register_party(contract.public_key());
    l.set_max_block_txs(64);
    l.seal_pending(0);
    Hash32 op = l.submit(sign_single(TxDraft{1, user.id(), cloud.id(), ReadReq{"F"}, 1}, user));
    l.seal_pending(1);
    for (std::uint64_t i = 0; i < 200; ++i) {
        std::uint64_t t = 2 + i;
        post_measurement(l, oracle, contract.id(), "response_time", op, URational(i < 197 ? 100 : 300), t, t);
    }
    l.seal_pending(201);
    l.submit(sign_single(TxDraft{500, user.id(), cloud.id(), ReadReq{"F"}, 500}, user));
    l.seal_pending(500);

    fs::path ledger = work_dir() / "sla985.ledger";
    l.save(ledger);
    fs::path spec = work_dir() / "sla985.json";
    spit(spec, R"({"metric": "response_time", "threshold": 250, "required_fraction": "99/100",
                   "window": 500, "base_penalty": 100, "penalty_rate": 10})");
    auto r = cli("sla-eval " + q(ledger) + " --sla " + q(spec) + " --window 0");
    CHECK(r.code == 1);
    CHECK(r.out.find("achieved=197/200") != std::string::npos);
    CHECK(r.out.find("compensation=110") != std::string::npos);
}

TEST_CASE("report lists the chain and is stable across invocations") {
    std::string upload_only = R"({
      "seed": 11,
      "parties": [
        {"role": "user", "label": "alice"},
        {"role": "cloud", "label": "nimbus"},
        {"role": "contract", "label": "arbiter"}
      ],
      "steps": [{"op": "upload", "user": "alice", "file_id": "F", "size": 48}]
    })";
    fs::path ledger = run_to_ledger(upload_only, "report");
    auto r1 = cli("report " + q(ledger));
    REQUIRE(r1.code == 0);
    // header plus the four upload transactions
    CHECK(std::count(r1.out.begin(), r1.out.end(), '\n') == 5);
    CHECK(r1.out.find("upload_init file=F") != std::string::npos);
    CHECK(r1.out.find("digest=") != std::string::npos);

    auto r2 = cli("report " + q(ledger));
    CHECK(r1.out == r2.out);
}

TEST_CASE("report on an empty-chain ledger prints the header only") {
    Ledger empty;
    fs::path p = work_dir() / "empty.ledger";
    empty.save(p);
    auto r = cli("report " + q(p));
    CHECK(r.code == 0);
    CHECK(r.out == "ledger: blocks=0 txs=0 hash=sha-256 sig=ed25519\n");
}

TEST_CASE("usage errors exit two") {
    CHECK(cli("no-such-command").code == 2);
    CHECK(cli("adjudicate").code == 2);
    CHECK(cli("").code == 2);
}
