#include "catch_amalgamated.hpp"

#include "cfdr/arbitrator.hpp"
#include "cfdr/protocol.hpp"

using namespace cfdr;

namespace {

struct Sim {
    UserActor user{"alice", Keypair::from_label("alice")};
    CloudActor cloud{"nimbus", Keypair::from_label("nimbus")};
    ContractActor contract{"arbiter", Keypair::from_label("arbiter")};
    Ledger ledger;
    LogicalClock clock;

    Sim() {
        ledger.register_party(user.keys().public_key());
        ledger.register_party(cloud.keys().public_key());
        ledger.register_party(contract.keys().public_key());
        ledger.seal_pending(0);
    }
    void seal() {
        if (!ledger.pending().empty()) ledger.seal_pending(clock.now());
    }
};

void check_evidence_on_chain(const Ledger& ledger, const Verdict& v) {
    if (v.violation != Violation::NoViolation) CHECK_FALSE(v.evidence.empty());
    for (const auto& id : v.evidence) CHECK(ledger.find_tx(id).has_value());
}

}  // namespace

TEST_CASE("missing-read attribution follows the delete history") {
    SECTION("accepted upload, no delete: the cloud lost the data") {
        Sim s;
        s.cloud.add_behavior(CloudBehavior{BehaviorMode::DropAfterUpload, "F", 0, 0xFF});
        run_upload(s.user, s.cloud, s.ledger, s.clock, "F", to_bytes("x"));
        s.seal();
        auto rd = run_read(s.user, s.cloud, s.contract, s.ledger, s.clock, "F");
        s.seal();
        auto v = adjudicate_missing(s.ledger, "F", rd.tx_ids[0]);
        CHECK(v.violation == Violation::DataLoss);
        CHECK(v.responsible == s.cloud.id());
        CHECK(v.compensation == 100);
        check_evidence_on_chain(s.ledger, v);
    }
    SECTION("accepted upload then acknowledged delete: no violation") {
        Sim s;
        run_upload(s.user, s.cloud, s.ledger, s.clock, "F", to_bytes("x"));
        s.seal();
        run_delete(s.user, s.cloud, s.ledger, s.clock, "F");
        s.seal();
        auto rd = run_read(s.user, s.cloud, s.contract, s.ledger, s.clock, "F");
        s.seal();
        auto v = adjudicate_missing(s.ledger, "F", rd.tx_ids[0]);
        CHECK(v.violation == Violation::NoViolation);
        CHECK_FALSE(v.responsible.has_value());
        CHECK(v.compensation == 0);
        check_evidence_on_chain(s.ledger, v);
    }
    SECTION("no upload history at all: the user never uploaded") {
        Sim s;
        auto rd = run_read(s.user, s.cloud, s.contract, s.ledger, s.clock, "F");
        s.seal();
        auto v = adjudicate_missing(s.ledger, "F", rd.tx_ids[0]);
        CHECK(v.violation == Violation::UserAtFault);
        CHECK(v.responsible == s.user.id());
        CHECK(v.compensation == 0);
        check_evidence_on_chain(s.ledger, v);
    }
    SECTION("unanswered upload init: custody never began, no violation") {
        Sim s;
        s.cloud.add_behavior(CloudBehavior{BehaviorMode::RefuseUploadAck, "F", 0, 0xFF});
        run_upload(s.user, s.cloud, s.ledger, s.clock, "F", to_bytes("x"));
        s.seal();
        auto rd = run_read(s.user, s.cloud, s.contract, s.ledger, s.clock, "F");
        s.seal();
        auto v = adjudicate_missing(s.ledger, "F", rd.tx_ids[0]);
        CHECK(v.violation == Violation::NoViolation);
        CHECK_FALSE(v.responsible.has_value());
    }
}

TEST_CASE("missing-read adjudication needs the prerequisite transactions") {
    Sim s;
    run_upload(s.user, s.cloud, s.ledger, s.clock, "F", to_bytes("x"));
    s.seal();
    auto rd = run_read(s.user, s.cloud, s.contract, s.ledger, s.clock, "F");  // found, no missing
    s.seal();
    try {
        adjudicate_missing(s.ledger, "F", rd.tx_ids[0]);
        FAIL("expected MissingPrerequisiteTxs");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MissingPrerequisiteTxs);
    }
    CHECK_THROWS_AS(adjudicate_missing(s.ledger, "F", Hash32{}), Error);
}

TEST_CASE("altered-read attribution compares grant and accepted digests") {
    SECTION("mismatching digest convicts the cloud") {
        Sim s;
        s.cloud.add_behavior(CloudBehavior{BehaviorMode::AlterAfterUpload, "F", 0, 0xFF});
        run_upload(s.user, s.cloud, s.ledger, s.clock, "F", to_bytes("x"));
        s.seal();
        auto rd = run_read(s.user, s.cloud, s.contract, s.ledger, s.clock, "F");
        s.seal();
        auto v = adjudicate_altered(s.ledger, "F", rd.tx_ids[1]);
        CHECK(v.violation == Violation::DataAlteration);
        CHECK(v.responsible == s.cloud.id());
        CHECK(v.compensation == 100);
        check_evidence_on_chain(s.ledger, v);
    }
    SECTION("equal digest clears the cloud") {
        Sim s;
        run_upload(s.user, s.cloud, s.ledger, s.clock, "F", to_bytes("x"));
        s.seal();
        auto rd = run_read(s.user, s.cloud, s.contract, s.ledger, s.clock, "F");
        s.seal();
        auto v = adjudicate_altered(s.ledger, "F", rd.tx_ids[1]);
        CHECK(v.violation == Violation::NoViolation);
        CHECK_FALSE(v.responsible.has_value());
        CHECK(v.compensation == 0);
    }
}

TEST_CASE("a grant over a rejected-digest history is the user's own dispute") {
    // Hand-walked five-transaction history: init, ack, done, digest NACK, then
    // a grant. No accepted upload exists, so the disputing user is at fault.
    Sim s;
    auto& u = s.user;
    auto& c = s.cloud;
    Hash32 d = sha256(std::string_view("ct"));
    s.ledger.submit(sign_single(TxDraft{1, u.id(), c.id(), UploadInit{"F"}, 0}, u.keys()));
    s.ledger.submit(sign_single(TxDraft{2, c.id(), u.id(), UploadAck{"F"}, 0}, c.keys()));
    s.ledger.submit(sign_single(TxDraft{3, c.id(), u.id(), UploadDone{"F", d}, 1}, c.keys()));
    s.ledger.submit(sign_single(TxDraft{4, u.id(), c.id(), DigestAck{"F", false}, 1}, u.keys()));
    auto grant_id = s.ledger.submit(
        sign_single(TxDraft{5, c.id(), u.id(), ReadGrant{"F", "store://nimbus/F", d}, 2}, c.keys()));
    s.ledger.seal_pending(5);

    auto v = adjudicate_altered(s.ledger, "F", grant_id);
    CHECK(v.violation == Violation::UserAtFault);
    CHECK(v.responsible == u.id());
    CHECK(v.compensation == 0);
}

TEST_CASE("retention attribution needs both the acknowledged delete and a matching copy") {
    SECTION("acknowledged delete plus matching copy convicts the cloud") {
        Sim s;
        s.cloud.add_behavior(CloudBehavior{BehaviorMode::RetainAfterDelete, "F", 0, 0xFF});
        run_upload(s.user, s.cloud, s.ledger, s.clock, "F", to_bytes("x"));
        s.seal();
        run_delete(s.user, s.cloud, s.ledger, s.clock, "F");
        s.seal();
        REQUIRE(s.cloud.holds("F"));
        OutOfBandCopy copy{"F", s.cloud.object("F")->ciphertext, "audit"};
        auto v = adjudicate_retention(s.ledger, "F", copy);
        CHECK(v.violation == Violation::UnauthorizedRetention);
        CHECK(v.responsible == s.cloud.id());
        CHECK(v.compensation == 100);
        check_evidence_on_chain(s.ledger, v);
    }
    SECTION("a copy that matches no accepted version proves nothing") {
        Sim s;
        run_upload(s.user, s.cloud, s.ledger, s.clock, "F", to_bytes("x"));
        s.seal();
        run_delete(s.user, s.cloud, s.ledger, s.clock, "F");
        s.seal();
        OutOfBandCopy copy{"F", to_bytes("unrelated bytes"), "audit"};
        auto v = adjudicate_retention(s.ledger, "F", copy);
        CHECK(v.violation == Violation::NoViolation);
    }
    SECTION("without a delete request, retention is legitimate") {
        Sim s;
        run_upload(s.user, s.cloud, s.ledger, s.clock, "F", to_bytes("x"));
        s.seal();
        OutOfBandCopy copy{"F", s.cloud.object("F")->ciphertext, "audit"};
        auto v = adjudicate_retention(s.ledger, "F", copy);
        CHECK(v.violation == Violation::NoViolation);
        CHECK_FALSE(v.responsible.has_value());
    }
}

TEST_CASE("the compensation table is flat per violation kind") {
    CHECK(compensation_for(Violation::DataLoss, 100) == 100);
    CHECK(compensation_for(Violation::DataAlteration, 250) == 250);
    CHECK(compensation_for(Violation::UnauthorizedRetention, 7) == 7);
    CHECK(compensation_for(Violation::NoViolation, 100) == 0);
    CHECK(compensation_for(Violation::UserAtFault, 100) == 0);
}

TEST_CASE("recorded verdicts are queryable in issue order") {
    Sim s;
    s.cloud.add_behavior(CloudBehavior{BehaviorMode::DropAfterUpload, "F", 0, 0xFF});
    run_upload(s.user, s.cloud, s.ledger, s.clock, "F", to_bytes("f"));
    s.seal();
    run_upload(s.user, s.cloud, s.ledger, s.clock, "G", to_bytes("g"));
    s.seal();
    auto rd_f = run_read(s.user, s.cloud, s.contract, s.ledger, s.clock, "F");
    s.seal();
    auto v_f = adjudicate_missing(s.ledger, "F", rd_f.tx_ids[0]);
    s.contract.record(s.ledger, v_f, s.user.id(), s.clock.tick());
    s.seal();
    auto rd_g = run_read(s.user, s.cloud, s.contract, s.ledger, s.clock, "G");
    s.seal();
    auto v_g = adjudicate_altered(s.ledger, "G", rd_g.tx_ids[1]);
    s.contract.record(s.ledger, v_g, s.user.id(), s.clock.tick());
    s.seal();

    QueryFilter f;
    f.kind = PayloadKind::VerdictRecord;
    auto hits = s.ledger.query(f);
    REQUIRE(hits.size() == 3);  // auto-verdict from the missing read, then the two recorded ones
    CHECK(std::get<VerdictRecord>(hits[1].tx.payload).verdict == v_f);
    CHECK(std::get<VerdictRecord>(hits[2].tx.payload).verdict == v_g);

    QueryFilter by_file;
    by_file.kind = PayloadKind::VerdictRecord;
    by_file.file_id = "G";
    CHECK(s.ledger.query(by_file).size() == 1);
}

TEST_CASE("a verdict citing unknown transactions is rejected before submission") {
    Sim s;
    run_upload(s.user, s.cloud, s.ledger, s.clock, "F", to_bytes("x"));
    s.seal();
    Verdict v;
    v.violation = Violation::DataLoss;
    v.responsible = s.cloud.id();
    v.compensation = 100;
    v.evidence = {sha256(std::string_view("no such tx"))};
    v.subject = "F";
    try {
        s.contract.record(s.ledger, v, s.user.id(), s.clock.tick());
        FAIL("expected UnknownEvidenceTx");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnknownEvidenceTx);
    }
}

TEST_CASE("adjudication is a pure function of the serialized chain") {
    Sim s;
    s.cloud.add_behavior(CloudBehavior{BehaviorMode::DropAfterUpload, "F", 0, 0xFF});
    run_upload(s.user, s.cloud, s.ledger, s.clock, "F", to_bytes("x"));
    s.seal();
    auto rd = run_read(s.user, s.cloud, s.contract, s.ledger, s.clock, "F");
    s.seal();

    auto v1 = adjudicate_missing(s.ledger, "F", rd.tx_ids[0]);
    Ledger copy = Ledger::deserialize(s.ledger.serialize());
    auto v2 = adjudicate_missing(copy, "F", rd.tx_ids[0]);
    CHECK(v1 == v2);
    CHECK(format_verdict(v1) == format_verdict(v2));
}
