#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "support.hpp"
#include "tmv/opacity.hpp"
#include "tmv/stm.hpp"

using namespace tmv;
using namespace tmv::test;

TEST_CASE("is_valid") {
  CHECK(is_valid(parse_history("")));
  CHECK(is_valid(parse_history("B 0\nBr 0\nR 0 x\nRr 0 0\n")));
  CHECK_FALSE(is_valid(parse_history("B 0\nBr 0\nR 0 x\nRr 0 1\n")));
  CHECK(is_valid(parse_history("W 0 x 1\nWr 0\nR 1 x\nRr 1 1\n")));
  CHECK(is_valid(parse_history("W 0 x 1\nWr 0\nW 1 x 0\nWr 1\n"
                               "R 0 x\nRr 0 0\n")));

  SUBCASE("aborted operations do not take effect") {
    CHECK(is_valid(parse_history("W 0 x 1\nA 0\nR 1 x\nRr 1 0\n")));
    CHECK(is_valid(parse_history("R 0 x\nA 0\nR 1 x\nRr 1 0\n")));
    CHECK(is_valid(parse_history("W 0 x 1\nWr 0\nC 0\nA 0\nR 1 x\nRr 1 1\n")));
  }
  SUBCASE("reads see the latest prior completed write per address") {
    CHECK(is_valid(parse_history("W 0 x 1\nWr 0\nW 0 y 2\nWr 0\n"
                                 "R 1 x\nRr 1 1\nR 1 y\nRr 1 2\n")));
    CHECK_FALSE(is_valid(parse_history("W 0 x 1\nWr 0\nR 1 y\nRr 1 1\n")));
  }
  SUBCASE("rejects unmatched or non-alternating input") {
    CHECK_THROWS_AS(is_valid(parse_history("B 0\n")), std::invalid_argument);
    CHECK_THROWS_AS(is_valid(parse_history("B 0\nB 1\nBr 0\nBr 1\n")),
                    std::invalid_argument);
    CHECK_THROWS_AS(is_valid(parse_history("Br 0\nB 0\n")),
                    std::invalid_argument);
  }
}

TEST_CASE("is_valid agrees with a backward-scan oracle") {
  uint64_t n = 0;
  for_each_alternating(Bounds{3, 1, 2}, 3, [&](const History& h) {
    ++n;
    CHECK(is_valid(h) == valid_by_backward_scan(h));
  });
  CHECK(n > 1000);
}

TEST_CASE("is_non_interleaved") {
  CHECK(is_non_interleaved(parse_history("")));
  CHECK(is_non_interleaved(parse_history("B 0\nBr 0\nR 0 x\n")));
  CHECK_FALSE(is_non_interleaved(load_fixture("example1.hist")));
  CHECK(is_non_interleaved(load_fixture("example3_witness.hist")));

  // Finishing before the next begin is enough; responses may stay pending.
  CHECK(is_non_interleaved(
      parse_history("B 0\nBr 0\nC 0\nCr 0\nB 1\nBr 1\nR 1 x\n")));
  CHECK(is_non_interleaved(parse_history("B 0\nBr 0\nA 0\nB 1\nBr 1\n")));
  CHECK_FALSE(
      is_non_interleaved(parse_history("B 0\nBr 0\nB 1\nBr 1\nC 0\nCr 0\n")));
}

TEST_CASE("is_legal") {
  SUBCASE("committed writes are visible to later transactions") {
    CHECK(is_legal(parse_history(
        "B 0\nBr 0\nW 0 x 1\nWr 0\nC 0\nCr 0\nB 1\nBr 1\nR 1 x\nRr 1 1\n")));
    CHECK_FALSE(is_legal(parse_history(
        "B 0\nBr 0\nW 0 x 1\nWr 0\nC 0\nCr 0\nB 1\nBr 1\nR 1 x\nRr 1 0\n")));
  }
  SUBCASE("aborted writes are invisible") {
    CHECK(is_legal(parse_history(
        "B 0\nBr 0\nW 0 x 1\nA 0\nB 1\nBr 1\nR 1 x\nRr 1 0\n")));
    CHECK_FALSE(is_legal(parse_history(
        "B 0\nBr 0\nW 0 x 1\nA 0\nB 1\nBr 1\nR 1 x\nRr 1 1\n")));
  }
  SUBCASE("a transaction reads its own earlier write") {
    CHECK(is_legal(parse_history(
        "B 0\nBr 0\nW 0 x 1\nWr 0\nR 0 x\nRr 0 1\nC 0\nCr 0\n")));
  }
  SUBCASE("commits later in the sequence do not leak backwards") {
    CHECK(is_legal(parse_history(
        "B 1\nBr 1\nR 1 x\nRr 1 0\nC 1\nCr 1\nB 0\nBr 0\nW 0 x 1\nWr 0\n"
        "C 0\nCr 0\n")));
  }
  SUBCASE("an uncommitted read must still be consistent") {
    CHECK_FALSE(is_legal(parse_history("B 0\nBr 0\nR 0 x\nRr 0 1\n")));
    CHECK(is_legal(parse_history("B 0\nBr 0\nR 0 x\nRr 0 0\n")));
  }
  SUBCASE("trailing pending invocations are ignored") {
    CHECK(is_legal(parse_history(
        "B 0\nBr 0\nW 0 x 1\nWr 0\nC 0\nCr 0\nB 1\nBr 1\nR 1 x\n")));
  }
  SUBCASE("an abort at commit time discards the writes") {
    CHECK(is_legal(parse_history(
        "B 0\nBr 0\nW 0 x 1\nWr 0\nC 0\nA 0\nB 1\nBr 1\nR 1 x\nRr 1 0\n")));
    CHECK_FALSE(is_legal(parse_history(
        "B 0\nBr 0\nW 0 x 1\nWr 0\nC 0\nA 0\nB 1\nBr 1\nR 1 x\nRr 1 1\n")));
  }
  CHECK(is_legal(load_fixture("example3_witness.hist")));
  CHECK_THROWS_AS(is_legal(load_fixture("example1.hist")),
                  std::invalid_argument);
}

TEST_CASE("is_sequential") {
  CHECK(is_sequential(parse_history("")));
  CHECK(is_sequential(load_fixture("example3_witness.hist")));
  CHECK_FALSE(is_sequential(load_fixture("example1.hist")));
  CHECK_FALSE(is_sequential(parse_history("Br 0\n")));
  CHECK_FALSE(is_sequential(parse_history("B 0\nBr 0\nR 0 x\nRr 0 1\n")));
}

TEST_CASE("end_to_end_opaque") {
  CHECK(end_to_end_opaque(parse_history("")).has_value());

  SUBCASE("interleaved reader and writer commute into a witness") {
    History h = load_fixture("example1.hist");
    auto w = end_to_end_opaque(h);
    REQUIRE(w.has_value());
    CHECK(is_sequential(w->sequential));
    CHECK(equivalent(complete(w->extension), w->sequential));
    CHECK(w->sequential.events.size() >= h.events.size());
  }
  SUBCASE("a committed write forces later reads to observe it") {
    History h = parse_history(
        "B 0\nBr 0\nW 0 x 1\nWr 0\nC 0\nCr 0\nB 1\nBr 1\nR 1 x\nRr 1 0\n");
    CHECK_FALSE(end_to_end_opaque(h).has_value());
  }
  SUBCASE("a pending commit may be completed to explain a read") {
    History h = parse_history(
        "B 0\nBr 0\nW 0 x 1\nWr 0\nC 0\nB 1\nBr 1\nR 1 x\nRr 1 1\n");
    auto w = end_to_end_opaque(h);
    REQUIRE(w.has_value());
    CHECK(txn_status(w->extension, 0) == TxnStatus::Committed);
  }
  SUBCASE("real-time order is respected by the witness") {
    History h = parse_history(
        "B 0\nBr 0\nC 0\nCr 0\nB 1\nBr 1\nC 1\nCr 1\n");
    auto w = end_to_end_opaque(h);
    REQUIRE(w.has_value());
    CHECK(txn_precedes(w->sequential, 0, 1));
  }
}

TEST_CASE("check_opacity and is_opaque") {
  for (const char* name : {"example1.hist", "h1.hist", "h2.hist", "h3.hist",
                           "h4.hist", "example3_witness.hist"}) {
    CAPTURE(name);
    CHECK(is_opaque(load_fixture(name)));
  }

  History bad = load_fixture("invalid_read.hist");
  OpacityReport r = check_opacity(bad, false);
  CHECK_FALSE(r.opaque);
  CHECK(r.failing_prefix == 4);

  History h = load_fixture("example1.hist");
  OpacityReport ok = check_opacity(h, true);
  CHECK(ok.opaque);
  REQUIRE(ok.witnesses.size() == h.events.size() + 1);
  for (size_t n = 0; n < ok.witnesses.size(); ++n) {
    CAPTURE(n);
    const auto& w = ok.witnesses[n];
    CHECK(is_sequential(w.sequential));
    CHECK(equivalent(complete(w.extension), w.sequential));
  }
}

TEST_CASE("traces of the coarse-grained models are opaque") {
  Bounds b{2, 1, 2};
  for (StmKind k : {StmKind::TML, StmKind::NORec, StmKind::RONORec}) {
    CgaAutomaton cga(k, b);
    for (uint64_t seed = 1; seed <= 8; ++seed) {
      History h = random_walk(cga, seed, 16);
      CAPTURE(cga.name());
      CAPTURE(seed);
      CHECK(is_opaque(h));
    }
  }
}

TEST_CASE("construct_linearization") {
  History h = load_fixture("example1.hist");
  Linearization L = construct_linearization_ex(h);

  // Operations of concurrent transactions may interleave, but each pair is
  // adjacent, the per-transaction orders match, and the result is opaque.
  REQUIRE(L.linearization.events.size() % 2 == 0);
  for (size_t i = 0; i < L.linearization.events.size(); i += 2)
    CHECK(matches(L.linearization.events[i], L.linearization.events[i + 1]));
  CHECK(equivalent(complete(L.extension), L.linearization));
  CHECK(end_to_end_opaque(L.linearization).has_value());

  CHECK(L.linearization ==
        parse_history("bounds 4 1 5\nB 2\nBr 2\nB 3\nBr 3\nR 2 x\nRr 2 0\n"
                      "W 3 x 4\nWr 3\nC 3\nCr 3\n"));
  CHECK(construct_linearization(h) == L.linearization);

  CHECK_THROWS_AS(construct_linearization_ex(load_fixture("invalid_read.hist")),
                  std::invalid_argument);
}
