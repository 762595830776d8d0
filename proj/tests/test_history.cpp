#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "support.hpp"
#include "tmv/history.hpp"

using namespace tmv;
using namespace tmv::test;

TEST_CASE("event matching") {
  CHECK(matches(begin_inv(0), begin_resp(0)));
  CHECK(matches(read_inv(0, 1), read_resp(0, 3)));
  CHECK(matches(read_inv(0, 1), abort_resp(0)));
  CHECK(matches(write_inv(1, 0, 2), write_resp(1)));
  CHECK(matches(write_inv(1, 0, 2), abort_resp(1)));
  CHECK(matches(commit_inv(2), commit_resp(2)));
  CHECK(matches(commit_inv(2), abort_resp(2)));

  CHECK_FALSE(matches(begin_inv(0), abort_resp(0)));
  CHECK_FALSE(matches(begin_inv(0), begin_resp(1)));
  CHECK_FALSE(matches(read_inv(0, 1), write_resp(0)));
  CHECK_FALSE(matches(begin_resp(0), begin_inv(0)));
}

TEST_CASE("event to_string round-trips through the parser") {
  History h = parse_history(
      "B 0\nBr 0\nW 0 1 3\nWr 0\nR 0 0\nRr 0 3\nC 0\nCr 0\nA 1\n");
  for (const Event& e : h.events) {
    History one = parse_history(e.to_string());
    REQUIRE(one.events.size() == 1);
    CHECK(one.events[0] == e);
  }
}

TEST_CASE("parser") {
  SUBCASE("symbolic addresses intern in first-seen order") {
    History h = parse_history("R 0 x\nR 0 y\nR 0 x\n");
    CHECK(h.events[0].addr == 0);
    CHECK(h.events[1].addr == 1);
    CHECK(h.events[2].addr == 0);
  }
  SUBCASE("comments and blank lines are ignored") {
    History h = parse_history("# intro\n\nB 0  # trailing\n\n");
    REQUIRE(h.events.size() == 1);
    CHECK(h.events[0] == begin_inv(0));
  }
  SUBCASE("derived bounds cover content, values at least two") {
    History h = parse_history("B 2\nBr 2\nW 2 0 0\n");
    CHECK(h.bounds == (Bounds{3, 1, 2}));
    CHECK(parse_history("W 0 0 4\n").bounds == (Bounds{1, 1, 5}));
  }
  SUBCASE("declared bounds are kept, including vals of one") {
    History h = parse_history("bounds 2 1 1\nB 0\nW 1 0 0\n");
    CHECK(h.bounds == (Bounds{2, 1, 1}));
  }
  SUBCASE("event outside declared bounds") {
    CHECK_THROWS_AS(parse_history("bounds 1 1 2\nB 1\n"), ParseError);
    CHECK_THROWS_AS(parse_history("bounds 2 1 2\nW 0 1 0\n"), ParseError);
    CHECK_THROWS_AS(parse_history("bounds 2 1 2\nW 0 0 2\n"), ParseError);
  }
  SUBCASE("header must come first") {
    CHECK_THROWS_AS(parse_history("B 0\nbounds 2 1 2\n"), ParseError);
  }
  SUBCASE("errors carry the line number") {
    try {
      parse_history("B 0\nBr 0\nquux 1\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
    CHECK_THROWS_AS(parse_history("B\n"), ParseError);
    CHECK_THROWS_AS(parse_history("R 0\n"), ParseError);
    CHECK_THROWS_AS(parse_history("W 0 0\n"), ParseError);
    CHECK_THROWS_AS(parse_history("B zero\n"), ParseError);
  }
  SUBCASE("fixtures round-trip") {
    for (const char* name :
         {"example1.hist", "example3_witness.hist", "h1.hist", "h2.hist",
          "h3.hist", "h4.hist", "invalid_read.hist"}) {
      History h = load_fixture(name);
      CHECK(parse_history(serialize_history(h)) == h);
    }
  }
  SUBCASE("malformed fixture") {
    CHECK_THROWS_AS(parse_history(slurp(fixture_path("malformed.hist"))),
                    ParseError);
  }
}

TEST_CASE("well_formed") {
  CHECK(well_formed(parse_history("")));
  CHECK(well_formed(load_fixture("h1.hist")));
  CHECK(well_formed(load_fixture("example1.hist")));
  CHECK(well_formed(parse_history("B 0\nBr 0\nR 0 x\n")));

  CHECK_FALSE(well_formed(parse_history("Br 0\n")));
  CHECK_FALSE(well_formed(parse_history("R 0 x\n")));
  CHECK_FALSE(well_formed(parse_history("B 0\nR 0 x\n")));
  CHECK_FALSE(well_formed(parse_history("B 0\nBr 0\nR 0 x\nW 0 x 0\n")));
  CHECK_FALSE(well_formed(parse_history("B 0\nBr 0\nR 0 x\nWr 0\n")));
  CHECK_FALSE(well_formed(parse_history("B 0\nBr 0\nC 0\nCr 0\nB 0\n")));
  CHECK_FALSE(well_formed(parse_history("B 0\nBr 0\nA 0\nR 0 x\n")));
  CHECK_FALSE(well_formed(parse_history("B 0\nA 0\n")));
}

TEST_CASE("project keeps one transaction's events in order") {
  History h = load_fixture("example1.hist");
  History p2 = project(h, 2);
  CHECK(p2.events == parse_history("B 2\nBr 2\nR 2 0\nRr 2 0\n").events);
  History p3 = project(h, 3);
  CHECK(p3.events ==
        parse_history("B 3\nBr 3\nW 3 0 4\nWr 3\nC 3\nCr 3\n").events);
  CHECK(project(h, 0).empty());
}

TEST_CASE("txn_status and txn_ids") {
  History h = parse_history(
      "B 0\nBr 0\nC 0\nCr 0\nB 1\nBr 1\nR 1 x\nA 1\nB 2\nBr 2\n");
  CHECK(txn_status(h, 0) == TxnStatus::Committed);
  CHECK(txn_status(h, 1) == TxnStatus::Aborted);
  CHECK(txn_status(h, 2) == TxnStatus::Live);
  CHECK(txn_status(h, 3) == TxnStatus::NotPresent);
  CHECK(txn_ids(h) == (std::vector<int>{0, 1, 2}));
}

TEST_CASE("complete drops pending invocations only") {
  History h = load_fixture("h1.hist");
  History c = complete(h);
  CHECK(c.events == parse_history("B 0\nBr 0\nB 1\nBr 1\nW 1 0 0\nA 1\n")
                        .events);
  CHECK(complete(c) == c);
  CHECK(complete(parse_history("")).empty());
}

TEST_CASE("extensions") {
  SUBCASE("no pending operations: just the history itself") {
    History h = load_fixture("h2.hist");
    auto ex = extensions(h);
    REQUIRE(ex.size() == 1);
    CHECK(ex[0] == h);
  }
  SUBCASE("one pending write: pending, aborted, or completed") {
    History h = load_fixture("h1.hist");
    auto ex = extensions(h);
    REQUIRE(ex.size() == 3);
    CHECK(ex[0] == h);
    bool saw_wr = false, saw_a = false;
    for (const auto& he : ex) {
      if (he.events.size() == h.events.size() + 1) {
        if (he.events.back() == write_resp(0)) saw_wr = true;
        if (he.events.back() == abort_resp(0)) saw_a = true;
      }
    }
    CHECK(saw_wr);
    CHECK(saw_a);
  }
  SUBCASE("read responses range over the value bound") {
    History h = parse_history("bounds 1 1 3\nB 0\nBr 0\nR 0 0\n");
    CHECK(extensions(h).size() == 5);  // pending, v0, v1, v2, abort
  }
  SUBCASE("pending begin completes") {
    History h = parse_history("B 0\n");
    CHECK(extensions(h).size() == 2);  // pending or Br; begins never abort
  }
}

TEST_CASE("equivalent means equal projections") {
  History h = load_fixture("example1.hist");
  History w = load_fixture("example3_witness.hist");
  CHECK(equivalent(h, w));
  CHECK(equivalent(w, h));
  CHECK_FALSE(equivalent(h, prefix(h, 9)));
  CHECK_FALSE(equivalent(h, parse_history("")));
  CHECK(equivalent(parse_history(""), parse_history("")));
}

TEST_CASE("txn_precedes requires completion before the other begins") {
  History seq = parse_history("B 0\nBr 0\nC 0\nCr 0\nB 1\nBr 1\n");
  CHECK(txn_precedes(seq, 0, 1));
  CHECK_FALSE(txn_precedes(seq, 1, 0));

  History h = load_fixture("example1.hist");
  CHECK_FALSE(txn_precedes(h, 2, 3));
  CHECK_FALSE(txn_precedes(h, 3, 2));

  // A live transaction precedes nothing, even laid out first.
  History w = load_fixture("example3_witness.hist");
  CHECK_FALSE(txn_precedes(w, 2, 3));

  History ab = parse_history("B 0\nBr 0\nR 0 x\nA 0\nB 1\nBr 1\n");
  CHECK(txn_precedes(ab, 0, 1));
}

TEST_CASE("match_events and op_precedes") {
  History h = load_fixture("example1.hist");
  auto partner = match_events(h);
  CHECK(partner[0] == 2);   // B 3 ~ Br 3
  CHECK(partner[1] == 3);   // B 2 ~ Br 2
  CHECK(partner[4] == 7);   // W 3 ~ Wr 3
  CHECK(partner[5] == 6);   // R 2 ~ Rr 2
  CHECK(partner[8] == 9);   // C 3 ~ Cr 3

  auto ops = matched_ops(h);
  REQUIRE(ops.size() == 5);
  OpOccurrence b3{0, 2}, w3{4, 7}, r2{5, 6}, c3{8, 9};
  CHECK(op_precedes(h, b3, w3));
  CHECK_FALSE(op_precedes(h, w3, r2));
  CHECK_FALSE(op_precedes(h, r2, w3));
  CHECK(op_precedes(h, r2, c3));
  CHECK(op_precedes(h, w3, c3));
  CHECK_THROWS_AS(op_precedes(h, (OpOccurrence{0, 1}), w3),
                  std::invalid_argument);

  CHECK_THROWS_AS(match_events(parse_history("Br 0\n")),
                  std::invalid_argument);
}
