// Definition-faithful checkers for valid, legal, sequential, end-to-end
// opaque and opaque histories, plus the constructive linearization used by
// the completeness argument. Deliberately brute-force.
#pragma once

#include <optional>

#include "tmv/history.hpp"

namespace tmv {

// Memory interpretation of a fully matched alternating history: matched
// writes update, matched reads must agree, aborted pairs stutter, initial
// memory all-zero. Throws std::invalid_argument if h is not alternating
// and fully matched.
bool is_valid(const History& h);

bool is_non_interleaved(const History& h);

// Legal at every index i: the projection of h[0..i-1] onto committed
// transactions plus the events of h(i)'s transaction is valid; a trailing
// unmatched invocation imposes no constraint. Throws std::invalid_argument
// unless non-interleaved.
bool is_legal(const History& h);

bool is_sequential(const History& h);

struct OpacityWitness {
  History extension;   // the chosen he from extensions(h)
  History sequential;  // hs: non-interleaved, legal, equivalent to [he]
};

// Searches over extensions and over transaction orders consistent with the
// real-time order of [he]; each transaction's events stay contiguous and
// in program order.
std::optional<OpacityWitness> end_to_end_opaque(const History& h);

bool is_opaque(const History& h);

struct OpacityReport {
  bool opaque;
  size_t failing_prefix = 0;               // prefix length, when !opaque
  std::vector<OpacityWitness> witnesses;   // one per prefix, when opaque
};

OpacityReport check_opacity(const History& h, bool want_witnesses);

struct Linearization {
  History extension;      // he
  History linearization;  // ha: alternating, lin(he, ha), end-to-end opaque
};

// Turns an opaque history's sequential witness into a linearization by
// transposing minimum-distance mis-ordered operation pairs. Throws
// std::invalid_argument if h is not opaque.
Linearization construct_linearization_ex(const History& h);
History construct_linearization(const History& h);

}  // namespace tmv
