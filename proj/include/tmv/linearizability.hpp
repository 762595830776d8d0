// Linearizability of transactional histories against an abstract
// specification automaton.
#pragma once

#include <cstdint>
#include <optional>

#include "tmv/automaton.hpp"
#include "tmv/history.hpp"
#include "tmv/opacity.hpp"

namespace tmv {

// True iff ha is an alternating history equivalent to complete(h) that
// preserves every operation precedence of complete(h).
bool lin(const History& h, const History& ha);

// Searches for an extension he of h and an alternating trace ha of spec
// with lin(he, ha), trying operations in every precedence-respecting
// order. depth bounds the length of ha in events.
std::optional<Linearization> linearized_by(const History& h,
                                           const Automaton& spec,
                                           int64_t depth,
                                           SearchLimits limits = {});

}  // namespace tmv
