// Finite labelled transition systems with external/internal actions, plus
// the checkers built on them: reachability, bounded trace generation,
// trace refinement via on-the-fly determinization with antichain pruning,
// and forward-simulation checking.
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tmv/history.hpp"

namespace tmv {

// States are bit-packed into 128 bits; models lay out their own fields.
struct PackedState {
  unsigned __int128 bits = 0;
  bool operator==(const PackedState& o) const { return bits == o.bits; }
};

struct PackedStateHash {
  size_t operator()(const PackedState& s) const {
    uint64_t lo = (uint64_t)s.bits, hi = (uint64_t)(s.bits >> 64);
    uint64_t x = lo ^ (hi * 0x9e3779b97f4a7c15ull);
    x ^= x >> 30; x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27; x *= 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }
};

// A fixed-width field inside a PackedState.
struct BitField {
  unsigned off = 0, width = 0;

  uint64_t get(const PackedState& s) const {
    if (width == 0) return 0;
    return (uint64_t)((s.bits >> off) & mask());
  }
  void set(PackedState& s, uint64_t v) const {
    s.bits = (s.bits & ~(mask() << off)) |
             ((unsigned __int128)(v & (uint64_t)mask()) << off);
  }
  unsigned __int128 mask() const {
    return ((unsigned __int128)1 << width) - 1;
  }
};

// Sequential field allocator; throws when 128 bits run out, which the CLI
// reports as a bounds error.
struct StateLayout {
  unsigned used = 0;

  BitField alloc(unsigned width) {
    if (used + width > 128)
      throw std::invalid_argument("bounds too large for 128-bit states");
    BitField f{used, width};
    used += width;
    return f;
  }
  BitField alloc_count(uint64_t distinct);  // width = bits for 0..distinct-1
};

struct InternalAction {
  uint16_t code = 0;
  int16_t txn = -1;
  int16_t addr = -1;
  int32_t value = -1;
  int16_t idx = -1;

  bool operator==(const InternalAction&) const = default;
};

struct Action {
  bool external = false;
  Event event{};
  InternalAction internal{};

  static Action ext(const Event& e) { return {true, e, {}}; }
  static Action internal_step(const InternalAction& ia) {
    return {false, {}, ia};
  }
  std::string to_string() const;
};

struct Step {
  Action action;
  PackedState next;
};

class Automaton {
 public:
  virtual ~Automaton() = default;
  virtual std::string name() const = 0;
  virtual Bounds bounds() const = 0;
  virtual std::vector<PackedState> start_states() const = 0;
  // Appends all enabled steps from s. Nondeterminism appears as multiple
  // steps; the enumeration itself is deterministic in s.
  virtual void enabled(const PackedState& s, std::vector<Step>& out) const = 0;
  virtual std::string describe_state(const PackedState&) const { return "?"; }
  virtual std::string describe_internal(const InternalAction& ia) const;
};

class ResourceLimitError : public std::runtime_error {
 public:
  explicit ResourceLimitError(const std::string& what)
      : std::runtime_error(what) {}
};

struct SearchLimits {
  uint64_t max_states = 50'000'000;
  int64_t max_depth = -1;  // <0: unbounded
};

// Total order on events, used for canonical trace enumeration order.
uint64_t event_key(const Event& e);

uint64_t reachable_count(const Automaton& a, const SearchLimits& limits);
void for_each_reachable(const Automaton& a, const SearchLimits& limits,
                        const std::function<void(const PackedState&)>& fn);

// Deterministic external-trace view of an automaton: subsets of states
// closed under internal steps, interned by id.
class DeterministicView {
 public:
  static constexpr uint32_t kDead = UINT32_MAX;

  explicit DeterministicView(const Automaton& a, SearchLimits limits = {});
  ~DeterministicView();

  uint32_t start();
  uint32_t step(uint32_t subset, const Event& e);  // kDead if rejected
  // Distinct external events enabled somewhere in the subset, sorted.
  const std::vector<Event>& events(uint32_t subset);
  // Interned member state ids of a subset, sorted ascending.
  const std::vector<uint32_t>& members(uint32_t subset) const;
  uint64_t states_interned() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

bool accepts(const Automaton& a, const std::vector<Event>& trace);

// Calls fn for every external trace of length <= depth, shortest first
// within each DFS branch (every prefix is itself reported).
void traces(const Automaton& a, int64_t depth,
            const std::function<void(const std::vector<Event>&)>& fn,
            SearchLimits limits = {});

struct RefinementResult {
  bool pass = false;
  std::vector<Event> counterexample;  // trace of impl rejected by spec
  uint64_t explored = 0;
};

// Pass iff every external trace of impl is a trace of spec. Breadth-first
// over (impl state, spec subset) product, so counterexamples are shortest.
RefinementResult refines(const Automaton& spec, const Automaton& impl,
                         SearchLimits limits = {});

struct EquivalenceResult {
  bool pass = false;
  // 0: counterexample is a trace of b missing from a;
  // 1: counterexample is a trace of a missing from b.
  int direction = 0;
  std::vector<Event> counterexample;
};

EquivalenceResult equivalent_lts(const Automaton& a, const Automaton& b,
                                 SearchLimits limits = {}, int jobs = 1);

struct SimulationRelation {
  std::function<bool(const PackedState& cs, const PackedState& as)> related;
  // Abstract internal action simulating a concrete internal step, or
  // nullopt for a stutter step.
  std::function<std::optional<InternalAction>(
      const InternalAction& ia, const PackedState& cs, const PackedState& as)>
      step_correspondence;
};

struct SimResult {
  bool pass = false;
  std::string reason;
  PackedState concrete{}, abstract_{};
  Action action{};
  uint64_t pairs_explored = 0;
};

// Checks initialisation plus external/internal step correspondence over
// all jointly reachable related pairs.
SimResult check_forward_simulation(const Automaton& impl,
                                   const Automaton& spec,
                                   const SimulationRelation& rel,
                                   SearchLimits limits = {});

}  // namespace tmv
