#pragma once

#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "tmv/automaton.hpp"
#include "tmv/history.hpp"
#include "tmv/opacity.hpp"

namespace tmv::test {

inline std::string fixture_path(const std::string& name) {
  return std::string(TMV_FIXTURE_DIR) + "/" + name;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing fixture: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline History load_fixture(const std::string& name) {
  return parse_history(slurp(fixture_path(name)));
}

inline History prefix(const History& h, size_t n) {
  History p;
  p.bounds = h.bounds;
  p.events.assign(h.events.begin(), h.events.begin() + n);
  return p;
}

inline std::vector<Step> enabled_steps(const Automaton& a,
                                       const PackedState& s) {
  std::vector<Step> out;
  a.enabled(s, out);
  return out;
}

inline bool ext_enabled(const Automaton& a, const PackedState& s,
                        const Event& e) {
  for (const Step& st : enabled_steps(a, s))
    if (st.action.external && st.action.event == e) return true;
  return false;
}

inline PackedState take(const Automaton& a, const PackedState& s,
                        const Event& e) {
  for (const Step& st : enabled_steps(a, s))
    if (st.action.external && st.action.event == e) return st.next;
  throw std::runtime_error("step not enabled: " + e.to_string());
}

// idx -2 means any.
inline PackedState take_internal(const Automaton& a, const PackedState& s,
                                 uint16_t code, int txn = -1, int idx = -2) {
  for (const Step& st : enabled_steps(a, s)) {
    if (st.action.external) continue;
    const InternalAction& ia = st.action.internal;
    if (ia.code != code) continue;
    if (txn >= 0 && ia.txn != txn) continue;
    if (idx != -2 && ia.idx != idx) continue;
    return st.next;
  }
  throw std::runtime_error("internal step not enabled: code " +
                           std::to_string(code));
}

inline int count_internal(const Automaton& a, const PackedState& s,
                          uint16_t code, int txn = -1) {
  int n = 0;
  for (const Step& st : enabled_steps(a, s)) {
    if (st.action.external) continue;
    if (st.action.internal.code != code) continue;
    if (txn >= 0 && st.action.internal.txn != txn) continue;
    ++n;
  }
  return n;
}

/// Reference semantics for is_valid, structured differently on purpose:
// each read pair scans backwards for the nearest successful write pair to
// its address instead of threading a memory map forwards.
inline bool valid_by_backward_scan(const History& h) {
  const auto& ev = h.events;
  if (ev.size() % 2 != 0)
    throw std::invalid_argument("history is not fully matched");
  for (size_t i = 0; i < ev.size(); i += 2)
    if (!ev[i].is_inv() || !matches(ev[i], ev[i + 1]))
      throw std::invalid_argument("history is not alternating");
  for (size_t i = 0; i < ev.size(); i += 2) {
    if (ev[i].type != EventType::ReadInv ||
        ev[i + 1].type != EventType::ReadResp)
      continue;
    int expect = 0;
    for (size_t j = i; j >= 2; j -= 2) {
      const Event& inv = ev[j - 2];
      if (inv.type == EventType::WriteInv && inv.addr == ev[i].addr &&
          ev[j - 1].type == EventType::WriteResp) {
        expect = inv.value;
        break;
      }
    }
    if (ev[i + 1].value != expect) return false;
  }
  return true;
}

// Every alternating history of at most max_pairs operation pairs, within
// the given bounds; transaction ids appear in first-begin order. fn sees
// each history once, including the empty one.
// Every alternating history of at most max_pairs matched pairs, including
// the empty one. Transaction identity is irrelevant to value semantics, so
// all pairs use transaction 0.
inline void for_each_alternating(Bounds b, int max_pairs,
                                 const std::function<void(const History&)>& fn) {
  std::vector<std::pair<Event, Event>> pairs;
  pairs.emplace_back(begin_inv(0), begin_resp(0));
  pairs.emplace_back(commit_inv(0), commit_resp(0));
  pairs.emplace_back(commit_inv(0), abort_resp(0));
  for (int a = 0; a < b.addrs; ++a) {
    pairs.emplace_back(read_inv(0, a), abort_resp(0));
    for (int v = 0; v < b.vals; ++v) {
      pairs.emplace_back(read_inv(0, a), read_resp(0, v));
      pairs.emplace_back(write_inv(0, a, v), write_resp(0));
      pairs.emplace_back(write_inv(0, a, v), abort_resp(0));
    }
  }
  History h;
  h.bounds = b;
  auto rec = [&](auto&& self, int pairs_left) -> void {
    fn(h);
    if (pairs_left == 0) return;
    for (const auto& [inv, resp] : pairs) {
      h.events.push_back(inv);
      h.events.push_back(resp);
      self(self, pairs_left - 1);
      h.events.pop_back();
      h.events.pop_back();
    }
  };
  rec(rec, max_pairs);
}

// Uniformly random walk over enabled steps; the external events form a
// trace of a. Deterministic in the seed.
inline History random_walk(const Automaton& a, uint64_t seed, int steps) {
  std::mt19937_64 rng(seed);
  auto starts = a.start_states();
  PackedState s =
      starts[std::uniform_int_distribution<size_t>(0, starts.size() - 1)(rng)];
  History h;
  h.bounds = a.bounds();
  std::vector<Step> out;
  for (int i = 0; i < steps; ++i) {
    out.clear();
    a.enabled(s, out);
    if (out.empty()) break;
    const Step& st =
        out[std::uniform_int_distribution<size_t>(0, out.size() - 1)(rng)];
    if (st.action.external) h.events.push_back(st.action.event);
    s = st.next;
  }
  return h;
}

// Random well-formed history, deliberately not restricted to any model's
// trace set.
inline History random_history(uint64_t seed, Bounds b, int len) {
  std::mt19937_64 rng(seed);
  History h;
  h.bounds = b;
  enum Ph { Fresh, BeginPend, Active, ReadPend, WritePend, CommitPend, Done };
  std::vector<Ph> ph(b.txns, Fresh);
  std::vector<Event> cand;
  for (int i = 0; i < len; ++i) {
    cand.clear();
    for (int t = 0; t < b.txns; ++t) {
      switch (ph[t]) {
        case Fresh:
          cand.push_back(begin_inv(t));
          break;
        case BeginPend:
          cand.push_back(begin_resp(t));
          break;
        case Active:
          for (int a = 0; a < b.addrs; ++a) cand.push_back(read_inv(t, a));
          for (int a = 0; a < b.addrs; ++a)
            for (int v = 0; v < b.vals; ++v)
              cand.push_back(write_inv(t, a, v));
          cand.push_back(commit_inv(t));
          break;
        case ReadPend:
          for (int v = 0; v < b.vals; ++v) cand.push_back(read_resp(t, v));
          cand.push_back(abort_resp(t));
          break;
        case WritePend:
          cand.push_back(write_resp(t));
          cand.push_back(abort_resp(t));
          break;
        case CommitPend:
          cand.push_back(commit_resp(t));
          cand.push_back(abort_resp(t));
          break;
        case Done:
          break;
      }
    }
    if (cand.empty()) break;
    const Event& e =
        cand[std::uniform_int_distribution<size_t>(0, cand.size() - 1)(rng)];
    h.events.push_back(e);
    Ph& p = ph[e.txn];
    switch (e.type) {
      case EventType::BeginInv: p = BeginPend; break;
      case EventType::BeginResp: p = Active; break;
      case EventType::ReadInv: p = ReadPend; break;
      case EventType::WriteInv: p = WritePend; break;
      case EventType::CommitInv: p = CommitPend; break;
      case EventType::ReadResp:
      case EventType::WriteResp: p = Active; break;
      case EventType::CommitResp:
      case EventType::AbortResp: p = Done; break;
    }
  }
  return h;
}

// Exhaustive opacity sweep over every external trace of a to the given
// depth. Two traces with the same per-transaction projections, the same
// transaction precedence relation, and the same view subset have the same
// opacity verdicts on all continuations, so each such class is explored
// once; end-to-end verdicts are memoised on the projection summary alone.
struct SweepResult {
  bool all_opaque = true;
  History violation;
  uint64_t classes = 0;
  uint64_t checks = 0;
};

inline SweepResult sweep_opacity(const Automaton& a, int depth,
                                 SearchLimits limits = {}) {
  Bounds b = a.bounds();
  unsigned txn_bits = 4, type_bits = 4;
  unsigned addr_bits = 1, val_bits = 1;
  while ((1 << addr_bits) < b.addrs + 1) ++addr_bits;
  while ((1 << val_bits) < b.vals + 1) ++val_bits;
  unsigned ev_bits = type_bits + addr_bits + val_bits;
  if ((unsigned)depth * ev_bits + (unsigned)b.txns * txn_bits +
          (unsigned)(b.txns * b.txns) >
      120)
    throw std::invalid_argument("sweep summary does not fit 128 bits");

  auto summarize = [&](const History& h) {
    unsigned __int128 key = 1;
    for (int t = 0; t < b.txns; ++t) {
      unsigned len = 0;
      for (const Event& e : h.events) {
        if (e.txn != t) continue;
        unsigned enc = ((unsigned)e.type << (addr_bits + val_bits)) |
                       ((unsigned)(e.addr + 1) << val_bits) |
                       (unsigned)(e.value + 1);
        key = (key << ev_bits) | enc;
        ++len;
      }
      key = (key << txn_bits) | len;
    }
    for (int p = 0; p < b.txns; ++p)
      for (int q = 0; q < b.txns; ++q)
        key = (key << 1) | (unsigned)txn_precedes(h, p, q);
    return key;
  };

  struct U128Hash {
    size_t operator()(unsigned __int128 v) const {
      uint64_t lo = (uint64_t)v, hi = (uint64_t)(v >> 64);
      uint64_t x = lo ^ (hi * 0x9e3779b97f4a7c15ull);
      x ^= x >> 33;
      x *= 0xff51afd7ed558ccdull;
      x ^= x >> 33;
      return (size_t)x;
    }
  };
  struct ClassKey {
    unsigned __int128 summary;
    uint32_t subset;
    bool operator==(const ClassKey&) const = default;
  };
  struct ClassHash {
    size_t operator()(const ClassKey& k) const {
      return U128Hash{}(k.summary) * 0x9e3779b97f4a7c15ull + k.subset;
    }
  };

  DeterministicView view(a, limits);
  std::unordered_set<ClassKey, ClassHash> seen_class;
  std::unordered_map<unsigned __int128, bool, U128Hash> verdict;
  SweepResult r;
  History h;
  h.bounds = b;

  auto rec = [&](auto&& self, uint32_t subset) -> bool {
    unsigned __int128 key = summarize(h);
    if (!seen_class.insert({key, subset}).second) return true;
    ++r.classes;
    auto [it, fresh] = verdict.try_emplace(key, false);
    if (fresh) {
      ++r.checks;
      it->second = end_to_end_opaque(h).has_value();
    }
    if (!it->second) {
      r.all_opaque = false;
      r.violation = h;
      return false;
    }
    if ((int)h.events.size() == depth) return true;
    for (const Event& e : view.events(subset)) {
      uint32_t next = view.step(subset, e);
      h.events.push_back(e);
      bool ok = self(self, next);
      h.events.pop_back();
      if (!ok) return false;
    }
    return true;
  };
  rec(rec, view.start());
  return r;
}

}  // namespace tmv::test
