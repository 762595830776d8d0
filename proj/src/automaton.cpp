#include "tmv/automaton.hpp"

#include <algorithm>
#include <deque>
#include <exception>
#include <thread>
#include <unordered_map>
#include <unordered_set>

namespace tmv {

BitField StateLayout::alloc_count(uint64_t distinct) {
  unsigned w = 0;
  while (distinct > (1ull << w)) ++w;
  return alloc(w);
}

std::string Action::to_string() const {
  if (external) return event.to_string();
  std::string s = "tau(" + std::to_string(internal.code);
  if (internal.txn >= 0) s += " t" + std::to_string(internal.txn);
  if (internal.addr >= 0) s += " a" + std::to_string(internal.addr);
  if (internal.value >= 0) s += " v" + std::to_string(internal.value);
  if (internal.idx >= 0) s += " i" + std::to_string(internal.idx);
  return s + ")";
}

std::string Automaton::describe_internal(const InternalAction& ia) const {
  return Action::internal_step(ia).to_string();
}

uint64_t event_key(const Event& e) {
  return (uint64_t)e.type | ((uint64_t)(uint16_t)(e.txn + 1) << 4) |
         ((uint64_t)(uint16_t)(e.addr + 1) << 20) |
         ((uint64_t)(uint32_t)(e.value + 1) << 32);
}

namespace {

// Open-addressing state interner: the searches live or die on bytes per
// state, so no per-entry heap nodes.
struct StateInterner {
  std::vector<PackedState> states;
  std::vector<uint32_t> table = std::vector<uint32_t>(1 << 10, UINT32_MAX);

  uint32_t intern(const PackedState& s, uint64_t max_states) {
    size_t mask = table.size() - 1;
    size_t i = PackedStateHash{}(s)&mask;
    while (table[i] != UINT32_MAX) {
      if (states[table[i]] == s) return table[i];
      i = (i + 1) & mask;
    }
    if (states.size() >= max_states)
      throw ResourceLimitError("state limit exceeded");
    uint32_t id = (uint32_t)states.size();
    states.push_back(s);
    table[i] = id;
    if (states.size() * 10 >= table.size() * 7) rehash();
    return id;
  }

  void rehash() {
    std::vector<uint32_t> bigger(table.size() * 2, UINT32_MAX);
    size_t mask = bigger.size() - 1;
    for (uint32_t id = 0; id < states.size(); ++id) {
      size_t i = PackedStateHash{}(states[id]) & mask;
      while (bigger[i] != UINT32_MAX) i = (i + 1) & mask;
      bigger[i] = id;
    }
    table.swap(bigger);
  }
};

// Interner plus successor enumeration into a reused scratch buffer.
// Successors are recomputed on demand: memoizing them costs hundreds of
// bytes per state, which dwarfs everything else on big searches.
struct StepCache {
  const Automaton& a;
  StateInterner intern;
  std::vector<Step> scratch;
  uint64_t max_states;

  StepCache(const Automaton& a, uint64_t max_states)
      : a(a), max_states(max_states) {}

  uint32_t id(const PackedState& s) { return intern.intern(s, max_states); }
  // Valid until the next at() call.
  const std::vector<Step>& at(uint32_t id) {
    scratch.clear();
    a.enabled(intern.states[id], scratch);
    return scratch;
  }
};

struct VecU32Hash {
  size_t operator()(const std::vector<uint32_t>& v) const {
    uint64_t h = 0x243f6a8885a308d3ull;
    for (uint32_t x : v) {
      h ^= x + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return (size_t)h;
  }
};

}  // namespace

struct DeterministicView::Impl {
  StepCache cache;
  // Deques: callers hold references to elements across interning of new
  // subsets, so growth must not move existing ones. The id table open-
  // addresses into subsets rather than keeping a second copy of the keys.
  std::deque<std::vector<uint32_t>> subsets;
  std::vector<uint32_t> subset_table = std::vector<uint32_t>(1 << 10, UINT32_MAX);
  std::vector<std::unordered_map<uint64_t, uint32_t>> trans;
  std::deque<std::vector<Event>> alphabet;
  std::vector<char> alphabet_ready;
  uint32_t start_id = kDead;

  Impl(const Automaton& a, const SearchLimits& lim)
      : cache(a, lim.max_states) {}

  uint32_t intern_subset(std::vector<uint32_t> members) {
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    size_t mask = subset_table.size() - 1;
    size_t i = VecU32Hash{}(members)&mask;
    while (subset_table[i] != UINT32_MAX) {
      if (subsets[subset_table[i]] == members) return subset_table[i];
      i = (i + 1) & mask;
    }
    if (subsets.size() >= cache.max_states)
      throw ResourceLimitError("state limit exceeded");
    uint32_t id = (uint32_t)subsets.size();
    subsets.push_back(std::move(members));
    subset_table[i] = id;
    trans.emplace_back();
    alphabet.emplace_back();
    alphabet_ready.push_back(0);
    if (subsets.size() * 10 >= subset_table.size() * 7) {
      std::vector<uint32_t> bigger(subset_table.size() * 2, UINT32_MAX);
      mask = bigger.size() - 1;
      for (uint32_t sid = 0; sid < subsets.size(); ++sid) {
        size_t j = VecU32Hash{}(subsets[sid]) & mask;
        while (bigger[j] != UINT32_MAX) j = (j + 1) & mask;
        bigger[j] = sid;
      }
      subset_table.swap(bigger);
    }
    return id;
  }

  // Closes seed ids under internal steps.
  uint32_t closure(std::vector<uint32_t> seed) {
    std::unordered_set<uint32_t> seen(seed.begin(), seed.end());
    std::deque<uint32_t> work(seed.begin(), seed.end());
    while (!work.empty()) {
      uint32_t s = work.front();
      work.pop_front();
      for (const Step& st : cache.at(s)) {
        if (st.action.external) continue;
        uint32_t t = cache.id(st.next);
        if (seen.insert(t).second) {
          seed.push_back(t);
          work.push_back(t);
        }
      }
    }
    return intern_subset(std::move(seed));
  }

  uint32_t start() {
    if (start_id == kDead) {
      std::vector<uint32_t> seed;
      for (const PackedState& s : cache.a.start_states())
        seed.push_back(cache.id(s));
      start_id = closure(std::move(seed));
    }
    return start_id;
  }

  uint32_t step(uint32_t subset, const Event& e) {
    uint64_t key = event_key(e);
    auto it = trans[subset].find(key);
    if (it != trans[subset].end()) return it->second;
    std::vector<uint32_t> next;
    for (uint32_t m : subsets[subset]) {
      for (const Step& st : cache.at(m)) {
        if (st.action.external && st.action.event == e)
          next.push_back(cache.id(st.next));
      }
    }
    uint32_t target = next.empty() ? kDead : closure(std::move(next));
    trans[subset].emplace(key, target);
    return target;
  }

  const std::vector<Event>& events(uint32_t subset) {
    if (!alphabet_ready[subset]) {
      std::vector<Event> evs;
      for (uint32_t m : subsets[subset]) {
        for (const Step& st : cache.at(m)) {
          if (st.action.external) evs.push_back(st.action.event);
        }
      }
      std::sort(evs.begin(), evs.end(), [](const Event& x, const Event& y) {
        return event_key(x) < event_key(y);
      });
      evs.erase(std::unique(evs.begin(), evs.end()), evs.end());
      alphabet[subset] = std::move(evs);
      alphabet_ready[subset] = 1;
    }
    return alphabet[subset];
  }
};

DeterministicView::DeterministicView(const Automaton& a, SearchLimits limits)
    : impl_(std::make_unique<Impl>(a, limits)) {}
DeterministicView::~DeterministicView() = default;
uint32_t DeterministicView::start() { return impl_->start(); }
uint32_t DeterministicView::step(uint32_t subset, const Event& e) {
  return impl_->step(subset, e);
}
const std::vector<Event>& DeterministicView::events(uint32_t subset) {
  return impl_->events(subset);
}
const std::vector<uint32_t>& DeterministicView::members(uint32_t subset) const {
  return impl_->subsets[subset];
}
uint64_t DeterministicView::states_interned() const {
  return impl_->cache.intern.states.size();
}

uint64_t reachable_count(const Automaton& a, const SearchLimits& limits) {
  uint64_t n = 0;
  for_each_reachable(a, limits, [&](const PackedState&) { ++n; });
  return n;
}

void for_each_reachable(const Automaton& a, const SearchLimits& limits,
                        const std::function<void(const PackedState&)>& fn) {
  StateInterner intern;
  std::deque<uint32_t> work;
  for (const PackedState& s : a.start_states()) {
    size_t before = intern.states.size();
    uint32_t id = intern.intern(s, limits.max_states);
    if (intern.states.size() > before) work.push_back(id);
  }
  std::vector<Step> steps;
  while (!work.empty()) {
    uint32_t id = work.front();
    work.pop_front();
    fn(intern.states[id]);
    steps.clear();
    a.enabled(intern.states[id], steps);
    for (const Step& st : steps) {
      size_t before = intern.states.size();
      uint32_t t = intern.intern(st.next, limits.max_states);
      if (intern.states.size() > before) work.push_back(t);
    }
  }
}

bool accepts(const Automaton& a, const std::vector<Event>& trace) {
  DeterministicView view(a);
  uint32_t cur = view.start();
  for (const Event& e : trace) {
    cur = view.step(cur, e);
    if (cur == DeterministicView::kDead) return false;
  }
  return true;
}

namespace {

void traces_rec(DeterministicView& view, uint32_t subset, int64_t depth_left,
                std::vector<Event>& prefix,
                const std::function<void(const std::vector<Event>&)>& fn) {
  fn(prefix);
  if (depth_left <= 0) return;
  for (const Event& e : view.events(subset)) {
    uint32_t next = view.step(subset, e);
    prefix.push_back(e);
    traces_rec(view, next, depth_left - 1, prefix, fn);
    prefix.pop_back();
  }
}

}  // namespace

void traces(const Automaton& a, int64_t depth,
            const std::function<void(const std::vector<Event>&)>& fn,
            SearchLimits limits) {
  DeterministicView view(a, limits);
  std::vector<Event> prefix;
  traces_rec(view, view.start(), depth, prefix, fn);
}

namespace {

struct ProductNode {
  uint32_t impl;
  uint32_t subset;
  uint32_t parent;
  uint32_t depth;
  Event via{};
  bool has_via = false;
};

std::vector<Event> trail(const std::vector<ProductNode>& arena, uint32_t at) {
  std::vector<Event> evs;
  for (uint32_t i = at; i != UINT32_MAX; i = arena[i].parent) {
    if (arena[i].has_via) evs.push_back(arena[i].via);
  }
  std::reverse(evs.begin(), evs.end());
  return evs;
}

bool subset_contains(const std::vector<uint32_t>& small,
                     const std::vector<uint32_t>& big) {
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

}  // namespace

namespace {

// One pass of the product search. Internal steps are free, so this is a
// 0-1 shortest-path search and the first rejected edge found closes a
// shortest counterexample. Parent trails cost real memory, so the first
// pass runs without them; on failure the caller reruns with record set
// to rebuild the (identical, deterministic) trail.
RefinementResult refines_search(const Automaton& spec, const Automaton& impl,
                                SearchLimits limits, bool record) {
  RefinementResult res;
  DeterministicView view(spec, limits);
  StepCache cimpl(impl, limits.max_states);

  constexpr uint32_t kNone = UINT32_MAX;
  constexpr uint32_t kDone = 0x80000000u;
  // Best trace length per (impl, subset) pair, kDone once expanded. Most
  // impl states meet exactly one spec subset, so the first pair lives in
  // flat arrays and only further subsets go to the side map.
  std::vector<uint32_t> first_subset, first_dist;
  std::unordered_map<uint32_t, std::vector<std::pair<uint32_t, uint32_t>>>
      extra;

  auto relax = [&](uint32_t ci, uint32_t subset, uint32_t depth) -> bool {
    if (first_subset.size() <= ci) {
      first_subset.resize(ci + 1, kNone);
      first_dist.resize(ci + 1, 0);
    }
    if (first_subset[ci] == kNone) {
      first_subset[ci] = subset;
      first_dist[ci] = depth;
      return true;
    }
    if (first_subset[ci] == subset) {
      if ((first_dist[ci] & kDone) || first_dist[ci] <= depth) return false;
      first_dist[ci] = depth;
      return true;
    }
    auto& row = extra[ci];
    for (auto& [s, d] : row) {
      if (s != subset) continue;
      if ((d & kDone) || d <= depth) return false;
      d = depth;
      return true;
    }
    row.emplace_back(subset, depth);
    return true;
  };
  auto dist_ref = [&](uint32_t ci, uint32_t subset) -> uint32_t& {
    if (first_subset[ci] == subset) return first_dist[ci];
    for (auto& [s, d] : extra.at(ci))
      if (s == subset) return d;
    throw std::logic_error("distance entry missing");
  };
  auto subsumed = [&](uint32_t ci, uint32_t subset) {
    auto covers = [&](uint32_t s, uint32_t d) {
      return s != subset && (d & kDone) &&
             subset_contains(view.members(s), view.members(subset));
    };
    if (covers(first_subset[ci], first_dist[ci])) return true;
    auto it = extra.find(ci);
    if (it != extra.end())
      for (const auto& [s, d] : it->second)
        if (covers(s, d)) return true;
    return false;
  };

  struct WorkItem {
    uint32_t impl, subset, depth, node;
  };
  std::deque<WorkItem> work;
  std::vector<ProductNode> arena;
  uint64_t pushes = 0;

  auto push = [&](uint32_t ci, uint32_t subset, uint32_t depth,
                  uint32_t parent, const Event* via) {
    if (!relax(ci, subset, depth)) return;
    if (++pushes > limits.max_states)
      throw ResourceLimitError("state limit exceeded");
    uint32_t node = kNone;
    if (record) {
      arena.push_back({ci, subset, parent, depth, via ? *via : Event{},
                       via != nullptr});
      node = (uint32_t)arena.size() - 1;
    }
    if (via)
      work.push_back({ci, subset, depth, node});
    else
      work.push_front({ci, subset, depth, node});
  };

  uint32_t sub0 = view.start();
  for (const PackedState& s : impl.start_states())
    push(cimpl.id(s), sub0, 0, kNone, nullptr);

  while (!work.empty()) {
    WorkItem n = work.front();
    work.pop_front();
    uint32_t& d = dist_ref(n.impl, n.subset);
    if ((d & kDone) || d != n.depth) continue;  // expanded or stale
    d |= kDone;
    if (limits.max_depth >= 0 && (int64_t)n.depth > limits.max_depth)
      throw ResourceLimitError("depth limit exceeded");
    ++res.explored;

    // A pair whose subset contains an already-expanded one can be
    // skipped: the smaller subset rejects at least as much.
    if (subsumed(n.impl, n.subset)) continue;

    for (const Step& st : cimpl.at(n.impl)) {
      if (st.action.external) {
        uint32_t sub2 = view.step(n.subset, st.action.event);
        if (sub2 == DeterministicView::kDead) {
          res.pass = false;
          if (record) {
            res.counterexample = trail(arena, n.node);
            res.counterexample.push_back(st.action.event);
          }
          return res;
        }
        push(cimpl.id(st.next), sub2, n.depth + 1, n.node, &st.action.event);
      } else {
        push(cimpl.id(st.next), n.subset, n.depth, n.node, nullptr);
      }
    }
  }
  res.pass = true;
  return res;
}

}  // namespace

RefinementResult refines(const Automaton& spec, const Automaton& impl,
                         SearchLimits limits) {
  RefinementResult res = refines_search(spec, impl, limits, false);
  if (res.pass) return res;
  return refines_search(spec, impl, limits, true);
}

EquivalenceResult equivalent_lts(const Automaton& a, const Automaton& b,
                                 SearchLimits limits, int jobs) {
  EquivalenceResult res;
  RefinementResult dir0, dir1;
  if (jobs > 1) {
    std::exception_ptr e0, e1;
    std::thread t0([&] {
      try {
        dir0 = refines(a, b, limits);
      } catch (...) {
        e0 = std::current_exception();
      }
    });
    std::thread t1([&] {
      try {
        dir1 = refines(b, a, limits);
      } catch (...) {
        e1 = std::current_exception();
      }
    });
    t0.join();
    t1.join();
    if (e0) std::rethrow_exception(e0);
    if (e1) std::rethrow_exception(e1);
  } else {
    dir0 = refines(a, b, limits);
    dir1 = refines(b, a, limits);
  }
  if (!dir0.pass) {
    res.pass = false;
    res.direction = 0;
    res.counterexample = dir0.counterexample;
    return res;
  }
  if (!dir1.pass) {
    res.pass = false;
    res.direction = 1;
    res.counterexample = dir1.counterexample;
    return res;
  }
  res.pass = true;
  return res;
}

SimResult check_forward_simulation(const Automaton& impl,
                                   const Automaton& spec,
                                   const SimulationRelation& rel,
                                   SearchLimits limits) {
  SimResult res;
  StepCache ci(impl, limits.max_states), cs(spec, limits.max_states);
  std::unordered_set<uint64_t> seen;
  std::deque<uint64_t> work;

  auto push = [&](uint32_t c, uint32_t s) {
    uint64_t key = ((uint64_t)c << 32) | s;
    if (seen.size() >= limits.max_states)
      throw ResourceLimitError("state limit exceeded");
    if (seen.insert(key).second) work.push_back(key);
  };

  std::vector<uint32_t> spec_starts;
  for (const PackedState& s : spec.start_states())
    spec_starts.push_back(cs.id(s));
  for (const PackedState& c : impl.start_states()) {
    uint32_t ci0 = ci.id(c);
    bool any = false;
    for (uint32_t s : spec_starts) {
      if (rel.related(c, cs.intern.states[s])) {
        push(ci0, s);
        any = true;
      }
    }
    if (!any) {
      res.pass = false;
      res.reason = "no related abstract initial state";
      res.concrete = c;
      return res;
    }
  }

  while (!work.empty()) {
    uint64_t key = work.front();
    work.pop_front();
    ++res.pairs_explored;
    uint32_t c = (uint32_t)(key >> 32), s = (uint32_t)key;
    const PackedState& as = cs.intern.states[s];
    for (const Step& st : ci.at(c)) {
      const PackedState& c2 = st.next;
      uint32_t c2id = ci.id(c2);
      if (st.action.external) {
        bool any = false;
        for (const Step& at : cs.at(s)) {
          if (at.action.external && at.action.event == st.action.event &&
              rel.related(c2, at.next)) {
            push(c2id, cs.id(at.next));
            any = true;
          }
        }
        if (!any) {
          res.pass = false;
          res.reason = "no abstract step matches external event";
          res.concrete = ci.intern.states[c];
          res.abstract_ = as;
          res.action = st.action;
          return res;
        }
      } else {
        auto corr = rel.step_correspondence(st.action.internal,
                                            ci.intern.states[c], as);
        if (!corr) {
          if (!rel.related(c2, as)) {
            res.pass = false;
            res.reason = "relation broken by stuttering internal step";
            res.concrete = ci.intern.states[c];
            res.abstract_ = as;
            res.action = st.action;
            return res;
          }
          push(c2id, s);
        } else {
          bool any = false;
          for (const Step& at : cs.at(s)) {
            if (!at.action.external && at.action.internal == *corr &&
                rel.related(c2, at.next)) {
              push(c2id, cs.id(at.next));
              any = true;
            }
          }
          if (!any) {
            res.pass = false;
            res.reason = "designated abstract step " +
                         spec.describe_internal(*corr) +
                         " not enabled or breaks the relation";
            res.concrete = ci.intern.states[c];
            res.abstract_ = as;
            res.action = st.action;
            return res;
          }
        }
      }
    }
  }
  res.pass = true;
  return res;
}

}  // namespace tmv
