#include "tmv/linearizability.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <unordered_set>

namespace tmv {

namespace {

bool alternating(const History& h) {
  if (h.events.size() % 2 != 0) return false;
  for (size_t i = 0; i + 1 < h.events.size(); i += 2) {
    if (!h.events[i].is_inv() || !matches(h.events[i], h.events[i + 1]))
      return false;
  }
  return true;
}

// Per-txn ordinal identity of an op, stable across equivalent histories.
std::map<std::pair<int, int>, OpOccurrence> ops_by_identity(
    const History& h, const std::vector<OpOccurrence>& ops) {
  std::map<int, int> counts;
  std::map<std::pair<int, int>, OpOccurrence> out;
  std::vector<OpOccurrence> sorted = ops;
  std::sort(sorted.begin(), sorted.end(),
            [](const OpOccurrence& a, const OpOccurrence& b) {
              return a.inv < b.inv;
            });
  for (const OpOccurrence& op : sorted) {
    int txn = h.events[op.inv].txn;
    out.emplace(std::make_pair(txn, counts[txn]++), op);
  }
  return out;
}

}  // namespace

bool lin(const History& h, const History& ha) {
  if (!well_formed(h)) throw std::invalid_argument("lin: malformed history");
  History ch = complete(h);
  if (!alternating(ha)) return false;
  if (!equivalent(ch, ha)) return false;

  auto ch_ops = ops_by_identity(ch, matched_ops(ch));
  auto ha_ops = ops_by_identity(ha, matched_ops(ha));
  if (ch_ops.size() != ha_ops.size()) return false;

  for (const auto& [id1, o1] : ch_ops) {
    for (const auto& [id2, o2] : ch_ops) {
      if (o1.resp < o2.inv) {
        if (!(ha_ops.at(id1).resp < ha_ops.at(id2).inv)) return false;
      }
    }
  }
  return true;
}

namespace {

struct SearchKey {
  uint32_t subset;
  uint64_t done;
  bool operator==(const SearchKey&) const = default;
};

struct SearchKeyHash {
  size_t operator()(const SearchKey& k) const {
    uint64_t x = k.done * 0x9e3779b97f4a7c15ull ^ k.subset;
    x ^= x >> 29; x *= 0xbf58476d1ce4e5b9ull;
    return x ^ (x >> 32);
  }
};

// Depth-first placement of complete operations in some order that
// respects precedence and stays within the spec's traces. Dead
// (subset, placed-set) pairs are memoised.
struct PlacementSearch {
  DeterministicView& view;
  const std::vector<Event>& invs;
  const std::vector<Event>& resps;
  const std::vector<uint64_t>& preds;
  std::unordered_set<SearchKey, SearchKeyHash> dead;
  std::vector<size_t> order;

  bool run(uint32_t subset, uint64_t done) {
    size_t m = invs.size();
    if (done == (m == 64 ? ~0ull : (1ull << m) - 1)) return true;
    SearchKey key{subset, done};
    if (dead.count(key)) return false;
    for (size_t i = 0; i < m; ++i) {
      if (done & (1ull << i)) continue;
      if (preds[i] & ~done) continue;
      uint32_t s1 = view.step(subset, invs[i]);
      if (s1 == DeterministicView::kDead) continue;
      uint32_t s2 = view.step(s1, resps[i]);
      if (s2 == DeterministicView::kDead) continue;
      order.push_back(i);
      if (run(s2, done | (1ull << i))) return true;
      order.pop_back();
    }
    dead.insert(key);
    return false;
  }
};

}  // namespace

std::optional<Linearization> linearized_by(const History& h,
                                           const Automaton& spec,
                                           int64_t depth,
                                           SearchLimits limits) {
  if (!well_formed(h))
    throw std::invalid_argument("linearized_by: malformed history");
  DeterministicView view(spec, limits);
  for (const History& he : extensions(h)) {
    History ch = complete(he);
    std::vector<OpOccurrence> ops = matched_ops(ch);
    std::sort(ops.begin(), ops.end(),
              [](const OpOccurrence& a, const OpOccurrence& b) {
                return a.inv < b.inv;
              });
    size_t m = ops.size();
    if ((int64_t)(2 * m) > depth) continue;
    if (m >= 64)
      throw ResourceLimitError("too many operations for placement search");

    std::vector<Event> invs(m), resps(m);
    std::vector<uint64_t> preds(m, 0);
    for (size_t i = 0; i < m; ++i) {
      invs[i] = ch.events[ops[i].inv];
      resps[i] = ch.events[ops[i].resp];
      for (size_t j = 0; j < m; ++j) {
        if (ops[j].resp < ops[i].inv) preds[i] |= 1ull << j;
      }
    }

    PlacementSearch search{view, invs, resps, preds, {}, {}};
    if (search.run(view.start(), 0)) {
      Linearization out;
      out.extension = he;
      out.linearization.bounds = ch.bounds;
      for (size_t i : search.order) {
        out.linearization.events.push_back(invs[i]);
        out.linearization.events.push_back(resps[i]);
      }
      return out;
    }
  }
  return std::nullopt;
}

}  // namespace tmv
