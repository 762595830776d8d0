#include "tmv/opacity.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

namespace tmv {

bool is_valid(const History& h) {
  const auto& ev = h.events;
  if (ev.size() % 2 != 0)
    throw std::invalid_argument("history is not fully matched");
  std::map<int, int> mem;  // absent means 0
  for (size_t i = 0; i < ev.size(); i += 2) {
    const Event& inv = ev[i];
    const Event& resp = ev[i + 1];
    if (!inv.is_inv() || !matches(inv, resp))
      throw std::invalid_argument("history is not alternating");
    if (inv.type == EventType::WriteInv && resp.type == EventType::WriteResp) {
      mem[inv.addr] = inv.value;
    } else if (inv.type == EventType::ReadInv &&
               resp.type == EventType::ReadResp) {
      auto it = mem.find(inv.addr);
      int cur = it == mem.end() ? 0 : it->second;
      if (cur != resp.value) return false;
    }
  }
  return true;
}

bool is_non_interleaved(const History& h) {
  const auto& ev = h.events;
  std::vector<size_t> begins;
  for (size_t i = 0; i < ev.size(); ++i)
    if (ev[i].type == EventType::BeginInv) begins.push_back(i);
  for (size_t k = 0; k + 1 < begins.size(); ++k) {
    size_t i = begins[k], j = begins[k + 1];
    int p = ev[i].txn;
    bool finished_between = false;
    for (size_t m = i + 1; m < j; ++m)
      if (ev[m].txn == p && (ev[m].type == EventType::CommitResp ||
                             ev[m].type == EventType::AbortResp))
        finished_between = true;
    if (finished_between) continue;
    for (size_t m = j + 1; m < ev.size(); ++m)
      if (ev[m].txn == p) return false;
  }
  return true;
}

bool is_legal(const History& h) {
  if (!is_non_interleaved(h))
    throw std::invalid_argument("is_legal requires a non-interleaved history");
  for (size_t i = 0; i < h.events.size(); ++i) {
    std::set<int> committed;
    for (size_t m = 0; m < i; ++m)
      if (h.events[m].type == EventType::CommitResp)
        committed.insert(h.events[m].txn);
    History sub;
    sub.bounds = h.bounds;
    for (size_t m = 0; m <= i; ++m)
      if (committed.count(h.events[m].txn) ||
          h.events[m].txn == h.events[i].txn)
        sub.events.push_back(h.events[m]);
    if (!is_valid(complete(sub))) return false;
  }
  return true;
}

bool is_sequential(const History& h) {
  return well_formed(h) && is_non_interleaved(h) && is_legal(h);
}

namespace {

// Flattens per-transaction blocks in the given order.
History lay_out(const History& ch, const std::vector<int>& order,
                const std::map<int, History>& proj) {
  History hs;
  hs.bounds = ch.bounds;
  for (int p : order) {
    const auto& block = proj.at(p).events;
    hs.events.insert(hs.events.end(), block.begin(), block.end());
  }
  return hs;
}

// All transaction orders consistent with the real-time order of ch, fed to
// `try_order` until it returns true.
bool search_orders(const std::vector<int>& ids,
                   const std::vector<std::pair<int, int>>& edges,
                   std::vector<int>& order, std::set<int>& used,
                   const std::function<bool(const std::vector<int>&)>& try_order) {
  if (order.size() == ids.size()) return try_order(order);
  for (int p : ids) {
    if (used.count(p)) continue;
    bool ready = true;
    for (auto [a, b] : edges)
      if (b == p && !used.count(a)) ready = false;
    if (!ready) continue;
    used.insert(p);
    order.push_back(p);
    if (search_orders(ids, edges, order, used, try_order)) return true;
    order.pop_back();
    used.erase(p);
  }
  return false;
}

}  // namespace

std::optional<OpacityWitness> end_to_end_opaque(const History& h) {
  for (History& he : extensions(h)) {
    History ch = complete(he);
    std::vector<int> ids;
    std::map<int, History> proj;
    for (int p : txn_ids(ch)) {
      History pp = project(ch, p);
      if (!pp.empty()) {
        ids.push_back(p);
        proj.emplace(p, std::move(pp));
      }
    }
    std::vector<std::pair<int, int>> edges;
    for (int p : ids)
      for (int q : ids)
        if (p != q && txn_precedes(ch, p, q)) edges.push_back({p, q});

    std::optional<OpacityWitness> found;
    std::vector<int> order;
    std::set<int> used;
    search_orders(ids, edges, order, used,
                  [&](const std::vector<int>& ord) {
                    History hs = lay_out(ch, ord, proj);
                    if (!is_legal(hs)) return false;
                    found = OpacityWitness{he, std::move(hs)};
                    return true;
                  });
    if (found) return found;
  }
  return std::nullopt;
}

bool is_opaque(const History& h) {
  return check_opacity(h, false).opaque;
}

OpacityReport check_opacity(const History& h, bool want_witnesses) {
  OpacityReport r{true, 0, {}};
  for (size_t n = 0; n <= h.events.size(); ++n) {
    History prefix{{h.events.begin(), h.events.begin() + n}, h.bounds};
    auto w = end_to_end_opaque(prefix);
    if (!w) {
      r.opaque = false;
      r.failing_prefix = n;
      r.witnesses.clear();
      return r;
    }
    if (want_witnesses) r.witnesses.push_back(std::move(*w));
  }
  return r;
}

namespace {

// Operation identity stable across reorderings: (txn, ordinal).
struct OpId {
  int txn;
  int ord;
  bool operator==(const OpId&) const = default;
};

struct OpInfo {
  Event inv, resp;
};

}  // namespace

Linearization construct_linearization_ex(const History& h) {
  if (!is_opaque(h))
    throw std::invalid_argument("construct_linearization requires opacity");
  auto w = end_to_end_opaque(h);
  History ch = complete(w->extension);

  // Ops of ch by (txn, ordinal), with cross-op real-time order.
  std::map<int, std::vector<OpInfo>> ops_of;
  std::vector<OpId> ch_order;
  {
    auto ops = matched_ops(ch);
    std::sort(ops.begin(), ops.end(),
              [](const OpOccurrence& a, const OpOccurrence& b) {
                return a.inv < b.inv;
              });
    std::map<int, int> count;
    for (const auto& o : ops) {
      int t = ch.events[o.inv].txn;
      ops_of[t].push_back({ch.events[o.inv], ch.events[o.resp]});
      ch_order.push_back({t, count[t]++});
    }
  }
  auto resp_pos = [&](const History& hist, const OpId& id) {
    int seen = 0;
    for (size_t i = 0; i < hist.events.size(); ++i)
      if (hist.events[i].txn == id.txn && hist.events[i].is_resp() &&
          seen++ == id.ord)
        return i;
    throw std::logic_error("op not found");
  };
  auto inv_pos = [&](const History& hist, const OpId& id) {
    int seen = 0;
    for (size_t i = 0; i < hist.events.size(); ++i)
      if (hist.events[i].txn == id.txn && hist.events[i].is_inv() &&
          seen++ == id.ord)
        return i;
    throw std::logic_error("op not found");
  };
  auto precedes_in_ch = [&](const OpId& a, const OpId& b) {
    return resp_pos(ch, a) < inv_pos(ch, b);
  };

  // Current candidate as an op sequence, initially the sequential witness.
  std::vector<OpId> cur;
  {
    std::map<int, int> count;
    for (const Event& e : w->sequential.events)
      if (e.is_inv()) cur.push_back({e.txn, count[e.txn]++});
  }

  size_t guard = cur.size() * cur.size() + 8;
  while (true) {
    // Minimum-distance mis-ordered pair: earlier in cur, later in ch's
    // operation real-time order.
    size_t best_i = 0, best_j = 0;
    bool found = false;
    for (size_t i = 0; i < cur.size(); ++i)
      for (size_t j = i + 1; j < cur.size(); ++j)
        if (precedes_in_ch(cur[j], cur[i]) &&
            (!found || j - i < best_j - best_i)) {
          best_i = i;
          best_j = j;
          found = true;
        }
    if (!found) break;
    if (guard-- == 0)
      throw std::logic_error("linearization did not converge");

    OpId ot = cur[best_i], otp = cur[best_j];
    cur.erase(cur.begin() + best_i);              // drop o_t
    if (ops_of[ot.txn][ot.ord].inv.type != EventType::BeginInv) {
      // ... g o_t' o_t ...
      cur.insert(cur.begin() + best_j, ot);
    } else {
      // ... o_t' o_t g ...
      cur.erase(cur.begin() + (best_j - 1));      // drop o_t'
      cur.insert(cur.begin() + best_i, ot);
      cur.insert(cur.begin() + best_i, otp);
    }
  }

  History ha;
  ha.bounds = ch.bounds;
  for (const OpId& id : cur) {
    ha.events.push_back(ops_of[id.txn][id.ord].inv);
    ha.events.push_back(ops_of[id.txn][id.ord].resp);
  }
  return {std::move(w->extension), std::move(ha)};
}

History construct_linearization(const History& h) {
  return construct_linearization_ex(h).linearization;
}

}  // namespace tmv
