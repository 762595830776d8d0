#include "tmv/history.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

namespace tmv {

Polarity Event::polarity() const {
  switch (type) {
    case EventType::BeginInv:
    case EventType::ReadInv:
    case EventType::WriteInv:
    case EventType::CommitInv:
      return Polarity::Inv;
    case EventType::AbortResp:
      return Polarity::AbortResp;
    default:
      return Polarity::Resp;
  }
}

std::optional<OpKind> Event::kind() const {
  switch (type) {
    case EventType::BeginInv:
    case EventType::BeginResp:
      return OpKind::Begin;
    case EventType::ReadInv:
    case EventType::ReadResp:
      return OpKind::Read;
    case EventType::WriteInv:
    case EventType::WriteResp:
      return OpKind::Write;
    case EventType::CommitInv:
    case EventType::CommitResp:
      return OpKind::Commit;
    case EventType::AbortResp:
      return std::nullopt;
  }
  return std::nullopt;
}

std::string Event::to_string() const {
  std::ostringstream os;
  switch (type) {
    case EventType::BeginInv:   os << "B " << txn; break;
    case EventType::BeginResp:  os << "Br " << txn; break;
    case EventType::ReadInv:    os << "R " << txn << " " << addr; break;
    case EventType::ReadResp:   os << "Rr " << txn << " " << value; break;
    case EventType::WriteInv:   os << "W " << txn << " " << addr << " " << value; break;
    case EventType::WriteResp:  os << "Wr " << txn; break;
    case EventType::CommitInv:  os << "C " << txn; break;
    case EventType::CommitResp: os << "Cr " << txn; break;
    case EventType::AbortResp:  os << "A " << txn; break;
  }
  return os.str();
}

Event begin_inv(int txn) { return {EventType::BeginInv, (int16_t)txn}; }
Event begin_resp(int txn) { return {EventType::BeginResp, (int16_t)txn}; }
Event read_inv(int txn, int addr) {
  return {EventType::ReadInv, (int16_t)txn, (int16_t)addr};
}
Event read_resp(int txn, int value) {
  return {EventType::ReadResp, (int16_t)txn, -1, value};
}
Event write_inv(int txn, int addr, int value) {
  return {EventType::WriteInv, (int16_t)txn, (int16_t)addr, value};
}
Event write_resp(int txn) { return {EventType::WriteResp, (int16_t)txn}; }
Event commit_inv(int txn) { return {EventType::CommitInv, (int16_t)txn}; }
Event commit_resp(int txn) { return {EventType::CommitResp, (int16_t)txn}; }
Event abort_resp(int txn) { return {EventType::AbortResp, (int16_t)txn}; }

bool matches(const Event& inv, const Event& resp) {
  if (inv.txn != resp.txn || !inv.is_inv() || !resp.is_resp()) return false;
  if (resp.type == EventType::AbortResp)
    return inv.type != EventType::BeginInv;
  return inv.kind() == resp.kind();
}

std::vector<int> txn_ids(const History& h) {
  std::vector<int> ids;
  for (const Event& e : h.events)
    if (std::find(ids.begin(), ids.end(), e.txn) == ids.end())
      ids.push_back(e.txn);
  std::sort(ids.begin(), ids.end());
  return ids;
}

History project(const History& h, int txn) {
  History r;
  r.bounds = h.bounds;
  for (const Event& e : h.events)
    if (e.txn == txn) r.events.push_back(e);
  return r;
}

TxnStatus txn_status(const History& h, int txn) {
  const Event* last = nullptr;
  for (const Event& e : h.events)
    if (e.txn == txn) last = &e;
  if (!last) return TxnStatus::NotPresent;
  if (last->type == EventType::CommitResp) return TxnStatus::Committed;
  if (last->type == EventType::AbortResp) return TxnStatus::Aborted;
  return TxnStatus::Live;
}

namespace {

// Checks one per-transaction projection: starts with Begin-Inv, Begin-Resp
// exactly at index 1, terminal responses only final, alternating with
// matching responses, and no second Begin-Inv.
bool projection_well_formed(const std::vector<Event>& p) {
  if (p.empty()) return true;
  if (p[0].type != EventType::BeginInv) return false;
  for (size_t i = 0; i < p.size(); ++i) {
    const Event& e = p[i];
    if (i % 2 == 0) {
      if (!e.is_inv()) return false;
      if (i > 0 && e.type == EventType::BeginInv) return false;
    } else {
      if (!matches(p[i - 1], e)) return false;
      if (e.type == EventType::BeginResp && i != 1) return false;
      bool terminal = e.type == EventType::CommitResp ||
                      e.type == EventType::AbortResp;
      if (terminal && i + 1 != p.size()) return false;
    }
  }
  return true;
}

}  // namespace

bool well_formed(const History& h) {
  std::map<int, std::vector<Event>> per_txn;
  for (const Event& e : h.events) per_txn[e.txn].push_back(e);
  for (const auto& [txn, p] : per_txn)
    if (!projection_well_formed(p)) return false;
  return true;
}

std::vector<size_t> match_events(const History& h) {
  constexpr size_t npos = (size_t)-1;
  std::vector<size_t> partner(h.events.size(), npos);
  std::map<int, size_t> pending;  // txn -> index of pending invocation
  for (size_t i = 0; i < h.events.size(); ++i) {
    const Event& e = h.events[i];
    if (e.is_inv()) {
      if (pending.count(e.txn))
        throw std::invalid_argument("overlapping invocations for txn " +
                                    std::to_string(e.txn));
      pending[e.txn] = i;
    } else {
      auto it = pending.find(e.txn);
      if (it == pending.end() || !matches(h.events[it->second], e))
        throw std::invalid_argument("response without matching invocation: " +
                                    e.to_string());
      partner[i] = it->second;
      partner[it->second] = i;
      pending.erase(it);
    }
  }
  return partner;
}

std::vector<OpOccurrence> matched_ops(const History& h) {
  auto partner = match_events(h);
  std::vector<OpOccurrence> ops;
  for (size_t i = 0; i < h.events.size(); ++i)
    if (h.events[i].is_inv() && partner[i] != (size_t)-1)
      ops.push_back({i, partner[i]});
  return ops;
}

History complete(const History& h) {
  auto partner = match_events(h);
  History r;
  r.bounds = h.bounds;
  for (size_t i = 0; i < h.events.size(); ++i)
    if (!(h.events[i].is_inv() && partner[i] == (size_t)-1))
      r.events.push_back(h.events[i]);
  return r;
}

std::vector<History> extensions(const History& h) {
  auto partner = match_events(h);
  // Candidate responses per pending invocation, ascending txn id.
  std::map<int, std::vector<Event>> candidates;
  for (size_t i = 0; i < h.events.size(); ++i) {
    if (!h.events[i].is_inv() || partner[i] != (size_t)-1) continue;
    const Event& inv = h.events[i];
    std::vector<Event> cs;
    switch (inv.type) {
      case EventType::BeginInv:
        cs.push_back(begin_resp(inv.txn));
        break;
      case EventType::ReadInv:
        for (int v = 0; v < std::max(h.bounds.vals, 1); ++v)
          cs.push_back(read_resp(inv.txn, v));
        cs.push_back(abort_resp(inv.txn));
        break;
      case EventType::WriteInv:
        cs.push_back(write_resp(inv.txn));
        cs.push_back(abort_resp(inv.txn));
        break;
      case EventType::CommitInv:
        cs.push_back(commit_resp(inv.txn));
        cs.push_back(abort_resp(inv.txn));
        break;
      default:
        break;
    }
    candidates[inv.txn] = std::move(cs);
  }

  std::vector<History> out;
  std::vector<Event> chosen;
  auto rec = [&](auto&& self, std::map<int, std::vector<Event>>::iterator it)
      -> void {
    if (it == candidates.end()) {
      History he = h;
      he.events.insert(he.events.end(), chosen.begin(), chosen.end());
      out.push_back(std::move(he));
      return;
    }
    auto next = std::next(it);
    self(self, next);  // leave this invocation pending
    for (const Event& c : it->second) {
      chosen.push_back(c);
      self(self, next);
      chosen.pop_back();
    }
  };
  rec(rec, candidates.begin());
  return out;
}

bool equivalent(const History& h1, const History& h2) {
  std::vector<int> ids = txn_ids(h1);
  for (int id : txn_ids(h2))
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
  for (int id : ids)
    if (project(h1, id).events != project(h2, id).events) return false;
  return true;
}

bool txn_precedes(const History& h, int p, int q) {
  TxnStatus sp = txn_status(h, p);
  if (sp != TxnStatus::Committed && sp != TxnStatus::Aborted) return false;
  size_t last_p = 0, first_q = 0;
  bool saw_p = false, saw_q = false;
  for (size_t i = 0; i < h.events.size(); ++i) {
    if (h.events[i].txn == p) { last_p = i; saw_p = true; }
    if (h.events[i].txn == q && !saw_q) { first_q = i; saw_q = true; }
  }
  return saw_p && saw_q && last_p < first_q;
}

bool op_precedes(const History& h, const OpOccurrence& o1,
                 const OpOccurrence& o2) {
  auto partner = match_events(h);
  auto check = [&](const OpOccurrence& o) {
    if (o.inv >= h.events.size() || o.resp >= h.events.size() ||
        partner[o.inv] != o.resp || !h.events[o.inv].is_inv())
      throw std::invalid_argument("occurrence is not a matched pair");
  };
  check(o1);
  check(o2);
  return o1.resp < o2.inv;
}

ParseError::ParseError(int line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what),
      line_(line) {}

namespace {

bool is_number(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isdigit(c); });
}

int parse_number(const std::string& s, int lineno, const char* what) {
  if (!is_number(s)) throw ParseError(lineno, std::string(what) + " expected, got '" + s + "'");
  return std::stoi(s);
}

}  // namespace

History parse_history(const std::string& text) {
  History h;
  std::map<std::string, int> symbols;
  bool have_header = false;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto pos = line.find('#'); pos != std::string::npos)
      line.resize(pos);
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;

    if (tok[0] == "bounds") {
      if (have_header || !h.events.empty())
        throw ParseError(lineno, "bounds header must come first");
      if (tok.size() != 4) throw ParseError(lineno, "bounds T A V");
      h.bounds.txns = parse_number(tok[1], lineno, "txn bound");
      h.bounds.addrs = parse_number(tok[2], lineno, "addr bound");
      h.bounds.vals = parse_number(tok[3], lineno, "value bound");
      have_header = true;
      continue;
    }

    auto addr_of = [&](const std::string& t) {
      if (is_number(t)) return std::stoi(t);
      auto [it, fresh] = symbols.emplace(t, (int)symbols.size());
      (void)fresh;
      return it->second;
    };

    const std::string& op = tok[0];
    size_t want = op == "W" ? 4 : (op == "R" || op == "Rr") ? 3 : 2;
    if (tok.size() != want)
      throw ParseError(lineno, "wrong argument count for '" + op + "'");
    int p = parse_number(tok[1], lineno, "txn id");
    if (op == "B") h.events.push_back(begin_inv(p));
    else if (op == "Br") h.events.push_back(begin_resp(p));
    else if (op == "R") h.events.push_back(read_inv(p, addr_of(tok[2])));
    else if (op == "Rr") h.events.push_back(read_resp(p, parse_number(tok[2], lineno, "value")));
    else if (op == "W") h.events.push_back(write_inv(p, addr_of(tok[2]), parse_number(tok[3], lineno, "value")));
    else if (op == "Wr") h.events.push_back(write_resp(p));
    else if (op == "C") h.events.push_back(commit_inv(p));
    else if (op == "Cr") h.events.push_back(commit_resp(p));
    else if (op == "A") h.events.push_back(abort_resp(p));
    else throw ParseError(lineno, "unknown event '" + op + "'");
  }

  // Symbolic addresses intern in first-seen order; on a numeric collision
  // the file mixes conventions, so reject it.
  Bounds derived{1, 1, 1};
  for (const Event& e : h.events) {
    derived.txns = std::max(derived.txns, e.txn + 1);
    derived.addrs = std::max(derived.addrs, e.addr + 1);
    derived.vals = std::max(derived.vals, e.value + 1);
  }
  if (!have_header) {
    derived.vals = std::max(derived.vals, 2);
    h.bounds = derived;
  } else if (derived.txns > h.bounds.txns || derived.addrs > h.bounds.addrs ||
             derived.vals > h.bounds.vals) {
    throw ParseError(lineno, "event outside declared bounds");
  }
  return h;
}

std::string serialize_history(const History& h) {
  std::ostringstream os;
  os << "bounds " << h.bounds.txns << " " << h.bounds.addrs << " "
     << h.bounds.vals << "\n";
  for (const Event& e : h.events) os << e.to_string() << "\n";
  return os.str();
}

}  // namespace tmv
