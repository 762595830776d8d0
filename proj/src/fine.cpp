#include <algorithm>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "tmv/stm.hpp"

namespace tmv {

// Location 0 is the global version counter, 1 + a is address a. The three
// callbacks let the same micro operations run against shared memory
// directly or through a per-transaction store buffer.
struct FineAutomaton::MemOps {
  std::function<uint64_t(int)> load;
  std::function<bool(int, uint64_t)> store;  // false: buffer full
  std::function<std::optional<bool>(int, uint64_t, uint64_t)> cas;
};

FineAutomaton::FineAutomaton(StmKind kind, Bounds bounds, int bufsize)
    : kind_(kind), bounds_(bounds), bufsize_(bufsize) {
  if (bounds.txns < 1 || bounds.addrs < 1 || bounds.vals < 1)
    throw std::invalid_argument("bounds must be at least 1/1/1");
  if (bufsize < 0) throw std::invalid_argument("buffer size must be >= 0");
  StateLayout lay;
  uint64_t glb_range = 2 * (uint64_t)bounds.txns + 1;
  bool tml = kind == StmKind::TML;
  glb_ = lay.alloc_count(glb_range);
  mem_.resize(bounds.addrs);
  for (auto& f : mem_) f = lay.alloc_count(bounds.vals);
  txns_.resize(bounds.txns);
  for (auto& t : txns_) {
    t.pc = lay.alloc(5);
    t.loc = lay.alloc_count(glb_range);
    t.paddr = lay.alloc_count(bounds.addrs);
    t.pval = lay.alloc_count(bounds.vals);
    t.reg = lay.alloc_count(bounds.vals);
    if (!tml) {
      t.time = lay.alloc_count(glb_range);
      t.it = lay.alloc_count(bounds.addrs + 1);
      t.caller = lay.alloc(1);
      t.rdp.resize(bounds.addrs);
      t.rdv.resize(bounds.addrs);
      t.wrp.resize(bounds.addrs);
      t.wrv.resize(bounds.addrs);
      for (int a = 0; a < bounds.addrs; ++a) {
        t.rdp[a] = lay.alloc(1);
        t.rdv[a] = lay.alloc_count(bounds.vals);
        t.wrp[a] = lay.alloc(1);
        t.wrv[a] = lay.alloc_count(bounds.vals);
      }
    }
    if (bufsize > 0) {
      t.buflen = lay.alloc_count(bufsize + 1);
      t.buf.resize(bufsize);
      for (auto& [lf, vf] : t.buf) {
        lf = lay.alloc_count(bounds.addrs + 1);
        vf = lay.alloc_count(std::max<uint64_t>(glb_range, bounds.vals));
      }
    }
  }
}

std::string FineAutomaton::name() const {
  std::string base;
  switch (kind_) {
    case StmKind::TML: base = "tml"; break;
    case StmKind::NORec: base = "norec"; break;
    case StmKind::RONORec: base = "ronorec"; break;
  }
  if (bufsize_ > 0)
    base = "tso(" + base + ", " + std::to_string(bufsize_) + ")";
  return base;
}

std::vector<PackedState> FineAutomaton::start_states() const {
  return {PackedState{}};
}

FinePc FineAutomaton::pc(const PackedState& s, int txn) const {
  return (FinePc)txns_[txn].pc.get(s);
}
uint32_t FineAutomaton::glb(const PackedState& s) const {
  return (uint32_t)glb_.get(s);
}
uint32_t FineAutomaton::loc(const PackedState& s, int txn) const {
  return (uint32_t)txns_[txn].loc.get(s);
}
int FineAutomaton::mem_at(const PackedState& s, int addr) const {
  return (int)mem_[addr].get(s);
}
std::map<int, int> FineAutomaton::rd_set(const PackedState& s, int txn) const {
  std::map<int, int> out;
  if (kind_ == StmKind::TML) return out;
  for (int a = 0; a < bounds_.addrs; ++a)
    if (txns_[txn].rdp[a].get(s)) out[a] = (int)txns_[txn].rdv[a].get(s);
  return out;
}
std::map<int, int> FineAutomaton::wr_set(const PackedState& s, int txn) const {
  std::map<int, int> out;
  if (kind_ == StmKind::TML) return out;
  for (int a = 0; a < bounds_.addrs; ++a)
    if (txns_[txn].wrp[a].get(s)) out[a] = (int)txns_[txn].wrv[a].get(s);
  return out;
}
int FineAutomaton::buffer_len(const PackedState& s, int txn) const {
  return bufsize_ > 0 ? (int)txns_[txn].buflen.get(s) : 0;
}
std::pair<int, int> FineAutomaton::buffer_entry(const PackedState& s, int txn,
                                                int i) const {
  const auto& [lf, vf] = txns_[txn].buf[i];
  return {(int)lf.get(s), (int)vf.get(s)};
}

bool FineAutomaton::micro(PackedState& n, int t, MemOps& m) const {
  const TxnFields& f = txns_[t];
  bool tml = kind_ == StmKind::TML;
  int A = bounds_.addrs;
  auto set_pc = [&](FinePc to) { f.pc.set(n, (uint64_t)to); };
  switch ((FinePc)f.pc.get(n)) {
    case PcBeginLoop: {
      uint64_t g = m.load(0);
      f.loc.set(n, g);
      if (g % 2 == 0) set_pc(PcBeginDone);
      return true;
    }
    case PcReadEntry: {
      int a = (int)f.paddr.get(n);
      if (f.wrp[a].get(n)) {
        f.reg.set(n, f.wrv[a].get(n));
        set_pc(PcReadDone);
      } else if (kind_ == StmKind::RONORec && f.rdp[a].get(n)) {
        f.reg.set(n, f.rdv[a].get(n));
        set_pc(PcReadDone);
      } else {
        set_pc(PcReadLoad);
      }
      return true;
    }
    case PcReadLoad:
      f.reg.set(n, m.load(1 + (int)f.paddr.get(n)));
      set_pc(PcReadCheck);
      return true;
    case PcReadCheck: {
      uint64_t g = m.load(0);
      if (g == f.loc.get(n)) {
        if (!tml) {
          int a = (int)f.paddr.get(n);
          f.rdp[a].set(n, 1);
          f.rdv[a].set(n, f.reg.get(n));
        }
        set_pc(PcReadDone);
      } else if (tml) {
        set_pc(PcAbortDone);
      } else {
        f.caller.set(n, 0);
        set_pc(PcValSnap);
      }
      return true;
    }
    case PcWriteTest:
      set_pc(f.loc.get(n) % 2 == 0 ? PcWriteCas : PcWriteStore);
      return true;
    case PcWriteCas: {
      uint64_t loc = f.loc.get(n);
      auto r = m.cas(0, loc, loc + 1);
      if (!r) return false;
      if (*r) {
        f.loc.set(n, loc + 1);
        set_pc(PcWriteStore);
      } else {
        set_pc(PcAbortDone);
      }
      return true;
    }
    case PcWriteStore:
      if (!m.store(1 + (int)f.paddr.get(n), f.pval.get(n))) return false;
      set_pc(PcWriteDone);
      return true;
    case PcWriteEntry: {
      int a = (int)f.paddr.get(n);
      f.wrp[a].set(n, 1);
      f.wrv[a].set(n, f.pval.get(n));
      set_pc(PcWriteDone);
      return true;
    }
    case PcCommitTest:
      set_pc(f.loc.get(n) % 2 == 1 ? PcCommitRelease : PcCommitDone);
      return true;
    case PcCommitEntry: {
      bool empty = true;
      for (int a = 0; a < A && empty; ++a)
        if (f.wrp[a].get(n)) empty = false;
      set_pc(empty ? PcCommitDone : PcCommitCas);
      return true;
    }
    case PcCommitCas: {
      uint64_t loc = f.loc.get(n);
      auto r = m.cas(0, loc, loc + 1);
      if (!r) return false;
      if (*r) {
        f.it.set(n, 0);
        set_pc(PcCommitWb);
      } else {
        f.caller.set(n, 1);
        set_pc(PcValSnap);
      }
      return true;
    }
    case PcCommitWb: {
      int a = (int)f.it.get(n);
      while (a < A && !f.wrp[a].get(n)) ++a;
      if (a == A) {
        set_pc(PcCommitRelease);
        return true;
      }
      if (!m.store(1 + a, f.wrv[a].get(n))) return false;
      f.it.set(n, a + 1);
      return true;
    }
    case PcCommitRelease:
      if (!m.store(0, f.loc.get(n) + (tml ? 1 : 2))) return false;
      set_pc(PcCommitDone);
      return true;
    case PcValSnap: {
      uint64_t g = m.load(0);
      f.time.set(n, g);
      if (g % 2 == 0) {
        f.it.set(n, 0);
        set_pc(PcValIter);
      }
      return true;
    }
    case PcValIter: {
      int a = (int)f.it.get(n);
      while (a < A && !f.rdp[a].get(n)) ++a;
      if (a == A) {
        set_pc(PcValRecheck);
        return true;
      }
      if (m.load(1 + a) != f.rdv[a].get(n)) {
        set_pc(PcAbortDone);
      } else {
        f.it.set(n, a + 1);
      }
      return true;
    }
    case PcValRecheck: {
      uint64_t g = m.load(0);
      if (g == f.time.get(n)) {
        f.loc.set(n, f.time.get(n));
        set_pc(f.caller.get(n) == 0 ? PcReadLoad : PcCommitCas);
      } else {
        set_pc(PcValSnap);
      }
      return true;
    }
    default:
      return false;
  }
}

void FineAutomaton::enabled(const PackedState& s, std::vector<Step>& out) const {
  bool tml = kind_ == StmKind::TML;
  for (int t = 0; t < bounds_.txns; ++t) {
    const TxnFields& f = txns_[t];
    auto shared_get = [&](const PackedState& st, int l) {
      return l == 0 ? glb_.get(st) : mem_[l - 1].get(st);
    };
    auto shared_set = [&](PackedState& st, int l, uint64_t v) {
      if (l == 0)
        glb_.set(st, v);
      else
        mem_[l - 1].set(st, v);
    };
    auto ext = [&](const Event& e, FinePc to) {
      PackedState n = s;
      f.pc.set(n, (uint64_t)to);
      out.push_back({Action::ext(e), n});
    };
    switch (pc(s, t)) {
      case PcNotStarted:
        ext(begin_inv(t), PcBeginLoop);
        break;
      case PcBeginDone:
        ext(begin_resp(t), PcReady);
        break;
      case PcReady:
        for (int a = 0; a < bounds_.addrs; ++a) {
          PackedState n = s;
          f.paddr.set(n, a);
          f.pc.set(n, (uint64_t)(tml ? PcReadLoad : PcReadEntry));
          out.push_back({Action::ext(read_inv(t, a)), n});
        }
        for (int a = 0; a < bounds_.addrs; ++a) {
          for (int v = 0; v < bounds_.vals; ++v) {
            PackedState n = s;
            f.paddr.set(n, a);
            f.pval.set(n, v);
            f.pc.set(n, (uint64_t)(tml ? PcWriteTest : PcWriteEntry));
            out.push_back({Action::ext(write_inv(t, a, v)), n});
          }
        }
        ext(commit_inv(t), tml ? PcCommitTest : PcCommitEntry);
        break;
      case PcReadDone:
        ext(read_resp(t, (int)f.reg.get(s)), PcReady);
        break;
      case PcWriteDone:
        ext(write_resp(t), PcReady);
        break;
      case PcCommitDone:
        ext(commit_resp(t), PcCommitted);
        break;
      case PcAbortDone:
        ext(abort_resp(t), PcAborted);
        break;
      case PcCommitted:
      case PcAborted:
        break;
      default: {
        PackedState n = s;
        MemOps ops;
        if (bufsize_ == 0) {
          ops.load = [&](int l) { return shared_get(n, l); };
          ops.store = [&](int l, uint64_t v) {
            shared_set(n, l, v);
            return true;
          };
          ops.cas = [&](int l, uint64_t e, uint64_t d) -> std::optional<bool> {
            if (shared_get(n, l) != e) return false;
            shared_set(n, l, d);
            return true;
          };
        } else {
          ops.load = [&](int l) -> uint64_t {
            for (int i = (int)f.buflen.get(n) - 1; i >= 0; --i)
              if ((int)f.buf[i].first.get(n) == l)
                return f.buf[i].second.get(n);
            return shared_get(n, l);
          };
          ops.store = [&](int l, uint64_t v) {
            int len = (int)f.buflen.get(n);
            if (len >= bufsize_) return false;
            f.buf[len].first.set(n, l);
            f.buf[len].second.set(n, v);
            f.buflen.set(n, len + 1);
            return true;
          };
          ops.cas = [&](int l, uint64_t e, uint64_t d) -> std::optional<bool> {
            if (f.buflen.get(n) > 0) return std::nullopt;
            if (shared_get(n, l) != e) return false;
            shared_set(n, l, d);
            return true;
          };
        }
        if (micro(n, t, ops))
          out.push_back(
              {Action::internal_step(
                   {(uint16_t)(kMicroBase + (int)pc(s, t)), (int16_t)t, -1,
                    -1, -1}),
               n});
        break;
      }
    }
    if (bufsize_ > 0 && buffer_len(s, t) > 0) {
      PackedState n = s;
      int len = buffer_len(s, t);
      auto [l, v] = buffer_entry(s, t, 0);
      shared_set(n, l, v);
      for (int i = 0; i + 1 < len; ++i) {
        auto [l2, v2] = buffer_entry(s, t, i + 1);
        f.buf[i].first.set(n, l2);
        f.buf[i].second.set(n, v2);
      }
      f.buflen.set(n, len - 1);
      out.push_back({Action::internal_step(
                         {kFlush, (int16_t)t, (int16_t)l, v, -1}),
                     n});
    }
  }
}

static const char* pc_name(FinePc p) {
  static const char* names[] = {
      "notStarted",  "beginLoop",   "beginDone",  "ready",
      "readEntry",   "readLoad",    "readCheck",  "readDone",
      "writeTest",   "writeCas",    "writeStore", "writeEntry",
      "writeDone",   "commitTest",  "commitEntry", "commitCas",
      "commitWb",    "commitRelease", "commitDone", "valSnap",
      "valIter",     "valRecheck",  "abortDone",  "committed",
      "aborted"};
  return names[(int)p];
}

std::string FineAutomaton::describe_internal(const InternalAction& ia) const {
  std::ostringstream os;
  if (ia.code == kFlush) {
    os << "flush(t" << ia.txn << ", ";
    if (ia.addr == 0)
      os << "glb";
    else
      os << "a" << (ia.addr - 1);
    os << "=" << ia.value << ")";
    return os.str();
  }
  if (ia.code >= kMicroBase && ia.code < kMicroBase + 32) {
    os << pc_name((FinePc)(ia.code - kMicroBase)) << "(t" << ia.txn << ")";
    return os.str();
  }
  return Automaton::describe_internal(ia);
}

std::string FineAutomaton::describe_state(const PackedState& s) const {
  std::ostringstream os;
  os << "glb=" << glb(s) << " mem=[";
  for (int a = 0; a < bounds_.addrs; ++a) os << mem_at(s, a);
  os << "]";
  for (int t = 0; t < bounds_.txns; ++t) {
    os << " t" << t << "{" << pc_name(pc(s, t)) << " loc=" << loc(s, t);
    if (kind_ != StmKind::TML) {
      os << " rd={";
      for (auto [a, v] : rd_set(s, t)) os << "a" << a << ":" << v << " ";
      os << "} wr={";
      for (auto [a, v] : wr_set(s, t)) os << "a" << a << ":" << v << " ";
      os << "}";
    }
    if (bufsize_ > 0) {
      os << " buf=[";
      for (int i = 0; i < buffer_len(s, t); ++i) {
        auto [l, v] = buffer_entry(s, t, i);
        os << (l == 0 ? "glb" : "a" + std::to_string(l - 1)) << ":" << v
           << " ";
      }
      os << "]";
    }
    os << "}";
  }
  return os.str();
}

}  // namespace tmv
