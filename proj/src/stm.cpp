#include "tmv/stm.hpp"

#include <sstream>
#include <stdexcept>

namespace tmv {

CgaAutomaton::CgaAutomaton(StmKind kind, Bounds bounds)
    : kind_(kind), bounds_(bounds) {
  if (bounds.txns < 1 || bounds.addrs < 1 || bounds.vals < 1)
    throw std::invalid_argument("bounds must be at least 1/1/1");
  StateLayout lay;
  bool tml = kind == StmKind::TML;
  if (tml) glb_ = lay.alloc_count(2 * bounds.txns + 1);
  mem_.resize(bounds.addrs);
  for (auto& f : mem_) f = lay.alloc_count(bounds.vals);
  if (!tml) commit_count_ = lay.alloc_count(bounds.txns + 1);
  txns_.resize(bounds.txns);
  for (auto& t : txns_) {
    t.phase = lay.alloc(4);
    if (tml) t.loc = lay.alloc_count(2 * bounds.txns + 1);
    t.paddr = lay.alloc_count(bounds.addrs);
    t.pval = lay.alloc_count(bounds.vals);
    t.reg = lay.alloc_count(bounds.vals);
    if (kind == StmKind::RONORec) t.lva = lay.alloc_count(bounds.txns + 1);
    if (!tml) {
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
  }
}

std::string CgaAutomaton::name() const {
  switch (kind_) {
    case StmKind::TML: return "tml-cga";
    case StmKind::NORec: return "norec-cga";
    case StmKind::RONORec: return "ronorec-cga";
  }
  return "?";
}

std::vector<PackedState> CgaAutomaton::start_states() const {
  return {PackedState{}};
}

CgaPhase CgaAutomaton::phase(const PackedState& s, int txn) const {
  return (CgaPhase)txns_[txn].phase.get(s);
}
int CgaAutomaton::mem_at(const PackedState& s, int addr) const {
  return (int)mem_[addr].get(s);
}
int CgaAutomaton::pending_addr(const PackedState& s, int txn) const {
  return (int)txns_[txn].paddr.get(s);
}
int CgaAutomaton::pending_value(const PackedState& s, int txn) const {
  return (int)txns_[txn].pval.get(s);
}
int CgaAutomaton::read_reg(const PackedState& s, int txn) const {
  return (int)txns_[txn].reg.get(s);
}
uint32_t CgaAutomaton::glb(const PackedState& s) const {
  return (uint32_t)glb_.get(s);
}
uint32_t CgaAutomaton::loc(const PackedState& s, int txn) const {
  return (uint32_t)txns_[txn].loc.get(s);
}
uint32_t CgaAutomaton::commit_count(const PackedState& s) const {
  return (uint32_t)commit_count_.get(s);
}
uint32_t CgaAutomaton::last_validated(const PackedState& s, int txn) const {
  return (uint32_t)txns_[txn].lva.get(s);
}

std::map<int, int> CgaAutomaton::rd_set(const PackedState& s, int txn) const {
  std::map<int, int> out;
  if (kind_ == StmKind::TML) return out;
  for (int a = 0; a < bounds_.addrs; ++a)
    if (txns_[txn].rdp[a].get(s)) out[a] = (int)txns_[txn].rdv[a].get(s);
  return out;
}
std::map<int, int> CgaAutomaton::wr_set(const PackedState& s, int txn) const {
  std::map<int, int> out;
  if (kind_ == StmKind::TML) return out;
  for (int a = 0; a < bounds_.addrs; ++a)
    if (txns_[txn].wrp[a].get(s)) out[a] = (int)txns_[txn].wrv[a].get(s);
  return out;
}

bool CgaAutomaton::rd_subset_of_mem(const PackedState& s, int txn) const {
  for (int a = 0; a < bounds_.addrs; ++a)
    if (txns_[txn].rdp[a].get(s) &&
        txns_[txn].rdv[a].get(s) != mem_[a].get(s))
      return false;
  return true;
}

void CgaAutomaton::enabled(const PackedState& s, std::vector<Step>& out) const {
  bool tml = kind_ == StmKind::TML;
  for (int t = 0; t < bounds_.txns; ++t) {
    const TxnFields& f = txns_[t];
    auto ext = [&](const Event& e, CgaPhase to) {
      PackedState n = s;
      f.phase.set(n, (uint64_t)to);
      out.push_back({Action::ext(e), n});
    };
    auto body = [&](uint16_t code, const PackedState& n, int addr = -1,
                    int value = -1) {
      out.push_back({Action::internal_step(
                         {code, (int16_t)t, (int16_t)addr, value, -1}),
                     n});
    };
    switch (phase(s, t)) {
      case CgaPhase::NotStarted: {
        PackedState n = s;
        if (tml) {
          f.phase.set(n, (uint64_t)CgaPhase::BeginPend);
        } else {
          f.phase.set(n, (uint64_t)CgaPhase::BeginDone);
          if (kind_ == StmKind::RONORec) f.lva.set(n, commit_count(s));
        }
        out.push_back({Action::ext(begin_inv(t)), n});
        break;
      }
      case CgaPhase::BeginPend:  // TML: blocked until the counter is even
        if (glb(s) % 2 == 0) {
          PackedState n = s;
          f.loc.set(n, glb(s));
          f.phase.set(n, (uint64_t)CgaPhase::BeginDone);
          body(kCgaBegin, n);
        }
        break;
      case CgaPhase::BeginDone:
        ext(begin_resp(t), CgaPhase::Ready);
        break;
      case CgaPhase::Ready:
        for (int a = 0; a < bounds_.addrs; ++a) {
          PackedState n = s;
          f.phase.set(n, (uint64_t)CgaPhase::ReadPend);
          f.paddr.set(n, a);
          out.push_back({Action::ext(read_inv(t, a)), n});
        }
        for (int a = 0; a < bounds_.addrs; ++a) {
          for (int v = 0; v < bounds_.vals; ++v) {
            PackedState n = s;
            f.phase.set(n, (uint64_t)CgaPhase::WritePend);
            f.paddr.set(n, a);
            f.pval.set(n, v);
            out.push_back({Action::ext(write_inv(t, a, v)), n});
          }
        }
        ext(commit_inv(t), CgaPhase::CommitPend);
        break;
      case CgaPhase::ReadPend: {
        int a = pending_addr(s, t);
        PackedState n = s;
        if (tml) {
          if (glb(s) == loc(s, t)) {
            f.reg.set(n, mem_[a].get(s));
            f.phase.set(n, (uint64_t)CgaPhase::ReadDone);
          } else {
            f.phase.set(n, (uint64_t)CgaPhase::AbortReadPend);
          }
        } else if (f.wrp[a].get(s)) {
          f.reg.set(n, f.wrv[a].get(s));
          f.phase.set(n, (uint64_t)CgaPhase::ReadDone);
        } else if (kind_ == StmKind::RONORec && f.rdp[a].get(s)) {
          f.reg.set(n, f.rdv[a].get(s));
          f.phase.set(n, (uint64_t)CgaPhase::ReadDone);
        } else if (rd_subset_of_mem(s, t)) {
          uint64_t v = mem_[a].get(s);
          f.reg.set(n, v);
          f.rdp[a].set(n, 1);
          f.rdv[a].set(n, v);
          if (kind_ == StmKind::RONORec) f.lva.set(n, commit_count(s));
          f.phase.set(n, (uint64_t)CgaPhase::ReadDone);
        } else {
          f.phase.set(n, (uint64_t)CgaPhase::AbortReadPend);
        }
        body(kCgaRead, n, a);
        break;
      }
      case CgaPhase::ReadDone:
        ext(read_resp(t, read_reg(s, t)), CgaPhase::Ready);
        break;
      case CgaPhase::WritePend: {
        int a = pending_addr(s, t);
        int v = pending_value(s, t);
        PackedState n = s;
        if (tml) {
          if (glb(s) != loc(s, t)) {
            f.phase.set(n, (uint64_t)CgaPhase::AbortWritePend);
          } else {
            if (loc(s, t) % 2 == 0) {
              f.loc.set(n, loc(s, t) + 1);
              glb_.set(n, glb(s) + 1);
            }
            mem_[a].set(n, v);
            f.phase.set(n, (uint64_t)CgaPhase::WriteDone);
          }
        } else {
          f.wrp[a].set(n, 1);
          f.wrv[a].set(n, v);
          f.phase.set(n, (uint64_t)CgaPhase::WriteDone);
        }
        body(kCgaWrite, n, a, v);
        break;
      }
      case CgaPhase::WriteDone:
        ext(write_resp(t), CgaPhase::Ready);
        break;
      case CgaPhase::CommitPend: {
        PackedState n = s;
        if (tml) {
          if (loc(s, t) % 2 == 1) glb_.set(n, glb(s) + 1);
          f.phase.set(n, (uint64_t)CgaPhase::CommitDone);
        } else if (wr_set(s, t).empty()) {
          f.phase.set(n, (uint64_t)CgaPhase::CommitDone);
        } else if (rd_subset_of_mem(s, t)) {
          for (int a = 0; a < bounds_.addrs; ++a)
            if (f.wrp[a].get(s)) mem_[a].set(n, f.wrv[a].get(s));
          commit_count_.set(n, commit_count(s) + 1);
          f.phase.set(n, (uint64_t)CgaPhase::CommitDone);
        } else {
          f.phase.set(n, (uint64_t)CgaPhase::AbortCommitPend);
        }
        body(kCgaCommit, n);
        break;
      }
      case CgaPhase::CommitDone:
        ext(commit_resp(t), CgaPhase::Committed);
        break;
      case CgaPhase::AbortReadPend:
      case CgaPhase::AbortWritePend:
      case CgaPhase::AbortCommitPend:
        ext(abort_resp(t), CgaPhase::Aborted);
        break;
      case CgaPhase::Committed:
      case CgaPhase::Aborted:
        break;
    }
  }
}

std::string CgaAutomaton::describe_internal(const InternalAction& ia) const {
  std::ostringstream os;
  switch (ia.code) {
    case kCgaBegin: os << "ATXBegin(t" << ia.txn << ")"; break;
    case kCgaRead: os << "ATXRead(t" << ia.txn << ", a" << ia.addr << ")"; break;
    case kCgaWrite:
      os << "ATXWrite(t" << ia.txn << ", a" << ia.addr << ", " << ia.value
         << ")";
      break;
    case kCgaCommit: os << "ATXCommit(t" << ia.txn << ")"; break;
    default: return Automaton::describe_internal(ia);
  }
  return os.str();
}

static const char* phase_name(CgaPhase p) {
  static const char* names[] = {
      "notStarted",  "beginPend",  "beginDone",  "ready",
      "readPend",    "readDone",   "writePend",  "writeDone",
      "commitPend",  "commitDone", "abortReadPend", "abortWritePend",
      "abortCommitPend", "committed", "aborted"};
  return names[(int)p];
}

std::string CgaAutomaton::describe_state(const PackedState& s) const {
  std::ostringstream os;
  if (kind_ == StmKind::TML) os << "glb=" << glb(s) << " ";
  os << "mem=[";
  for (int a = 0; a < bounds_.addrs; ++a) os << mem_at(s, a);
  os << "]";
  if (kind_ != StmKind::TML) os << " cc=" << commit_count(s);
  for (int t = 0; t < bounds_.txns; ++t) {
    os << " t" << t << "{" << phase_name(phase(s, t));
    if (kind_ == StmKind::TML) os << " loc=" << loc(s, t);
    if (kind_ == StmKind::RONORec) os << " lva=" << last_validated(s, t);
    if (kind_ != StmKind::TML) {
      os << " rd={";
      for (auto [a, v] : rd_set(s, t)) os << "a" << a << ":" << v << " ";
      os << "} wr={";
      for (auto [a, v] : wr_set(s, t)) os << "a" << a << ":" << v << " ";
      os << "}";
    }
    os << "}";
  }
  return os.str();
}

namespace {

// Expected abstract status per CGA phase; pending argument agreement is
// checked separately.
bool status_corresponds(const CgaAutomaton& c, const PackedState& cs,
                        const TmsAutomaton& a, const PackedState& as, int t) {
  TmsStatus st = a.status(as, t);
  switch (c.phase(cs, t)) {
    case CgaPhase::NotStarted: return st == TmsStatus::NotStarted;
    case CgaPhase::BeginPend:
    case CgaPhase::BeginDone: return st == TmsStatus::BeginPending;
    case CgaPhase::Ready: return st == TmsStatus::Ready;
    case CgaPhase::ReadPend:
    case CgaPhase::AbortReadPend:
      return st == TmsStatus::DoRead &&
             a.pending_addr(as, t) == c.pending_addr(cs, t);
    case CgaPhase::ReadDone:
      return st == TmsStatus::ReadResp &&
             a.pending_value(as, t) == c.read_reg(cs, t);
    case CgaPhase::WritePend:
    case CgaPhase::AbortWritePend:
      return st == TmsStatus::DoWrite &&
             a.pending_addr(as, t) == c.pending_addr(cs, t) &&
             a.pending_value(as, t) == c.pending_value(cs, t);
    case CgaPhase::WriteDone: return st == TmsStatus::WriteResp;
    case CgaPhase::CommitPend:
    case CgaPhase::AbortCommitPend: return st == TmsStatus::DoCommit;
    case CgaPhase::CommitDone: return st == TmsStatus::CommitResp;
    case CgaPhase::Committed: return st == TmsStatus::Committed;
    case CgaPhase::Aborted: return st == TmsStatus::Aborted;
  }
  return false;
}

// Phases where the transaction's local snapshot variables are meaningful.
bool in_window(CgaPhase p) {
  return ((int)p >= (int)CgaPhase::BeginDone &&
          (int)p <= (int)CgaPhase::CommitPend) ||
         ((int)p >= (int)CgaPhase::AbortReadPend &&
          (int)p <= (int)CgaPhase::AbortCommitPend);
}

bool map_subset_of_snapshot(const std::map<int, int>& m,
                            const TmsAutomaton& a, const PackedState& as,
                            uint32_t idx) {
  for (auto [addr, v] : m)
    if (a.mem_at(as, idx, addr) != v) return false;
  return true;
}

}  // namespace

SimulationRelation tml_cga_vs_tms2(const CgaAutomaton& impl,
                                   const TmsAutomaton& spec) {
  const CgaAutomaton* c = &impl;
  const TmsAutomaton* a = &spec;
  SimulationRelation rel;
  rel.related = [c, a](const PackedState& cs, const PackedState& as) {
    Bounds b = c->bounds();
    int writer = -1;
    for (int t = 0; t < b.txns; ++t) {
      if (!status_corresponds(*c, cs, *a, as, t)) return false;
      if (in_window(c->phase(cs, t)) && c->loc(cs, t) % 2 == 1) {
        if (writer >= 0) return false;  // at most one lock holder
        writer = t;
      }
    }
    std::map<int, int> wr =
        writer >= 0 ? a->wr_set(as, writer) : std::map<int, int>{};
    uint32_t max_idx = a->max_idx(as);
    for (int addr = 0; addr < b.addrs; ++addr) {
      int expect = wr.count(addr) ? wr[addr] : a->mem_at(as, max_idx, addr);
      if (c->mem_at(cs, addr) != expect) return false;
    }
    for (int t = 0; t < b.txns; ++t) {
      if (!in_window(c->phase(cs, t))) continue;
      uint32_t loc = c->loc(cs, t);
      if ((loc % 2 == 0) != a->wr_set(as, t).empty()) return false;
      if (loc % 2 == 1 && c->glb(cs) != loc) return false;
      if (!(a->begin_idx(as, t) <= loc / 2 && loc / 2 <= max_idx))
        return false;
      if (!map_subset_of_snapshot(a->rd_set(as, t), *a, as, loc / 2))
        return false;
    }
    return true;
  };
  rel.step_correspondence =
      [c](const InternalAction& ia, const PackedState& cs,
          const PackedState&) -> std::optional<InternalAction> {
    int t = ia.txn;
    uint32_t loc = c->loc(cs, t);
    switch (ia.code) {
      case kCgaBegin:
        return std::nullopt;
      case kCgaRead:
        if (c->glb(cs) != loc) return std::nullopt;
        return InternalAction{kDoRead, (int16_t)t,
                              (int16_t)c->pending_addr(cs, t), -1,
                              (int16_t)(loc / 2)};
      case kCgaWrite:
        if (c->glb(cs) != loc) return std::nullopt;
        return InternalAction{kDoWrite, (int16_t)t,
                              (int16_t)c->pending_addr(cs, t),
                              c->pending_value(cs, t), -1};
      case kCgaCommit:
        if (loc % 2 == 0)
          return InternalAction{kDoCommitReadOnly, (int16_t)t, -1, -1,
                                (int16_t)(loc / 2)};
        return InternalAction{kDoCommitWriter, (int16_t)t, -1, -1, -1};
    }
    return std::nullopt;
  };
  return rel;
}

namespace {

SimulationRelation norec_family_vs_tms3(const CgaAutomaton& impl,
                                        const TmsAutomaton& spec,
                                        bool read_only_variant) {
  const CgaAutomaton* c = &impl;
  const TmsAutomaton* a = &spec;
  SimulationRelation rel;
  rel.related = [c, a, read_only_variant](const PackedState& cs,
                                          const PackedState& as) {
    Bounds b = c->bounds();
    if (c->commit_count(cs) != a->max_idx(as)) return false;
    for (int addr = 0; addr < b.addrs; ++addr)
      if (c->mem_at(cs, addr) != a->mem_at(as, a->max_idx(as), addr))
        return false;
    for (int t = 0; t < b.txns; ++t) {
      if (!status_corresponds(*c, cs, *a, as, t)) return false;
      if (c->rd_set(cs, t) != a->rd_set(as, t)) return false;
      if (c->wr_set(cs, t) != a->wr_set(as, t)) return false;
      if (read_only_variant && in_window(c->phase(cs, t))) {
        uint32_t lva = c->last_validated(cs, t);
        if (!(a->begin_idx(as, t) <= lva && lva <= a->max_idx(as)))
          return false;
        if (!map_subset_of_snapshot(a->rd_set(as, t), *a, as, lva))
          return false;
      }
    }
    return true;
  };
  rel.step_correspondence =
      [c, read_only_variant](const InternalAction& ia, const PackedState& cs,
                             const PackedState&)
      -> std::optional<InternalAction> {
    int t = ia.txn;
    auto rd = c->rd_set(cs, t);
    auto wr = c->wr_set(cs, t);
    auto rd_valid = [&] {
      for (auto [addr, v] : rd)
        if (c->mem_at(cs, addr) != v) return false;
      return true;
    };
    switch (ia.code) {
      case kCgaRead: {
        int addr = c->pending_addr(cs, t);
        if (wr.count(addr))
          return InternalAction{kDoRead, (int16_t)t, (int16_t)addr, -1,
                                (int16_t)c->commit_count(cs)};
        if (read_only_variant && rd.count(addr))
          return InternalAction{kDoRead, (int16_t)t, (int16_t)addr, -1,
                                (int16_t)c->last_validated(cs, t)};
        if (rd_valid())
          return InternalAction{kDoRead, (int16_t)t, (int16_t)addr, -1,
                                (int16_t)c->commit_count(cs)};
        return std::nullopt;
      }
      case kCgaWrite:
        return InternalAction{kDoWrite, (int16_t)t,
                              (int16_t)c->pending_addr(cs, t),
                              c->pending_value(cs, t), -1};
      case kCgaCommit:
        if (wr.empty())
          return InternalAction{kDoCommitReadOnly, (int16_t)t, -1, -1, -1};
        if (rd_valid())
          return InternalAction{kDoCommitWriter, (int16_t)t, -1, -1, -1};
        return std::nullopt;
    }
    return std::nullopt;
  };
  return rel;
}

}  // namespace

SimulationRelation norec_cga_vs_tms3(const CgaAutomaton& impl,
                                     const TmsAutomaton& spec) {
  return norec_family_vs_tms3(impl, spec, false);
}

SimulationRelation ronorec_cga_vs_tms3(const CgaAutomaton& impl,
                                       const TmsAutomaton& spec) {
  return norec_family_vs_tms3(impl, spec, true);
}

SimulationRelation tms_vs_tms(const TmsAutomaton&,
                              const TmsAutomaton& spec) {
  const TmsAutomaton* a = &spec;
  bool to_tms2 = spec.variant() == TmsVariant::TMS2;
  SimulationRelation rel;
  rel.related = [](const PackedState& cs, const PackedState& as) {
    return cs == as;
  };
  rel.step_correspondence =
      [a, to_tms2](const InternalAction& ia, const PackedState&,
                   const PackedState& as) -> std::optional<InternalAction> {
    if (ia.code != kDoCommitReadOnly) return ia;
    if (!to_tms2)
      return InternalAction{kDoCommitReadOnly, ia.txn, -1, -1, -1};
    // A live read-only transaction always has some snapshot it is
    // consistent with; pick the first.
    for (uint32_t n = a->begin_idx(as, ia.txn); n <= a->max_idx(as); ++n)
      if (a->valid_idx(as, ia.txn, n))
        return InternalAction{kDoCommitReadOnly, ia.txn, -1, -1, (int16_t)n};
    return InternalAction{kDoCommitReadOnly, ia.txn, -1, -1, -2};
  };
  return rel;
}

}  // namespace tmv
