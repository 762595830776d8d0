#include "tmv/tms.hpp"

#include <sstream>
#include <stdexcept>

namespace tmv {

TmsAutomaton::TmsAutomaton(TmsVariant variant, Bounds bounds)
    : variant_(variant), bounds_(bounds) {
  if (bounds.txns < 1 || bounds.addrs < 1 || bounds.vals < 1)
    throw std::invalid_argument("bounds must be at least 1/1/1");
  StateLayout lay;
  int snapshots = bounds.txns + 1;  // one per writer commit plus the initial
  len_ = lay.alloc_count(snapshots);
  mem_.resize(snapshots);
  for (auto& snap : mem_) {
    snap.resize(bounds.addrs);
    for (auto& f : snap) f = lay.alloc_count(bounds.vals);
  }
  txns_.resize(bounds.txns);
  for (auto& t : txns_) {
    t.status = lay.alloc(4);
    t.paddr = lay.alloc_count(bounds.addrs);
    t.pval = lay.alloc_count(bounds.vals);
    t.begin_idx = lay.alloc_count(snapshots);
    t.rd_present.resize(bounds.addrs);
    t.rd_val.resize(bounds.addrs);
    t.wr_present.resize(bounds.addrs);
    t.wr_val.resize(bounds.addrs);
    for (int a = 0; a < bounds.addrs; ++a) {
      t.rd_present[a] = lay.alloc(1);
      t.rd_val[a] = lay.alloc_count(bounds.vals);
      t.wr_present[a] = lay.alloc(1);
      t.wr_val[a] = lay.alloc_count(bounds.vals);
    }
  }
}

std::string TmsAutomaton::name() const {
  return variant_ == TmsVariant::TMS2 ? "tms2" : "tms3";
}

std::vector<PackedState> TmsAutomaton::start_states() const {
  return {PackedState{}};  // one all-zero snapshot, every txn not started
}

TmsStatus TmsAutomaton::status(const PackedState& s, int txn) const {
  return (TmsStatus)txns_[txn].status.get(s);
}
int TmsAutomaton::pending_addr(const PackedState& s, int txn) const {
  return (int)txns_[txn].paddr.get(s);
}
int TmsAutomaton::pending_value(const PackedState& s, int txn) const {
  return (int)txns_[txn].pval.get(s);
}
uint32_t TmsAutomaton::begin_idx(const PackedState& s, int txn) const {
  return (uint32_t)txns_[txn].begin_idx.get(s);
}
uint32_t TmsAutomaton::max_idx(const PackedState& s) const {
  return (uint32_t)len_.get(s);
}
int TmsAutomaton::mem_at(const PackedState& s, uint32_t idx, int addr) const {
  return (int)mem_[idx][addr].get(s);
}

std::map<int, int> TmsAutomaton::rd_set(const PackedState& s, int txn) const {
  std::map<int, int> out;
  for (int a = 0; a < bounds_.addrs; ++a)
    if (txns_[txn].rd_present[a].get(s))
      out[a] = (int)txns_[txn].rd_val[a].get(s);
  return out;
}
std::map<int, int> TmsAutomaton::wr_set(const PackedState& s, int txn) const {
  std::map<int, int> out;
  for (int a = 0; a < bounds_.addrs; ++a)
    if (txns_[txn].wr_present[a].get(s))
      out[a] = (int)txns_[txn].wr_val[a].get(s);
  return out;
}

bool TmsAutomaton::rd_subset_of(const PackedState& s, int txn,
                                uint32_t idx) const {
  for (int a = 0; a < bounds_.addrs; ++a) {
    if (txns_[txn].rd_present[a].get(s) &&
        txns_[txn].rd_val[a].get(s) != mem_[idx][a].get(s))
      return false;
  }
  return true;
}

bool TmsAutomaton::valid_idx(const PackedState& s, int txn, uint32_t n) const {
  return begin_idx(s, txn) <= n && n <= max_idx(s) && rd_subset_of(s, txn, n);
}

void TmsAutomaton::enabled(const PackedState& s, std::vector<Step>& out) const {
  for (int t = 0; t < bounds_.txns; ++t) {
    const TxnFields& f = txns_[t];
    TmsStatus st = status(s, t);
    auto ext = [&](const Event& e, TmsStatus to) {
      PackedState n = s;
      f.status.set(n, (uint64_t)to);
      out.push_back({Action::ext(e), n});
    };
    switch (st) {
      case TmsStatus::NotStarted: {
        PackedState n = s;
        f.status.set(n, (uint64_t)TmsStatus::BeginPending);
        f.begin_idx.set(n, max_idx(s));
        out.push_back({Action::ext(begin_inv(t)), n});
        break;
      }
      case TmsStatus::BeginPending:
        ext(begin_resp(t), TmsStatus::Ready);
        ext(abort_resp(t), TmsStatus::Aborted);
        break;
      case TmsStatus::Ready:
        for (int a = 0; a < bounds_.addrs; ++a) {
          PackedState n = s;
          f.status.set(n, (uint64_t)TmsStatus::DoRead);
          f.paddr.set(n, a);
          out.push_back({Action::ext(read_inv(t, a)), n});
        }
        for (int a = 0; a < bounds_.addrs; ++a) {
          for (int v = 0; v < bounds_.vals; ++v) {
            PackedState n = s;
            f.status.set(n, (uint64_t)TmsStatus::DoWrite);
            f.paddr.set(n, a);
            f.pval.set(n, v);
            out.push_back({Action::ext(write_inv(t, a, v)), n});
          }
        }
        ext(commit_inv(t), TmsStatus::DoCommit);
        break;
      case TmsStatus::DoRead: {
        int a = pending_addr(s, t);
        bool wr_hit = f.wr_present[a].get(s);
        for (uint32_t n = 0; n <= max_idx(s); ++n) {
          if (!wr_hit && !valid_idx(s, t, n)) continue;
          PackedState ns = s;
          f.status.set(ns, (uint64_t)TmsStatus::ReadResp);
          if (wr_hit) {
            f.pval.set(ns, f.wr_val[a].get(s));
          } else {
            uint64_t v = mem_[n][a].get(s);
            f.pval.set(ns, v);
            f.rd_present[a].set(ns, 1);
            f.rd_val[a].set(ns, v);
          }
          out.push_back({Action::internal_step(
                             {kDoRead, (int16_t)t, (int16_t)a, -1, (int16_t)n}),
                         ns});
        }
        ext(abort_resp(t), TmsStatus::Aborted);
        break;
      }
      case TmsStatus::ReadResp:
        ext(read_resp(t, pending_value(s, t)), TmsStatus::Ready);
        ext(abort_resp(t), TmsStatus::Aborted);
        break;
      case TmsStatus::DoWrite: {
        int a = pending_addr(s, t);
        int v = pending_value(s, t);
        PackedState n = s;
        f.status.set(n, (uint64_t)TmsStatus::WriteResp);
        f.wr_present[a].set(n, 1);
        f.wr_val[a].set(n, v);
        out.push_back({Action::internal_step(
                           {kDoWrite, (int16_t)t, (int16_t)a, v, -1}),
                       n});
        ext(abort_resp(t), TmsStatus::Aborted);
        break;
      }
      case TmsStatus::WriteResp:
        ext(write_resp(t), TmsStatus::Ready);
        ext(abort_resp(t), TmsStatus::Aborted);
        break;
      case TmsStatus::DoCommit: {
        bool read_only = wr_set(s, t).empty();
        if (read_only) {
          if (variant_ == TmsVariant::TMS2) {
            for (uint32_t n = 0; n <= max_idx(s); ++n) {
              if (!valid_idx(s, t, n)) continue;
              PackedState ns = s;
              f.status.set(ns, (uint64_t)TmsStatus::CommitResp);
              out.push_back({Action::internal_step({kDoCommitReadOnly,
                                                    (int16_t)t, -1, -1,
                                                    (int16_t)n}),
                             ns});
            }
          } else {
            PackedState ns = s;
            f.status.set(ns, (uint64_t)TmsStatus::CommitResp);
            out.push_back({Action::internal_step(
                               {kDoCommitReadOnly, (int16_t)t, -1, -1, -1}),
                           ns});
          }
        }
        if (rd_subset_of(s, t, max_idx(s))) {
          PackedState ns = s;
          uint32_t idx = max_idx(s) + 1;
          len_.set(ns, idx);
          for (int a = 0; a < bounds_.addrs; ++a) {
            uint64_t v = f.wr_present[a].get(s) ? f.wr_val[a].get(s)
                                                : mem_[max_idx(s)][a].get(s);
            mem_[idx][a].set(ns, v);
          }
          f.status.set(ns, (uint64_t)TmsStatus::CommitResp);
          out.push_back({Action::internal_step(
                             {kDoCommitWriter, (int16_t)t, -1, -1, -1}),
                         ns});
        }
        ext(abort_resp(t), TmsStatus::Aborted);
        break;
      }
      case TmsStatus::CommitResp:
        ext(commit_resp(t), TmsStatus::Committed);
        break;
      case TmsStatus::Committed:
      case TmsStatus::Aborted:
        break;
    }
  }
}

std::string TmsAutomaton::describe_internal(const InternalAction& ia) const {
  std::ostringstream os;
  switch (ia.code) {
    case kDoRead:
      os << "DoRead(t" << ia.txn << ", a" << ia.addr << ", n=" << ia.idx << ")";
      break;
    case kDoWrite:
      os << "DoWrite(t" << ia.txn << ", a" << ia.addr << ", " << ia.value
         << ")";
      break;
    case kDoCommitReadOnly:
      os << "DoCommitReadOnly(t" << ia.txn;
      if (ia.idx >= 0) os << ", n=" << ia.idx;
      os << ")";
      break;
    case kDoCommitWriter:
      os << "DoCommitWriter(t" << ia.txn << ")";
      break;
    default:
      return Automaton::describe_internal(ia);
  }
  return os.str();
}

std::string TmsAutomaton::describe_state(const PackedState& s) const {
  static const char* names[] = {"notStarted", "beginPending", "ready",
                                "doRead",     "readResp",     "doWrite",
                                "writeResp",  "doCommit",     "commitResp",
                                "committed",  "aborted"};
  std::ostringstream os;
  os << "memSeq=[";
  for (uint32_t i = 0; i <= max_idx(s); ++i) {
    if (i) os << " ";
    for (int a = 0; a < bounds_.addrs; ++a) os << mem_at(s, i, a);
  }
  os << "]";
  for (int t = 0; t < bounds_.txns; ++t) {
    os << " t" << t << "{" << names[(int)status(s, t)];
    os << " bi=" << begin_idx(s, t);
    os << " rd={";
    for (auto [a, v] : rd_set(s, t)) os << "a" << a << ":" << v << " ";
    os << "} wr={";
    for (auto [a, v] : wr_set(s, t)) os << "a" << a << ":" << v << " ";
    os << "}}";
  }
  return os.str();
}

}  // namespace tmv
