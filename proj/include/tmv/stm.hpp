// The TML and NORec transactional mutual exclusion algorithms, their
// read-only-optimised NORec variant, the coarse-grained single-action
// abstractions of each, and the simulation relations tying the
// abstractions to the TMS specifications.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tmv/automaton.hpp"
#include "tmv/history.hpp"
#include "tmv/tms.hpp"

namespace tmv {

enum class StmKind { TML, NORec, RONORec };

// Internal action codes, continuing the TMS numbering.
enum : uint16_t {
  kCgaBegin = 10,
  kCgaRead = 11,
  kCgaWrite = 12,
  kCgaCommit = 13,
  kMicroBase = 20,  // kMicroBase + pc of the executed micro step
  kFlush = 60,
};

// Operation bodies run as single atomic actions between the invocation
// and response events; an aborting body parks the transaction in the
// matching Abort*Pend phase until the abort response is delivered.
enum class CgaPhase : uint8_t {
  NotStarted,
  BeginPend,
  BeginDone,
  Ready,
  ReadPend,
  ReadDone,
  WritePend,
  WriteDone,
  CommitPend,
  CommitDone,
  AbortReadPend,
  AbortWritePend,
  AbortCommitPend,
  Committed,
  Aborted,
};

class CgaAutomaton : public Automaton {
 public:
  CgaAutomaton(StmKind kind, Bounds bounds);

  std::string name() const override;
  Bounds bounds() const override { return bounds_; }
  std::vector<PackedState> start_states() const override;
  void enabled(const PackedState& s, std::vector<Step>& out) const override;
  std::string describe_state(const PackedState& s) const override;
  std::string describe_internal(const InternalAction& ia) const override;

  StmKind kind() const { return kind_; }
  CgaPhase phase(const PackedState& s, int txn) const;
  int mem_at(const PackedState& s, int addr) const;
  int pending_addr(const PackedState& s, int txn) const;
  int pending_value(const PackedState& s, int txn) const;
  int read_reg(const PackedState& s, int txn) const;
  uint32_t glb(const PackedState& s) const;           // TML only
  uint32_t loc(const PackedState& s, int txn) const;  // TML only
  std::map<int, int> rd_set(const PackedState& s, int txn) const;
  std::map<int, int> wr_set(const PackedState& s, int txn) const;
  uint32_t commit_count(const PackedState& s) const;  // NORec, RONORec
  uint32_t last_validated(const PackedState& s, int txn) const;  // RONORec

 private:
  struct TxnFields {
    BitField phase, loc, paddr, pval, reg, lva;
    std::vector<BitField> rdp, rdv, wrp, wrv;
  };

  bool rd_subset_of_mem(const PackedState& s, int txn) const;

  StmKind kind_;
  Bounds bounds_;
  BitField glb_, commit_count_;
  std::vector<BitField> mem_;
  std::vector<TxnFields> txns_;
};

// Program counters of the fine-grained algorithms. Each value names the
// single atomic micro operation the transaction performs next.
enum FinePc : uint8_t {
  PcNotStarted,
  PcBeginLoop,
  PcBeginDone,
  PcReady,
  PcReadEntry,
  PcReadLoad,
  PcReadCheck,
  PcReadDone,
  PcWriteTest,
  PcWriteCas,
  PcWriteStore,
  PcWriteEntry,
  PcWriteDone,
  PcCommitTest,
  PcCommitEntry,
  PcCommitCas,
  PcCommitWb,
  PcCommitRelease,
  PcCommitDone,
  PcValSnap,
  PcValIter,
  PcValRecheck,
  PcAbortDone,
  PcCommitted,
  PcAborted,
};

class FineAutomaton : public Automaton {
 public:
  // bufsize 0 runs under sequential consistency. A positive bufsize gives
  // every transaction a FIFO store buffer of that capacity: stores enqueue
  // (blocking when full), loads forward from the newest own buffered store,
  // compare-and-swap requires the own buffer to be empty, and buffered
  // entries drain to shared memory through internal flush actions.
  FineAutomaton(StmKind kind, Bounds bounds, int bufsize = 0);

  std::string name() const override;
  Bounds bounds() const override { return bounds_; }
  std::vector<PackedState> start_states() const override;
  void enabled(const PackedState& s, std::vector<Step>& out) const override;
  std::string describe_state(const PackedState& s) const override;
  std::string describe_internal(const InternalAction& ia) const override;

  StmKind kind() const { return kind_; }
  int bufsize() const { return bufsize_; }
  FinePc pc(const PackedState& s, int txn) const;
  uint32_t glb(const PackedState& s) const;
  uint32_t loc(const PackedState& s, int txn) const;
  int mem_at(const PackedState& s, int addr) const;
  std::map<int, int> rd_set(const PackedState& s, int txn) const;
  std::map<int, int> wr_set(const PackedState& s, int txn) const;
  int buffer_len(const PackedState& s, int txn) const;
  // (location, value) of the i-th oldest buffered store; location 0 is
  // the version counter, 1 + a is address a.
  std::pair<int, int> buffer_entry(const PackedState& s, int txn, int i) const;

 private:
  struct TxnFields {
    BitField pc, loc, paddr, pval, reg, time, it, caller, buflen;
    std::vector<BitField> rdp, rdv, wrp, wrv;
    std::vector<std::pair<BitField, BitField>> buf;
  };
  struct MemOps;

  bool micro(PackedState& n, int txn, MemOps& m) const;

  StmKind kind_;
  Bounds bounds_;
  int bufsize_;
  BitField glb_;
  std::vector<BitField> mem_;
  std::vector<TxnFields> txns_;
};

// Forward-simulation relations and their step-correspondence functions.
// The automata must outlive the returned relation.
SimulationRelation tml_cga_vs_tms2(const CgaAutomaton& impl,
                                   const TmsAutomaton& spec);
SimulationRelation norec_cga_vs_tms3(const CgaAutomaton& impl,
                                     const TmsAutomaton& spec);
SimulationRelation ronorec_cga_vs_tms3(const CgaAutomaton& impl,
                                       const TmsAutomaton& spec);
SimulationRelation tms_vs_tms(const TmsAutomaton& impl,
                              const TmsAutomaton& spec);

}  // namespace tmv
