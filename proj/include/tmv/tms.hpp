// TMS2 and TMS3 specification automata over bounded transactions,
// addresses and values. States keep a sequence of memory snapshots;
// reads may be served by any snapshot the transaction is consistent
// with, commits of writers append a new snapshot.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tmv/automaton.hpp"
#include "tmv/history.hpp"

namespace tmv {

enum class TmsVariant { TMS2, TMS3 };

// Internal action codes shared with the step-correspondence functions.
enum : uint16_t {
  kDoRead = 1,
  kDoWrite = 2,
  kDoCommitReadOnly = 3,
  kDoCommitWriter = 4,
};

enum class TmsStatus : uint8_t {
  NotStarted,
  BeginPending,
  Ready,
  DoRead,      // pending_addr
  ReadResp,    // pending_value
  DoWrite,     // pending_addr, pending_value
  WriteResp,
  DoCommit,
  CommitResp,
  Committed,
  Aborted,
};

class TmsAutomaton : public Automaton {
 public:
  TmsAutomaton(TmsVariant variant, Bounds bounds);

  std::string name() const override;
  Bounds bounds() const override { return bounds_; }
  std::vector<PackedState> start_states() const override;
  void enabled(const PackedState& s, std::vector<Step>& out) const override;
  std::string describe_state(const PackedState& s) const override;
  std::string describe_internal(const InternalAction& ia) const override;

  TmsVariant variant() const { return variant_; }
  TmsStatus status(const PackedState& s, int txn) const;
  int pending_addr(const PackedState& s, int txn) const;
  int pending_value(const PackedState& s, int txn) const;
  uint32_t begin_idx(const PackedState& s, int txn) const;
  uint32_t max_idx(const PackedState& s) const;
  int mem_at(const PackedState& s, uint32_t idx, int addr) const;
  std::map<int, int> rd_set(const PackedState& s, int txn) const;
  std::map<int, int> wr_set(const PackedState& s, int txn) const;
  // beginIdx <= n <= maxIdx and every read so far agrees with snapshot n.
  bool valid_idx(const PackedState& s, int txn, uint32_t n) const;

 private:
  struct TxnFields {
    BitField status, paddr, pval, begin_idx;
    std::vector<BitField> rd_present, rd_val, wr_present, wr_val;
  };

  bool rd_subset_of(const PackedState& s, int txn, uint32_t idx) const;

  TmsVariant variant_;
  Bounds bounds_;
  BitField len_;                            // snapshot count - 1
  std::vector<std::vector<BitField>> mem_;  // [idx][addr]
  std::vector<TxnFields> txns_;
};

}  // namespace tmv
