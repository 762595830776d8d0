// Events, histories, projections, completion/extension, equivalence and
// both real-time orders. Everything here is a pure function of its inputs.
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tmv {

enum class EventType : uint8_t {
  BeginInv,
  BeginResp,
  ReadInv,
  ReadResp,
  WriteInv,
  WriteResp,
  CommitInv,
  CommitResp,
  AbortResp,
};

enum class OpKind : uint8_t { Begin, Read, Write, Commit };
enum class Polarity : uint8_t { Inv, Resp, AbortResp };

struct Event {
  EventType type;
  int16_t txn;
  int16_t addr = -1;   // ReadInv, WriteInv
  int32_t value = -1;  // WriteInv, ReadResp

  Polarity polarity() const;
  // Undefined for AbortResp: the file format does not record which
  // operation aborted; the preceding invocation identifies it.
  std::optional<OpKind> kind() const;
  bool is_inv() const { return polarity() == Polarity::Inv; }
  bool is_resp() const { return !is_inv(); }

  bool operator==(const Event&) const = default;
  std::string to_string() const;
};

Event begin_inv(int txn);
Event begin_resp(int txn);
Event read_inv(int txn, int addr);
Event read_resp(int txn, int value);
Event write_inv(int txn, int addr, int value);
Event write_resp(int txn);
Event commit_inv(int txn);
Event commit_resp(int txn);
Event abort_resp(int txn);

// Does `resp` match pending invocation `inv` per the event table
// (begin never aborts)?
bool matches(const Event& inv, const Event& resp);

struct Bounds {
  int txns = 0;   // transaction ids are 0..txns-1
  int addrs = 0;  // addresses are 0..addrs-1
  int vals = 0;   // values are 0..vals-1

  bool operator==(const Bounds&) const = default;
};

struct History {
  std::vector<Event> events;
  Bounds bounds;

  bool operator==(const History&) const = default;
  size_t size() const { return events.size(); }
  bool empty() const { return events.empty(); }
};

enum class TxnStatus : uint8_t { NotPresent, Live, Committed, Aborted };

bool well_formed(const History& h);
History project(const History& h, int txn);
TxnStatus txn_status(const History& h, int txn);
std::vector<int> txn_ids(const History& h);

// h with every pending invocation removed (the paper's [h]).
History complete(const History& h);

// All histories obtained by appending, for any subset of pending
// invocations, one matching response each. Read-response values range over
// h.bounds.vals. Includes h itself. Responses are appended in ascending
// transaction id, which is canonical: distinct-transaction responses
// commute without affecting projections or either real-time order.
std::vector<History> extensions(const History& h);

// Same projections for every transaction mentioned in either history.
bool equivalent(const History& h1, const History& h2);

// Real-time order on transactions: p finished, and p's last event occurs
// before q's first event.
bool txn_precedes(const History& h, int p, int q);

// A matched invocation/response pair, identified by event indices.
struct OpOccurrence {
  size_t inv;
  size_t resp;
};

// Per-event matching: for each index, the index of its partner, or npos if
// pending/unmatchable. Throws if a response has no matching invocation.
std::vector<size_t> match_events(const History& h);
std::vector<OpOccurrence> matched_ops(const History& h);

// Real-time order on operations: the response of o1 precedes the
// invocation of o2. Throws std::invalid_argument if an occurrence does not
// name a matched pair of h.
bool op_precedes(const History& h, const OpOccurrence& o1,
                 const OpOccurrence& o2);

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& what);
  int line() const { return line_; }

 private:
  int line_;
};

// One event per line: B p | Br p | R p a | Rr p v | W p a v | Wr p | C p |
// Cr p | A p, '#' comments, optional "bounds T A V" header. Address tokens
// may be symbolic; they are interned in first-seen order. Without a header
// the bounds are derived from content (values at least {0,1}).
History parse_history(const std::string& text);
std::string serialize_history(const History& h);

}  // namespace tmv
