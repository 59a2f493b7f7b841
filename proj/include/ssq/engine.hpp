#pragma once

// One server. An Engine sees its own share relations and the QueryShares the
// user sends it, and nothing else: there is no way to hand it another
// server's state.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ssq/field.hpp"
#include "ssq/share_store.hpp"

namespace ssq {

struct SharedScalar {
  Fp value;
  int degree = 1;
};

struct OpCounters {
  uint64_t field_adds = 0;
  uint64_t field_muls = 0;
  uint64_t rows_touched = 0;
  uint64_t shuffle_pairs = 0;

  OpCounters& operator+=(const OpCounters& o) {
    field_adds += o.field_adds;
    field_muls += o.field_muls;
    rows_touched += o.rows_touched;
    shuffle_pairs += o.shuffle_pairs;
    return *this;
  }
  friend bool operator==(const OpCounters&, const OpCounters&) = default;
};

enum class EngineOp {
  kCount,            // one count over the attribute
  kSelectSingle,     // sum of match * tuple
  kMatchVector,      // n match bits
  kMaskedRids,       // n values match * RID, permuted in permuted-RID mode
  kFetch,            // one tuple per RID word
  kBlockCounts,      // one count per row block
  kBlockRidSums,     // one sum of match * RID per row block
  kColumnFetch,      // the attribute's payload for every row
  kPkFkJoin,         // parent `relation` joined to child `other_relation`
  kJoinConcat,       // fetch from both relations, then pairwise concatenate
  kRangeCount,
  kRangeMark,
  kRangeMaskedRids,
};

std::string_view engine_op_name(EngineOp op);

// Half-open row range [begin, end), 0-based.
struct RowBlock {
  size_t begin = 0;
  size_t end = 0;
  size_t size() const { return end - begin; }
  friend bool operator==(const RowBlock&, const RowBlock&) = default;
};

// What the user sends to one server for one request. Every vector holds this
// server's shares.
struct QueryShares {
  EngineOp op = EngineOp::kCount;
  std::string relation;
  std::string attribute;
  std::vector<Fp> predicate;               // unary word
  std::vector<std::vector<Fp>> fetch;      // RID words
  std::vector<RowBlock> blocks;
  std::vector<Fp> low;                     // binary word of the lower bound
  std::vector<Fp> high;                    // binary word of the upper bound
  bool eq2 = true;                         // range: in-range marks vs sign sums
  std::string other_relation;
  std::string other_attribute;
  std::vector<std::vector<Fp>> other_fetch;

  // Field elements carried up to the server.
  size_t elements() const;
};

struct Answer {
  std::vector<Fp> values;
  int degree = 1;
};

// Per-kernel pass over rows [begin, end) of `relation`, in order.
struct AccessRecord {
  EngineOp op;
  std::string relation;
  size_t begin = 0;
  size_t end = 0;
  friend bool operator==(const AccessRecord&, const AccessRecord&) = default;
};

enum class KernelMode { kSerial, kParallel };

// The relations held by one server.
class ServerStore {
 public:
  ServerStore() = default;
  // Throws kShapeMismatch when the relations belong to different servers.
  explicit ServerStore(std::vector<SharedRelation> relations);

  int server() const { return server_; }
  bool has(std::string_view relation) const;
  // Throws kUnknownAttribute.
  const SharedRelation& relation(std::string_view name) const;
  std::vector<std::string> names() const;

 private:
  int server_ = 0;
  std::map<std::string, SharedRelation, std::less<>> relations_;
};

class Engine {
 public:
  explicit Engine(ServerStore store, KernelMode mode = KernelMode::kParallel);

  int server() const { return store_.server(); }
  uint64_t prime() const { return prime_; }
  const Schema& schema(std::string_view relation) const {
    return store_.relation(relation).schema;
  }

  Answer evaluate(const QueryShares& q);

  // Building blocks, public for tests. Degrees assume inputs of the relation's
  // sharing degree.
  SharedScalar string_match(std::span<const Fp> cell, std::span<const Fp> pred,
                            int alphabet, int degree);
  SharedScalar ss_sub_sign(std::span<const Fp> a, std::span<const Fp> b, int degree);

  const OpCounters& counters() const { return counters_; }
  void reset_counters() { counters_ = {}; }
  const std::vector<AccessRecord>& access_log() const { return log_; }
  void clear_access_log() { log_.clear(); }
  KernelMode kernel_mode() const { return mode_; }

 private:
  struct Column;

  Column column(const SharedRelation& rel, std::string_view attribute) const;
  std::vector<Fp> match_all(const SharedRelation& rel, const Column& col,
                            std::span<const Fp> word, EngineOp op);
  std::vector<Fp> range_all(const SharedRelation& rel, const QueryShares& q);
  void weighted_payload(const SharedRelation& rel, std::span<const Fp> weights, Fp* out,
                        EngineOp op);
  std::vector<Fp> masked_rids(const SharedRelation& rel, std::span<const Fp> marks);
  void fetch_into(const SharedRelation& rel, std::span<const std::vector<Fp>> words,
                  std::vector<Fp>& out, EngineOp op);
  void touch(EngineOp op, const SharedRelation& rel, size_t begin, size_t end);

  Answer pkfk_join(const QueryShares& q);
  Answer join_concat(const QueryShares& q);

  ServerStore store_;
  KernelMode mode_;
  uint64_t prime_ = PrimeField::kDefaultModulus;
  OpCounters counters_;
  std::vector<AccessRecord> log_;
};

// Degree of the answer `op` produces over a relation shared with degree d
// whose matched attribute spans `symbols` symbols (or bits, for range ops).
int answer_degree(EngineOp op, int symbols, int d);

}  // namespace ssq
