#pragma once

// The user side. Shares predicates, drives each protocol's rounds across the
// engines, interpolates, and keeps a cost ledger per query. It only ever sees
// public schemas and engine answers.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ssq/engine.hpp"
#include "ssq/share_store.hpp"
#include "ssq/sss.hpp"

namespace ssq {

enum class PlanKind {
  kCount,
  kSelectSingle,
  kSelectOneRound,
  kSelectTree,
  kPkFkJoin,
  kNonPkFkJoin,
  kRangeCount,
  kRangeSelect,
};
std::string_view plan_kind_name(PlanKind kind);

enum class RangeMode { kEq2, kSumSigns };
enum class PartitionPolicy { kAll, kCase4 };

struct QueryPlan {
  PlanKind kind = PlanKind::kCount;
  std::string relation;
  std::string attribute;
  std::string value;            // equality predicate
  int64_t low = 0;              // inclusive range bounds
  int64_t high = 0;
  std::string other_relation;   // join: the child (PK/FK) or Y relation
  std::string other_attribute;  // defaults to `attribute`
  // Per-plan overrides of CoordinatorOptions.
  std::optional<size_t> pad_fetch;
  std::optional<size_t> branching;
  std::optional<PartitionPolicy> partition;

  static QueryPlan count(std::string rel, std::string attr, std::string value);
  static QueryPlan select(PlanKind kind, std::string rel, std::string attr, std::string value);
  static QueryPlan join(PlanKind kind, std::string parent, std::string child, std::string attr);
  static QueryPlan range(PlanKind kind, std::string rel, std::string attr, int64_t low,
                         int64_t high);
};

struct CoordinatorOptions {
  std::optional<uint64_t> seed;
  size_t pad_fetch = 0;  // 0: smallest power of two >= the result size
  RangeMode range_mode = RangeMode::kEq2;
  PartitionPolicy partition = PartitionPolicy::kAll;
  size_t branching = 0;  // 0: the match count, then 2 once blocks get small
  // Interpolate every answer from the first degree+1 shares and from all c
  // shares and insist they agree.
  bool check_consistency = true;
  size_t fake_join_values = 0;
  // Single-tuple selection with more than one match continues as a tree search.
  bool single_fallback = true;
};

struct Row {
  uint64_t rid = 0;  // 0 for joined rows
  std::vector<std::string> values;
  friend bool operator==(const Row&, const Row&) = default;
  friend auto operator<=>(const Row&, const Row&) = default;
};

struct RoundRecord {
  int round = 0;
  std::string phase;
  std::string ops;       // engine ops in this round, '+'-joined
  size_t requests = 0;   // per server
  size_t blocks = 0;
  uint64_t elements_up = 0;    // per server
  uint64_t elements_down = 0;  // per server
};

struct BoundCheck {
  std::string name;
  double observed = 0;
  double bound = 0;
  bool pass = false;
};

struct CostLedger {
  std::string query;
  int servers = 0;
  int rounds = 0;
  int address_rounds = 0;  // tree search: block rounds plus the tuple-id round
  std::vector<uint64_t> elements_up;    // per server
  std::vector<uint64_t> elements_down;  // per server
  uint64_t user_interp_ops = 0;
  std::vector<OpCounters> server_ops;   // per server
  std::vector<RoundRecord> transcript;
  std::vector<BoundCheck> bounds;
  // Parameters the bounds were instantiated with.
  uint64_t n = 0, m = 0, w = 0, ell = 0, k = 0, fetch_length = 0;

  void reset(std::string query_name, int server_count);
  bool bounds_pass() const;
  std::string to_text() const;
  std::string to_json() const;
};

struct QueryResult {
  PlanKind kind = PlanKind::kCount;
  std::optional<uint64_t> count;
  std::vector<std::string> columns;
  std::vector<Row> rows;
};

// Servers `plan` needs over the public schemas: one more than the highest
// answer degree it triggers. `other` is the second join relation, if any.
int required_servers(const QueryPlan& plan, const Schema& relation, const Schema* other,
                     bool single_fallback = true);

// c engines, one per simulated server, holding every loaded relation.
class Cluster {
 public:
  // shares[r][k] is relation r as held by server k + 1.
  explicit Cluster(std::vector<std::vector<SharedRelation>> shares,
                   KernelMode mode = KernelMode::kParallel);
  static Cluster load(const std::filesystem::path& dir, const std::vector<std::string>& relations,
                      std::optional<uint64_t> expected_prime = std::nullopt,
                      KernelMode mode = KernelMode::kParallel);

  size_t servers() const { return engines_.size(); }
  Engine& engine(size_t k) { return *engines_[k]; }
  std::vector<Engine*> engines();

 private:
  std::vector<std::unique_ptr<Engine>> engines_;
};

class Coordinator {
 public:
  // The engines must be ordered by server index 1..c.
  explicit Coordinator(std::vector<Engine*> engines, CoordinatorOptions options = {});

  int servers() const { return static_cast<int>(engines_.size()); }
  const Schema& schema(std::string_view relation) const;
  const CoordinatorOptions& options() const { return options_; }

  uint64_t run_count(const QueryPlan& plan);
  std::vector<Row> run_select_single(const QueryPlan& plan);
  std::vector<Row> run_select_multi_oneround(const QueryPlan& plan);
  std::vector<Row> run_select_multi_tree(const QueryPlan& plan);
  std::vector<Row> run_pkfk_join(const QueryPlan& plan);
  std::vector<Row> run_nonpkfk_join(const QueryPlan& plan);
  uint64_t run_range_count(const QueryPlan& plan);
  std::vector<Row> run_range_select(const QueryPlan& plan);

  QueryResult run(const QueryPlan& plan);
  // Column names of the rows `plan` produces.
  std::vector<std::string> output_columns(const QueryPlan& plan) const;

  const CostLedger& cost_report() const { return ledger_; }

  // Servers `plan` needs: one more than the highest answer degree it triggers.
  int required_servers(const QueryPlan& plan) const;

 private:
  void begin(const QueryPlan& plan);
  void finish();
  std::vector<std::vector<Answer>> round(const std::string& phase,
                                         std::vector<std::vector<QueryShares>> requests);
  std::vector<Fp> interpolate(const std::vector<std::vector<Answer>>& answers, size_t request);
  void require_servers(int degree, const std::string& what) const;

  std::vector<std::vector<Fp>> share_bits(const std::vector<uint8_t>& bits, int degree);
  std::vector<QueryShares> predicate_requests(EngineOp op, const QueryPlan& plan);
  std::vector<std::vector<std::vector<Fp>>> fetch_words(const Schema& s,
                                                        const std::vector<uint64_t>& rids,
                                                        size_t length);
  size_t fetch_length(const QueryPlan& plan, size_t ell) const;
  std::vector<Row> fetch_rows(const QueryPlan& plan, const std::vector<uint64_t>& rids,
                              size_t length);
  std::vector<Row> tree_search(const QueryPlan& plan, uint64_t ell);
  uint64_t count_round(const QueryPlan& plan);
  std::vector<uint64_t> rids_from_marks(const Schema& s, const std::vector<Fp>& values,
                                        bool masked) const;
  std::vector<QueryShares> range_requests(EngineOp op, const QueryPlan& plan, bool* empty);

  std::vector<Engine*> engines_;
  CoordinatorOptions options_;
  CoefficientStream rng_;
  CostLedger ledger_;
};

}  // namespace ssq
