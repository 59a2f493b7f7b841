#include "ssq/workload.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <numeric>
#include <random>
#include <sstream>

#include "ssq/error.hpp"
#include "ssq/oracle.hpp"

namespace ssq {
namespace {

constexpr PlanKind kRotation[] = {
    PlanKind::kCount,     PlanKind::kSelectSingle, PlanKind::kSelectOneRound,
    PlanKind::kSelectTree, PlanKind::kPkFkJoin,    PlanKind::kNonPkFkJoin,
    PlanKind::kRangeCount, PlanKind::kRangeSelect,
};

class Gen {
 public:
  explicit Gen(uint64_t seed) : rng_(seed) {}
  size_t between(size_t lo, size_t hi) {
    return std::uniform_int_distribution<size_t>(lo, hi)(rng_);
  }
  int64_t between_signed(int64_t lo, int64_t hi) {
    return std::uniform_int_distribution<int64_t>(lo, hi)(rng_);
  }
  bool coin(double p) { return std::bernoulli_distribution(p)(rng_); }
  std::mt19937_64& engine() { return rng_; }

  std::string word(size_t max_len) {
    std::string w(between(1, max_len), 'a');
    for (char& ch : w) ch = static_cast<char>('a' + between(0, 5));
    return w;
  }

 private:
  std::mt19937_64 rng_;
};

enum class ColumnKind { kNumeral, kSigned, kWord };

struct ColumnSpec {
  ColumnKind kind;
  size_t domain;  // distinct values to draw from
  std::vector<std::string> vocabulary;
};

ColumnSpec random_column(Gen& g, ColumnKind kind) {
  ColumnSpec c{kind, g.between(1, 12), {}};
  if (kind == ColumnKind::kWord) {
    std::set<std::string> words;
    while (words.size() < c.domain) words.insert(g.word(3));
    c.vocabulary.assign(words.begin(), words.end());
  }
  return c;
}

std::string draw(Gen& g, const ColumnSpec& c, bool positive) {
  switch (c.kind) {
    case ColumnKind::kNumeral:
      return std::to_string(g.between(positive ? 1 : 0, c.domain * 5));
    case ColumnKind::kSigned:
      return std::to_string(g.between_signed(-static_cast<int64_t>(c.domain) * 3,
                                             static_cast<int64_t>(c.domain) * 3));
    case ColumnKind::kWord:
      return c.vocabulary[g.between(0, c.vocabulary.size() - 1)];
  }
  return {};
}

// Relation `name` with a unique key column K and m - 1 random columns. The
// first random column is numeric so range plans have something to work on.
// `positive` keeps every numeric value above 0, as join payloads must be.
Relation random_relation(Gen& g, const std::string& name, size_t n, size_t m,
                         bool positive = false) {
  Relation r;
  r.name = name;
  r.attributes.push_back("K");
  std::vector<ColumnSpec> specs;
  for (size_t j = 1; j < m; ++j) {
    ColumnKind kind = j == 1 ? (g.coin(0.5) ? ColumnKind::kSigned : ColumnKind::kNumeral)
                             : static_cast<ColumnKind>(g.between(0, 2));
    if (positive && kind == ColumnKind::kSigned) kind = ColumnKind::kNumeral;
    specs.push_back(random_column(g, kind));
    r.attributes.push_back("C" + std::to_string(j));
  }
  std::vector<size_t> keys(n);
  std::iota(keys.begin(), keys.end(), 1);
  std::shuffle(keys.begin(), keys.end(), g.engine());
  for (size_t i = 0; i < n; ++i) {
    std::vector<std::string> row{std::to_string(keys[i])};
    for (const auto& s : specs) row.push_back(draw(g, s, positive));
    r.rows.push_back(std::move(row));
  }
  return r;
}

std::string pick_value(Gen& g, const Relation& r, size_t column) {
  // Mostly a value that occurs; sometimes one that may not.
  if (g.coin(0.85)) return r.rows[g.between(0, r.size() - 1)][column];
  std::string v = r.rows[g.between(0, r.size() - 1)][column];
  if (!v.empty() && std::isdigit(static_cast<unsigned char>(v.back()))) {
    v.back() = static_cast<char>('0' + (v.back() - '0' + 1) % 10);
  } else if (!v.empty()) {
    v.back() = v.back() == 'f' ? 'a' : static_cast<char>(v.back() + 1);
  }
  return v;
}

// Parent X(B, A...) with unique B; child Y(B, C...) whose B values are drawn
// from the parent's, plus a few dangling ones.
void pkfk_relations(Gen& g, Workload& w, const WorkloadLimits& limits) {
  size_t nx = g.between(1, std::min<size_t>(40, limits.max_rows));
  size_t ny = g.between(1, std::min<size_t>(60, limits.max_rows));
  size_t mx = g.between(2, std::max<size_t>(2, std::min<size_t>(4, limits.max_attributes)));
  size_t my = g.between(2, std::max<size_t>(2, std::min<size_t>(4, limits.max_attributes)));
  Relation x = random_relation(g, "X", nx, mx, true);
  Relation y = random_relation(g, "Y", ny, my, true);
  x.attributes[0] = "B";
  y.attributes[0] = "B";
  for (auto& row : y.rows) {
    row[0] = g.coin(0.9) ? x.rows[g.between(0, nx - 1)][0] : std::to_string(nx + g.between(1, 50));
  }
  w.relations = {std::move(x), std::move(y)};
  w.plan = QueryPlan::join(PlanKind::kPkFkJoin, "X", "Y", "B");
  w.owner.joins_declared = true;
}

// Both sides draw B from a small shared domain, so several values repeat.
void nonpkfk_relations(Gen& g, Workload& w, const WorkloadLimits& limits) {
  size_t domain = g.between(1, 6);
  size_t nx = g.between(1, std::min<size_t>(30, limits.max_rows));
  size_t ny = g.between(1, std::min<size_t>(30, limits.max_rows));
  Relation x = random_relation(g, "X", nx, g.between(2, std::min<size_t>(3, limits.max_attributes)), true);
  Relation y = random_relation(g, "Y", ny, g.between(2, std::min<size_t>(3, limits.max_attributes)), true);
  x.attributes[0] = "B";
  y.attributes[0] = "B";
  for (auto& row : x.rows) row[0] = std::to_string(g.between(1, domain));
  for (auto& row : y.rows) row[0] = std::to_string(g.between(1, domain + 2));
  w.relations = {std::move(x), std::move(y)};
  w.plan = QueryPlan::join(PlanKind::kNonPkFkJoin, "X", "Y", "B");
  w.owner.joins_declared = true;
  w.coordinator.fake_join_values = g.coin(0.2) ? g.between(1, 2) : 0;
}

}  // namespace

std::string Workload::describe() const {
  std::ostringstream out;
  out << "seed=" << seed << " plan=" << plan_kind_name(plan.kind) << " rel=" << plan.relation;
  for (const auto& r : relations) out << " " << r.name << "[" << r.size() << "x" << r.attributes.size() << "]";
  if (!plan.attribute.empty()) out << " attr=" << plan.attribute;
  if (!plan.value.empty()) out << " value=" << plan.value;
  if (plan.kind == PlanKind::kRangeCount || plan.kind == PlanKind::kRangeSelect) {
    out << " range=[" << plan.low << "," << plan.high << "]"
        << (coordinator.range_mode == RangeMode::kEq2 ? " eq2" : " sum-signs");
  }
  out << " rid=" << (owner.rid_mode == RidMode::kSequential ? "seq" : "permuted")
      << " d=" << owner.params.degree;
  if (coordinator.pad_fetch) out << " pad=" << coordinator.pad_fetch;
  if (plan.kind == PlanKind::kSelectTree) {
    out << " policy=" << (coordinator.partition == PartitionPolicy::kAll ? "all" : "case4");
  }
  return out.str();
}

Workload random_workload(uint64_t seed, size_t index, const WorkloadLimits& limits) {
  Workload w;
  w.seed = seed ^ (0x2545f4914f6cdd1dULL * (index + 1));
  Gen g(w.seed);
  PlanKind kind = kRotation[index % std::size(kRotation)];

  w.owner.params.rng_seed = g.engine()();
  w.owner.rid_mode = g.coin(0.3) ? RidMode::kPermuted : RidMode::kSequential;
  w.coordinator.seed = g.engine()();
  w.coordinator.range_mode = g.coin(0.5) ? RangeMode::kEq2 : RangeMode::kSumSigns;
  w.coordinator.partition = g.coin(0.5) ? PartitionPolicy::kAll : PartitionPolicy::kCase4;
  w.extra_servers = static_cast<int>(g.between(0, 2));

  if (kind == PlanKind::kPkFkJoin) {
    pkfk_relations(g, w, limits);
  } else if (kind == PlanKind::kNonPkFkJoin) {
    nonpkfk_relations(g, w, limits);
  } else {
    size_t n = g.coin(0.5) ? g.between(1, std::min<size_t>(40, limits.max_rows))
                           : g.between(1, limits.max_rows);
    size_t m = g.between(2, std::max<size_t>(2, limits.max_attributes));
    Relation r = random_relation(g, "R", n, m);
    size_t column = g.between(0, m - 1);
    switch (kind) {
      case PlanKind::kCount:
        w.plan = QueryPlan::count("R", r.attributes[column], pick_value(g, r, column));
        if (g.coin(0.25)) w.owner.params.degree = 2;
        break;
      case PlanKind::kSelectSingle:
        // Usually the key; sometimes a repeated value, which falls back to the tree.
        if (g.coin(0.7)) column = 0;
        w.plan = QueryPlan::select(kind, "R", r.attributes[column], pick_value(g, r, column));
        break;
      case PlanKind::kSelectOneRound:
      case PlanKind::kSelectTree:
        if (column == 0 && m > 1 && g.coin(0.7)) column = 1;
        w.plan = QueryPlan::select(kind, "R", r.attributes[column], pick_value(g, r, column));
        if (g.coin(0.2)) w.coordinator.pad_fetch = size_t{1} << g.between(0, 9);
        break;
      case PlanKind::kRangeCount:
      case PlanKind::kRangeSelect: {
        column = g.coin(0.6) ? 1 : 0;
        w.owner.range_columns = {r.attributes[column]};
        int64_t a = std::stoll(r.rows[g.between(0, n - 1)][column]);
        int64_t b = std::stoll(r.rows[g.between(0, n - 1)][column]);
        if (g.coin(0.15)) b = a - 1 - static_cast<int64_t>(g.between(0, 5));  // empty
        else if (a > b) std::swap(a, b);
        if (g.coin(0.15)) a -= static_cast<int64_t>(g.between(50, 5000));  // beyond the domain
        w.plan = QueryPlan::range(kind, "R", r.attributes[column], a, b);
        break;
      }
      default:
        break;
    }
    w.relations = {std::move(r)};
  }
  if (w.coordinator.pad_fetch) {
    // Too small a pad is a usage error, not a protocol failure.
    QueryResult expected = oracle_eval(w.relations, w.plan);
    size_t ell = expected.rows.size();
    while (w.coordinator.pad_fetch < ell) w.coordinator.pad_fetch *= 2;
  }
  return w;
}

WorkloadOutcome run_workload(const Workload& w, KernelMode mode) {
  OwnerOptions owner = w.owner;
  auto schemas = plan_schemas(w.relations, owner);
  const Schema* main = nullptr;
  const Schema* other = nullptr;
  for (const auto& s : schemas) {
    if (s.relation == w.plan.relation) main = &s;
    if (s.relation == w.plan.other_relation) other = &s;
  }
  if (!main) throw Error(ErrorCode::kBadParams, "plan names no loaded relation");
  owner.params.servers = required_servers(w.plan, *main, other, w.coordinator.single_fallback) +
                         w.extra_servers;

  Cluster cluster(share_relations(w.relations, owner), mode);
  Coordinator coordinator(cluster.engines(), w.coordinator);
  WorkloadOutcome out;
  out.servers = owner.params.servers;
  out.secure = coordinator.run(w.plan);
  out.expected = oracle_eval(w.relations, w.plan);
  out.match = same_result(out.secure, out.expected);
  out.ledger = coordinator.cost_report();
  out.bounds_pass = out.ledger.bounds_pass();
  return out;
}

}  // namespace ssq
