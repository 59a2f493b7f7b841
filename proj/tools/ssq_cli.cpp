// ssq: share CSV relations, query the shares, check results against the
// plaintext oracle, and time kernels.
//
//   ssq share  --input Employee.csv --out shares/ [--servers 7] [--range Salary]
//   ssq query  --shares shares/ count FirstName=John
//   ssq verify --input Employee.csv select FirstName=John --tree
//   ssq verify --input X.csv --input Y.csv join B
//   ssq verify --sweep 200
//   ssq bench  --rows 1000,10000,100000
//
// Exit codes: 0 ok or MATCH, 1 MISMATCH, 2 usage error, 3 data error.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ssq/coordinator.hpp"
#include "ssq/error.hpp"
#include "ssq/oracle.hpp"
#include "ssq/owner.hpp"
#include "ssq/tpch.hpp"
#include "ssq/workload.hpp"

namespace {

using namespace ssq;

constexpr int kExitMismatch = 1;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Flags {
  std::vector<std::string> inputs;
  std::string shares_dir;
  std::string out_dir;
  std::string servers = "auto";
  int degree = 1;
  std::optional<uint64_t> seed;
  size_t pad_fetch = 0;
  bool tree = false;
  bool one_round = false;
  std::string range_mode = "eq2";
  std::string partition = "all";
  std::string rid_mode = "seq";
  std::string report;
  std::vector<std::string> range_columns;
  std::vector<std::string> digest_columns;
  bool no_compact = false;
  bool joins = false;
  bool nonpkfk = false;
  size_t fake_join_values = 0;
  std::vector<std::string> relations;
  std::vector<std::string> query;  // positional template words
  size_t sweep = 0;
  std::vector<size_t> bench_rows{1000, 10000, 100000};
  std::string kernel = "both";
};

RidMode parse_rid_mode(const std::string& s) {
  if (s == "seq") return RidMode::kSequential;
  if (s == "permuted") return RidMode::kPermuted;
  throw UsageError("--rid-mode must be seq or permuted");
}

CoordinatorOptions coordinator_options(const Flags& f) {
  CoordinatorOptions o;
  o.seed = f.seed;
  o.pad_fetch = f.pad_fetch;
  if (f.range_mode == "eq2") {
    o.range_mode = RangeMode::kEq2;
  } else if (f.range_mode == "sum-signs") {
    o.range_mode = RangeMode::kSumSigns;
  } else {
    throw UsageError("--range-mode must be eq2 or sum-signs");
  }
  if (f.partition == "all") {
    o.partition = PartitionPolicy::kAll;
  } else if (f.partition == "case4") {
    o.partition = PartitionPolicy::kCase4;
  } else {
    throw UsageError("--partition-policy must be all or case4");
  }
  o.fake_join_values = f.fake_join_values;
  return o;
}

OwnerOptions owner_options(const Flags& f) {
  OwnerOptions o;
  o.params.degree = f.degree;
  o.params.rng_seed = f.seed;
  o.rid_mode = parse_rid_mode(f.rid_mode);
  o.compact = !f.no_compact;
  o.range_columns.insert(f.range_columns.begin(), f.range_columns.end());
  for (const auto& d : f.digest_columns) {
    auto eq = d.find('=');
    if (eq == std::string::npos) throw UsageError("--digest wants COLUMN=DIGITS, got " + d);
    o.digest_columns[d.substr(0, eq)] = std::stoi(d.substr(eq + 1));
  }
  o.joins_declared = f.joins;
  return o;
}

std::pair<std::string, std::string> split_once(const std::string& s, const std::string& sep,
                                               const std::string& what) {
  auto at = s.find(sep);
  if (at == std::string::npos) throw UsageError(what + " wants ATTR" + sep + "..., got " + s);
  return {s.substr(0, at), s.substr(at + sep.size())};
}

// `[R.]ATTR`: relation defaults to the first one loaded.
std::pair<std::string, std::string> relation_attribute(const std::string& s,
                                                       const std::vector<std::string>& loaded) {
  auto dot = s.find('.');
  if (dot != std::string::npos) return {s.substr(0, dot), s.substr(dot + 1)};
  if (loaded.empty()) throw UsageError("no relation loaded");
  return {loaded.front(), s};
}

int64_t parse_bound(const std::string& s) {
  auto v = parse_canonical_int(s);
  if (!v) throw UsageError("range bound is not an integer: " + s);
  return *v;
}

// Query templates:
//   count [R.]ATTR=VALUE
//   select [R.]ATTR=VALUE          (--tree or --one-round, default one-round)
//   select-single [R.]ATTR=VALUE
//   join [ATTR]                    (first two relations; --nonpkfk for non-PK/FK)
//   range [R.]ATTR=LOW..HIGH
//   range-select [R.]ATTR=LOW..HIGH
QueryPlan parse_query(const Flags& f, const std::vector<std::string>& loaded,
                      const std::vector<Schema>& schemas) {
  if (f.query.empty()) throw UsageError("missing query template");
  const std::string& t = f.query[0];
  auto arg = [&](size_t i) -> const std::string& {
    if (f.query.size() <= i) throw UsageError(t + " needs an argument");
    return f.query[i];
  };
  if (f.tree && f.one_round) throw UsageError("--tree and --one-round are exclusive");
  if (t == "count" || t == "select" || t == "select-single") {
    auto [lhs, value] = split_once(arg(1), "=", t);
    auto [rel, attr] = relation_attribute(lhs, loaded);
    if (t == "count") return QueryPlan::count(rel, attr, value);
    PlanKind k = t == "select-single" ? PlanKind::kSelectSingle
                 : f.tree             ? PlanKind::kSelectTree
                                      : PlanKind::kSelectOneRound;
    return QueryPlan::select(k, rel, attr, value);
  }
  if (t == "join") {
    if (loaded.size() < 2) throw UsageError("join needs two relations");
    std::string attr;
    if (f.query.size() > 1) {
      attr = f.query[1];
    } else {
      // the single attribute name the two relations share
      std::set<std::string> left;
      for (const auto& s : schemas) {
        if (s.relation != loaded[0]) continue;
        for (size_t j = 0; j < s.attribute_count(); ++j) left.insert(s.columns[j].name);
      }
      std::vector<std::string> common;
      for (const auto& s : schemas) {
        if (s.relation != loaded[1]) continue;
        for (size_t j = 0; j < s.attribute_count(); ++j) {
          if (left.count(s.columns[j].name)) common.push_back(s.columns[j].name);
        }
      }
      if (common.size() != 1) throw UsageError("name the join attribute");
      attr = common[0];
    }
    return QueryPlan::join(f.nonpkfk ? PlanKind::kNonPkFkJoin : PlanKind::kPkFkJoin, loaded[0],
                           loaded[1], attr);
  }
  if (t == "range" || t == "range-select") {
    auto [lhs, bounds] = split_once(arg(1), "=", t);
    auto [low, high] = split_once(bounds, "..", t);
    auto [rel, attr] = relation_attribute(lhs, loaded);
    return QueryPlan::range(t == "range" ? PlanKind::kRangeCount : PlanKind::kRangeSelect, rel,
                            attr, parse_bound(low), parse_bound(high));
  }
  throw UsageError("unknown query template " + t);
}

std::vector<Relation> read_inputs(const Flags& f) {
  if (f.inputs.empty()) throw UsageError("--input is required");
  std::vector<Relation> rels;
  for (const auto& path : f.inputs) rels.push_back(read_csv(path));
  return rels;
}

std::vector<std::string> names_of(const std::vector<Relation>& rels) {
  std::vector<std::string> out;
  for (const auto& r : rels) out.push_back(r.name);
  return out;
}

const Schema* find_schema(const std::vector<Schema>& schemas, const std::string& name) {
  for (const auto& s : schemas) {
    if (s.relation == name) return &s;
  }
  return nullptr;
}

int plan_servers(const QueryPlan& plan, const std::vector<Schema>& schemas) {
  const Schema* main = find_schema(schemas, plan.relation);
  if (!main) throw UsageError("unknown relation " + plan.relation);
  const Schema* other = plan.other_relation.empty() ? nullptr
                                                    : find_schema(schemas, plan.other_relation);
  return required_servers(plan, *main, other);
}

int parse_servers(const Flags& f, int minimum) {
  if (f.servers == "auto") return minimum;
  try {
    return std::stoi(f.servers);
  } catch (const std::exception&) {
    throw UsageError("--servers must be a number or auto");
  }
}

void print_result(const QueryResult& r, std::ostream& out) {
  if (r.count) {
    out << "count\n" << *r.count << '\n';
    return;
  }
  Relation table;
  table.name = "result";
  const bool with_rid = r.kind != PlanKind::kPkFkJoin && r.kind != PlanKind::kNonPkFkJoin;
  if (with_rid) table.attributes.push_back(std::string(kRidAttribute));
  table.attributes.insert(table.attributes.end(), r.columns.begin(), r.columns.end());
  for (const auto& row : r.rows) {
    std::vector<std::string> cells;
    if (with_rid) cells.push_back(std::to_string(row.rid));
    cells.insert(cells.end(), row.values.begin(), row.values.end());
    table.rows.push_back(std::move(cells));
  }
  write_csv(table, out);
}

void emit_report(const Flags& f, const CostLedger& ledger) {
  std::cerr << ledger.to_text();
  if (!f.report.empty()) {
    std::ofstream out(f.report);
    if (!out) throw UsageError("cannot write " + f.report);
    out << ledger.to_json() << '\n';
  }
}

// Largest server count any template could need over these schemas: every
// column selectable, range columns range-queryable, fetches and joins.
int share_servers(const std::vector<Schema>& schemas) {
  int need = 0;
  for (const auto& s : schemas) {
    for (size_t j = 0; j < s.attribute_count(); ++j) {
      const auto& c = s.columns[j];
      need = std::max(need, required_servers(QueryPlan::select(PlanKind::kSelectOneRound,
                                                               s.relation, c.name, "0"),
                                             s, nullptr));
      if (c.binary_bits > 0) {
        need = std::max(need, required_servers(QueryPlan::range(PlanKind::kRangeSelect, s.relation,
                                                                c.name, 0, 0),
                                               s, nullptr));
      }
    }
  }
  return need;
}

int cmd_share(const Flags& f) {
  if (f.out_dir.empty()) throw UsageError("--out is required");
  auto rels = read_inputs(f);
  OwnerOptions o = owner_options(f);
  o.params.servers = parse_servers(f, share_servers(plan_schemas(rels, o)));
  auto shares = share_relations(rels, o);
  std::filesystem::create_directories(f.out_dir);
  for (const auto& set : shares) write_share_files(set, f.out_dir);
  std::cerr << "wrote " << rels.size() << " relation(s) x " << o.params.servers << " servers to "
            << f.out_dir << '\n';
  return 0;
}

int cmd_query(const Flags& f) {
  if (f.shares_dir.empty()) throw UsageError("--shares is required");
  auto names = f.relations.empty() ? list_relations(f.shares_dir) : f.relations;
  if (names.empty()) throw Error(ErrorCode::kCorruptFile, "no share files in " + f.shares_dir);
  Cluster cluster = Cluster::load(f.shares_dir, names);
  auto engines = cluster.engines();
  std::vector<Schema> schemas;
  for (const auto& n : names) schemas.push_back(engines.front()->schema(n));
  QueryPlan plan = parse_query(f, names, schemas);
  if (f.servers != "auto") {
    size_t c = static_cast<size_t>(parse_servers(f, 0));
    if (c < 1 || c > engines.size()) {
      throw UsageError("--servers must be in [1, " + std::to_string(engines.size()) + "]");
    }
    engines.resize(c);
  }
  Coordinator coordinator(engines, coordinator_options(f));
  QueryResult r = coordinator.run(plan);
  print_result(r, std::cout);
  emit_report(f, coordinator.cost_report());
  return 0;
}

std::string verdict(const QueryResult& secure, const QueryResult& expected) {
  auto summary = [](const QueryResult& r) {
    return r.count ? std::to_string(*r.count) : std::to_string(r.rows.size()) + " rows";
  };
  if (secure.count) return "(" + summary(secure) + "=" + summary(expected) + ")";
  if (same_result(secure, expected)) return "(" + summary(secure) + ")";
  return "(" + summary(secure) + " vs " + summary(expected) + ")";
}

int cmd_sweep(const Flags& f) {
  const uint64_t seed = f.seed.value_or(1);
  size_t bad = 0;
  nlohmann::json report = nlohmann::json::array();
  const auto start = std::chrono::steady_clock::now();
  for (size_t i = 0; i < f.sweep; ++i) {
    Workload w = random_workload(seed, i);
    WorkloadOutcome o = run_workload(w);
    const bool ok = o.match && o.bounds_pass;
    if (!ok) {
      ++bad;
      std::cout << "MISMATCH " << w.describe() << (o.match ? " (bounds)" : "") << '\n';
    }
    if (!f.report.empty()) {
      report.push_back({{"workload", w.describe()},
                        {"match", o.match},
                        {"ledger", nlohmann::json::parse(o.ledger.to_json())}});
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << (bad ? "MISMATCH" : "MATCH") << " (" << f.sweep - bad << "/" << f.sweep
            << " workloads, " << secs << " s)\n";
  if (!f.report.empty()) std::ofstream(f.report) << report.dump(1) << '\n';
  return bad ? kExitMismatch : 0;
}

int cmd_verify(const Flags& f) {
  if (f.sweep > 0) return cmd_sweep(f);
  auto rels = read_inputs(f);
  std::vector<std::string> names = names_of(rels);
  OwnerOptions o = owner_options(f);
  if (f.query.size() && f.query[0] == "join") o.joins_declared = true;
  auto schemas = plan_schemas(rels, o);
  QueryPlan plan = parse_query(f, names, schemas);
  const bool range = plan.kind == PlanKind::kRangeCount || plan.kind == PlanKind::kRangeSelect;
  if (range && !o.range_columns.count(plan.attribute)) {
    o.range_columns.insert(plan.attribute);
    schemas = plan_schemas(rels, o);
  }

  std::optional<Cluster> cluster;
  if (!f.shares_dir.empty()) {
    cluster.emplace(Cluster::load(f.shares_dir, names));
  } else {
    // plan_schemas ignores the server count, so the schemas above stand.
    o.params.servers = parse_servers(f, plan_servers(plan, schemas));
    cluster.emplace(share_relations(rels, o));
  }
  Coordinator coordinator(cluster->engines(), coordinator_options(f));
  QueryResult secure = coordinator.run(plan);
  QueryResult expected = oracle_eval(rels, plan);
  const bool match = same_result(secure, expected) && coordinator.cost_report().bounds_pass();
  std::cout << (match ? "MATCH " : "MISMATCH ") << verdict(secure, expected) << '\n';
  emit_report(f, coordinator.cost_report());
  return match ? 0 : kExitMismatch;
}

int cmd_bench(const Flags& f) {
  std::vector<KernelMode> modes;
  if (f.kernel == "serial" || f.kernel == "both") modes.push_back(KernelMode::kSerial);
  if (f.kernel == "parallel" || f.kernel == "both") modes.push_back(KernelMode::kParallel);
  if (modes.empty()) throw UsageError("--kernel must be serial, parallel or both");
  std::cout << "kernel,n,servers,share_s,count_s,count,field_adds,field_muls,rows_touched\n";
  for (size_t n : f.bench_rows) {
    Relation customer = make_customer(n, f.seed.value_or(1));
    OwnerOptions o = owner_options(f);
    QueryPlan plan = QueryPlan::count("Customer", "NK", "7");
    o.params.servers = parse_servers(f, plan_servers(plan, plan_schemas({customer}, o)));
    for (KernelMode mode : modes) {
      auto t0 = std::chrono::steady_clock::now();
      Cluster cluster({share_relation(customer, o)}, mode);
      auto t1 = std::chrono::steady_clock::now();
      Coordinator coordinator(cluster.engines(), coordinator_options(f));
      uint64_t count = coordinator.run_count(plan);
      auto t2 = std::chrono::steady_clock::now();
      const OpCounters& ops = coordinator.cost_report().server_ops.front();
      std::cout << (mode == KernelMode::kSerial ? "serial" : "parallel") << ',' << n << ','
                << o.params.servers << ',' << std::chrono::duration<double>(t1 - t0).count()
                << ',' << std::chrono::duration<double>(t2 - t1).count() << ',' << count << ','
                << ops.field_adds << ',' << ops.field_muls << ',' << ops.rows_touched << '\n';
    }
  }
  return 0;
}

bool is_usage(ErrorCode c) {
  switch (c) {
    case ErrorCode::kUnknownAttribute:
    case ErrorCode::kInsufficientServers:
    case ErrorCode::kPaddingTooSmall:
    case ErrorCode::kNotUnique:
      return true;
    default:
      return false;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Secret-shared query processing over simulated servers"};
  app.require_subcommand(1);
  Flags f;

  // Repeatable single-value options, so they do not swallow the query words.
  auto repeated = [](CLI::Option* opt) {
    opt->allow_extra_args(false);
    return opt;
  };
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--servers", f.servers, "server count, or auto for the minimum");
    cmd->add_option("--seed", f.seed, "seed for shares, queries and generators");
    cmd->add_option("--degree", f.degree, "sharing polynomial degree");
    cmd->add_option("--rid-mode", f.rid_mode, "seq or permuted");
    repeated(cmd->add_option("--range", f.range_columns, "columns that support range predicates"));
    repeated(cmd->add_option("--digest", f.digest_columns, "COLUMN=DIGITS hash-digest mapping"));
    cmd->add_flag("--no-compact", f.no_compact, "omit single-element payload columns");
    cmd->add_flag("--joins", f.joins, "reject payloads that encode to zero");
  };
  auto add_query = [&](CLI::App* cmd) {
    cmd->add_option("--pad-fetch", f.pad_fetch, "fetch vector length (0: next power of two)");
    cmd->add_flag("--tree", f.tree, "multi-tuple selection by tree search");
    cmd->add_flag("--one-round", f.one_round, "multi-tuple selection in one round (default)");
    cmd->add_option("--range-mode", f.range_mode, "eq2 or sum-signs");
    cmd->add_option("--partition-policy", f.partition, "all or case4");
    cmd->add_flag("--nonpkfk", f.nonpkfk, "join without a primary key");
    cmd->add_option("--fake-join-values", f.fake_join_values, "extra fake rounds in joins");
    cmd->add_option("--report", f.report, "write the cost report as JSON");
    cmd->add_option("query", f.query, "query template and arguments");
  };

  auto* share = app.add_subcommand("share", "secret-share CSV relations into share files");
  repeated(share->add_option("--input", f.inputs, "headered CSV, one per relation"))->required();
  share->add_option("--out", f.out_dir, "output directory")->required();
  add_common(share);

  auto* query = app.add_subcommand("query", "run a query against share files");
  query->add_option("--shares", f.shares_dir, "share file directory")->required();
  repeated(query->add_option("--relation", f.relations, "relations to load, in order"));
  add_common(query);
  add_query(query);

  auto* verify = app.add_subcommand("verify", "run a query and compare with the oracle");
  repeated(verify->add_option("--input", f.inputs, "headered CSV, one per relation"));
  verify->add_option("--shares", f.shares_dir, "use these share files instead of sharing");
  verify->add_option("--sweep", f.sweep, "run N randomized workloads instead");
  add_common(verify);
  add_query(verify);

  auto* bench = app.add_subcommand("bench", "time a count over generated Customer rows");
  bench->add_option("--rows", f.bench_rows, "row counts")->delimiter(',');
  bench->add_option("--kernel", f.kernel, "serial, parallel or both");
  add_common(bench);
  add_query(bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*share) return cmd_share(f);
    if (*query) return cmd_query(f);
    if (*verify) return cmd_verify(f);
    if (*bench) return cmd_bench(f);
  } catch (const UsageError& e) {
    std::cerr << "usage: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return is_usage(e.code()) ? kExitUsage : kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
