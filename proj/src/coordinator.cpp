#include "ssq/coordinator.hpp"

#include <algorithm>
#include <future>
#include <map>
#include <sstream>

#include "json.hpp"
#include "ssq/error.hpp"

namespace ssq {
std::string_view plan_kind_name(PlanKind kind) {
  switch (kind) {
    case PlanKind::kCount: return "count";
    case PlanKind::kSelectSingle: return "select-single";
    case PlanKind::kSelectOneRound: return "select-oneround";
    case PlanKind::kSelectTree: return "select-tree";
    case PlanKind::kPkFkJoin: return "join-pkfk";
    case PlanKind::kNonPkFkJoin: return "join-nonpkfk";
    case PlanKind::kRangeCount: return "range-count";
    case PlanKind::kRangeSelect: return "range-select";
  }
  return "?";
}

QueryPlan QueryPlan::count(std::string rel, std::string attr, std::string value) {
  return select(PlanKind::kCount, std::move(rel), std::move(attr), std::move(value));
}

QueryPlan QueryPlan::select(PlanKind kind, std::string rel, std::string attr, std::string value) {
  QueryPlan p;
  p.kind = kind;
  p.relation = std::move(rel);
  p.attribute = std::move(attr);
  p.value = std::move(value);
  return p;
}

QueryPlan QueryPlan::join(PlanKind kind, std::string parent, std::string child, std::string attr) {
  QueryPlan p;
  p.kind = kind;
  p.relation = std::move(parent);
  p.other_relation = std::move(child);
  p.attribute = std::move(attr);
  return p;
}

QueryPlan QueryPlan::range(PlanKind kind, std::string rel, std::string attr, int64_t low,
                           int64_t high) {
  QueryPlan p;
  p.kind = kind;
  p.relation = std::move(rel);
  p.attribute = std::move(attr);
  p.low = low;
  p.high = high;
  return p;
}

// ---- ledger ----------------------------------------------------------------

void CostLedger::reset(std::string query_name, int server_count) {
  *this = CostLedger{};
  query = std::move(query_name);
  servers = server_count;
  elements_up.assign(static_cast<size_t>(server_count), 0);
  elements_down.assign(static_cast<size_t>(server_count), 0);
  server_ops.assign(static_cast<size_t>(server_count), OpCounters{});
}

bool CostLedger::bounds_pass() const {
  return std::all_of(bounds.begin(), bounds.end(), [](const BoundCheck& b) { return b.pass; });
}

std::string CostLedger::to_text() const {
  std::ostringstream out;
  out << "query=" << query << "\nservers=" << servers << "\nrounds=" << rounds
      << "\naddress_rounds=" << address_rounds << "\nn=" << n << "\nm=" << m << "\nw=" << w
      << "\nell=" << ell << "\nk=" << k << "\nfetch_length=" << fetch_length
      << "\nuser_interp_ops=" << user_interp_ops << '\n';
  for (int s = 0; s < servers; ++s) {
    const auto& o = server_ops[s];
    out << "server." << s + 1 << ".elements_up=" << elements_up[s] << '\n'
        << "server." << s + 1 << ".elements_down=" << elements_down[s] << '\n'
        << "server." << s + 1 << ".field_adds=" << o.field_adds << '\n'
        << "server." << s + 1 << ".field_muls=" << o.field_muls << '\n'
        << "server." << s + 1 << ".rows_touched=" << o.rows_touched << '\n'
        << "server." << s + 1 << ".shuffle_pairs=" << o.shuffle_pairs << '\n';
  }
  for (const auto& r : transcript) {
    out << "round." << r.round << "=" << r.phase << " ops=" << r.ops << " requests=" << r.requests
        << " blocks=" << r.blocks << " up=" << r.elements_up << " down=" << r.elements_down << '\n';
  }
  for (const auto& b : bounds) {
    out << "bound." << b.name << "=" << (b.pass ? "pass" : "FAIL") << " observed=" << b.observed
        << " limit=" << b.bound << '\n';
  }
  return out.str();
}

std::string CostLedger::to_json() const {
  nlohmann::json j;
  j["query"] = query;
  j["servers"] = servers;
  j["rounds"] = rounds;
  j["address_rounds"] = address_rounds;
  j["params"] = {{"n", n}, {"m", m}, {"w", w}, {"ell", ell}, {"k", k}, {"fetch_length", fetch_length}};
  j["user_interp_ops"] = user_interp_ops;
  j["per_server"] = nlohmann::json::array();
  for (int s = 0; s < servers; ++s) {
    const auto& o = server_ops[s];
    j["per_server"].push_back({{"server", s + 1},
                               {"elements_up", elements_up[s]},
                               {"elements_down", elements_down[s]},
                               {"field_adds", o.field_adds},
                               {"field_muls", o.field_muls},
                               {"rows_touched", o.rows_touched},
                               {"shuffle_pairs", o.shuffle_pairs}});
  }
  j["transcript"] = nlohmann::json::array();
  for (const auto& r : transcript) {
    j["transcript"].push_back({{"round", r.round},
                               {"phase", r.phase},
                               {"ops", r.ops},
                               {"requests", r.requests},
                               {"blocks", r.blocks},
                               {"elements_up", r.elements_up},
                               {"elements_down", r.elements_down}});
  }
  j["bounds"] = nlohmann::json::array();
  for (const auto& b : bounds) {
    j["bounds"].push_back(
        {{"name", b.name}, {"observed", b.observed}, {"bound", b.bound}, {"pass", b.pass}});
  }
  j["bounds_pass"] = bounds_pass();
  return j.dump(2);
}

// ---- cluster ---------------------------------------------------------------

Cluster::Cluster(std::vector<std::vector<SharedRelation>> shares, KernelMode mode) {
  if (shares.empty()) throw Error(ErrorCode::kBadParams, "no relations");
  const size_t c = shares.front().size();
  for (const auto& set : shares) {
    if (set.size() != c) {
      throw Error(ErrorCode::kShapeMismatch, "relations are shared across different server counts");
    }
    check_same_shape(set);
  }
  std::vector<std::vector<SharedRelation>> per_server(c);
  for (auto& set : shares) {
    std::sort(set.begin(), set.end(),
              [](const SharedRelation& a, const SharedRelation& b) { return a.server < b.server; });
    for (size_t k = 0; k < c; ++k) {
      if (set[k].server != static_cast<int>(k + 1)) {
        throw Error(ErrorCode::kShapeMismatch, "server indices are not 1..c");
      }
      per_server[k].push_back(std::move(set[k]));
    }
  }
  for (auto& rels : per_server) {
    engines_.push_back(std::make_unique<Engine>(ServerStore(std::move(rels)), mode));
  }
}

Cluster Cluster::load(const std::filesystem::path& dir, const std::vector<std::string>& relations,
                      std::optional<uint64_t> expected_prime, KernelMode mode) {
  std::vector<std::vector<SharedRelation>> shares;
  for (const auto& r : relations) shares.push_back(read_share_set(dir, r, expected_prime));
  return Cluster(std::move(shares), mode);
}

std::vector<Engine*> Cluster::engines() {
  std::vector<Engine*> out;
  for (auto& e : engines_) out.push_back(e.get());
  return out;
}

// ---- coordinator plumbing --------------------------------------------------

int required_servers(const QueryPlan& plan, const Schema& s, const Schema* other,
                     bool single_fallback) {
  const int d = s.degree;
  const int rid_w = s.rid().width;
  const bool permuted = s.rid_mode == RidMode::kPermuted;
  int deg = 0;
  auto attr_w = [&]() { return s.columns[s.index_of(plan.attribute)].width; };
  auto bits = [&]() { return s.columns[s.index_of(plan.attribute)].binary_bits; };
  const int fetch = answer_degree(EngineOp::kFetch, rid_w, d);
  switch (plan.kind) {
    case PlanKind::kCount:
      deg = answer_degree(EngineOp::kCount, attr_w(), d);
      break;
    case PlanKind::kSelectSingle:
      deg = answer_degree(EngineOp::kSelectSingle, attr_w(), d);
      if (single_fallback) deg = std::max(deg, fetch);
      break;
    case PlanKind::kSelectOneRound:
      deg = std::max(answer_degree(permuted ? EngineOp::kMaskedRids : EngineOp::kMatchVector,
                                   attr_w(), d),
                     fetch);
      break;
    case PlanKind::kSelectTree:
      deg = std::max(answer_degree(EngineOp::kBlockRidSums, attr_w(), d), fetch);
      break;
    case PlanKind::kPkFkJoin:
      deg = answer_degree(EngineOp::kPkFkJoin, attr_w(), d);
      break;
    case PlanKind::kNonPkFkJoin: {
      if (!other) throw Error(ErrorCode::kBadParams, "join without a second relation");
      const Schema& y = *other;
      deg = answer_degree(EngineOp::kJoinConcat, std::max(rid_w, y.rid().width),
                          std::max(d, y.degree));
      break;
    }
    case PlanKind::kRangeCount:
      deg = answer_degree(EngineOp::kRangeCount, bits(), d);
      break;
    case PlanKind::kRangeSelect:
      deg = std::max(answer_degree(permuted ? EngineOp::kRangeMaskedRids : EngineOp::kRangeMark,
                                   bits(), d),
                     fetch);
      break;
  }
  return deg + 1;
}

Coordinator::Coordinator(std::vector<Engine*> engines, CoordinatorOptions options)
    : engines_(std::move(engines)), options_(std::move(options)), rng_(options_.seed) {
  if (engines_.empty()) throw Error(ErrorCode::kBadParams, "no engines");
  for (size_t k = 0; k < engines_.size(); ++k) {
    if (engines_[k]->server() != static_cast<int>(k + 1)) {
      throw Error(ErrorCode::kBadParams, "engine " + std::to_string(k) + " is server " +
                                             std::to_string(engines_[k]->server()));
    }
  }
}

const Schema& Coordinator::schema(std::string_view relation) const {
  return engines_.front()->schema(relation);
}

void Coordinator::require_servers(int degree, const std::string& what) const {
  if (degree + 1 > servers()) {
    throw Error(ErrorCode::kInsufficientServers, what + " needs " + std::to_string(degree + 1) +
                                                     " servers, " + std::to_string(servers()) +
                                                     " available");
  }
}

int Coordinator::required_servers(const QueryPlan& plan) const {
  const Schema* other = plan.other_relation.empty() ? nullptr : &schema(plan.other_relation);
  return ssq::required_servers(plan, schema(plan.relation), other, options_.single_fallback);
}

void Coordinator::begin(const QueryPlan& plan) {
  ledger_.reset(std::string(plan_kind_name(plan.kind)), servers());
  for (auto* e : engines_) {
    e->reset_counters();
    e->clear_access_log();
  }
  const Schema& s = schema(plan.relation);
  if (!plan.attribute.empty()) {
    const size_t j = s.index_of(plan.attribute);
    ledger_.w = s.columns[j].cell_length();
  }
  ledger_.n = s.rows;
  ledger_.m = s.attribute_count();
  require_servers(required_servers(plan) - 1, std::string(plan_kind_name(plan.kind)));
}

void Coordinator::finish() {
  for (size_t k = 0; k < engines_.size(); ++k) ledger_.server_ops[k] = engines_[k]->counters();
}

std::vector<std::vector<Answer>> Coordinator::round(
    const std::string& phase, std::vector<std::vector<QueryShares>> requests) {
  const size_t c = engines_.size();
  std::vector<std::future<std::vector<Answer>>> pending;
  pending.reserve(c);
  for (size_t k = 0; k < c; ++k) {
    pending.push_back(std::async(std::launch::async, [engine = engines_[k], &reqs = requests[k]] {
      std::vector<Answer> out;
      out.reserve(reqs.size());
      for (const auto& q : reqs) out.push_back(engine->evaluate(q));
      return out;
    }));
  }
  std::vector<std::vector<Answer>> answers(c);
  std::exception_ptr failure;
  for (size_t k = 0; k < c; ++k) {
    try {
      answers[k] = pending[k].get();
    } catch (...) {
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  RoundRecord rec;
  rec.round = ++ledger_.rounds;
  rec.phase = phase;
  rec.requests = requests[0].size();
  for (size_t r = 0; r < requests[0].size(); ++r) {
    if (r) rec.ops += '+';
    rec.ops += engine_op_name(requests[0][r].op);
    rec.blocks += requests[0][r].blocks.size();
  }
  for (size_t k = 0; k < c; ++k) {
    uint64_t up = 0;
    uint64_t down = 0;
    for (const auto& q : requests[k]) up += q.elements();
    for (const auto& a : answers[k]) down += a.values.size();
    if (k == 0) {
      rec.elements_up = up;
      rec.elements_down = down;
    } else if (up != rec.elements_up || down != rec.elements_down) {
      throw Error(ErrorCode::kShapeMismatch, "server " + std::to_string(k + 1) +
                                                 " exchanged a differently sized message");
    }
    ledger_.elements_up[k] += up;
    ledger_.elements_down[k] += down;
  }
  ledger_.transcript.push_back(std::move(rec));
  return answers;
}

std::vector<Fp> Coordinator::interpolate(const std::vector<std::vector<Answer>>& answers,
                                         size_t request) {
  const size_t c = answers.size();
  const int degree = answers[0][request].degree;
  const size_t len = answers[0][request].values.size();
  for (size_t k = 1; k < c; ++k) {
    if (answers[k][request].degree != degree || answers[k][request].values.size() != len) {
      throw Error(ErrorCode::kShapeMismatch, "servers disagree on answer shape");
    }
  }
  require_servers(degree, "interpolation");

  const PrimeField field(engines_.front()->prime());
  std::vector<Fp> xs(c);
  for (size_t k = 0; k < c; ++k) xs[k] = Fp{k + 1};
  const auto all = field.lagrange_weights_at_zero(xs);
  const size_t t = static_cast<size_t>(degree) + 1;
  const auto few = field.lagrange_weights_at_zero(std::span<const Fp>(xs).first(t));

  std::vector<Fp> out(len);
  for (size_t e = 0; e < len; ++e) {
    Fp v{0};
    for (size_t k = 0; k < c; ++k) v = field.add(v, field.mul(all[k], answers[k][request].values[e]));
    if (options_.check_consistency && t < c) {
      Fp u{0};
      for (size_t k = 0; k < t; ++k) u = field.add(u, field.mul(few[k], answers[k][request].values[e]));
      if (!(u == v)) {
        throw Error(ErrorCode::kInconsistentShares,
                    "element " + std::to_string(e) + " reconstructs differently from " +
                        std::to_string(t) + " and " + std::to_string(c) + " shares");
      }
    }
    out[e] = v;
  }
  ledger_.user_interp_ops += len;
  return out;
}

}  // namespace ssq
