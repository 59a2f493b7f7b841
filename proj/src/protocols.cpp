// The query protocols driven by Coordinator: which requests go out in which
// round, and how the interpolated answers turn into results.

#include <algorithm>
#include <map>
#include <set>

#include "ssq/coordinator.hpp"
#include "ssq/error.hpp"

namespace ssq {
namespace {

uint64_t floor_log(uint64_t n, uint64_t base) {
  uint64_t r = 0;
  for (uint64_t v = n; v >= base; v /= base) ++r;
  return r;
}

// Smallest r with base^r >= n.
uint64_t ceil_log(uint64_t n, uint64_t base) {
  uint64_t r = 0;
  for (uint64_t v = 1; v < n; v *= base) ++r;
  return r;
}

uint64_t next_pow2(uint64_t v) {
  uint64_t p = 1;
  while (p < v) p <<= 1;
  return p;
}

uint64_t max_encodable(int width) {
  uint64_t v = 1;
  for (int i = 0; i < width && v <= UINT64_MAX / 10; ++i) v *= 10;
  return v - 1;
}

std::string decode_cell(const ColumnCodec& codec, std::span<const Fp> cell) {
  UnaryWord word{codec.alphabet.size(), std::vector<uint8_t>(cell.size())};
  for (size_t i = 0; i < cell.size(); ++i) {
    if (cell[i].v > 1) {
      throw Error(ErrorCode::kInconsistentShares,
                  "column " + codec.name + " reconstructed to a non-binary unary word");
    }
    word.bits[i] = static_cast<uint8_t>(cell[i].v);
  }
  return codec.decode(word);
}

std::string decode_payload(const ColumnCodec& codec, std::span<const Fp> v) {
  return codec.compact ? codec.decode_compact(v[0].v) : decode_cell(codec, v);
}

struct Tuple {
  uint64_t rid = 0;
  std::vector<std::string> values;
};

size_t payload_width(const Schema& s, std::optional<size_t> skip) {
  size_t w = s.payload_length();
  if (skip) w -= s.payload_length(*skip);
  return w;
}

// Splits a fetched payload into RID and user attributes. `skip` is a column
// missing from the payload. A zero RID marks a fake or unmatched slot.
Tuple decode_tuple(const Schema& s, std::span<const Fp> v, std::optional<size_t> skip = {}) {
  Tuple t;
  size_t at = 0;
  for (size_t j = 0; j < s.columns.size(); ++j) {
    if (skip && *skip == j) continue;
    if (j == s.rid_index()) t.rid = v[at].v;
    at += s.payload_length(j);
  }
  if (t.rid == 0) {
    if (std::any_of(v.begin(), v.end(), [](Fp x) { return x.v != 0; })) {
      throw Error(ErrorCode::kInconsistentShares, "empty slot carries nonzero payload");
    }
    return t;
  }
  at = 0;
  for (size_t j = 0; j < s.columns.size(); ++j) {
    if (skip && *skip == j) continue;
    const size_t len = s.payload_length(j);
    if (j != s.rid_index()) t.values.push_back(decode_payload(s.columns[j], v.subspan(at, len)));
    at += len;
  }
  return t;
}

std::vector<std::string> user_attributes(const Schema& s, std::optional<size_t> skip = {}) {
  std::vector<std::string> out;
  for (size_t j = 0; j < s.attribute_count(); ++j) {
    if (!skip || *skip != j) out.push_back(s.columns[j].name);
  }
  return out;
}

void add_bound(CostLedger& l, std::string name, double observed, double bound,
               bool exact = false) {
  l.bounds.push_back(BoundCheck{std::move(name), observed, bound,
                                exact ? observed == bound : observed <= bound});
}

uint64_t ops(const OpCounters& o) { return o.field_adds + o.field_muls; }

uint64_t max_ops(const CostLedger& l) {
  uint64_t m = 0;
  for (const auto& o : l.server_ops) m = std::max(m, ops(o));
  return m;
}

uint64_t max_down(const CostLedger& l) {
  return *std::max_element(l.elements_down.begin(), l.elements_down.end());
}

}  // namespace

// ---- request construction --------------------------------------------------

std::vector<std::vector<Fp>> Coordinator::share_bits(const std::vector<uint8_t>& bits,
                                                     int degree) {
  const size_t c = engines_.size();
  const PrimeField field(engines_.front()->prime());
  SharingParams params;
  params.servers = static_cast<int>(c);
  params.degree = degree;
  params.prime = field.modulus();
  std::vector<std::vector<Fp>> out(c, std::vector<Fp>(bits.size()));
  for (size_t b = 0; b < bits.size(); ++b) {
    const auto shares = make_shares(field, Fp{bits[b]}, params, rng_);
    for (size_t k = 0; k < c; ++k) out[k][b] = shares[k].value;
  }
  return out;
}

std::vector<QueryShares> Coordinator::predicate_requests(EngineOp op, const QueryPlan& plan) {
  const Schema& s = schema(plan.relation);
  const auto& codec = s.columns[s.index_of(plan.attribute)];
  const auto shared = share_bits(codec.encode_predicate(plan.value).bits, s.degree);
  std::vector<QueryShares> out(engines_.size());
  for (size_t k = 0; k < out.size(); ++k) {
    out[k].op = op;
    out[k].relation = plan.relation;
    out[k].attribute = plan.attribute;
    out[k].predicate = shared[k];
  }
  return out;
}

std::vector<std::vector<std::vector<Fp>>> Coordinator::fetch_words(
    const Schema& s, const std::vector<uint64_t>& rids, size_t length) {
  const auto& codec = s.rid();
  const uint64_t top = max_encodable(codec.width);
  std::vector<uint64_t> vec = rids;
  // fake RIDs lie above every real one and reconstruct to empty slots
  for (uint64_t f = 0; vec.size() < length; ++f) {
    vec.push_back(s.rid_max + 1 + f % (top - s.rid_max));
  }
  std::vector<std::vector<std::vector<Fp>>> out(engines_.size());
  for (uint64_t rid : vec) {
    const auto shared = share_bits(codec.encode(std::to_string(rid)).bits, s.degree);
    for (size_t k = 0; k < out.size(); ++k) out[k].push_back(shared[k]);
  }
  return out;
}

size_t Coordinator::fetch_length(const QueryPlan& plan, size_t ell) const {
  const size_t requested = plan.pad_fetch.value_or(options_.pad_fetch);
  const size_t length = requested == 0 ? next_pow2(std::max<size_t>(ell, 1)) : requested;
  if (ell > length) {
    throw Error(ErrorCode::kPaddingTooSmall, std::to_string(ell) + " matches exceed fetch length " +
                                                 std::to_string(length));
  }
  return length;
}

std::vector<Row> Coordinator::fetch_rows(const QueryPlan& plan, const std::vector<uint64_t>& rids,
                                         size_t length) {
  const Schema& s = schema(plan.relation);
  auto words = fetch_words(s, rids, length);
  std::vector<std::vector<QueryShares>> requests(engines_.size());
  for (size_t k = 0; k < requests.size(); ++k) {
    QueryShares q;
    q.op = EngineOp::kFetch;
    q.relation = plan.relation;
    q.fetch = std::move(words[k]);
    requests[k].push_back(std::move(q));
  }
  const auto answers = round("fetch", std::move(requests));
  const auto values = interpolate(answers, 0);
  const size_t width = s.payload_length();
  std::vector<Row> rows;
  for (size_t i = 0; i < length; ++i) {
    Tuple t = decode_tuple(s, std::span<const Fp>(values).subspan(i * width, width));
    if (t.rid == 0) continue;
    rows.push_back(Row{t.rid, std::move(t.values)});
  }
  if (rows.size() != rids.size()) {
    throw Error(ErrorCode::kInconsistentShares, "fetched " + std::to_string(rows.size()) +
                                                    " tuples for " + std::to_string(rids.size()) +
                                                    " row ids");
  }
  ledger_.fetch_length = length;
  std::sort(rows.begin(), rows.end());
  return rows;
}

std::vector<uint64_t> Coordinator::rids_from_marks(const Schema& s, const std::vector<Fp>& values,
                                                   bool masked) const {
  std::vector<uint64_t> rids;
  for (size_t i = 0; i < values.size(); ++i) {
    const uint64_t v = values[i].v;
    if (v == 0) continue;
    if (masked) {
      if (v > s.rid_max) throw Error(ErrorCode::kInconsistentShares, "masked RID out of range");
      rids.push_back(v);
    } else {
      if (v != 1) throw Error(ErrorCode::kInconsistentShares, "match bit is not 0/1");
      rids.push_back(i + 1);
    }
  }
  std::sort(rids.begin(), rids.end());
  return rids;
}

uint64_t Coordinator::count_round(const QueryPlan& plan) {
  std::vector<std::vector<QueryShares>> requests(engines_.size());
  auto reqs = predicate_requests(EngineOp::kCount, plan);
  for (size_t k = 0; k < reqs.size(); ++k) requests[k].push_back(std::move(reqs[k]));
  return interpolate(round("count", std::move(requests)), 0)[0].v;
}

// ---- protocols -------------------------------------------------------------

uint64_t Coordinator::run_count(const QueryPlan& plan) {
  begin(plan);
  const uint64_t count = count_round(plan);
  finish();
  const auto& l = ledger_;
  add_bound(ledger_, "rounds", l.rounds, 1, true);
  add_bound(ledger_, "elements_down_per_server", max_down(l), 1);
  add_bound(ledger_, "user_interp_ops", l.user_interp_ops, 1);
  add_bound(ledger_, "server_ops_nw", max_ops(l), 4.0 * l.n * l.w);
  return count;
}

std::vector<Row> Coordinator::run_select_single(const QueryPlan& plan) {
  begin(plan);
  const uint64_t ell = count_round(plan);
  ledger_.ell = ell;
  std::vector<Row> rows;
  if (ell > 1) {
    if (!options_.single_fallback) {
      throw Error(ErrorCode::kNotUnique, plan.attribute + "=" + plan.value + " matches " +
                                             std::to_string(ell) + " tuples");
    }
    rows = tree_search(plan, ell);
    finish();
    return rows;
  }
  const Schema& s = schema(plan.relation);
  std::vector<std::vector<QueryShares>> requests(engines_.size());
  auto reqs = predicate_requests(EngineOp::kSelectSingle, plan);
  for (size_t k = 0; k < reqs.size(); ++k) requests[k].push_back(std::move(reqs[k]));
  const auto answers = round("select", std::move(requests));
  const auto values = interpolate(answers, 0);
  Tuple t = decode_tuple(s, values);
  if (t.rid != 0) rows.push_back(Row{t.rid, std::move(t.values)});
  if (rows.size() != ell) throw Error(ErrorCode::kInconsistentShares, "count and select disagree");
  finish();
  const auto& l = ledger_;
  const double payload = static_cast<double>(s.payload_length());
  add_bound(ledger_, "rounds", l.rounds, 2, true);
  add_bound(ledger_, "elements_down_per_server", max_down(l), 1 + payload);
  add_bound(ledger_, "server_ops_nmw", max_ops(l), 4.0 * l.n * (l.w + payload));
  return rows;
}

std::vector<Row> Coordinator::run_select_multi_oneround(const QueryPlan& plan) {
  begin(plan);
  const Schema& s = schema(plan.relation);
  const bool masked = s.rid_mode == RidMode::kPermuted;
  std::vector<std::vector<QueryShares>> requests(engines_.size());
  auto reqs = predicate_requests(masked ? EngineOp::kMaskedRids : EngineOp::kMatchVector, plan);
  for (size_t k = 0; k < reqs.size(); ++k) requests[k].push_back(std::move(reqs[k]));
  const auto answers = round("match", std::move(requests));
  const auto rids = rids_from_marks(s, interpolate(answers, 0), masked);
  ledger_.ell = rids.size();
  const size_t length = fetch_length(plan, rids.size());
  auto rows = fetch_rows(plan, rids, length);
  finish();
  const auto& l = ledger_;
  const double payload = static_cast<double>(s.payload_length());
  const double rid_w = static_cast<double>(s.rid().cell_length());
  add_bound(ledger_, "rounds", l.rounds, 2, true);
  add_bound(ledger_, "match_elements_down", static_cast<double>(l.transcript[0].elements_down),
            static_cast<double>(l.n), true);
  add_bound(ledger_, "elements_down_per_server", max_down(l), l.n + length * payload);
  add_bound(ledger_, "server_ops_lnmw", max_ops(l),
            4.0 * (l.n * l.w + length * l.n * (rid_w + payload)));
  return rows;
}

std::vector<Row> Coordinator::run_select_multi_tree(const QueryPlan& plan) {
  begin(plan);
  const uint64_t ell = count_round(plan);
  ledger_.ell = ell;
  auto rows = tree_search(plan, ell);
  finish();
  return rows;
}

std::vector<Row> Coordinator::tree_search(const QueryPlan& plan, uint64_t ell) {
  const Schema& s = schema(plan.relation);
  const size_t n = s.rows;
  if (ell == 0) return fetch_rows(plan, {}, fetch_length(plan, 0));
  if (ell == 1) {
    std::vector<std::vector<QueryShares>> requests(engines_.size());
    auto reqs = predicate_requests(EngineOp::kSelectSingle, plan);
    for (size_t k = 0; k < reqs.size(); ++k) requests[k].push_back(std::move(reqs[k]));
    const auto values = interpolate(round("select", std::move(requests)), 0);
    Tuple t = decode_tuple(s, values);
    if (t.rid == 0) throw Error(ErrorCode::kInconsistentShares, "single match vanished");
    return {Row{t.rid, std::move(t.values)}};
  }

  const bool permuted = s.rid_mode == RidMode::kPermuted;
  const PartitionPolicy policy = plan.partition.value_or(options_.partition);
  const size_t branching = plan.branching.value_or(options_.branching);
  struct Block {
    size_t begin, end;
    uint64_t count;
    size_t size() const { return end - begin; }
  };
  // Cases 1-3: no match, one match, or every tuple matching. With permuted
  // RIDs a fully matching block still has to be split down to single rows.
  auto settled = [&](const Block& b) {
    return b.count <= 1 || (b.count == b.size() && (!permuted || b.size() == 1));
  };

  std::vector<Block> blocks{{0, n, ell}};
  while (!std::all_of(blocks.begin(), blocks.end(), settled)) {
    std::vector<Block> next;
    std::vector<RowBlock> asked;
    std::vector<size_t> parent_of;
    std::vector<size_t> asked_at;
    for (size_t bi = 0; bi < blocks.size(); ++bi) {
      const Block& b = blocks[bi];
      const bool split = policy == PartitionPolicy::kAll ? b.size() > 1 : !settled(b);
      if (!split) {
        next.push_back(b);
        continue;
      }
      size_t beta = branching ? branching : (b.size() >= ell ? ell : 2);
      beta = std::clamp<size_t>(beta, 2, b.size());
      const size_t base = b.size() / beta;
      const size_t extra = b.size() % beta;
      size_t at = b.begin;
      for (size_t p = 0; p < beta; ++p) {
        const size_t len = base + (p < extra ? 1 : 0);
        asked_at.push_back(next.size());
        next.push_back(Block{at, at + len, 0});
        asked.push_back(RowBlock{at, at + len});
        parent_of.push_back(bi);
        at += len;
      }
    }
    auto reqs = predicate_requests(EngineOp::kBlockCounts, plan);
    std::vector<std::vector<QueryShares>> requests(engines_.size());
    for (size_t k = 0; k < reqs.size(); ++k) {
      reqs[k].blocks = asked;
      requests[k].push_back(std::move(reqs[k]));
    }
    const auto counts = interpolate(round("address", std::move(requests)), 0);
    ++ledger_.address_rounds;
    std::vector<uint64_t> sums(blocks.size(), 0);
    for (size_t i = 0; i < asked.size(); ++i) {
      next[asked_at[i]].count = counts[i].v;
      sums[parent_of[i]] += counts[i].v;
    }
    for (size_t i = 0; i < asked.size(); ++i) {
      if (sums[parent_of[i]] != blocks[parent_of[i]].count) {
        throw Error(ErrorCode::kInconsistentShares, "block counts do not add up");
      }
    }
    blocks = std::move(next);
  }

  std::vector<uint64_t> rids;
  std::vector<RowBlock> id_blocks;
  std::vector<bool> wanted;
  for (const auto& b : blocks) {
    const bool need_sum = permuted ? b.count == 1 : b.count == 1 && b.size() > 1;
    if (!permuted && b.count == b.size()) {
      for (size_t i = b.begin; i < b.end; ++i) rids.push_back(i + 1);
    }
    const bool ask = policy == PartitionPolicy::kAll ? (permuted || b.size() > 1) : need_sum;
    if (ask) {
      id_blocks.push_back(RowBlock{b.begin, b.end});
      wanted.push_back(need_sum);
    }
  }
  if (!id_blocks.empty()) {
    auto reqs = predicate_requests(EngineOp::kBlockRidSums, plan);
    std::vector<std::vector<QueryShares>> requests(engines_.size());
    for (size_t k = 0; k < reqs.size(); ++k) {
      reqs[k].blocks = id_blocks;
      requests[k].push_back(std::move(reqs[k]));
    }
    const auto sums = interpolate(round("tuple-id", std::move(requests)), 0);
    ++ledger_.address_rounds;
    for (size_t i = 0; i < id_blocks.size(); ++i) {
      if (!wanted[i]) continue;
      const uint64_t rid = sums[i].v;
      if (rid == 0 || rid > s.rid_max) {
        throw Error(ErrorCode::kInconsistentShares, "block RID sum out of range");
      }
      rids.push_back(rid);
    }
  }
  std::sort(rids.begin(), rids.end());
  if (rids.size() != ell) throw Error(ErrorCode::kInconsistentShares, "tree search lost matches");

  // Fully matching blocks are terminal only when RIDs are positional;
  // permuted RIDs split them down to single rows, which costs the ceilings.
  const uint64_t bound = permuted ? ceil_log(n, ell) + ceil_log(ell, 2) + 1
                                  : floor_log(n, ell) + floor_log(ell, 2) + 1;
  add_bound(ledger_, "address_rounds", ledger_.address_rounds, static_cast<double>(bound));
  auto rows = fetch_rows(plan, rids, fetch_length(plan, ell));
  // the count round before the search and the fetch after it
  add_bound(ledger_, "rounds", ledger_.rounds, static_cast<double>(bound + 2));
  return rows;
}

std::vector<Row> Coordinator::run_pkfk_join(const QueryPlan& plan) {
  begin(plan);
  const Schema& x = schema(plan.relation);
  const Schema& y = schema(plan.other_relation);
  const std::string& yb = plan.other_attribute.empty() ? plan.attribute : plan.other_attribute;
  const size_t skip = y.index_of(yb);
  x.index_of(plan.attribute);

  std::vector<std::vector<QueryShares>> requests(engines_.size());
  for (auto& r : requests) {
    QueryShares q;
    q.op = EngineOp::kPkFkJoin;
    q.relation = plan.relation;
    q.attribute = plan.attribute;
    q.other_relation = plan.other_relation;
    q.other_attribute = yb;
    r.push_back(std::move(q));
  }
  const auto values = interpolate(round("join", std::move(requests)), 0);
  const size_t px = x.payload_length();
  const size_t py = payload_width(y, skip);
  std::vector<Row> rows;
  for (size_t i = 0; i < y.rows; ++i) {
    const std::span<const Fp> tuple = std::span<const Fp>(values).subspan(i * (px + py), px + py);
    Tuple tx = decode_tuple(x, tuple.first(px));
    if (tx.rid == 0) continue;
    Tuple ty = decode_tuple(y, tuple.subspan(px), skip);
    Row row;
    row.values = std::move(tx.values);
    row.values.insert(row.values.end(), ty.values.begin(), ty.values.end());
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end());
  finish();
  auto& l = ledger_;
  l.k = rows.size();
  const double nx = static_cast<double>(x.rows);
  const double ny = static_cast<double>(y.rows);
  add_bound(l, "rounds", l.rounds, 1, true);
  add_bound(l, "elements_down_per_server", max_down(l), ny * static_cast<double>(px + py), true);
  add_bound(l, "shuffle_pairs", static_cast<double>(l.server_ops[0].shuffle_pairs), nx * ny + ny,
            true);
  add_bound(l, "server_ops_n2mw", max_ops(l),
            4.0 * nx * ny * static_cast<double>(l.w + px));
  return rows;
}

std::vector<Row> Coordinator::run_nonpkfk_join(const QueryPlan& plan) {
  begin(plan);
  const Schema& x = schema(plan.relation);
  const Schema& y = schema(plan.other_relation);
  const std::string& yb = plan.other_attribute.empty() ? plan.attribute : plan.other_attribute;
  const size_t xj = x.index_of(plan.attribute);
  const size_t yj = y.index_of(yb);

  // Round 1: every join value of both relations (plus RIDs when they are not
  // positional).
  std::vector<std::vector<QueryShares>> requests(engines_.size());
  auto column_fetch = [&](const std::string& rel, const std::string& attr) {
    for (auto& r : requests) {
      QueryShares q;
      q.op = EngineOp::kColumnFetch;
      q.relation = rel;
      q.attribute = attr;
      r.push_back(std::move(q));
    }
  };
  column_fetch(plan.relation, plan.attribute);
  column_fetch(plan.other_relation, yb);
  const bool x_perm = x.rid_mode == RidMode::kPermuted;
  const bool y_perm = y.rid_mode == RidMode::kPermuted;
  if (x_perm) column_fetch(plan.relation, std::string(kRidAttribute));
  if (y_perm) column_fetch(plan.other_relation, std::string(kRidAttribute));
  const auto answers = round("join-values", std::move(requests));

  auto group = [&](const Schema& s, size_t j, size_t req, std::optional<size_t> rid_req) {
    const auto vals = interpolate(answers, req);
    std::vector<Fp> rids;
    if (rid_req) rids = interpolate(answers, *rid_req);
    const size_t len = s.payload_length(j);
    std::map<std::string, std::vector<uint64_t>> out;
    for (size_t i = 0; i < s.rows; ++i) {
      const std::string v =
          decode_payload(s.columns[j], std::span<const Fp>(vals).subspan(i * len, len));
      out[v].push_back(rid_req ? rids[i].v : i + 1);
    }
    return out;
  };
  size_t next_req = 2;
  std::optional<size_t> xr, yr;
  if (x_perm) xr = next_req++;
  if (y_perm) yr = next_req++;
  const auto gx = group(x, xj, 0, xr);
  const auto gy = group(y, yj, 1, yr);

  std::vector<std::string> common;
  size_t ell_max = 0;
  for (const auto& [v, rx] : gx) {
    auto it = gy.find(v);
    if (it == gy.end()) continue;
    common.push_back(v);
    ell_max = std::max({ell_max, rx.size(), it->second.size()});
  }
  const size_t requested = plan.pad_fetch.value_or(options_.pad_fetch);
  const size_t length = requested == 0 ? std::max<size_t>(ell_max, 1) : requested;
  if (ell_max > length) {
    throw Error(ErrorCode::kPaddingTooSmall, "join value occurs " + std::to_string(ell_max) +
                                                 " times, fetch length " + std::to_string(length));
  }
  ledger_.ell = ell_max;
  ledger_.fetch_length = length;

  const size_t px = x.payload_length();
  const size_t py = y.payload_length();
  std::vector<Row> rows;
  const size_t total = common.size() + options_.fake_join_values;
  for (size_t v = 0; v < total; ++v) {
    const bool real = v < common.size();
    const std::vector<uint64_t> none;
    auto wx = fetch_words(x, real ? gx.at(common[v]) : none, length);
    auto wy = fetch_words(y, real ? gy.at(common[v]) : none, length);
    std::vector<std::vector<QueryShares>> reqs(engines_.size());
    for (size_t k = 0; k < reqs.size(); ++k) {
      QueryShares q;
      q.op = EngineOp::kJoinConcat;
      q.relation = plan.relation;
      q.other_relation = plan.other_relation;
      q.fetch = std::move(wx[k]);
      q.other_fetch = std::move(wy[k]);
      reqs[k].push_back(std::move(q));
    }
    // fetch and concatenation run back to back on each server
    const auto values = interpolate(round("fetch+concat", std::move(reqs)), 0);
    for (size_t p = 0; p < length * length; ++p) {
      const auto tuple = std::span<const Fp>(values).subspan(p * (px + py), px + py);
      Tuple tx = decode_tuple(x, tuple.first(px));
      Tuple ty = decode_tuple(y, tuple.subspan(px));
      if (tx.rid == 0 || ty.rid == 0) continue;
      if (!real) throw Error(ErrorCode::kInconsistentShares, "fake join value produced tuples");
      Row row;
      row.values = std::move(tx.values);
      for (size_t j = 0; j < ty.values.size(); ++j) {
        if (j != yj) row.values.push_back(std::move(ty.values[j]));
      }
      rows.push_back(std::move(row));
    }
  }
  std::sort(rows.begin(), rows.end());
  finish();
  auto& l = ledger_;
  l.k = total;
  const double k = static_cast<double>(total);
  const double len = static_cast<double>(length);
  add_bound(l, "rounds", l.rounds, 2 * k + 2);
  add_bound(l, "elements_down_per_server", max_down(l),
            static_cast<double>(x.rows * x.payload_length(xj) + y.rows * y.payload_length(yj) +
                                (x_perm ? x.rows : 0) + (y_perm ? y.rows : 0)) +
                k * len * len * static_cast<double>(px + py));
  return rows;
}

std::vector<QueryShares> Coordinator::range_requests(EngineOp op, const QueryPlan& plan,
                                                     bool* empty) {
  const Schema& s = schema(plan.relation);
  const auto& codec = s.columns[s.index_of(plan.attribute)];
  if (codec.binary_bits < 2) {
    throw Error(ErrorCode::kBadParams, plan.attribute + " was not shared for range queries");
  }
  const auto [lo, hi] = codec.binary_domain();
  int64_t a = std::max(plan.low, lo);
  int64_t b = std::min(plan.high, hi);
  *empty = a > b;
  // An empty range still costs a full query, so it looks like any other.
  if (*empty) a = b = lo;
  const auto sa = share_bits(binary_encode(a, codec.binary_bits).bits, s.degree);
  const auto sb = share_bits(binary_encode(b, codec.binary_bits).bits, s.degree);
  std::vector<QueryShares> out(engines_.size());
  for (size_t k = 0; k < out.size(); ++k) {
    out[k].op = op;
    out[k].relation = plan.relation;
    out[k].attribute = plan.attribute;
    out[k].low = sa[k];
    out[k].high = sb[k];
    out[k].eq2 = op == EngineOp::kRangeMaskedRids || options_.range_mode == RangeMode::kEq2;
  }
  return out;
}

uint64_t Coordinator::run_range_count(const QueryPlan& plan) {
  begin(plan);
  const Schema& s = schema(plan.relation);
  bool empty = false;
  auto reqs = range_requests(EngineOp::kRangeCount, plan, &empty);
  std::vector<std::vector<QueryShares>> requests(engines_.size());
  for (size_t k = 0; k < reqs.size(); ++k) requests[k].push_back(std::move(reqs[k]));
  const uint64_t v = interpolate(round("range", std::move(requests)), 0)[0].v;
  const uint64_t count = options_.range_mode == RangeMode::kEq2 ? v : s.rows - v;
  if (count > s.rows) throw Error(ErrorCode::kInconsistentShares, "range count exceeds n");
  finish();
  add_bound(ledger_, "rounds", ledger_.rounds, 1, true);
  add_bound(ledger_, "elements_down_per_server", max_down(ledger_), 1);
  return empty ? 0 : count;
}

std::vector<Row> Coordinator::run_range_select(const QueryPlan& plan) {
  begin(plan);
  const Schema& s = schema(plan.relation);
  const bool masked = s.rid_mode == RidMode::kPermuted;
  bool empty = false;
  auto reqs = range_requests(masked ? EngineOp::kRangeMaskedRids : EngineOp::kRangeMark, plan,
                             &empty);
  std::vector<std::vector<QueryShares>> requests(engines_.size());
  for (size_t k = 0; k < reqs.size(); ++k) requests[k].push_back(std::move(reqs[k]));
  auto marks = interpolate(round("range", std::move(requests)), 0);
  if (!masked && options_.range_mode == RangeMode::kSumSigns) {
    for (auto& m : marks) {
      if (m.v > 1) throw Error(ErrorCode::kInconsistentShares, "sign sum is not 0/1");
      m.v = 1 - m.v;
    }
  }
  std::vector<uint64_t> rids = rids_from_marks(s, marks, masked);
  if (empty) rids.clear();
  ledger_.ell = rids.size();
  const size_t length = fetch_length(plan, rids.size());
  auto rows = fetch_rows(plan, rids, length);
  finish();
  add_bound(ledger_, "rounds", ledger_.rounds, 2, true);
  add_bound(ledger_, "elements_down_per_server", max_down(ledger_),
            static_cast<double>(s.rows + length * s.payload_length()));
  return rows;
}

QueryResult Coordinator::run(const QueryPlan& plan) {
  QueryResult r;
  r.kind = plan.kind;
  r.columns = output_columns(plan);
  switch (plan.kind) {
    case PlanKind::kCount: r.count = run_count(plan); break;
    case PlanKind::kSelectSingle: r.rows = run_select_single(plan); break;
    case PlanKind::kSelectOneRound: r.rows = run_select_multi_oneround(plan); break;
    case PlanKind::kSelectTree: r.rows = run_select_multi_tree(plan); break;
    case PlanKind::kPkFkJoin: r.rows = run_pkfk_join(plan); break;
    case PlanKind::kNonPkFkJoin: r.rows = run_nonpkfk_join(plan); break;
    case PlanKind::kRangeCount: r.count = run_range_count(plan); break;
    case PlanKind::kRangeSelect: r.rows = run_range_select(plan); break;
  }
  return r;
}

std::vector<std::string> Coordinator::output_columns(const QueryPlan& plan) const {
  const Schema& s = schema(plan.relation);
  switch (plan.kind) {
    case PlanKind::kCount:
    case PlanKind::kRangeCount:
      return {"count"};
    case PlanKind::kPkFkJoin:
    case PlanKind::kNonPkFkJoin: {
      const Schema& y = schema(plan.other_relation);
      const std::string& yb = plan.other_attribute.empty() ? plan.attribute : plan.other_attribute;
      auto cols = user_attributes(s);
      auto ycols = user_attributes(y, y.index_of(yb));
      cols.insert(cols.end(), ycols.begin(), ycols.end());
      return cols;
    }
    default:
      return user_attributes(s);
  }
}

}  // namespace ssq
