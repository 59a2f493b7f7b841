#include "ssq/engine.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "kernels/kernels.hpp"
#include "mapreduce.hpp"
#include "ssq/error.hpp"

namespace ssq {
namespace {

const kernels::KernelSet& kernel_set(KernelMode mode) {
  return mode == KernelMode::kSerial ? kernels::serial() : kernels::parallel();
}

void check_blocks(std::span<const RowBlock> blocks, size_t n) {
  size_t prev_end = 0;
  for (const auto& b : blocks) {
    if (b.begin >= b.end || b.end > n || b.begin < prev_end) {
      throw Error(ErrorCode::kBadPartition,
                  "block [" + std::to_string(b.begin) + ", " + std::to_string(b.end) +
                      ") over " + std::to_string(n) + " rows");
    }
    prev_end = b.end;
  }
}

// Order in which masked RIDs leave a permuted-RID server. Every server derives
// the same order from the public seed.
std::vector<size_t> output_order(const Schema& s) {
  std::vector<size_t> order(s.rows);
  std::iota(order.begin(), order.end(), 0);
  if (s.rid_mode == RidMode::kPermuted) {
    std::mt19937_64 rng(s.permutation_seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  return order;
}

}  // namespace

std::string_view engine_op_name(EngineOp op) {
  switch (op) {
    case EngineOp::kCount: return "count";
    case EngineOp::kSelectSingle: return "select_single";
    case EngineOp::kMatchVector: return "match_vector";
    case EngineOp::kMaskedRids: return "masked_rids";
    case EngineOp::kFetch: return "fetch";
    case EngineOp::kBlockCounts: return "block_counts";
    case EngineOp::kBlockRidSums: return "block_rid_sums";
    case EngineOp::kColumnFetch: return "column_fetch";
    case EngineOp::kPkFkJoin: return "pkfk_join";
    case EngineOp::kJoinConcat: return "join_concat";
    case EngineOp::kRangeCount: return "range_count";
    case EngineOp::kRangeMark: return "range_mark";
    case EngineOp::kRangeMaskedRids: return "range_masked_rids";
  }
  return "?";
}

size_t QueryShares::elements() const {
  size_t total = predicate.size() + low.size() + high.size();
  for (const auto& w : fetch) total += w.size();
  for (const auto& w : other_fetch) total += w.size();
  return total;
}

int answer_degree(EngineOp op, int symbols, int d) {
  switch (op) {
    case EngineOp::kCount:
    case EngineOp::kMatchVector:
    case EngineOp::kBlockCounts:
      return 2 * symbols * d;
    case EngineOp::kSelectSingle:
    case EngineOp::kMaskedRids:
    case EngineOp::kFetch:
    case EngineOp::kBlockRidSums:
    case EngineOp::kPkFkJoin:
    case EngineOp::kJoinConcat:
      return 2 * symbols * d + d;
    case EngineOp::kColumnFetch:
      return d;
    case EngineOp::kRangeCount:
    case EngineOp::kRangeMark:
      return 2 * symbols * d;
    case EngineOp::kRangeMaskedRids:
      return 2 * symbols * d + d;
  }
  return 0;
}

ServerStore::ServerStore(std::vector<SharedRelation> relations) {
  for (auto& r : relations) {
    if (server_ == 0) server_ = r.server;
    if (r.server != server_) {
      throw Error(ErrorCode::kShapeMismatch, "relations from servers " + std::to_string(server_) +
                                                 " and " + std::to_string(r.server));
    }
    std::string name = r.schema.relation;
    relations_.insert_or_assign(std::move(name), std::move(r));
  }
}

bool ServerStore::has(std::string_view relation) const {
  return relations_.find(relation) != relations_.end();
}

const SharedRelation& ServerStore::relation(std::string_view name) const {
  auto it = relations_.find(name);
  if (it == relations_.end()) {
    throw Error(ErrorCode::kUnknownAttribute, "no relation '" + std::string(name) + "'");
  }
  return it->second;
}

std::vector<std::string> ServerStore::names() const {
  std::vector<std::string> out;
  for (const auto& [name, rel] : relations_) out.push_back(name);
  return out;
}

struct Engine::Column {
  size_t index;
  const ColumnCodec* codec;
  const SharedColumn* unary;
  const SharedColumn* binary;
};

Engine::Engine(ServerStore store, KernelMode mode) : store_(std::move(store)), mode_(mode) {
  bool first = true;
  for (const auto& name : store_.names()) {
    const uint64_t p = store_.relation(name).schema.prime;
    if (!first && p != prime_) {
      throw Error(ErrorCode::kPrimeMismatch, "relations of server " +
                                                 std::to_string(server()) + " use two primes");
    }
    prime_ = p;
    first = false;
  }
}

Engine::Column Engine::column(const SharedRelation& rel, std::string_view attribute) const {
  const size_t j = rel.schema.index_of(attribute);
  return Column{j, &rel.schema.columns[j], &rel.unary[j], &rel.binary[j]};
}

void Engine::touch(EngineOp op, const SharedRelation& rel, size_t begin, size_t end) {
  counters_.rows_touched += end - begin;
  log_.push_back(AccessRecord{op, rel.schema.relation, begin, end});
}

SharedScalar Engine::string_match(std::span<const Fp> cell, std::span<const Fp> pred,
                                  int alphabet, int degree) {
  if (alphabet <= 0 || cell.size() != pred.size() || cell.size() % alphabet != 0) {
    throw Error(ErrorCode::kShapeMismatch, "cell and predicate words differ in shape");
  }
  const PrimeField field(prime_);
  kernels::Counts c;
  Fp out;
  kernels::CellMatrix m{cell.data(), 1, cell.size(), static_cast<size_t>(alphabet)};
  kernel_set(mode_).match_rows(field, m, pred.data(), &out, c);
  counters_.field_adds += c.adds;
  counters_.field_muls += c.muls;
  const int symbols = static_cast<int>(cell.size()) / alphabet;
  return SharedScalar{out, answer_degree(EngineOp::kCount, symbols, degree)};
}

SharedScalar Engine::ss_sub_sign(std::span<const Fp> a, std::span<const Fp> b, int degree) {
  if (a.size() != b.size() || a.size() < 2) {
    throw Error(ErrorCode::kShapeMismatch, "binary words of widths " + std::to_string(a.size()) +
                                               " and " + std::to_string(b.size()));
  }
  const PrimeField field(prime_);
  kernels::Counts c;
  const Fp s = kernels::sub_sign(kernels::CountingOps{field, c}, a.data(), b.data(), a.size());
  counters_.field_adds += c.adds;
  counters_.field_muls += c.muls;
  return SharedScalar{s, 2 * static_cast<int>(a.size()) * degree};
}

std::vector<Fp> Engine::match_all(const SharedRelation& rel, const Column& col,
                                  std::span<const Fp> word, EngineOp op) {
  if (word.size() != col.unary->cell_len) {
    throw Error(ErrorCode::kShapeMismatch,
                "predicate of " + std::to_string(word.size()) + " elements for column " +
                    col.codec->name + " of " + std::to_string(col.unary->cell_len));
  }
  const PrimeField field(rel.schema.prime);
  std::vector<Fp> out(rel.rows());
  kernels::Counts c;
  kernels::CellMatrix m{col.unary->data.data(), rel.rows(), col.unary->cell_len,
                        static_cast<size_t>(col.codec->alphabet.size())};
  kernel_set(mode_).match_rows(field, m, word.data(), out.data(), c);
  counters_.field_adds += c.adds;
  counters_.field_muls += c.muls;
  touch(op, rel, 0, rel.rows());
  return out;
}

std::vector<Fp> Engine::range_all(const SharedRelation& rel, const QueryShares& q) {
  const Column col = column(rel, q.attribute);
  const size_t t = col.binary->cell_len;
  if (t < 2) {
    throw Error(ErrorCode::kShapeMismatch, col.codec->name + " carries no binary words");
  }
  if (q.low.size() != t || q.high.size() != t) {
    throw Error(ErrorCode::kShapeMismatch, "range bounds are not " + std::to_string(t) + " bits");
  }
  const PrimeField field(rel.schema.prime);
  std::vector<Fp> out(rel.rows());
  kernels::Counts c;
  kernels::BitMatrix m{col.binary->data.data(), rel.rows(), t};
  kernel_set(mode_).range_marks(field, m, q.low.data(), q.high.data(), q.eq2, out.data(), c);
  counters_.field_adds += c.adds;
  counters_.field_muls += c.muls;
  touch(q.op, rel, 0, rel.rows());
  return out;
}

void Engine::weighted_payload(const SharedRelation& rel, std::span<const Fp> weights, Fp* out,
                              EngineOp op) {
  const PrimeField field(rel.schema.prime);
  kernels::Counts c;
  const auto& k = kernel_set(mode_);
  size_t offset = 0;
  for (size_t j = 0; j < rel.schema.columns.size(); ++j) {
    const SharedColumn& data = rel.schema.columns[j].compact ? rel.compact[j] : rel.unary[j];
    k.weighted_sum(field, weights.data(), data.data.data(), rel.rows(), data.cell_len,
                   out + offset, c);
    offset += data.cell_len;
  }
  counters_.field_adds += c.adds;
  counters_.field_muls += c.muls;
  touch(op, rel, 0, rel.rows());
}

std::vector<Fp> Engine::masked_rids(const SharedRelation& rel, std::span<const Fp> marks) {
  const PrimeField field(rel.schema.prime);
  const SharedColumn& rid = rel.compact[rel.schema.rid_index()];
  kernels::Counts c;
  const kernels::CountingOps ops{field, c};
  std::vector<Fp> masked(rel.rows());
  for (size_t i = 0; i < rel.rows(); ++i) masked[i] = ops.mul(marks[i], rid.data[i]);
  counters_.field_muls += c.muls;
  const auto order = output_order(rel.schema);
  std::vector<Fp> out(rel.rows());
  for (size_t k = 0; k < order.size(); ++k) out[k] = masked[order[k]];
  return out;
}

void Engine::fetch_into(const SharedRelation& rel, std::span<const std::vector<Fp>> words,
                        std::vector<Fp>& out, EngineOp op) {
  const size_t j = rel.schema.rid_index();
  const Column rid{j, &rel.schema.columns[j], &rel.unary[j], &rel.binary[j]};
  const size_t width = rel.schema.payload_length();
  for (const auto& w : words) {
    const auto marks = match_all(rel, rid, w, op);
    const size_t at = out.size();
    out.resize(at + width, Fp{0});
    weighted_payload(rel, marks, out.data() + at, op);
  }
}

Answer Engine::evaluate(const QueryShares& q) {
  const SharedRelation& rel = store_.relation(q.relation);
  const Schema& s = rel.schema;
  const int d = s.degree;
  const PrimeField field(s.prime);
  Answer a;

  auto symbols_of = [&](std::string_view attribute) {
    return rel.schema.columns[s.index_of(attribute)].width;
  };

  switch (q.op) {
    case EngineOp::kCount: {
      const auto m = match_all(rel, column(rel, q.attribute), q.predicate, q.op);
      kernels::Counts c;
      const kernels::CountingOps ops{field, c};
      Fp total{0};
      for (Fp v : m) total = ops.add(total, v);
      counters_.field_adds += c.adds;
      a.values = {total};
      a.degree = answer_degree(q.op, symbols_of(q.attribute), d);
      break;
    }
    case EngineOp::kSelectSingle: {
      const auto m = match_all(rel, column(rel, q.attribute), q.predicate, q.op);
      a.values.assign(s.payload_length(), Fp{0});
      weighted_payload(rel, m, a.values.data(), q.op);
      a.degree = answer_degree(q.op, symbols_of(q.attribute), d);
      break;
    }
    case EngineOp::kMatchVector: {
      a.values = match_all(rel, column(rel, q.attribute), q.predicate, q.op);
      a.degree = answer_degree(q.op, symbols_of(q.attribute), d);
      break;
    }
    case EngineOp::kMaskedRids: {
      const auto m = match_all(rel, column(rel, q.attribute), q.predicate, q.op);
      a.values = masked_rids(rel, m);
      a.degree = answer_degree(q.op, symbols_of(q.attribute), d);
      break;
    }
    case EngineOp::kFetch: {
      fetch_into(rel, q.fetch, a.values, q.op);
      a.degree = answer_degree(q.op, s.rid().width, d);
      break;
    }
    case EngineOp::kBlockCounts:
    case EngineOp::kBlockRidSums: {
      check_blocks(q.blocks, rel.rows());
      auto m = match_all(rel, column(rel, q.attribute), q.predicate, q.op);
      if (q.op == EngineOp::kBlockRidSums) {
        const SharedColumn& rid = rel.compact[s.rid_index()];
        kernels::Counts c;
        const kernels::CountingOps ops{field, c};
        for (const auto& b : q.blocks) {
          for (size_t i = b.begin; i < b.end; ++i) m[i] = ops.mul(m[i], rid.data[i]);
        }
        counters_.field_muls += c.muls;
      }
      kernels::Counts c;
      const kernels::CountingOps ops{field, c};
      for (const auto& b : q.blocks) {
        Fp total{0};
        for (size_t i = b.begin; i < b.end; ++i) total = ops.add(total, m[i]);
        a.values.push_back(total);
      }
      counters_.field_adds += c.adds;
      a.degree = answer_degree(q.op, symbols_of(q.attribute), d);
      break;
    }
    case EngineOp::kColumnFetch: {
      const Column col = column(rel, q.attribute);
      const SharedColumn& data = col.codec->compact ? rel.compact[col.index] : *col.unary;
      a.values = data.data;
      touch(q.op, rel, 0, rel.rows());
      a.degree = answer_degree(q.op, 0, d);
      break;
    }
    case EngineOp::kPkFkJoin:
      return pkfk_join(q);
    case EngineOp::kJoinConcat:
      return join_concat(q);
    case EngineOp::kRangeCount: {
      const auto m = range_all(rel, q);
      kernels::Counts c;
      const kernels::CountingOps ops{field, c};
      Fp total{0};
      for (Fp v : m) total = ops.add(total, v);
      counters_.field_adds += c.adds;
      a.values = {total};
      a.degree = answer_degree(q.op, static_cast<int>(q.low.size()), d);
      break;
    }
    case EngineOp::kRangeMark: {
      a.values = range_all(rel, q);
      a.degree = answer_degree(q.op, static_cast<int>(q.low.size()), d);
      break;
    }
    case EngineOp::kRangeMaskedRids: {
      if (!q.eq2) throw Error(ErrorCode::kBadParams, "masked RIDs need in-range marks");
      a.values = masked_rids(rel, range_all(rel, q));
      a.degree = answer_degree(q.op, static_cast<int>(q.low.size()), d);
      break;
    }
  }
  return a;
}

Answer Engine::pkfk_join(const QueryShares& q) {
  const SharedRelation& parent = store_.relation(q.relation);
  const SharedRelation& child = store_.relation(q.other_relation);
  const Column pb = column(parent, q.attribute);
  const Column cb = column(child, q.other_attribute);
  if (!(pb.codec->alphabet == cb.codec->alphabet) || pb.codec->width != cb.codec->width) {
    throw Error(ErrorCode::kShapeMismatch, "join columns " + pb.codec->name + " and " +
                                               cb.codec->name + " are encoded differently");
  }
  const size_t nx = parent.rows();
  const size_t ny = child.rows();

  // Map: each parent tuple goes to every child key, each child tuple to its own.
  struct Tagged {
    bool from_parent;
    uint32_t row;
  };
  Shuffle<uint32_t, Tagged> shuffle;
  for (uint32_t x = 0; x < nx; ++x) {
    for (uint32_t y = 0; y < ny; ++y) shuffle.emit(y, Tagged{true, x});
  }
  for (uint32_t y = 0; y < ny; ++y) shuffle.emit(y, Tagged{false, y});
  counters_.shuffle_pairs += shuffle.pairs();

  const size_t px = parent.schema.payload_length();
  const size_t py = child.schema.payload_length() - child.schema.payload_length(cb.index);
  Answer a;
  a.values.reserve(ny * (px + py));
  // Reduce: one child tuple and all parents; the parent whose B matches survives.
  shuffle.reduce([&](uint32_t y, const std::vector<Tagged>& group) {
    if (group.size() != nx + 1 || group.back().from_parent) {
      throw Error(ErrorCode::kShapeMismatch, "join group " + std::to_string(y) + " is malformed");
    }
    const auto marks = match_all(parent, pb, child.unary[cb.index].cell(y), EngineOp::kPkFkJoin);
    const size_t at = a.values.size();
    a.values.resize(at + px, Fp{0});
    weighted_payload(parent, marks, a.values.data() + at, EngineOp::kPkFkJoin);
    for (size_t j = 0; j < child.schema.columns.size(); ++j) {
      if (j == cb.index) continue;
      const auto cell = child.payload(j, y);
      a.values.insert(a.values.end(), cell.begin(), cell.end());
    }
    touch(EngineOp::kPkFkJoin, child, y, y + 1);
  });
  a.degree = answer_degree(EngineOp::kPkFkJoin, pb.codec->width, parent.schema.degree);
  return a;
}

Answer Engine::join_concat(const QueryShares& q) {
  const SharedRelation& x = store_.relation(q.relation);
  const SharedRelation& y = store_.relation(q.other_relation);
  std::vector<Fp> fx;
  std::vector<Fp> fy;
  fetch_into(x, q.fetch, fx, EngineOp::kJoinConcat);
  fetch_into(y, q.other_fetch, fy, EngineOp::kJoinConcat);
  const size_t px = x.schema.payload_length();
  const size_t py = y.schema.payload_length();
  Answer a;
  a.values.reserve(q.fetch.size() * q.other_fetch.size() * (px + py));
  for (size_t i = 0; i < q.fetch.size(); ++i) {
    for (size_t j = 0; j < q.other_fetch.size(); ++j) {
      a.values.insert(a.values.end(), fx.begin() + i * px, fx.begin() + (i + 1) * px);
      a.values.insert(a.values.end(), fy.begin() + j * py, fy.begin() + (j + 1) * py);
    }
  }
  const int d = std::max(x.schema.degree, y.schema.degree);
  a.degree = answer_degree(EngineOp::kJoinConcat,
                           std::max(x.schema.rid().width, y.schema.rid().width), d);
  return a;
}

}  // namespace ssq
