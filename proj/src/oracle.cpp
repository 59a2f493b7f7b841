#include "ssq/oracle.hpp"

#include <algorithm>

#include "ssq/error.hpp"

namespace ssq {
namespace {

const Relation& find(const std::vector<Relation>& rels, std::string_view name) {
  for (const auto& r : rels) {
    if (r.name == name) return r;
  }
  throw Error(ErrorCode::kUnknownAttribute, "no relation '" + std::string(name) + "'");
}

bool in_range(const std::string& cell, int64_t low, int64_t high) {
  auto v = parse_canonical_int(cell);
  if (!v) throw Error(ErrorCode::kBadEncoding, "range over non-integer '" + cell + "'");
  return low <= *v && *v <= high;
}

std::vector<std::vector<std::string>> sorted_values(const std::vector<Row>& rows) {
  std::vector<std::vector<std::string>> out;
  for (const auto& r : rows) out.push_back(r.values);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

uint64_t oracle_count(const Relation& r, std::string_view attribute, std::string_view value) {
  const size_t j = r.index_of(attribute);
  return static_cast<uint64_t>(std::count_if(r.rows.begin(), r.rows.end(),
                                             [&](const auto& row) { return row[j] == value; }));
}

std::vector<Row> oracle_select(const Relation& r, std::string_view attribute,
                               std::string_view value) {
  const size_t j = r.index_of(attribute);
  std::vector<Row> out;
  for (size_t i = 0; i < r.size(); ++i) {
    if (r.rows[i][j] == value) out.push_back(Row{i + 1, r.rows[i]});
  }
  return out;
}

std::vector<Row> oracle_join(const Relation& x, const Relation& y, std::string_view attribute,
                             std::string_view other_attribute) {
  const size_t xj = x.index_of(attribute);
  const size_t yj = y.index_of(other_attribute.empty() ? attribute : other_attribute);
  std::vector<Row> out;
  for (const auto& rx : x.rows) {
    for (const auto& ry : y.rows) {
      if (rx[xj] != ry[yj]) continue;
      Row row{0, rx};
      for (size_t j = 0; j < ry.size(); ++j) {
        if (j != yj) row.values.push_back(ry[j]);
      }
      out.push_back(std::move(row));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

uint64_t oracle_range_count(const Relation& r, std::string_view attribute, int64_t low,
                            int64_t high) {
  const size_t j = r.index_of(attribute);
  return static_cast<uint64_t>(std::count_if(
      r.rows.begin(), r.rows.end(), [&](const auto& row) { return in_range(row[j], low, high); }));
}

std::vector<Row> oracle_range_select(const Relation& r, std::string_view attribute, int64_t low,
                                     int64_t high) {
  const size_t j = r.index_of(attribute);
  std::vector<Row> out;
  for (size_t i = 0; i < r.size(); ++i) {
    if (in_range(r.rows[i][j], low, high)) out.push_back(Row{i + 1, r.rows[i]});
  }
  return out;
}

QueryResult oracle_eval(const std::vector<Relation>& relations, const QueryPlan& plan) {
  const Relation& r = find(relations, plan.relation);
  QueryResult out;
  out.kind = plan.kind;
  out.columns = r.attributes;
  switch (plan.kind) {
    case PlanKind::kCount:
      out.columns = {"count"};
      out.count = oracle_count(r, plan.attribute, plan.value);
      break;
    case PlanKind::kSelectSingle:
    case PlanKind::kSelectOneRound:
    case PlanKind::kSelectTree:
      out.rows = oracle_select(r, plan.attribute, plan.value);
      break;
    case PlanKind::kPkFkJoin:
    case PlanKind::kNonPkFkJoin: {
      const Relation& y = find(relations, plan.other_relation);
      const std::string& yb = plan.other_attribute.empty() ? plan.attribute : plan.other_attribute;
      out.rows = oracle_join(r, y, plan.attribute, yb);
      const size_t yj = y.index_of(yb);
      for (size_t j = 0; j < y.attributes.size(); ++j) {
        if (j != yj) out.columns.push_back(y.attributes[j]);
      }
      break;
    }
    case PlanKind::kRangeCount:
      out.columns = {"count"};
      out.count = oracle_range_count(r, plan.attribute, plan.low, plan.high);
      break;
    case PlanKind::kRangeSelect:
      out.rows = oracle_range_select(r, plan.attribute, plan.low, plan.high);
      break;
  }
  return out;
}

bool same_result(const QueryResult& a, const QueryResult& b) {
  return a.count == b.count && a.columns == b.columns &&
         sorted_values(a.rows) == sorted_values(b.rows);
}

}  // namespace ssq
