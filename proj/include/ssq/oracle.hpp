#pragma once

// Plaintext reference semantics for every query template: exact-match
// selection, equi-join and inclusive ranges over cleartext relations.

#include <vector>

#include "ssq/coordinator.hpp"
#include "ssq/owner.hpp"

namespace ssq {

uint64_t oracle_count(const Relation& r, std::string_view attribute, std::string_view value);
// RIDs are 1-based row positions.
std::vector<Row> oracle_select(const Relation& r, std::string_view attribute,
                               std::string_view value);
// Rows of x followed by the attributes of y other than the join column,
// sorted. No RIDs.
std::vector<Row> oracle_join(const Relation& x, const Relation& y, std::string_view attribute,
                             std::string_view other_attribute = {});
uint64_t oracle_range_count(const Relation& r, std::string_view attribute, int64_t low,
                            int64_t high);
std::vector<Row> oracle_range_select(const Relation& r, std::string_view attribute, int64_t low,
                                     int64_t high);

// Evaluates `plan` against the relations it names.
QueryResult oracle_eval(const std::vector<Relation>& relations, const QueryPlan& plan);

// Equality of results ignoring RIDs (which are random under permuted RIDs).
bool same_result(const QueryResult& a, const QueryResult& b);

}  // namespace ssq
