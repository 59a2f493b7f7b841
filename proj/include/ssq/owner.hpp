#pragma once

// The data owner: turns a cleartext relation into c share relations, one per
// server. Nothing here is reachable from the query side.

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ssq/share_store.hpp"
#include "ssq/sss.hpp"

namespace ssq {

struct Relation {
  std::string name;
  std::vector<std::string> attributes;
  std::vector<std::vector<std::string>> rows;

  size_t size() const { return rows.size(); }
  // Index of `attribute`; throws kUnknownAttribute.
  size_t index_of(std::string_view attribute) const;
  // Throws kBadParams unless rectangular, n >= 1 and names are well formed.
  void validate() const;
};

// Headered CSV. The relation name defaults to the file stem.
Relation read_csv(const std::filesystem::path& path, std::string name = {});
void write_csv(const Relation& rel, std::ostream& out);

// Appends RID = 1..n. Throws kRidExists when the relation already has one.
Relation append_rid(Relation r);

struct OwnerOptions {
  SharingParams params;
  RidMode rid_mode = RidMode::kSequential;
  bool compact = true;
  // Columns that also get 2's-complement words for range predicates.
  std::set<std::string> range_columns;
  // Columns replaced by the last `digits` decimal digits of their digest.
  std::map<std::string, int> digest_columns;
  // Reject payloads that would be indistinguishable from an unmatched row.
  bool joins_declared = false;
};

// RID values the owner assigns: 1..n, or distinct random values in [1, 2n].
std::vector<uint64_t> assign_rids(size_t n, RidMode mode, uint64_t seed);

// Public schema for `r` (without RID; RID is added to the schema).
Schema plan_schema(const Relation& r, const OwnerOptions& options);

// Secret-shares every encoded bit of every cell, RID included.
std::vector<SharedRelation> share_relation(const Relation& r, const OwnerOptions& options);
// Same with a caller-fixed schema (see unify_schemas).
std::vector<SharedRelation> share_relation(const Relation& r, const Schema& schema,
                                           const OwnerOptions& options);

// Makes same-named columns of several relations encode identically, so
// predicates and join values carry over between them.
std::vector<Schema> unify_schemas(std::vector<Schema> schemas);

// plan_schema for each of `rels`, then unify_schemas. Range and digest
// columns apply to whichever relations have them.
std::vector<Schema> plan_schemas(const std::vector<Relation>& rels, const OwnerOptions& options);

// share_relation for each of `rels` after unify_schemas; result[r][k].
std::vector<std::vector<SharedRelation>> share_relations(const std::vector<Relation>& rels,
                                                         const OwnerOptions& options);

}  // namespace ssq
