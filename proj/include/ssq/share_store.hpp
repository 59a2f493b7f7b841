#pragma once

// One server's view of an outsourced relation, plus its on-disk text format.
// Nothing in here can reconstruct a secret: a SharedRelation holds exactly one
// share per encoded bit.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ssq/codec.hpp"
#include "ssq/field.hpp"

namespace ssq {

inline constexpr std::string_view kRidAttribute = "RID";

enum class RidMode { kSequential, kPermuted };

// Public metadata shared by the owner, every server and the user.
struct Schema {
  std::string relation;
  uint64_t prime = PrimeField::kDefaultModulus;
  int degree = 1;
  size_t rows = 0;
  // m user attributes followed by RID.
  std::vector<ColumnCodec> columns;
  RidMode rid_mode = RidMode::kSequential;
  uint64_t rid_max = 0;  // real RIDs lie in [1, rid_max]; fakes are larger
  uint64_t permutation_seed = 0;

  size_t attribute_count() const { return columns.size() - 1; }
  size_t rid_index() const { return columns.size() - 1; }
  const ColumnCodec& rid() const { return columns.back(); }
  // Index of a user attribute (or "RID"); throws kUnknownAttribute.
  size_t index_of(std::string_view name) const;

  // Elements one column contributes to a fetched tuple.
  size_t payload_length(size_t column) const {
    return columns[column].compact ? 1 : columns[column].cell_length();
  }
  size_t payload_length() const;

  friend bool operator==(const Schema&, const Schema&) = default;
};

// n cells of a fixed element count, stored row-major.
struct SharedColumn {
  size_t cell_len = 0;
  std::vector<Fp> data;

  std::span<const Fp> cell(size_t row) const {
    return std::span<const Fp>(data).subspan(row * cell_len, cell_len);
  }
  std::span<Fp> cell(size_t row) {
    return std::span<Fp>(data).subspan(row * cell_len, cell_len);
  }
  bool empty() const { return cell_len == 0; }

  friend bool operator==(const SharedColumn&, const SharedColumn&) = default;
};

struct SharedRelation {
  int server = 1;
  Schema schema;
  std::vector<SharedColumn> unary;    // one per column, RID last
  std::vector<SharedColumn> binary;   // empty() unless binary_bits > 0
  std::vector<SharedColumn> compact;  // empty() unless compact

  size_t rows() const { return schema.rows; }
  // Unary cell, or the compact element when the column has one.
  std::span<const Fp> payload(size_t column, size_t row) const;

  friend bool operator==(const SharedRelation&, const SharedRelation&) = default;
};

// Throws kShapeMismatch unless all relations have identical layout and
// kPrimeMismatch when their primes disagree.
void check_same_shape(std::span<const SharedRelation> shares);

std::filesystem::path share_file_path(const std::filesystem::path& dir,
                                      std::string_view relation, int server);

void write_share_file(const SharedRelation& rel, const std::filesystem::path& path);
void write_share_files(std::span<const SharedRelation> shares,
                       const std::filesystem::path& dir);

// kCorruptFile on malformed input or a checksum failure; kPrimeMismatch when
// the header prime differs from `expected_prime`.
SharedRelation read_share_file(const std::filesystem::path& path,
                               std::optional<uint64_t> expected_prime = std::nullopt);

// Loads <relation>.s1.ss, <relation>.s2.ss, ... from `dir`.
std::vector<SharedRelation> read_share_set(const std::filesystem::path& dir,
                                           std::string_view relation,
                                           std::optional<uint64_t> expected_prime = std::nullopt);

// Relation names present in `dir`.
std::vector<std::string> list_relations(const std::filesystem::path& dir);

}  // namespace ssq
