#include "ssq/tpch.hpp"

#include <array>
#include <random>

#include "ssq/error.hpp"

namespace ssq {
namespace {

constexpr std::array<const char*, 25> kNations = {
    "ALGERIA", "ARGENTINA", "BRAZIL",  "CANADA",       "EGYPT",     "ETHIOPIA", "FRANCE",
    "GERMANY", "INDIA",     "INDONESIA", "IRAN",       "IRAQ",      "JAPAN",    "JORDAN",
    "KENYA",   "MOROCCO",   "MOZAMBIQUE", "PERU",      "CHINA",     "ROMANIA",  "SAUDIARABIA",
    "VIETNAM", "RUSSIA",    "UK",      "US"};
constexpr std::array<int, 25> kRegions = {1, 2, 2, 2, 5, 1, 4, 4, 3, 3, 5, 5, 3,
                                          5, 1, 1, 1, 2, 3, 4, 5, 3, 4, 4, 2};
constexpr std::array<const char*, 5> kSegments = {"AUTOMOBILE", "BUILDING", "FURNITURE",
                                                  "HOUSEHOLD", "MACHINERY"};

void check_rows(size_t rows) {
  if (rows == 0 || rows > kMaxGeneratedRows) {
    throw Error(ErrorCode::kBadParams,
                "generated tables hold 1.." + std::to_string(kMaxGeneratedRows) + " rows");
  }
}

std::string tagged(const char* tag, size_t id) {
  std::string digits = std::to_string(id);
  return std::string(tag) + std::string(6 - std::min<size_t>(6, digits.size()), '0') + digits;
}

}  // namespace

Relation make_nation() {
  Relation r{"Nation", {"NK", "NE", "RK"}, {}};
  for (size_t i = 0; i < kNations.size(); ++i) {
    r.rows.push_back({std::to_string(i + 1), kNations[i], std::to_string(kRegions[i])});
  }
  return r;
}

Relation make_customer(size_t rows, uint64_t seed) {
  check_rows(rows);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> nation(1, 25);
  std::uniform_int_distribution<size_t> segment(0, kSegments.size() - 1);
  Relation r{"Customer", {"CK", "CN", "NK", "MS"}, {}};
  for (size_t i = 1; i <= rows; ++i) {
    r.rows.push_back({std::to_string(i), tagged("C", i), std::to_string(nation(rng)),
                      kSegments[segment(rng)]});
  }
  return r;
}

Relation make_supplier(size_t rows, uint64_t seed) {
  check_rows(rows);
  std::mt19937_64 rng(seed ^ 0x5bd1e995);
  std::uniform_int_distribution<int> nation(1, 25);
  Relation r{"Supplier", {"SK", "SN", "NK"}, {}};
  for (size_t i = 1; i <= rows; ++i) {
    r.rows.push_back({std::to_string(i), tagged("S", i), std::to_string(nation(rng))});
  }
  return r;
}

}  // namespace ssq
