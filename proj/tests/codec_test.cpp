#include <gtest/gtest.h>

#include <cmath>
#include <iostream>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include "ssq/codec.hpp"
#include "ssq/error.hpp"

namespace ssq {
namespace {

TEST(Pad, Examples) {
  EXPECT_EQ(pad("1", 7), "0000001");
  EXPECT_EQ(pad("0000001", 7), "0000001");
  EXPECT_EQ(pad("25", 2), "25");
  EXPECT_THROW(pad("123", 2), Error);
}

TEST(Unary, DigitPositions) {
  const auto a = Alphabet::digits10();
  auto one = unary_encode("1", a);
  ASSERT_EQ(one.bits.size(), 10u);
  EXPECT_EQ(one.bits[0], 1);
  auto zero = unary_encode("0", a);
  EXPECT_EQ(zero.bits[9], 1);
  for (int i = 0; i < 9; ++i) EXPECT_EQ(zero.bits[i], 0);
  EXPECT_THROW(unary_encode("1a", a), Error);
}

TEST(Unary, RoundTripRandomNumerals) {
  const auto a = Alphabet::digits10();
  std::mt19937_64 rng(8);
  for (int i = 0; i < 10'000; ++i) {
    const std::string v = pad(std::to_string(rng() % 10'000'000), 7);
    auto w = unary_encode(v, a);
    ASSERT_EQ(w.symbol_count(), 7);
    for (int s = 0; s < 7; ++s) {
      int weight = 0;
      for (auto b : w.symbol(s)) weight += b;
      ASSERT_EQ(weight, 1);
    }
    ASSERT_EQ(unary_decode(w, a), v);
  }
}

TEST(Unary, DecodeRejectsBadWeights) {
  const auto a = Alphabet::digits10();
  UnaryWord w{10, std::vector<uint8_t>(10, 0)};
  EXPECT_THROW(unary_decode(w, a), Error);
  w.bits[0] = w.bits[1] = 1;
  EXPECT_THROW(unary_decode(w, a), Error);
}

TEST(Unary, SymbolInnerProductIsEquality) {
  const auto a = Alphabet::digits10();
  for (char x = '0'; x <= '9'; ++x) {
    for (char y = '0'; y <= '9'; ++y) {
      auto u = unary_encode(std::string(1, x), a);
      auto v = unary_encode(std::string(1, y), a);
      int dot = 0;
      for (int i = 0; i < 10; ++i) dot += u.bits[i] * v.bits[i];
      EXPECT_EQ(dot, x == y ? 1 : 0);
    }
  }
}

TEST(Alphabet, IdsRoundTrip) {
  for (const auto& a : {Alphabet::digits10(), Alphabet::letters26(), Alphabet::custom(" /ab")}) {
    EXPECT_EQ(Alphabet::parse(a.id()), a);
  }
  EXPECT_THROW(Alphabet::custom("aa"), Error);
  EXPECT_THROW(Alphabet::parse("custom:zz"), Error);
  EXPECT_THROW(Alphabet::parse("emoji"), Error);
  EXPECT_EQ(Alphabet::letters26().index_of('c'), 2);
}

TEST(Binary, Examples) {
  EXPECT_EQ(binary_encode(0, 8).bits, std::vector<uint8_t>(8, 0));
  EXPECT_EQ(binary_encode(-1, 4).bits, std::vector<uint8_t>(4, 1));
  EXPECT_EQ(binary_encode(6, 4).bits, (std::vector<uint8_t>{0, 1, 1, 0}));
  EXPECT_THROW(binary_encode(8, 4), Error);
  EXPECT_THROW(binary_encode(-9, 4), Error);
}

TEST(Binary, ExhaustiveRoundTrip) {
  for (int64_t v = -128; v <= 127; ++v) ASSERT_EQ(binary_decode(binary_encode(v, 8)), v);
}

TEST(Binary, WidthLeavesRoomForDifferences) {
  EXPECT_EQ(binary_width_for(0, 15), 5);
  EXPECT_EQ(binary_width_for(0, 5000), 14);
  EXPECT_EQ(binary_width_for(-3, 3), 4);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 2000; ++i) {
    const int64_t lo = -static_cast<int64_t>(rng() % 300);
    const int64_t hi = static_cast<int64_t>(rng() % 300);
    const int t = binary_width_for(lo, hi);
    // every difference of two values in [lo, hi] fits
    EXPECT_NO_THROW(binary_encode(hi - lo, t));
    EXPECT_NO_THROW(binary_encode(lo - hi, t));
  }
}

TEST(Digest, DeterministicAndTruncated) {
  EXPECT_EQ(hash_digest_map("Smith", 8), hash_digest_map("Smith", 8));
  EXPECT_EQ(hash_digest_map("Smith", 8).size(), 8u);
  const std::string full = hash_digest_map("Smith", 1000);
  EXPECT_LE(full.size(), 78u);
  EXPECT_EQ(full.substr(full.size() - 8), hash_digest_map("Smith", 8));
  EXPECT_THROW(hash_digest_map("x", 0), Error);
}

TEST(Digest, CollisionCensus) {
  // 360,000 distinct strings into 10^8 buckets: the birthday estimate is
  // C(n, 2) / 10^8 colliding pairs.
  constexpr size_t n = 360'000;
  std::unordered_set<std::string> seen;
  seen.reserve(n);
  size_t collisions = 0;
  for (size_t i = 0; i < n; ++i) {
    if (!seen.insert(hash_digest_map("key-" + std::to_string(i), 8)).second) ++collisions;
  }
  const double expected = static_cast<double>(n) * (n - 1) / 2 / 1e8;
  std::cout << "digest collisions: " << collisions << " (birthday estimate " << expected << ")\n";
  EXPECT_LT(std::abs(static_cast<double>(collisions) - expected), 6 * std::sqrt(expected));
}

TEST(CanonicalInt, Parse) {
  EXPECT_EQ(parse_canonical_int("17"), 17);
  EXPECT_EQ(parse_canonical_int("-4"), -4);
  EXPECT_EQ(parse_canonical_int("0"), 0);
  EXPECT_FALSE(parse_canonical_int("007"));
  EXPECT_FALSE(parse_canonical_int("+3"));
  EXPECT_FALSE(parse_canonical_int("-0"));
  EXPECT_FALSE(parse_canonical_int("1.5"));
  EXPECT_FALSE(parse_canonical_int(""));
}

TEST(ColumnCodec, InfersNumerals) {
  std::vector<std::string> v{"1000", "2000", "500", "5000"};
  auto c = infer_column_codec("Salary", v, {.binary = true, .prime = 15'000'017});
  EXPECT_EQ(c.alphabet, Alphabet::digits10());
  EXPECT_EQ(c.width, 4);
  EXPECT_EQ(c.layout(), CellLayout::kNumeral);
  EXPECT_TRUE(c.compact);
  EXPECT_EQ(c.binary_bits, 14);
  EXPECT_FALSE(c.binary_signed);
  EXPECT_EQ(c.decode(c.encode("500")), "500");
  EXPECT_EQ(c.compact_value("500"), 500u);
  auto [lo, hi] = c.binary_domain();
  EXPECT_EQ(lo, 0);
  EXPECT_EQ(hi, 8191);
}

TEST(ColumnCodec, InfersTextWithPadBlank) {
  std::vector<std::string> v{"Adam", "John", "Eve", "John"};
  auto c = infer_column_codec("FirstName", v, {});
  EXPECT_EQ(c.alphabet.kind(), AlphabetKind::kCustom);
  EXPECT_TRUE(c.alphabet.index_of(' '));
  EXPECT_EQ(c.width, 4);
  EXPECT_FALSE(c.compact);
  EXPECT_EQ(c.normalize("Eve"), "Eve ");
  EXPECT_EQ(c.decode(c.encode("Eve")), "Eve");
  // unknown symbols and over-long values match nothing
  auto none = c.encode_predicate("Zed");
  auto wide = c.encode_predicate("Johnny");
  EXPECT_EQ(wide.bits, std::vector<uint8_t>(c.cell_length(), 0));
  int weight = 0;
  for (auto b : none.symbol(0)) weight += b;
  EXPECT_EQ(weight, 0);
}

TEST(ColumnCodec, KeepsSlashInDates) {
  std::vector<std::string> v{"12/07/1975", "10/30/1985"};
  auto c = infer_column_codec("DateofBirth", v, {});
  EXPECT_TRUE(c.alphabet.index_of('/'));
  EXPECT_FALSE(c.alphabet.index_of(' '));
  EXPECT_EQ(c.decode(c.encode("10/30/1985")), "10/30/1985");
}

TEST(ColumnCodec, DigestColumns) {
  std::vector<std::string> v{"Smith", "Taylor"};
  auto c = infer_column_codec("LastName", v, {.digest_digits = 6});
  EXPECT_EQ(c.layout(), CellLayout::kDigest);
  EXPECT_EQ(c.width, 6);
  EXPECT_EQ(c.decode(c.encode("Smith")), hash_digest_map("Smith", 6));
}

TEST(ColumnCodec, SignedBinary) {
  std::vector<std::string> v{"-5", "3", "0"};
  auto c = infer_column_codec("T", v, {.binary = true});
  EXPECT_TRUE(c.binary_signed);
  EXPECT_EQ(c.binary_bits, binary_width_for(-5, 5));
  EXPECT_EQ(c.decode(c.encode("-5")), "-5");
}

}  // namespace
}  // namespace ssq
