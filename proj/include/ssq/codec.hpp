#pragma once

// Cleartext <-> bit-vector encodings that get secret-shared: unary words for
// equality matching, 2's-complement binary words for range predicates.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ssq {

enum class AlphabetKind { kDigits10, kLetters26, kCustom };

class Alphabet {
 public:
  static Alphabet digits10();
  static Alphabet letters26();
  // Symbols in the given order; duplicates are rejected with kBadParams.
  static Alphabet custom(std::string symbols);
  // Inverse of id(). Throws kCorruptFile on an unrecognized token.
  static Alphabet parse(std::string_view id);

  AlphabetKind kind() const { return kind_; }
  int size() const { return static_cast<int>(symbols_.size()); }
  const std::string& symbols() const { return symbols_; }

  // 0-based index of `c`, or nullopt. letters26 is case-insensitive.
  std::optional<int> index_of(char c) const;
  char symbol_at(int index) const { return symbols_[static_cast<size_t>(index)]; }

  // Stable header token: "digits10", "letters26" or "custom:<hex>".
  std::string id() const;

  friend bool operator==(const Alphabet& a, const Alphabet& b) {
    return a.kind_ == b.kind_ && a.symbols_ == b.symbols_;
  }

 private:
  Alphabet(AlphabetKind kind, std::string symbols)
      : kind_(kind), symbols_(std::move(symbols)) {}

  AlphabetKind kind_;
  std::string symbols_;
};

// One 0/1 vector of alphabet_size entries per symbol, stored flat.
struct UnaryWord {
  int alphabet_size = 0;
  std::vector<uint8_t> bits;

  int symbol_count() const {
    return alphabet_size == 0 ? 0 : static_cast<int>(bits.size()) / alphabet_size;
  }
  std::span<const uint8_t> symbol(int i) const {
    return std::span<const uint8_t>(bits).subspan(
        static_cast<size_t>(i * alphabet_size), static_cast<size_t>(alphabet_size));
  }
};

// 2's-complement, least-significant bit first.
struct BinaryWord {
  std::vector<uint8_t> bits;
  int width() const { return static_cast<int>(bits.size()); }
};

// Left-pads with `fill` to exactly `width` characters. kTooWide if longer.
std::string pad(std::string_view value, int width, char fill = '0');

// kUnknownSymbol on a character outside the alphabet.
UnaryWord unary_encode(std::string_view value, const Alphabet& alphabet);
// kBadEncoding unless every symbol vector has weight exactly one.
std::string unary_decode(const UnaryWord& word, const Alphabet& alphabet);

// kOverflow unless -2^(t-1) <= value < 2^(t-1).
BinaryWord binary_encode(int64_t value, int t);
int64_t binary_decode(const BinaryWord& word);

// Smallest t for which every value in [-max_abs, max_abs] fits with headroom
// for a difference of two column values: bitlength(max_abs) + 1 for
// non-negative columns, one more when negatives are present.
int binary_width_for(int64_t min_value, int64_t max_value);

// SHA-256 of `value`, rendered as a decimal integer, keeping the last `digits`
// digits (the whole rendering when it is shorter).
std::string hash_digest_map(std::string_view value, int digits);
inline constexpr std::string_view kDigestAlgorithm = "sha256";

// Parses a canonical decimal integer ("0", "17", "-4"); rejects leading zeros
// and anything that is not a plain integer.
std::optional<int64_t> parse_canonical_int(std::string_view s);

// How a column's cleartext maps onto a fixed-width unary word.
enum class CellLayout {
  kNumeral,  // digits10, left-padded with '0', leading zeros dropped on decode
  kDigest,   // hash digits, left-padded with '0', kept verbatim on decode
  kText,     // any alphabet, right-padded with ' ', trailing blanks dropped
};

struct ColumnCodec {
  std::string name;
  Alphabet alphabet = Alphabet::digits10();
  int width = 1;
  int digest_digits = 0;  // > 0: values are replaced by hash digits
  int binary_bits = 0;    // > 0: column also carries a 2's-complement word
  bool binary_signed = false;
  bool compact = false;   // column also carries a single-element share

  CellLayout layout() const;
  char pad_char() const { return layout() == CellLayout::kText ? ' ' : '0'; }

  // Hash mapping and padding, without unary expansion.
  std::string normalize(std::string_view raw) const;
  UnaryWord encode(std::string_view raw) const;
  // Like encode(), but an unencodable predicate becomes a word containing
  // all-zero symbol vectors, which matches no cell.
  UnaryWord encode_predicate(std::string_view raw) const;
  std::string decode(const UnaryWord& word) const;
  // Value stored in the compact single-element column.
  uint64_t compact_value(std::string_view raw) const;
  std::string decode_compact(uint64_t v) const { return std::to_string(v); }

  // Inclusive range of bounds whose differences with any column value fit
  // in binary_bits bits.
  std::pair<int64_t, int64_t> binary_domain() const;

  size_t cell_length() const {
    return static_cast<size_t>(width) * static_cast<size_t>(alphabet.size());
  }

  friend bool operator==(const ColumnCodec&, const ColumnCodec&) = default;
};

struct CodecOptions {
  int digest_digits = 0;
  bool binary = false;
  bool compact = true;
  uint64_t prime = 0;  // compact values must stay below it
};

// Picks digits10 for columns of canonical non-negative integers and otherwise
// a custom alphabet of the characters observed (plus the pad blank when some
// value is shorter than the column width).
ColumnCodec infer_column_codec(std::string name,
                               std::span<const std::string> values,
                               const CodecOptions& options);

}  // namespace ssq
