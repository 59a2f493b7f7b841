#include "ssq/codec.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <bit>
#include <boost/multiprecision/cpp_int.hpp>
#include <charconv>
#include <set>

#include "ssq/error.hpp"

namespace ssq {
namespace {

constexpr std::string_view kHex = "0123456789abcdef";

std::string to_hex(std::string_view s) {
  std::string out;
  out.reserve(s.size() * 2);
  for (unsigned char c : s) {
    out.push_back(kHex[c >> 4]);
    out.push_back(kHex[c & 15]);
  }
  return out;
}

std::string from_hex(std::string_view s) {
  if (s.size() % 2 != 0) throw Error(ErrorCode::kCorruptFile, "odd hex length");
  std::string out;
  for (size_t i = 0; i < s.size(); i += 2) {
    auto hi = kHex.find(s[i]);
    auto lo = kHex.find(s[i + 1]);
    if (hi == std::string_view::npos || lo == std::string_view::npos) {
      throw Error(ErrorCode::kCorruptFile, "bad hex digit");
    }
    out.push_back(static_cast<char>(hi * 16 + lo));
  }
  return out;
}

int bit_length(uint64_t v) { return 64 - std::countl_zero(v); }

}  // namespace

Alphabet Alphabet::digits10() { return Alphabet(AlphabetKind::kDigits10, "1234567890"); }

Alphabet Alphabet::letters26() {
  return Alphabet(AlphabetKind::kLetters26, "ABCDEFGHIJKLMNOPQRSTUVWXYZ");
}

Alphabet Alphabet::custom(std::string symbols) {
  std::set<char> seen(symbols.begin(), symbols.end());
  if (seen.size() != symbols.size() || symbols.empty()) {
    throw Error(ErrorCode::kBadParams, "custom alphabet needs distinct symbols");
  }
  return Alphabet(AlphabetKind::kCustom, std::move(symbols));
}

Alphabet Alphabet::parse(std::string_view id) {
  if (id == "digits10") return digits10();
  if (id == "letters26") return letters26();
  if (id.starts_with("custom:")) {
    try {
      return custom(from_hex(id.substr(7)));
    } catch (const Error& e) {
      throw Error(ErrorCode::kCorruptFile, e.what());
    }
  }
  throw Error(ErrorCode::kCorruptFile, "unknown alphabet " + std::string(id));
}

std::optional<int> Alphabet::index_of(char c) const {
  if (kind_ == AlphabetKind::kLetters26 && c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  auto pos = symbols_.find(c);
  if (pos == std::string::npos) return std::nullopt;
  return static_cast<int>(pos);
}

std::string Alphabet::id() const {
  switch (kind_) {
    case AlphabetKind::kDigits10: return "digits10";
    case AlphabetKind::kLetters26: return "letters26";
    case AlphabetKind::kCustom: return "custom:" + to_hex(symbols_);
  }
  return {};
}

std::string pad(std::string_view value, int width, char fill) {
  if (static_cast<int>(value.size()) > width) {
    throw Error(ErrorCode::kTooWide, "'" + std::string(value) + "' exceeds width " +
                                         std::to_string(width));
  }
  return std::string(static_cast<size_t>(width) - value.size(), fill) + std::string(value);
}

UnaryWord unary_encode(std::string_view value, const Alphabet& alphabet) {
  UnaryWord word{alphabet.size(), std::vector<uint8_t>(value.size() * alphabet.size(), 0)};
  for (size_t i = 0; i < value.size(); ++i) {
    auto idx = alphabet.index_of(value[i]);
    if (!idx) {
      throw Error(ErrorCode::kUnknownSymbol,
                  std::string("'") + value[i] + "' not in alphabet " + alphabet.id());
    }
    word.bits[i * alphabet.size() + *idx] = 1;
  }
  return word;
}

std::string unary_decode(const UnaryWord& word, const Alphabet& alphabet) {
  if (word.alphabet_size != alphabet.size() ||
      word.bits.size() % static_cast<size_t>(alphabet.size()) != 0) {
    throw Error(ErrorCode::kBadEncoding, "word does not fit the alphabet");
  }
  std::string out;
  for (int s = 0; s < word.symbol_count(); ++s) {
    auto sym = word.symbol(s);
    int weight = 0;
    int at = 0;
    for (int i = 0; i < alphabet.size(); ++i) {
      if (sym[i] > 1) throw Error(ErrorCode::kBadEncoding, "non-binary entry");
      if (sym[i] == 1) {
        ++weight;
        at = i;
      }
    }
    if (weight != 1) {
      throw Error(ErrorCode::kBadEncoding,
                  "symbol " + std::to_string(s) + " has weight " + std::to_string(weight));
    }
    out.push_back(alphabet.symbol_at(at));
  }
  return out;
}

BinaryWord binary_encode(int64_t value, int t) {
  if (t < 1 || t > 63) throw Error(ErrorCode::kBadParams, "bit width out of range");
  const int64_t lo = -(int64_t{1} << (t - 1));
  const int64_t hi = (int64_t{1} << (t - 1)) - 1;
  if (value < lo || value > hi) {
    throw Error(ErrorCode::kOverflow,
                std::to_string(value) + " does not fit " + std::to_string(t) + " bits");
  }
  BinaryWord w;
  w.bits.resize(static_cast<size_t>(t));
  const auto u = static_cast<uint64_t>(value);
  for (int i = 0; i < t; ++i) w.bits[i] = static_cast<uint8_t>((u >> i) & 1);
  return w;
}

int64_t binary_decode(const BinaryWord& word) {
  const int t = word.width();
  if (t < 1 || t > 63) throw Error(ErrorCode::kBadEncoding, "bit width out of range");
  uint64_t u = 0;
  for (int i = 0; i < t; ++i) {
    if (word.bits[i] > 1) throw Error(ErrorCode::kBadEncoding, "non-binary bit");
    u |= static_cast<uint64_t>(word.bits[i]) << i;
  }
  if (word.bits[t - 1]) u |= ~uint64_t{0} << t;  // sign-extend
  return static_cast<int64_t>(u);
}

int binary_width_for(int64_t min_value, int64_t max_value) {
  const uint64_t mag = std::max(static_cast<uint64_t>(min_value < 0 ? -min_value : min_value),
                                static_cast<uint64_t>(max_value < 0 ? -max_value : max_value));
  const int t = bit_length(mag) + (min_value < 0 ? 2 : 1);
  return std::max(t, 2);
}

std::string hash_digest_map(std::string_view value, int digits) {
  if (digits < 1) throw Error(ErrorCode::kBadParams, "digest digits must be >= 1");
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(value.data(), value.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kBadParams, "SHA-256 failed");
  }
  boost::multiprecision::cpp_int n;
  boost::multiprecision::import_bits(n, md.begin(), md.begin() + len);
  std::string dec = n.str();
  if (static_cast<int>(dec.size()) > digits) dec.erase(0, dec.size() - digits);
  return dec;
}

std::optional<int64_t> parse_canonical_int(std::string_view s) {
  if (s.empty()) return std::nullopt;
  int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  if (std::to_string(v) != s) return std::nullopt;  // "007", "+3", "-0"
  return v;
}

CellLayout ColumnCodec::layout() const {
  if (digest_digits > 0) return CellLayout::kDigest;
  if (alphabet.kind() == AlphabetKind::kDigits10) return CellLayout::kNumeral;
  return CellLayout::kText;
}

std::pair<int64_t, int64_t> ColumnCodec::binary_domain() const {
  if (binary_bits < 2) return {0, 0};
  if (binary_signed) {
    const int64_t m = (int64_t{1} << (binary_bits - 2)) - 1;
    return {-m, m};
  }
  return {0, (int64_t{1} << (binary_bits - 1)) - 1};
}

std::string ColumnCodec::normalize(std::string_view raw) const {
  std::string v = digest_digits > 0 ? hash_digest_map(raw, digest_digits) : std::string(raw);
  if (layout() == CellLayout::kText) {
    if (static_cast<int>(v.size()) > width) {
      throw Error(ErrorCode::kTooWide, "'" + v + "' exceeds width " + std::to_string(width));
    }
    v.append(static_cast<size_t>(width) - v.size(), ' ');
    return v;
  }
  return pad(v, width, '0');
}

UnaryWord ColumnCodec::encode(std::string_view raw) const {
  return unary_encode(normalize(raw), alphabet);
}

UnaryWord ColumnCodec::encode_predicate(std::string_view raw) const {
  UnaryWord word{alphabet.size(), std::vector<uint8_t>(cell_length(), 0)};
  std::string v;
  try {
    v = normalize(raw);
  } catch (const Error&) {
    return word;  // too wide: nothing in the column can equal it
  }
  for (size_t i = 0; i < v.size(); ++i) {
    if (auto idx = alphabet.index_of(v[i])) word.bits[i * alphabet.size() + *idx] = 1;
  }
  return word;
}

std::string ColumnCodec::decode(const UnaryWord& word) const {
  std::string v = unary_decode(word, alphabet);
  switch (layout()) {
    case CellLayout::kNumeral: {
      auto first = v.find_first_not_of('0');
      return first == std::string::npos ? "0" : v.substr(first);
    }
    case CellLayout::kDigest:
      return v;
    case CellLayout::kText: {
      auto last = v.find_last_not_of(' ');
      return last == std::string::npos ? std::string() : v.substr(0, last + 1);
    }
  }
  return v;
}

uint64_t ColumnCodec::compact_value(std::string_view raw) const {
  auto v = parse_canonical_int(raw);
  if (!v || *v < 0) {
    throw Error(ErrorCode::kBadEncoding, "compact column value '" + std::string(raw) + "'");
  }
  return static_cast<uint64_t>(*v);
}

ColumnCodec infer_column_codec(std::string name, std::span<const std::string> values,
                               const CodecOptions& options) {
  ColumnCodec codec;
  codec.name = std::move(name);
  codec.digest_digits = options.digest_digits;

  bool numeral = !values.empty();
  int64_t min_v = 0;
  int64_t max_v = 0;
  bool any_int = false;
  bool all_int = !values.empty();
  for (const auto& v : values) {
    auto parsed = parse_canonical_int(v);
    if (!parsed) {
      all_int = false;
      numeral = false;
      continue;
    }
    if (*parsed < 0) numeral = false;
    min_v = any_int ? std::min(min_v, *parsed) : *parsed;
    max_v = any_int ? std::max(max_v, *parsed) : *parsed;
    any_int = true;
  }

  size_t width = 0;
  if (codec.digest_digits > 0) {
    codec.alphabet = Alphabet::digits10();
    codec.width = codec.digest_digits;
  } else if (numeral) {
    codec.alphabet = Alphabet::digits10();
    for (const auto& v : values) width = std::max(width, v.size());
    codec.width = static_cast<int>(width);
  } else {
    std::set<char> chars;
    for (const auto& v : values) {
      chars.insert(v.begin(), v.end());
      width = std::max(width, v.size());
    }
    bool ragged = std::any_of(values.begin(), values.end(),
                              [&](const std::string& v) { return v.size() != width; });
    if (ragged || chars.empty()) chars.insert(' ');
    codec.alphabet = Alphabet::custom(std::string(chars.begin(), chars.end()));
    codec.width = std::max<int>(static_cast<int>(width), 1);
  }

  if (options.binary && all_int) {
    codec.binary_bits = binary_width_for(min_v, max_v);
    codec.binary_signed = min_v < 0;
  }
  if (options.compact && numeral && codec.digest_digits == 0 &&
      (options.prime == 0 || static_cast<uint64_t>(max_v) < options.prime)) {
    codec.compact = true;
  }
  return codec;
}

}  // namespace ssq
