#include "ssq/owner.hpp"

#include <algorithm>
#include <boost/tokenizer.hpp>
#include <fstream>
#include <numeric>
#include <random>

#include "ssq/error.hpp"

namespace ssq {
namespace {

bool valid_name(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

int decimal_digits(uint64_t v) {
  int d = 1;
  while (v >= 10) {
    v /= 10;
    ++d;
  }
  return d;
}

ColumnCodec rid_codec(uint64_t rid_max, bool compact) {
  ColumnCodec c;
  c.name = std::string(kRidAttribute);
  c.alphabet = Alphabet::digits10();
  // one spare digit so fake RIDs above rid_max stay encodable
  c.width = decimal_digits(rid_max) + 1;
  c.compact = compact;
  return c;
}

// Evaluates secret + a_1 x + ... + a_d x^d at x = 1..servers, drawing the a_j
// from `rng`, and writes the k-th value through out[k].
struct RowSharer {
  const PrimeField& field;
  int servers;
  int degree;
  std::vector<Fp> coeffs;

  RowSharer(const PrimeField& f, int c, int d) : field(f), servers(c), degree(d), coeffs(d) {}

  template <class Sink>
  void share(uint64_t secret, CoefficientStream& rng, Sink&& sink) {
    for (auto& a : coeffs) a = rng.nonzero(field);
    const Fp s = field.from_uint(secret);
    for (int k = 1; k <= servers; ++k) {
      const Fp x{static_cast<uint64_t>(k)};
      Fp acc{0};
      for (int j = degree - 1; j >= 0; --j) acc = field.add(field.mul(acc, x), coeffs[j]);
      sink(k - 1, field.add(field.mul(acc, x), s));
    }
  }
};

uint64_t base_seed(const SharingParams& params) {
  if (params.rng_seed) return *params.rng_seed;
  std::random_device rd;
  return (uint64_t{rd()} << 32) ^ rd();
}

}  // namespace

size_t Relation::index_of(std::string_view attribute) const {
  auto it = std::find(attributes.begin(), attributes.end(), attribute);
  if (it == attributes.end()) {
    throw Error(ErrorCode::kUnknownAttribute,
                "no attribute '" + std::string(attribute) + "' in " + name);
  }
  return static_cast<size_t>(it - attributes.begin());
}

void Relation::validate() const {
  if (!valid_name(name)) throw Error(ErrorCode::kBadParams, "relation name '" + name + "'");
  if (attributes.empty()) throw Error(ErrorCode::kBadParams, name + " has no attributes");
  if (rows.empty()) throw Error(ErrorCode::kBadParams, name + " has no rows");
  std::set<std::string> seen;
  for (const auto& a : attributes) {
    if (!valid_name(a)) throw Error(ErrorCode::kBadParams, "attribute name '" + a + "'");
    if (!seen.insert(a).second) throw Error(ErrorCode::kBadParams, "duplicate attribute " + a);
  }
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != attributes.size()) {
      throw Error(ErrorCode::kBadParams, name + " row " + std::to_string(i + 1) + " has " +
                                             std::to_string(rows[i].size()) + " cells");
    }
  }
}

Relation read_csv(const std::filesystem::path& path, std::string name) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kCorruptFile, "cannot open " + path.string());
  Relation rel;
  rel.name = name.empty() ? path.stem().string() : std::move(name);
  using Tokenizer = boost::tokenizer<boost::escaped_list_separator<char>>;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    try {
      Tokenizer tok(line);
      cells.assign(tok.begin(), tok.end());
    } catch (const boost::escaped_list_error& e) {
      throw Error(ErrorCode::kCorruptFile, path.string() + ": " + e.what());
    }
    if (header) {
      rel.attributes = std::move(cells);
      header = false;
    } else {
      rel.rows.push_back(std::move(cells));
    }
  }
  rel.validate();
  return rel;
}

void write_csv(const Relation& rel, std::ostream& out) {
  auto emit = [&](const std::vector<std::string>& cells) {
    for (size_t j = 0; j < cells.size(); ++j) {
      if (j) out << ',';
      const auto& c = cells[j];
      if (c.find_first_of(",\"\\") != std::string::npos) {
        out << '"';
        for (char ch : c) {
          if (ch == '"' || ch == '\\') out << '\\';
          out << ch;
        }
        out << '"';
      } else {
        out << c;
      }
    }
    out << '\n';
  };
  emit(rel.attributes);
  for (const auto& row : rel.rows) emit(row);
}

Relation append_rid(Relation r) {
  if (std::find(r.attributes.begin(), r.attributes.end(), kRidAttribute) != r.attributes.end()) {
    throw Error(ErrorCode::kRidExists, r.name + " already has " + std::string(kRidAttribute));
  }
  r.attributes.emplace_back(kRidAttribute);
  for (size_t i = 0; i < r.rows.size(); ++i) r.rows[i].push_back(std::to_string(i + 1));
  return r;
}

std::vector<uint64_t> assign_rids(size_t n, RidMode mode, uint64_t seed) {
  std::vector<uint64_t> rids(n);
  if (mode == RidMode::kSequential) {
    std::iota(rids.begin(), rids.end(), 1);
    return rids;
  }
  std::vector<uint64_t> pool(2 * n);
  std::iota(pool.begin(), pool.end(), 1);
  CoefficientStream rng(seed, ~uint64_t{0}, 1);
  std::shuffle(pool.begin(), pool.end(), rng.engine());
  std::copy_n(pool.begin(), n, rids.begin());
  return rids;
}

Schema plan_schema(const Relation& r, const OwnerOptions& options) {
  r.validate();
  if (std::find(r.attributes.begin(), r.attributes.end(), kRidAttribute) != r.attributes.end()) {
    throw Error(ErrorCode::kRidExists, r.name + " already has " + std::string(kRidAttribute));
  }
  options.params.validate();
  for (const auto& c : options.range_columns) r.index_of(c);
  for (const auto& [c, digits] : options.digest_columns) {
    r.index_of(c);
    if (digits < 1) throw Error(ErrorCode::kBadParams, "digest digits for " + c);
  }

  Schema s;
  s.relation = r.name;
  s.prime = options.params.prime;
  s.degree = options.params.degree;
  s.rows = r.size();
  s.rid_mode = options.rid_mode;
  s.rid_max = options.rid_mode == RidMode::kSequential ? r.size() : 2 * r.size();

  std::vector<std::string> values(r.size());
  for (size_t j = 0; j < r.attributes.size(); ++j) {
    for (size_t i = 0; i < r.size(); ++i) values[i] = r.rows[i][j];
    CodecOptions co;
    co.binary = options.range_columns.count(r.attributes[j]) > 0;
    co.compact = options.compact;
    co.prime = s.prime;
    if (auto it = options.digest_columns.find(r.attributes[j]); it != options.digest_columns.end()) {
      co.digest_digits = it->second;
    }
    ColumnCodec codec = infer_column_codec(r.attributes[j], values, co);
    if (co.binary && codec.binary_bits == 0) {
      throw Error(ErrorCode::kBadParams, "range column " + r.attributes[j] + " is not integral");
    }
    s.columns.push_back(std::move(codec));
  }
  s.columns.push_back(rid_codec(s.rid_max, true));
  if (options.range_columns.count(std::string(kRidAttribute))) {
    s.columns.back().binary_bits = binary_width_for(1, static_cast<int64_t>(s.rid_max));
  }
  return s;
}

std::vector<Schema> unify_schemas(std::vector<Schema> schemas) {
  std::map<std::string, ColumnCodec> merged;
  std::map<std::string, bool> width_varies;
  for (const auto& s : schemas) {
    for (size_t j = 0; j < s.attribute_count(); ++j) {
      const auto& c = s.columns[j];
      auto [it, fresh] = merged.try_emplace(c.name, c);
      if (fresh) continue;
      ColumnCodec& m = it->second;
      if (m.digest_digits != c.digest_digits) {
        throw Error(ErrorCode::kBadParams, "column " + c.name + " hashed inconsistently");
      }
      // A numeral column turned text pads with ' ' instead of leading zeros.
      if (m.width != c.width || m.layout() == CellLayout::kNumeral ||
          c.layout() == CellLayout::kNumeral) {
        width_varies[c.name] = true;
      }
      if (!(m.alphabet == c.alphabet)) {
        std::set<char> chars(m.alphabet.symbols().begin(), m.alphabet.symbols().end());
        chars.insert(c.alphabet.symbols().begin(), c.alphabet.symbols().end());
        m.alphabet = Alphabet::custom(std::string(chars.begin(), chars.end()));
      }
      m.width = std::max(m.width, c.width);
      m.binary_bits = std::max(m.binary_bits, c.binary_bits);
      m.binary_signed = m.binary_signed || c.binary_signed;
      m.compact = m.compact && c.compact;
    }
  }
  for (auto& [name, m] : merged) {
    if (m.alphabet.kind() == AlphabetKind::kCustom) {
      m.compact = false;
      if (width_varies[name] && !m.alphabet.index_of(' ')) {
        m.alphabet = Alphabet::custom(m.alphabet.symbols() + ' ');
      }
    }
  }
  for (auto& s : schemas) {
    for (size_t j = 0; j < s.attribute_count(); ++j) s.columns[j] = merged.at(s.columns[j].name);
  }
  return schemas;
}

std::vector<SharedRelation> share_relation(const Relation& r, const OwnerOptions& options) {
  return share_relation(r, plan_schema(r, options), options);
}

std::vector<SharedRelation> share_relation(const Relation& r, const Schema& schema,
                                           const OwnerOptions& options) {
  r.validate();
  const SharingParams& params = options.params;
  params.validate();
  if (schema.rows != r.size() || schema.attribute_count() != r.attributes.size() ||
      schema.prime != params.prime || schema.degree != params.degree) {
    throw Error(ErrorCode::kBadParams, "schema does not describe " + r.name);
  }
  const PrimeField field(params.prime);
  const uint64_t seed = base_seed(params);
  const size_t n = r.size();
  const size_t cols = schema.columns.size();
  const int c = params.servers;

  Schema s = schema;
  s.permutation_seed =
      s.rid_mode == RidMode::kPermuted ? CoefficientStream(seed, ~uint64_t{0}, 2).below(~uint64_t{0}) : 0;
  const std::vector<uint64_t> rids = assign_rids(n, s.rid_mode, seed);

  std::vector<SharedRelation> out(static_cast<size_t>(c));
  for (int k = 0; k < c; ++k) {
    auto& rel = out[k];
    rel.server = k + 1;
    rel.schema = s;
    rel.unary.resize(cols);
    rel.binary.resize(cols);
    rel.compact.resize(cols);
    for (size_t j = 0; j < cols; ++j) {
      const auto& codec = s.columns[j];
      rel.unary[j].cell_len = codec.cell_length();
      rel.unary[j].data.resize(codec.cell_length() * n);
      if (codec.binary_bits > 0) {
        rel.binary[j].cell_len = static_cast<size_t>(codec.binary_bits);
        rel.binary[j].data.resize(rel.binary[j].cell_len * n);
      }
      if (codec.compact) {
        rel.compact[j].cell_len = 1;
        rel.compact[j].data.resize(n);
      }
    }
  }

  // Validate every cell before spending time on sharing.
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j + 1 < cols; ++j) {
      const auto& codec = s.columns[j];
      const auto& v = r.rows[i][j];
      codec.encode(v);
      if (codec.binary_bits > 0) {
        auto x = parse_canonical_int(v);
        if (!x) throw Error(ErrorCode::kBadEncoding, codec.name + " value '" + v + "'");
        binary_encode(*x, codec.binary_bits);
      }
      if (codec.compact && codec.compact_value(v) >= s.prime) {
        throw Error(ErrorCode::kOverflow, codec.name + " value " + v + " exceeds the field");
      }
      if (options.joins_declared && codec.compact && codec.compact_value(v) == 0) {
        throw Error(ErrorCode::kZeroPayload,
                    codec.name + " row " + std::to_string(i + 1) + " encodes to a zero payload");
      }
    }
  }

  #pragma omp parallel for schedule(static)
  for (int64_t ii = 0; ii < static_cast<int64_t>(n); ++ii) {
    const size_t i = static_cast<size_t>(ii);
    CoefficientStream rng(seed, i, 0);
    RowSharer sharer(field, c, params.degree);
    for (size_t j = 0; j < cols; ++j) {
      const auto& codec = s.columns[j];
      const std::string value =
          j + 1 == cols ? std::to_string(rids[i]) : r.rows[i][j];
      const UnaryWord word = codec.encode(value);
      const size_t base = i * codec.cell_length();
      for (size_t b = 0; b < word.bits.size(); ++b) {
        sharer.share(word.bits[b], rng,
                     [&](int k, Fp v) { out[k].unary[j].data[base + b] = v; });
      }
      if (codec.binary_bits > 0) {
        const BinaryWord bw = binary_encode(*parse_canonical_int(value), codec.binary_bits);
        const size_t bbase = i * static_cast<size_t>(codec.binary_bits);
        for (size_t b = 0; b < bw.bits.size(); ++b) {
          sharer.share(bw.bits[b], rng,
                       [&](int k, Fp v) { out[k].binary[j].data[bbase + b] = v; });
        }
      }
      if (codec.compact) {
        sharer.share(codec.compact_value(value), rng,
                     [&](int k, Fp v) { out[k].compact[j].data[i] = v; });
      }
    }
  }
  return out;
}

namespace {

// Range and digest columns apply to the relations that have them; each must
// exist somewhere.
std::vector<OwnerOptions> per_relation_options(const std::vector<Relation>& rels,
                                               const OwnerOptions& options) {
  auto has = [](const Relation& r, const std::string& c) {
    return c == kRidAttribute ||
           std::find(r.attributes.begin(), r.attributes.end(), c) != r.attributes.end();
  };
  std::vector<OwnerOptions> per(rels.size(), options);
  for (size_t i = 0; i < rels.size(); ++i) {
    std::erase_if(per[i].range_columns, [&](const std::string& c) { return !has(rels[i], c); });
    std::erase_if(per[i].digest_columns, [&](const auto& kv) { return !has(rels[i], kv.first); });
  }
  auto check_somewhere = [&](const std::string& c) {
    for (const auto& r : rels) {
      if (has(r, c)) return;
    }
    throw Error(ErrorCode::kUnknownAttribute, "no relation has " + c);
  };
  for (const auto& c : options.range_columns) check_somewhere(c);
  for (const auto& kv : options.digest_columns) check_somewhere(kv.first);
  return per;
}

}  // namespace

std::vector<Schema> plan_schemas(const std::vector<Relation>& rels, const OwnerOptions& options) {
  auto per = per_relation_options(rels, options);
  std::vector<Schema> schemas;
  for (size_t i = 0; i < rels.size(); ++i) schemas.push_back(plan_schema(rels[i], per[i]));
  return unify_schemas(std::move(schemas));
}

std::vector<std::vector<SharedRelation>> share_relations(const std::vector<Relation>& rels,
                                                         const OwnerOptions& options) {
  auto per = per_relation_options(rels, options);
  auto schemas = plan_schemas(rels, options);
  std::vector<std::vector<SharedRelation>> out;
  for (size_t i = 0; i < rels.size(); ++i) {
    OwnerOptions o = per[i];
    if (o.params.rng_seed) o.params.rng_seed = *o.params.rng_seed + 0x9e3779b97f4a7c15ULL * (i + 1);
    out.push_back(share_relation(rels[i], schemas[i], o));
  }
  return out;
}

}  // namespace ssq
