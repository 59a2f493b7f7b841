#include "ssq/share_store.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include "ssq/error.hpp"

namespace ssq {
namespace {

constexpr std::string_view kMagic = "SSSv1";

uint64_t fnv1a(std::string_view data, uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <class T, class F>
std::string join(const std::vector<T>& items, F&& fmt) {
  std::string out;
  for (size_t i = 0; i < items.size(); ++i) {
    if (i) out.push_back(',');
    out += fmt(items[i]);
  }
  return out;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void corrupt(const std::filesystem::path& path, const std::string& why) {
  throw Error(ErrorCode::kCorruptFile, path.string() + ": " + why);
}

uint64_t parse_u64(std::string_view s, const std::filesystem::path& path) {
  uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    corrupt(path, "bad number '" + std::string(s) + "'");
  }
  return v;
}

void append_cell(std::string& line, std::span<const Fp> cell) {
  char buf[24];
  for (size_t i = 0; i < cell.size(); ++i) {
    if (i) line.push_back(' ');
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, cell[i].v);
    line.append(buf, ptr);
  }
}

void parse_cell(std::string_view text, std::span<Fp> out, uint64_t prime,
                const std::filesystem::path& path) {
  const char* p = text.data();
  const char* end = text.data() + text.size();
  for (size_t i = 0; i < out.size(); ++i) {
    if (i) {
      if (p == end || *p != ' ') corrupt(path, "short cell");
      ++p;
    }
    uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(p, end, v);
    if (ec != std::errc()) corrupt(path, "bad share value");
    if (v >= prime) corrupt(path, "share value outside the field");
    out[i] = Fp{v};
    p = ptr;
  }
  if (p != end) corrupt(path, "long cell");
}

}  // namespace

size_t Schema::index_of(std::string_view name) const {
  for (size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) return i;
  }
  throw Error(ErrorCode::kUnknownAttribute,
              "no attribute '" + std::string(name) + "' in " + relation);
}

size_t Schema::payload_length() const {
  size_t total = 0;
  for (size_t j = 0; j < columns.size(); ++j) total += payload_length(j);
  return total;
}

std::span<const Fp> SharedRelation::payload(size_t column, size_t row) const {
  return schema.columns[column].compact ? compact[column].cell(row) : unary[column].cell(row);
}

void check_same_shape(std::span<const SharedRelation> shares) {
  if (shares.empty()) throw Error(ErrorCode::kBadParams, "no share relations");
  const auto& first = shares.front();
  std::set<int> servers;
  for (const auto& s : shares) {
    if (s.schema.prime != first.schema.prime) {
      throw Error(ErrorCode::kPrimeMismatch,
                  "server " + std::to_string(s.server) + " uses prime " +
                      std::to_string(s.schema.prime) + ", expected " +
                      std::to_string(first.schema.prime));
    }
    if (!(s.schema == first.schema)) {
      throw Error(ErrorCode::kShapeMismatch,
                  "schema of server " + std::to_string(s.server) + " differs");
    }
    for (size_t j = 0; j < first.unary.size(); ++j) {
      if (s.unary[j].data.size() != first.unary[j].data.size() ||
          s.binary[j].data.size() != first.binary[j].data.size() ||
          s.compact[j].data.size() != first.compact[j].data.size()) {
        throw Error(ErrorCode::kShapeMismatch, "column sizes differ");
      }
    }
    if (!servers.insert(s.server).second) {
      throw Error(ErrorCode::kDuplicateX, "server " + std::to_string(s.server) + " repeated");
    }
  }
}

std::filesystem::path share_file_path(const std::filesystem::path& dir,
                                      std::string_view relation, int server) {
  return dir / (std::string(relation) + ".s" + std::to_string(server) + ".ss");
}

void write_share_file(const SharedRelation& rel, const std::filesystem::path& path) {
  const Schema& s = rel.schema;
  std::string body;
  body.reserve(rel.rows() * 64);
  std::string line;
  for (size_t i = 0; i < rel.rows(); ++i) {
    line.clear();
    bool first = true;
    auto emit = [&](const SharedColumn& col) {
      if (!first) line.push_back('|');
      first = false;
      append_cell(line, col.cell(i));
    };
    for (const auto& col : rel.unary) emit(col);
    for (const auto& col : rel.binary) if (!col.empty()) emit(col);
    for (const auto& col : rel.compact) if (!col.empty()) emit(col);
    line.push_back('\n');
    body += line;
  }

  std::ostringstream header;
  header << kMagic << " prime=" << s.prime << " server=" << rel.server
         << " degree=" << s.degree << " n=" << s.rows << " m=" << s.attribute_count()
         << " alphabet=" << join(s.columns, [](const ColumnCodec& c) { return c.alphabet.id(); })
         << " widths=" << join(s.columns, [](const ColumnCodec& c) { return std::to_string(c.width); })
         << " hash=" << kDigestAlgorithm << " name=" << s.relation
         << " names=" << join(s.columns, [](const ColumnCodec& c) { return c.name; })
         << " digest=" << join(s.columns, [](const ColumnCodec& c) { return std::to_string(c.digest_digits); })
         << " binary=" << join(s.columns, [](const ColumnCodec& c) { return std::to_string(c.binary_bits); })
         << " signed=" << join(s.columns, [](const ColumnCodec& c) { return std::string(c.binary_signed ? "1" : "0"); })
         << " compact=" << join(s.columns, [](const ColumnCodec& c) { return std::string(c.compact ? "1" : "0"); })
         << " rid=" << (s.rid_mode == RidMode::kSequential ? "seq" : "permuted")
         << " ridmax=" << s.rid_max << " perm=" << s.permutation_seed << " checksum=" << std::hex
         << fnv1a(body) << "\n";

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kCorruptFile, "cannot write " + path.string());
  out << header.str() << body;
  if (!out) throw Error(ErrorCode::kCorruptFile, "short write to " + path.string());
}

void write_share_files(std::span<const SharedRelation> shares, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& rel : shares) {
    write_share_file(rel, share_file_path(dir, rel.schema.relation, rel.server));
  }
}

SharedRelation read_share_file(const std::filesystem::path& path,
                               std::optional<uint64_t> expected_prime) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kCorruptFile, "cannot open " + path.string());
  std::string header;
  std::getline(in, header);
  std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  auto tokens = split(header, ' ');
  if (tokens.empty() || tokens[0] != kMagic) corrupt(path, "missing SSSv1 header");
  std::map<std::string, std::string> kv;
  for (size_t i = 1; i < tokens.size(); ++i) {
    auto eq = tokens[i].find('=');
    if (eq == std::string::npos) corrupt(path, "header token '" + tokens[i] + "'");
    kv[tokens[i].substr(0, eq)] = tokens[i].substr(eq + 1);
  }
  auto field = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) corrupt(path, std::string("header lacks ") + key);
    return it->second;
  };

  SharedRelation rel;
  Schema& s = rel.schema;
  s.prime = parse_u64(field("prime"), path);
  if (expected_prime && *expected_prime != s.prime) {
    throw Error(ErrorCode::kPrimeMismatch, path.string() + ": prime " + std::to_string(s.prime) +
                                               ", expected " + std::to_string(*expected_prime));
  }
  if (!is_prime(s.prime) || s.prime >= (uint64_t{1} << 32)) {
    throw Error(ErrorCode::kPrimeMismatch, path.string() + ": header prime is not a usable prime");
  }
  if (field("hash") != kDigestAlgorithm) corrupt(path, "unsupported hash " + field("hash"));
  if (std::stoull(field("checksum"), nullptr, 16) != fnv1a(body)) {
    corrupt(path, "checksum mismatch");
  }

  rel.server = static_cast<int>(parse_u64(field("server"), path));
  s.degree = static_cast<int>(parse_u64(field("degree"), path));
  s.rows = parse_u64(field("n"), path);
  s.relation = field("name");
  const size_t m = parse_u64(field("m"), path);
  auto alphabets = split(field("alphabet"), ',');
  auto widths = split(field("widths"), ',');
  auto names = split(field("names"), ',');
  auto digests = split(field("digest"), ',');
  auto binaries = split(field("binary"), ',');
  auto signs = split(field("signed"), ',');
  auto compacts = split(field("compact"), ',');
  for (const auto* list : {&alphabets, &widths, &names, &digests, &binaries, &signs, &compacts}) {
    if (list->size() != m + 1) corrupt(path, "column list length disagrees with m");
  }
  for (size_t j = 0; j <= m; ++j) {
    ColumnCodec c;
    c.name = names[j];
    c.alphabet = Alphabet::parse(alphabets[j]);
    c.width = static_cast<int>(parse_u64(widths[j], path));
    c.digest_digits = static_cast<int>(parse_u64(digests[j], path));
    c.binary_bits = static_cast<int>(parse_u64(binaries[j], path));
    c.binary_signed = signs[j] == "1";
    c.compact = compacts[j] == "1";
    s.columns.push_back(std::move(c));
  }
  const auto& rid = field("rid");
  if (rid != "seq" && rid != "permuted") corrupt(path, "rid mode " + rid);
  s.rid_mode = rid == "seq" ? RidMode::kSequential : RidMode::kPermuted;
  s.rid_max = parse_u64(field("ridmax"), path);
  s.permutation_seed = parse_u64(field("perm"), path);

  const size_t cols = s.columns.size();
  rel.unary.resize(cols);
  rel.binary.resize(cols);
  rel.compact.resize(cols);
  std::vector<SharedColumn*> order;
  for (size_t j = 0; j < cols; ++j) {
    rel.unary[j].cell_len = s.columns[j].cell_length();
    order.push_back(&rel.unary[j]);
  }
  for (size_t j = 0; j < cols; ++j) {
    if (s.columns[j].binary_bits > 0) {
      rel.binary[j].cell_len = static_cast<size_t>(s.columns[j].binary_bits);
      order.push_back(&rel.binary[j]);
    }
  }
  for (size_t j = 0; j < cols; ++j) {
    if (s.columns[j].compact) {
      rel.compact[j].cell_len = 1;
      order.push_back(&rel.compact[j]);
    }
  }
  for (auto* col : order) col->data.resize(col->cell_len * s.rows);

  std::string_view rest(body);
  for (size_t i = 0; i < s.rows; ++i) {
    auto nl = rest.find('\n');
    if (nl == std::string_view::npos) corrupt(path, "truncated at row " + std::to_string(i + 1));
    std::string_view line = rest.substr(0, nl);
    rest.remove_prefix(nl + 1);
    size_t start = 0;
    for (size_t c = 0; c < order.size(); ++c) {
      auto bar = line.find('|', start);
      if ((bar == std::string_view::npos) != (c + 1 == order.size())) {
        corrupt(path, "wrong cell count in row " + std::to_string(i + 1));
      }
      parse_cell(line.substr(start, bar - start), order[c]->cell(i), s.prime, path);
      start = bar + 1;
    }
  }
  if (!rest.empty()) corrupt(path, "trailing data");
  return rel;
}

std::vector<SharedRelation> read_share_set(const std::filesystem::path& dir,
                                           std::string_view relation,
                                           std::optional<uint64_t> expected_prime) {
  std::vector<SharedRelation> out;
  for (int k = 1;; ++k) {
    auto path = share_file_path(dir, relation, k);
    if (!std::filesystem::exists(path)) break;
    out.push_back(read_share_file(path, expected_prime));
    if (out.back().server != k) {
      corrupt(path, "header names server " + std::to_string(out.back().server));
    }
  }
  if (out.empty()) {
    throw Error(ErrorCode::kCorruptFile,
                "no share files for '" + std::string(relation) + "' in " + dir.string());
  }
  check_same_shape(out);
  return out;
}

std::vector<std::string> list_relations(const std::filesystem::path& dir) {
  static const std::regex kName(R"((.+)\.s1\.ss)");
  std::vector<std::string> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    std::smatch m;
    std::string fname = entry.path().filename().string();
    if (std::regex_match(fname, m, kName)) out.push_back(m[1]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace ssq
