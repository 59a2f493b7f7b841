#include <gtest/gtest.h>

#include <unistd.h>

#include <filesystem>
#include <functional>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "ssq/error.hpp"
#include "ssq/owner.hpp"
#include "ssq/share_store.hpp"
#include "support/paths.hpp"
#include "support/reconstruct.hpp"

namespace ssq {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("ssq_owner_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

OwnerOptions options(int servers, uint64_t seed) {
  OwnerOptions o;
  o.params.servers = servers;
  o.params.rng_seed = seed;
  return o;
}

Relation random_relation(size_t n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  Relation r{"R", {"Num", "Word", "Neg", "Date"}, {}};
  const std::vector<std::string> words{"ab", "b", "ccc", "abba"};
  for (size_t i = 0; i < n; ++i) {
    r.rows.push_back({std::to_string(rng() % 1000), words[rng() % words.size()],
                      std::to_string(static_cast<int>(rng() % 41) - 20),
                      std::to_string(1 + rng() % 12) + "/" + std::to_string(1990 + rng() % 30)});
  }
  return r;
}

TEST(Csv, ReadsEmployeeFixture) {
  Relation e = read_csv(testing::fixture("Employee.csv"));
  EXPECT_EQ(e.name, "Employee");
  EXPECT_EQ(e.attributes, (std::vector<std::string>{"EId", "FirstName", "LastName", "DateofBirth",
                                                    "Salary", "Dept"}));
  ASSERT_EQ(e.size(), 4u);
  EXPECT_EQ(e.rows[1][1], "John");
  EXPECT_EQ(e.rows[3][2], "Williams");
}

TEST(Csv, RoundTripsQuotedCells) {
  Relation r{"Q", {"A", "B"}, {{"x,y", "say \"hi\""}, {"plain", "1"}}};
  std::stringstream ss;
  write_csv(r, ss);
  const fs::path path = fs::temp_directory_path() / "ssq_quoted.csv";
  std::ofstream(path) << ss.str();
  Relation back = read_csv(path, "Q");
  fs::remove(path);
  EXPECT_EQ(back.rows, r.rows);
}

TEST(Relation, Validation) {
  Relation ragged{"R", {"A", "B"}, {{"1", "2"}, {"3"}}};
  EXPECT_THROW(ragged.validate(), Error);
  Relation empty{"R", {"A"}, {}};
  EXPECT_THROW(empty.validate(), Error);
  Relation bad_name{"R", {"A B"}, {{"1"}}};
  EXPECT_THROW(bad_name.validate(), Error);
}

TEST(Rids, SequentialAndPermuted) {
  EXPECT_EQ(assign_rids(4, RidMode::kSequential, 0), (std::vector<uint64_t>{1, 2, 3, 4}));
  EXPECT_EQ(assign_rids(1, RidMode::kSequential, 0), (std::vector<uint64_t>{1}));
  auto p = assign_rids(500, RidMode::kPermuted, 9);
  std::set<uint64_t> distinct(p.begin(), p.end());
  EXPECT_EQ(distinct.size(), 500u);
  EXPECT_GE(*distinct.begin(), 1u);
  EXPECT_LE(*distinct.rbegin(), 1000u);
  EXPECT_EQ(p, assign_rids(500, RidMode::kPermuted, 9));
}

TEST(Rids, AppendRid) {
  Relation e = read_csv(testing::fixture("Employee.csv"));
  Relation with = append_rid(e);
  EXPECT_EQ(with.attributes.back(), "RID");
  EXPECT_EQ(with.rows[3].back(), "4");
  EXPECT_THROW(append_rid(with), Error);
}

TEST(ShareRelation, EmployeeRidsAndShape) {
  Relation e = read_csv(testing::fixture("Employee.csv"));
  auto shares = share_relation(e, options(5, 1));
  ASSERT_EQ(shares.size(), 5u);
  EXPECT_NO_THROW(check_same_shape(shares));
  const Schema& s = shares[0].schema;
  EXPECT_EQ(s.rows, 4u);
  EXPECT_EQ(s.attribute_count(), 6u);
  for (size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(testing::open_compact(shares, s.rid_index(), i), i + 1);
    EXPECT_EQ(testing::decode_cell(s.rid(), testing::open_unary(shares, s.rid_index(), i)),
              std::to_string(i + 1));
  }
}

TEST(ShareRelation, EqualValuesGetDifferentShares) {
  Relation e = read_csv(testing::fixture("Employee.csv"));
  auto shares = share_relation(e, options(5, 1));
  const size_t first_name = shares[0].schema.index_of("FirstName");
  for (const auto& s : shares) {
    const auto a = s.unary[first_name].cell(1);
    const auto b = s.unary[first_name].cell(3);
    EXPECT_FALSE(std::equal(a.begin(), a.end(), b.begin()));
  }
}

TEST(ShareRelation, RandomRelationRoundTrip) {
  Relation r = random_relation(50, 3);
  OwnerOptions o = options(4, 3);
  o.range_columns = {"Num", "Neg"};
  auto shares = share_relation(r, o);
  const Schema& s = shares[0].schema;
  for (size_t j = 0; j < r.attributes.size(); ++j) {
    const auto& codec = s.columns[j];
    for (size_t i = 0; i < r.size(); ++i) {
      ASSERT_EQ(testing::decode_cell(codec, testing::open_unary(shares, j, i)), r.rows[i][j]);
      if (codec.compact) {
        ASSERT_EQ(testing::open_compact(shares, j, i), std::stoull(r.rows[i][j]));
      }
      if (codec.binary_bits > 0) {
        BinaryWord w;
        for (uint64_t b : testing::open_binary(shares, j, i)) w.bits.push_back(static_cast<uint8_t>(b));
        ASSERT_EQ(binary_decode(w), std::stoll(r.rows[i][j]));
      }
    }
  }
}

TEST(ShareRelation, SeededSharingIsDeterministic) {
  Relation r = random_relation(30, 4);
  EXPECT_EQ(share_relation(r, options(3, 8)), share_relation(r, options(3, 8)));
  EXPECT_NE(share_relation(r, options(3, 8))[0].unary, share_relation(r, options(3, 9))[0].unary);
}

TEST(ShareRelation, Errors) {
  Relation r = random_relation(5, 5);
  OwnerOptions o = options(3, 1);
  o.range_columns = {"Word"};
  EXPECT_THROW(share_relation(r, o), Error);
  o.range_columns = {"Missing"};
  EXPECT_THROW(share_relation(r, o), Error);
  EXPECT_THROW(share_relation(r, options(1, 1)), Error);
  Relation zeros{"Z", {"A"}, {{"0"}, {"1"}}};
  OwnerOptions joins = options(3, 1);
  joins.joins_declared = true;
  try {
    share_relation(zeros, joins);
    FAIL() << "zero payload accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kZeroPayload);
  }
  EXPECT_NO_THROW(share_relation(zeros, options(3, 1)));
}

TEST(ShareRelation, PermutedRids) {
  Relation r = random_relation(40, 6);
  OwnerOptions o = options(3, 6);
  o.rid_mode = RidMode::kPermuted;
  auto shares = share_relation(r, o);
  const Schema& s = shares[0].schema;
  EXPECT_EQ(s.rid_mode, RidMode::kPermuted);
  EXPECT_EQ(s.rid_max, 80u);
  std::set<uint64_t> rids;
  for (size_t i = 0; i < r.size(); ++i) rids.insert(testing::open_compact(shares, s.rid_index(), i));
  EXPECT_EQ(rids.size(), 40u);
  EXPECT_LE(*rids.rbegin(), 80u);
}

TEST(Schemas, UnifySameNamedColumns) {
  Relation x = read_csv(testing::fixture("X.csv"));
  Relation y = read_csv(testing::fixture("Y.csv"));
  auto schemas = plan_schemas({x, y}, options(3, 1));
  EXPECT_EQ(schemas[0].columns[schemas[0].index_of("B")],
            schemas[1].columns[schemas[1].index_of("B")]);
  Relation a{"A", {"K"}, {{"5"}, {"17"}}};
  Relation b{"B", {"K"}, {{"xy"}}};
  auto mixed = plan_schemas({a, b}, options(3, 1));
  const auto& k = mixed[0].columns[0];
  EXPECT_EQ(k, mixed[1].columns[0]);
  EXPECT_TRUE(k.alphabet.index_of(' '));
  EXPECT_EQ(k.decode(k.encode("5")), "5");
}

TEST(ShareFiles, WriteReadRoundTrip) {
  TempDir dir;
  Relation e = read_csv(testing::fixture("Employee.csv"));
  OwnerOptions o = options(4, 2);
  o.range_columns = {"Salary"};
  auto shares = share_relation(e, o);
  write_share_files(shares, dir.path());
  EXPECT_EQ(list_relations(dir.path()), (std::vector<std::string>{"Employee"}));
  auto back = read_share_set(dir.path(), "Employee");
  ASSERT_EQ(back.size(), 4u);
  for (size_t k = 0; k < 4; ++k) EXPECT_EQ(back[k], shares[k]);
  EXPECT_EQ(read_share_file(share_file_path(dir.path(), "Employee", 2), 15'000'017).server, 2);

  std::ifstream in(share_file_path(dir.path(), "Employee", 1));
  std::string header;
  std::getline(in, header);
  EXPECT_TRUE(header.starts_with("SSSv1 prime=15000017 server=1 degree=1 n=4 m=6 alphabet="));
  EXPECT_NE(header.find(" widths="), std::string::npos);
  EXPECT_NE(header.find(" hash=sha256"), std::string::npos);
}

TEST(ShareFiles, SameSeedSameBytes) {
  TempDir a, b;
  Relation e = read_csv(testing::fixture("Employee.csv"));
  write_share_files(share_relation(e, options(3, 5)), a.path());
  write_share_files(share_relation(e, options(3, 5)), b.path());
  for (int k = 1; k <= 3; ++k) {
    std::ifstream fa(share_file_path(a.path(), "Employee", k));
    std::ifstream fb(share_file_path(b.path(), "Employee", k));
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    EXPECT_EQ(sa.str(), sb.str());
  }
}

void rewrite(const fs::path& path, const std::function<void(std::string&)>& edit) {
  std::stringstream ss;
  ss << std::ifstream(path).rdbuf();
  std::string text = ss.str();
  edit(text);
  std::ofstream(path, std::ios::trunc) << text;
}

ErrorCode read_error(const fs::path& path, std::optional<uint64_t> prime = std::nullopt) {
  try {
    read_share_file(path, prime);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "read succeeded";
  return ErrorCode::kBadParams;
}

TEST(ShareFiles, Tampering) {
  TempDir dir;
  Relation e = read_csv(testing::fixture("Employee.csv"));
  write_share_files(share_relation(e, options(3, 1)), dir.path());
  const fs::path p1 = share_file_path(dir.path(), "Employee", 1);

  EXPECT_EQ(read_error(p1, 7), ErrorCode::kPrimeMismatch);

  rewrite(p1, [](std::string& t) {
    t.replace(t.find("prime=15000017"), 14, "prime=15000019");
  });
  EXPECT_EQ(read_error(p1), ErrorCode::kPrimeMismatch);  // 15000019 = 1031 * 14549

  write_share_files(share_relation(e, options(3, 1)), dir.path());
  rewrite(p1, [](std::string& t) {
    auto at = t.find('\n') + 1;
    t[at] = t[at] == '1' ? '2' : '1';
  });
  EXPECT_EQ(read_error(p1), ErrorCode::kCorruptFile);

  rewrite(p1, [](std::string& t) { t = t.substr(0, t.size() / 2); });
  EXPECT_EQ(read_error(p1), ErrorCode::kCorruptFile);
}

TEST(ShareFiles, SetChecks) {
  TempDir dir;
  Relation e = read_csv(testing::fixture("Employee.csv"));
  auto three = share_relation(e, options(3, 1));
  auto other = share_relation(random_relation(4, 1), options(3, 1));
  write_share_files(three, dir.path());
  // a server file from a different relation shape
  other[1].schema.relation = "Employee";
  write_share_file(other[1], share_file_path(dir.path(), "Employee", 2));
  try {
    read_share_set(dir.path(), "Employee");
    FAIL() << "shape mismatch accepted";
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::kShapeMismatch);
  }
  std::vector<SharedRelation> dup{three[0], three[0]};
  try {
    check_same_shape(dup);
    FAIL() << "duplicate server accepted";
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::kDuplicateX);
  }
}

}  // namespace
}  // namespace ssq
