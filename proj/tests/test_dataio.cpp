#include <set>
#include <sstream>

#include "doctest.h"
#include "fgrn/dataio.hpp"
#include "fgrn/errors.hpp"
#include "fgrn/lvm.hpp"

using namespace fgrn;

namespace {

const std::string kDataDir = FGRN_DATA_DIR;

Schema schema_from(const std::string& text) {
  std::istringstream in(text);
  return parse_schema(in);
}

Dataset csv_from(const std::string& text, const Schema& schema) {
  std::istringstream in(text);
  return parse_csv(in, schema);
}

const char* kToySchema = R"(schema_version: 1
missing_token: ?
class_column: label
column: id
kind: skip
column: colour
kind: categorical
alphabet: red,green,blue
column: age
kind: integer-binned
edges: 30,40
column: label
kind: categorical
alphabet: no,yes
)";

Dataset balanced(std::size_t per_class) {
  const Schema s = schema_from(kToySchema);
  std::ostringstream csv;
  for (std::size_t i = 0; i < 2 * per_class; ++i) csv << i << ",red," << 20 + i << "," << (i % 2 ? "yes" : "no") << "\n";
  return csv_from(csv.str(), s);
}

}  // namespace

TEST_CASE("schema: columns, kinds and generated bin labels") {
  const Schema s = schema_from(kToySchema);
  REQUIRE(s.columns.size() == 4);
  CHECK(s.columns[0].kind == ColumnKind::kSkip);
  CHECK(s.columns[1].alphabet == std::vector<std::string>{"red", "green", "blue"});
  CHECK(s.columns[2].alphabet == std::vector<std::string>{"(-inf,30)", "[30,40)", "[40,inf)"});
  CHECK(*s.class_column == "label");
  CHECK(s.missing_token == "?");
  CHECK_FALSE(s.header);
}

TEST_CASE("schema: malformed documents are rejected") {
  CHECK_THROWS_AS(schema_from("column: a\nkind: categorical\nalphabet: x,y\n"), ParseError);
  CHECK_THROWS_AS(schema_from("schema_version: 2\n"), ParseError);
  CHECK_THROWS_AS(schema_from("schema_version: 1\ncolour: red\n"), ParseError);
  CHECK_THROWS_AS(schema_from("schema_version: 1\ncolumn: a\nkind: fuzzy\n"), ParseError);
  CHECK_THROWS_AS(schema_from("schema_version: 1\ncolumn: a\nalphabet: x\n"), ParseError);
  CHECK_THROWS_AS(schema_from("schema_version: 1\ncolumn: a\nalphabet: x,x\n"), ParseError);
  CHECK_THROWS_AS(schema_from("schema_version: 1\ncolumn: a\nkind: integer-binned\nedges: 5,5\n"), ParseError);
  CHECK_THROWS_AS(schema_from("schema_version: 1\ncolumn: a\nkind: integer-binned\n"), ParseError);
  CHECK_THROWS_AS(schema_from("schema_version: 1\nclass_column: b\ncolumn: a\nalphabet: x,y\n"), ParseError);
  CHECK_THROWS_AS(schema_from("schema_version: 1\nkind: categorical\n"), ParseError);
  CHECK_THROWS_AS(load_schema(kDataDir + "/does-not-exist.schema"), ParseError);
  try {
    schema_from("schema_version: 1\n\n\nbogus line\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.row() == 4);
  }
}

TEST_CASE("bin_index counts edges at or below the value") {
  const std::vector<long long> edges{30, 40};
  CHECK(bin_index(edges, 29) == 0);
  CHECK(bin_index(edges, 30) == 1);
  CHECK(bin_index(edges, 39) == 1);
  CHECK(bin_index(edges, 40) == 2);
  CHECK(bin_index(edges, 1000) == 2);
}

TEST_CASE("csv: cells, missing values, class last") {
  const Schema s = schema_from(kToySchema);
  const Dataset d = csv_from("7,green,35,yes\n8,?,41,no\n\n9,red,?,?\n", s);
  REQUIRE(d.size() == 3);
  REQUIRE(d.variables.size() == 3);
  CHECK(d.variables[0].name == "colour");
  CHECK(d.variables[2].name == "label");
  CHECK(*d.class_index == 2);
  CHECK(d.observed_count() == 2);
  CHECK(d.records[0] == std::vector<Cell>{1u, 1u, 1u});
  CHECK(d.records[1] == std::vector<Cell>{std::nullopt, 2u, 0u});
  CHECK(d.missing_cells() == 3);
}

TEST_CASE("csv: header line is skipped when declared") {
  Schema s = schema_from(kToySchema);
  s.header = true;
  CHECK(csv_from("id,colour,age,label\n1,red,20,no\n", s).size() == 1);
}

TEST_CASE("csv: empty input gives an empty dataset") {
  const Schema s = schema_from(kToySchema);
  CHECK(csv_from("", s).size() == 0);
  CHECK(csv_from("\n\n", s).size() == 0);
}

TEST_CASE("csv: malformed rows report row and column") {
  const Schema s = schema_from(kToySchema);
  try {
    csv_from("1,red,20,no\n2,red,20\n", s);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.row() == 2);
  }
  try {
    csv_from("1,red,20,no\n2,mauve,20,no\n", s);
    FAIL("expected UnknownLabel");
  } catch (const UnknownLabel& e) {
    CHECK(e.row() == 2);
    CHECK(e.col() == 2);
  }
  try {
    csv_from("1,red,twenty,no\n", s);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.row() == 1);
    CHECK(e.col() == 3);
  }
}

TEST_CASE("breast cancer file: 699 records, 16 missing cells") {
  const Dataset d = load_csv(kDataDir + "/breast-cancer-wisconsin.data",
                             load_schema(kDataDir + "/breast-cancer-wisconsin.schema"));
  CHECK(d.size() == 699);
  CHECK(d.missing_cells() == 16);
  CHECK(d.observed_count() == 9);
  CHECK(d.variables.size() == 10);
}

TEST_CASE("mammographic and contraceptive files load") {
  const Dataset mm = load_csv(kDataDir + "/mammographic_masses.data",
                              load_schema(kDataDir + "/mammographic_masses.schema"));
  CHECK(mm.size() == 830);
  CHECK(mm.observed_count() == 5);
  const Dataset cmc = load_csv(kDataDir + "/cmc.data", load_schema(kDataDir + "/cmc.schema"));
  CHECK(cmc.size() == 1473);
  CHECK(cmc.observed_count() == 9);
  CHECK(cmc.variables.back().size() == 3);
}

TEST_CASE("a 961-row file with 162 missing cells in the mammographic layout") {
  const Schema s = load_schema(kDataDir + "/mammographic_masses.schema");
  std::ostringstream csv;
  std::size_t planted = 0;
  for (std::size_t i = 0; i < 961; ++i) {
    std::string cells[6] = {"4", std::to_string(20 + i % 70), "1", "2", "3", i % 2 ? "1" : "0"};
    if (planted < 162 && i % 5 == 0) {
      cells[1 + (i / 5) % 4] = "?";
      ++planted;
    }
    csv << cells[0] << ',' << cells[1] << ',' << cells[2] << ',' << cells[3] << ',' << cells[4] << ',' << cells[5]
        << '\n';
  }
  const Dataset d = csv_from(csv.str(), s);
  CHECK(d.size() == 961);
  CHECK(d.missing_cells() == 162);
}

TEST_CASE("encode_sample: deltas, uniform unknowns, schema order") {
  const Schema s = schema_from(kToySchema);
  const Dataset d = csv_from("1,blue,45,no\n2,?,25,yes\n", s);
  const auto a = encode_sample(d.records[0], d);
  REQUIRE(a.size() == 3);
  CHECK(a[0].message == Message::delta(3, 2));
  CHECK(a[0].known);
  const auto b = encode_sample(d.records[1], d);
  CHECK_FALSE(b[0].known);
  CHECK(b[0].message == Message::uniform(3));
  for (const auto& r : d.records) CHECK(decode_sample(encode_sample(r, d)) == r);

  Schema four = schema_from("schema_version: 1\ncolumn: a\nalphabet: p,q,r,s\n");
  const Dataset e = csv_from("r\n", four);
  CHECK(encode_sample(e.records[0], e)[0].message == Message({0, 0, 1, 0}));
}

TEST_CASE("to_evidence can hide the class") {
  const Dataset d = csv_from("1,blue,45,no\n", schema_from(kToySchema));
  const Evidence with = to_evidence(d, d.records[0]);
  const Evidence without = to_evidence(d, d.records[0], false);
  CHECK(with.bottom[2].has_value());
  CHECK_FALSE(without.bottom[2].has_value());
  CHECK(without.bottom[0].has_value());
}

TEST_CASE("split: sizes, determinism, disjointness") {
  const Dataset d = balanced(5);
  const Split a = split(d, 0.3, 4);
  CHECK(a.train.size() == 7);
  CHECK(a.test.size() == 3);
  const Split b = split(d, 0.3, 4);
  CHECK(a.test.records == b.test.records);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Split s = split(d, 0.3, seed);
    CHECK(s.train.size() == 7);
    CHECK(s.test.size() == 3);
  }
  bool differs = false;
  for (std::uint64_t seed = 0; seed < 10 && !differs; ++seed) differs = split(d, 0.3, seed).test.records != a.test.records;
  CHECK(differs);
}

TEST_CASE("split: records partition exactly") {
  const Dataset d = load_csv(kDataDir + "/mammographic_masses.data",
                             load_schema(kDataDir + "/mammographic_masses.schema"));
  // Tag each record with its position so duplicates stay distinguishable.
  Dataset tagged = d;
  for (std::size_t i = 0; i < tagged.records.size(); ++i) tagged.records[i].push_back(static_cast<std::uint32_t>(i));
  const Split s = split(tagged, 0.3, 17);
  std::set<std::uint32_t> seen;
  for (const auto* side : {&s.train, &s.test})
    for (const auto& r : side->records) CHECK(seen.insert(*r.back()).second);
  CHECK(seen.size() == d.size());
  CHECK(s.test.size() == 249);
}

TEST_CASE("split: stratification keeps class ratios") {
  for (std::size_t per_class : {10u, 25u, 51u}) {
    const Dataset d = balanced(per_class);
    const Split s = split(d, 0.3, 99);
    std::size_t yes_train = 0, yes_test = 0;
    for (const auto& r : s.train.records) yes_train += *r[2];
    for (const auto& r : s.test.records) yes_test += *r[2];
    CHECK(std::abs(2.0 * static_cast<double>(yes_train) - static_cast<double>(s.train.size())) <= 2.0);
    CHECK(std::abs(2.0 * static_cast<double>(yes_test) - static_cast<double>(s.test.size())) <= 2.0);
  }
}

TEST_CASE("split: guards") {
  CHECK_THROWS_AS(split(balanced(1), 0.2, 0), TooFewRecords);
  CHECK_THROWS_AS(split(balanced(5), 0.0, 0), InvalidSpec);
  CHECK_THROWS_AS(split(balanced(5), 1.0, 0), InvalidSpec);
}

TEST_CASE("check_compatible compares variables and labels") {
  const Dataset d = balanced(2);
  LvmSpec spec;
  spec.hidden_dims = {2};
  spec.observed = {d.variables[0], d.variables[1]};
  spec.class_variable = d.variables[2];
  CHECK_NOTHROW(check_compatible(build(spec), d));
  spec.observed[1].labels = {"a", "b", "c"};
  CHECK_THROWS_AS(check_compatible(build(spec), d), ShapeMismatch);
}
