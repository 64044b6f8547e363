#include "fgrn/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "fgrn/errors.hpp"
#include "fgrn/rng.hpp"

namespace fgrn {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view s, char sep = ',') {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_integer(const std::string& text, long long& value) {
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string> bin_labels(const std::vector<long long>& edges) {
  std::vector<std::string> labels;
  labels.push_back("(-inf," + std::to_string(edges.front()) + ")");
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    labels.push_back("[" + std::to_string(edges[i]) + "," + std::to_string(edges[i + 1]) + ")");
  }
  labels.push_back("[" + std::to_string(edges.back()) + ",inf)");
  return labels;
}

void finish_column(ColumnSpec& c, std::size_t line) {
  if (c.kind == ColumnKind::kSkip) return;
  if (c.kind == ColumnKind::kIntegerBinned) {
    if (c.edges.empty()) throw ParseError(line, 0, "column '" + c.name + "' needs bin edges");
    for (std::size_t i = 1; i < c.edges.size(); ++i) {
      if (c.edges[i] <= c.edges[i - 1]) {
        throw ParseError(line, 0, "bin edges of '" + c.name + "' must increase");
      }
    }
    c.alphabet = bin_labels(c.edges);
    return;
  }
  if (c.alphabet.size() < 2) throw ParseError(line, 0, "column '" + c.name + "' needs >= 2 labels");
  std::set<std::string> seen;
  for (const auto& l : c.alphabet) {
    if (l.empty() || l.find_first_of(" \t") != std::string::npos) {
      throw ParseError(line, 0, "labels of '" + c.name + "' must be non-empty without spaces");
    }
    if (!seen.insert(l).second) throw ParseError(line, 0, "duplicate label '" + l + "' in '" + c.name + "'");
  }
}

}  // namespace

Schema parse_schema(std::istream& in) {
  Schema schema;
  bool have_version = false;
  std::string raw;
  std::size_t line = 0;
  ColumnSpec* current = nullptr;
  std::size_t current_line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = trim(std::string_view(raw).substr(0, hash));
    if (text.empty()) continue;
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw ParseError(line, 0, "expected 'key: value'");
    const std::string key = trim(std::string_view(text).substr(0, colon));
    const std::string value = trim(std::string_view(text).substr(colon + 1));

    if (key == "column") {
      if (current) finish_column(*current, current_line);
      if (value.empty()) throw ParseError(line, 0, "column name is empty");
      schema.columns.push_back(ColumnSpec{value, ColumnKind::kCategorical, {}, {}});
      current = &schema.columns.back();
      current_line = line;
    } else if (key == "kind" || key == "alphabet" || key == "edges") {
      if (!current) throw ParseError(line, 0, "'" + key + "' outside a column block");
      if (key == "kind") {
        if (value == "categorical") current->kind = ColumnKind::kCategorical;
        else if (value == "integer-binned") current->kind = ColumnKind::kIntegerBinned;
        else if (value == "skip") current->kind = ColumnKind::kSkip;
        else throw ParseError(line, 0, "unknown column kind '" + value + "'");
      } else if (key == "alphabet") {
        current->alphabet = split_list(value);
      } else {
        current->edges.clear();
        for (const auto& e : split_list(value)) {
          long long v = 0;
          if (!parse_integer(e, v)) throw ParseError(line, 0, "bad bin edge '" + e + "'");
          current->edges.push_back(v);
        }
      }
    } else if (current) {
      throw ParseError(line, 0, "unexpected key '" + key + "' inside a column block");
    } else if (key == "schema_version") {
      if (value != "1") throw ParseError(line, 0, "unsupported schema_version '" + value + "'");
      have_version = true;
    } else if (key == "missing_token") {
      if (value.empty()) throw ParseError(line, 0, "missing_token is empty");
      schema.missing_token = value;
    } else if (key == "header") {
      if (value != "true" && value != "false") throw ParseError(line, 0, "header must be true or false");
      schema.header = value == "true";
    } else if (key == "class_column") {
      if (!value.empty()) schema.class_column = value;
    } else {
      throw ParseError(line, 0, "unknown key '" + key + "'");
    }
  }
  if (current) finish_column(*current, current_line);
  if (!have_version) throw ParseError("schema_version missing");
  if (schema.columns.empty()) throw ParseError("schema declares no columns");
  std::set<std::string> names;
  for (const auto& c : schema.columns) {
    if (!names.insert(c.name).second) throw ParseError("duplicate column '" + c.name + "'");
  }
  if (schema.class_column) {
    auto it = std::find_if(schema.columns.begin(), schema.columns.end(),
                           [&](const ColumnSpec& c) { return c.name == *schema.class_column; });
    if (it == schema.columns.end() || it->kind == ColumnKind::kSkip) {
      throw ParseError("class_column '" + *schema.class_column + "' is not a kept column");
    }
  }
  return schema;
}

Schema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open schema file '" + path + "'");
  return parse_schema(in);
}

std::size_t bin_index(const std::vector<long long>& edges, long long value) {
  return static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), value) - edges.begin());
}

std::size_t Dataset::missing_cells() const {
  std::size_t n = 0;
  for (const auto& r : records) n += static_cast<std::size_t>(std::count(r.begin(), r.end(), std::nullopt));
  return n;
}

Dataset parse_csv(std::istream& in, const Schema& schema, const std::string& provenance) {
  Dataset data;
  data.schema = schema;
  data.provenance = provenance;
  std::optional<std::size_t> class_column;
  for (std::size_t c = 0; c < schema.columns.size(); ++c) {
    const auto& col = schema.columns[c];
    if (col.kind == ColumnKind::kSkip) continue;
    if (schema.class_column && col.name == *schema.class_column) {
      class_column = c;
      continue;
    }
    data.variables.push_back(VariableInfo{col.name, col.alphabet});
    data.source_columns.push_back(c);
  }
  if (class_column) {
    data.variables.push_back(VariableInfo{schema.columns[*class_column].name, schema.columns[*class_column].alphabet});
    data.source_columns.push_back(*class_column);
    data.class_index = data.variables.size() - 1;
  }
  if (data.variables.empty()) throw ParseError("schema keeps no columns");

  std::string raw;
  std::size_t row = 0;
  bool header_pending = schema.header;
  while (std::getline(in, raw)) {
    ++row;
    if (trim(raw).empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    const auto cells = split_list(raw);
    if (cells.size() != schema.columns.size()) {
      throw ParseError(row, 0, "expected " + std::to_string(schema.columns.size()) + " columns, found " +
                                   std::to_string(cells.size()));
    }
    std::vector<Cell> record;
    record.reserve(data.variables.size());
    for (std::size_t v = 0; v < data.variables.size(); ++v) {
      const std::size_t c = data.source_columns[v];
      const ColumnSpec& col = schema.columns[c];
      const std::string& cell = cells[c];
      if (cell == schema.missing_token) {
        record.push_back(std::nullopt);
        continue;
      }
      if (col.kind == ColumnKind::kIntegerBinned) {
        long long value = 0;
        if (!parse_integer(cell, value)) throw ParseError(row, c + 1, "not an integer: '" + cell + "'");
        record.push_back(static_cast<std::uint32_t>(bin_index(col.edges, value)));
      } else {
        auto it = std::find(col.alphabet.begin(), col.alphabet.end(), cell);
        if (it == col.alphabet.end()) throw UnknownLabel(row, c + 1, cell);
        record.push_back(static_cast<std::uint32_t>(it - col.alphabet.begin()));
      }
    }
    data.records.push_back(std::move(record));
  }
  return data;
}

Dataset load_csv(const std::string& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open data file '" + path + "'");
  return parse_csv(in, schema, path);
}

std::vector<EncodedCell> encode_sample(const std::vector<Cell>& record, const Dataset& data) {
  if (record.size() != data.variables.size()) throw LengthMismatch(record.size(), data.variables.size());
  std::vector<EncodedCell> out;
  out.reserve(record.size());
  for (std::size_t v = 0; v < record.size(); ++v) {
    const std::size_t d = data.variables[v].size();
    if (record[v]) out.push_back({Message::delta(d, *record[v]), true});
    else out.push_back({Message::uniform(d), false});
  }
  return out;
}

std::vector<Cell> decode_sample(const std::vector<EncodedCell>& cells) {
  std::vector<Cell> out;
  for (const auto& c : cells) {
    if (c.known) out.push_back(static_cast<std::uint32_t>(argmax(c.message)));
    else out.push_back(std::nullopt);
  }
  return out;
}

Evidence to_evidence(const Dataset& data, const std::vector<Cell>& record, bool include_class) {
  Evidence ev;
  const auto cells = encode_sample(record, data);
  for (std::size_t v = 0; v < cells.size(); ++v) {
    const bool hide = !include_class && data.class_index && v == *data.class_index;
    if (cells[v].known && !hide) ev.bottom.push_back(cells[v].message);
    else ev.bottom.push_back(std::nullopt);
  }
  return ev;
}

std::vector<Evidence> to_evidence(const Dataset& data, bool include_class) {
  std::vector<Evidence> out;
  out.reserve(data.records.size());
  for (const auto& r : data.records) out.push_back(to_evidence(data, r, include_class));
  return out;
}

void check_compatible(const Model& model, const Dataset& data) {
  if (model.variables.size() != data.variables.size()) {
    throw ShapeMismatch("model has " + std::to_string(model.variables.size()) + " bottom variables, data has " +
                        std::to_string(data.variables.size()));
  }
  for (std::size_t v = 0; v < data.variables.size(); ++v) {
    if (model.variables[v].name != data.variables[v].name || model.variables[v].labels != data.variables[v].labels) {
      throw ShapeMismatch("variable " + std::to_string(v) + " ('" + data.variables[v].name +
                          "') differs between model and data");
    }
  }
  if (model.class_index != data.class_index) throw ShapeMismatch("class variable differs between model and data");
}

LvmSpec lvm_spec(const Dataset& data, std::vector<std::size_t> hidden_dims, bool naive_bayes, std::uint64_t seed) {
  LvmSpec spec;
  spec.hidden_dims = std::move(hidden_dims);
  spec.naive_bayes = naive_bayes;
  spec.seed = seed;
  spec.observed.assign(data.variables.begin(), data.variables.begin() + static_cast<std::ptrdiff_t>(data.observed_count()));
  if (data.class_index) spec.class_variable = data.variables[*data.class_index];
  return spec;
}

Split split(const Dataset& data, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw InvalidSpec("test fraction must be in (0,1)");
  const std::size_t n = data.records.size();
  const auto test_total = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
  if (test_total == 0 || test_total >= n) throw TooFewRecords(n);

  // Groups keyed by class value; records with a missing class form the last
  // group. Without a class column there is a single group.
  std::size_t groups = 1;
  if (data.class_index) groups = data.variables[*data.class_index].size() + 1;
  std::vector<std::vector<std::size_t>> members(groups);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t g = 0;
    if (data.class_index) {
      const Cell& c = data.records[i][*data.class_index];
      g = c ? *c : groups - 1;
    }
    members[g].push_back(i);
  }

  Rng rng(seed);
  for (auto& m : members) {
    for (std::size_t i = m.size(); i > 1; --i) std::swap(m[i - 1], m[rng.below(i)]);
  }

  // Largest-remainder allocation of test_total across groups; ties go to the
  // lower group index.
  std::vector<std::size_t> quota(groups);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t g = 0; g < groups; ++g) {
    const double exact = static_cast<double>(members[g].size()) * static_cast<double>(test_total) /
                         static_cast<double>(n);
    quota[g] = static_cast<std::size_t>(exact);
    assigned += quota[g];
    remainders.emplace_back(exact - static_cast<double>(quota[g]), g);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < test_total; ++k) {
    const std::size_t g = remainders[k % groups].second;
    if (quota[g] < members[g].size()) {
      ++quota[g];
      ++assigned;
    }
  }

  std::vector<bool> in_test(n, false);
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t k = 0; k < quota[g]; ++k) in_test[members[g][k]] = true;
  }
  Split out{data, data};
  out.train.records.clear();
  out.test.records.clear();
  for (std::size_t i = 0; i < n; ++i) (in_test[i] ? out.test : out.train).records.push_back(data.records[i]);
  const std::string tag = " [split seed=" + std::to_string(seed) + " test_fraction=" + std::to_string(test_fraction);
  out.train.provenance += tag + " side=train]";
  out.test.provenance += tag + " side=test]";
  return out;
}

}  // namespace fgrn
