#include "fgrn/model_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "fgrn/errors.hpp"

namespace fgrn {

namespace {

constexpr const char* kMagic = "FGRN-MODEL";
constexpr int kVersion = 1;

std::string number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void check_token(const std::string& s, const std::string& what) {
  if (s.empty() || s.find_first_of(" \t\r\n") != std::string::npos) {
    throw InvalidSpec(what + " '" + s + "' must be non-empty without whitespace");
  }
}

void write_variable(std::ostream& out, const char* tag, const VariableInfo& v) {
  check_token(v.name, "variable name");
  out << tag << ' ' << v.name << ' ' << v.size();
  for (const auto& l : v.labels) {
    check_token(l, "label");
    out << ' ' << l;
  }
  out << '\n';
}

void write_values(std::ostream& out, std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) out << (i ? " " : "") << number(values[i]);
}

// Line-by-line reader that keeps the line number for error messages.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::istringstream next(const std::string& expected_tag) {
    std::string raw;
    do {
      if (!std::getline(in_, raw)) fail("unexpected end of file, expected '" + expected_tag + "'");
      ++line_;
    } while (raw.empty());
    std::istringstream fields(raw);
    std::string tag;
    fields >> tag;
    if (tag != expected_tag) fail("expected '" + expected_tag + "', found '" + tag + "'");
    return fields;
  }

  std::string peek_tag() {
    const auto pos = in_.tellg();
    const std::size_t line = line_;
    std::string raw, tag;
    while (std::getline(in_, raw)) {
      ++line_;
      if (raw.empty()) continue;
      std::istringstream(raw) >> tag;
      break;
    }
    in_.clear();
    in_.seekg(pos);
    line_ = line;
    return tag;
  }

  template <class T>
  T field(std::istringstream& fields, const std::string& what) {
    std::string token;
    if (!(fields >> token)) fail("missing " + what);
    if constexpr (std::is_same_v<T, double>) {
      char* end = nullptr;
      const double v = std::strtod(token.c_str(), &end);
      if (end != token.c_str() + token.size()) fail("bad number '" + token + "' for " + what);
      return v;
    } else if constexpr (std::is_same_v<T, std::size_t>) {
      if (token.empty() || token.find_first_not_of("0123456789") != std::string::npos) {
        fail("bad count '" + token + "' for " + what);
      }
      return static_cast<std::size_t>(std::stoull(token));
    } else {
      return token;
    }
  }

  void expect_word(std::istringstream& fields, const std::string& word) {
    if (field<std::string>(fields, word) != word) fail("expected '" + word + "'");
  }

  void expect_end(std::istringstream& fields) {
    std::string extra;
    if (fields >> extra) fail("unexpected trailing field '" + extra + "'");
  }

  bool flag(std::istringstream& fields, const std::string& what) {
    const std::string v = field<std::string>(fields, what);
    if (v != "0" && v != "1") fail(what + " must be 0 or 1");
    return v == "1";
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(line_, 0, "model file: " + what); }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

VariableInfo read_variable(Reader& r, const char* tag) {
  auto f = r.next(tag);
  VariableInfo v;
  v.name = r.field<std::string>(f, "name");
  const auto n = r.field<std::size_t>(f, "alphabet size");
  for (std::size_t k = 0; k < n; ++k) v.labels.push_back(r.field<std::string>(f, "label"));
  r.expect_end(f);
  return v;
}

std::vector<double> read_values(Reader& r, std::istringstream& f, std::size_t n) {
  std::vector<double> out(n);
  for (double& x : out) x = r.field<double>(f, "value");
  r.expect_end(f);
  return out;
}

}  // namespace

void save_model(std::ostream& out, const Model& model, const Metadata& metadata) {
  model.validate();
  out << kMagic << ' ' << kVersion << '\n';
  out << "hidden " << model.hidden_count() << '\n';
  for (const auto& v : model.hidden) write_variable(out, "hidden_var", v);
  out << "bottom " << model.bottom_count() << '\n';
  for (const auto& v : model.variables) write_variable(out, "var", v);
  out << "class ";
  if (model.class_index) out << *model.class_index;
  else out << "none";
  out << '\n';
  out << "naive_bayes " << (model.naive_bayes ? 1 : 0) << '\n';
  for (std::size_t h = 0; h < model.sources.size(); ++h) {
    out << "source " << h << " frozen " << (model.sources[h].frozen() ? 1 : 0) << " prior ";
    write_values(out, model.sources[h].prior().values());
    out << '\n';
  }
  for (std::size_t j = 0; j < model.blocks.size(); ++j) {
    const auto& theta = model.blocks[j].theta();
    out << "block " << j << " frozen " << (model.blocks[j].frozen() ? 1 : 0) << " rows " << theta.rows() << " cols "
        << theta.cols() << '\n';
    for (std::size_t i = 0; i < theta.rows(); ++i) {
      out << "row ";
      write_values(out, theta.row(i));
      out << '\n';
    }
  }
  for (const auto& [key, value] : metadata) {
    check_token(key, "metadata key");
    if (value.find_first_of("\r\n") != std::string::npos) throw InvalidSpec("metadata value spans lines");
    out << "meta " << key << ' ' << value << '\n';
  }
  out << "end\n";
}

void save_model(const std::string& path, const Model& model, const Metadata& metadata) {
  std::ostringstream buffer;
  save_model(buffer, model, metadata);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidSpec("cannot write model file '" + path + "'");
  out << buffer.str();
  if (!out) throw InvalidSpec("failed writing model file '" + path + "'");
}

ModelFile load_model(std::istream& in) {
  Reader r(in);
  ModelFile file;
  Model& m = file.model;

  auto head = r.next(kMagic);
  if (r.field<std::size_t>(head, "version") != static_cast<std::size_t>(kVersion)) r.fail("unsupported version");

  auto hf = r.next("hidden");
  const auto h = r.field<std::size_t>(hf, "hidden count");
  for (std::size_t i = 0; i < h; ++i) {
    m.hidden.push_back(read_variable(r, "hidden_var"));
    m.hidden_dims.push_back(m.hidden.back().size());
  }
  auto bf = r.next("bottom");
  const auto b = r.field<std::size_t>(bf, "bottom count");
  for (std::size_t j = 0; j < b; ++j) m.variables.push_back(read_variable(r, "var"));

  auto cf = r.next("class");
  const std::string cls = r.field<std::string>(cf, "class index");
  if (cls != "none") {
    std::istringstream one(cls);
    m.class_index = r.field<std::size_t>(one, "class index");
  }
  auto nf = r.next("naive_bayes");
  m.naive_bayes = r.flag(nf, "naive_bayes");

  for (std::size_t i = 0; i < h; ++i) {
    auto f = r.next("source");
    if (r.field<std::size_t>(f, "source index") != i) r.fail("sources out of order");
    r.expect_word(f, "frozen");
    const bool frozen = r.flag(f, "frozen");
    r.expect_word(f, "prior");
    m.sources.emplace_back(Message(read_values(r, f, m.hidden_dims[i])), frozen);
  }
  for (std::size_t j = 0; j < b; ++j) {
    auto f = r.next("block");
    if (r.field<std::size_t>(f, "block index") != j) r.fail("blocks out of order");
    r.expect_word(f, "frozen");
    const bool frozen = r.flag(f, "frozen");
    r.expect_word(f, "rows");
    const auto rows = r.field<std::size_t>(f, "rows");
    r.expect_word(f, "cols");
    const auto cols = r.field<std::size_t>(f, "cols");
    r.expect_end(f);
    std::vector<double> entries;
    entries.reserve(rows * cols);
    for (std::size_t i = 0; i < rows; ++i) {
      auto row = r.next("row");
      const auto values = read_values(r, row, cols);
      entries.insert(entries.end(), values.begin(), values.end());
    }
    m.blocks.emplace_back(RowStochasticMatrix(rows, cols, std::move(entries)), frozen);
  }
  while (r.peek_tag() == "meta") {
    auto f = r.next("meta");
    const std::string key = r.field<std::string>(f, "metadata key");
    std::string value;
    std::getline(f >> std::ws, value);
    file.metadata.emplace_back(key, value);
  }
  r.next("end");

  if (h == 0) throw InvalidSpec("model file declares no hidden variables");
  if (h > 1) m.selectors = build_selector_maps(m.hidden_dims);
  m.diverter = Diverter(h + b, m.product_size());
  m.validate();
  return file;
}

ModelFile load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open model file '" + path + "'");
  return load_model(in);
}

std::string metadata_value(const Metadata& metadata, const std::string& key, const std::string& fallback) {
  for (const auto& [k, v] : metadata) {
    if (k == key) return v;
  }
  return fallback;
}

}  // namespace fgrn
