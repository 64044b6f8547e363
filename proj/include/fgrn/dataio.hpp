#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fgrn/lvm.hpp"
#include "fgrn/model.hpp"
#include "fgrn/scheduler.hpp"

namespace fgrn {

enum class ColumnKind { kCategorical, kIntegerBinned, kSkip };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::kCategorical;
  /// Categorical: the labels as they appear in the file. Binned: generated
  /// from the edges, e.g. "(-inf,30)", "[30,40)", "[40,inf)".
  std::vector<std::string> alphabet;
  std::vector<long long> edges;
};

/// Schema file, one "key: value" per line, '#' starts a comment:
///
///   schema_version: 1
///   missing_token: ?
///   header: false
///   class_column: severity
///   column: age
///   kind: integer-binned
///   edges: 30,40,50,60,70
///   column: shape
///   kind: categorical
///   alphabet: 1,2,3,4
///
/// Keys after a "column:" line belong to that column. "kind: skip" drops a
/// column (e.g. a record id).
struct Schema {
  int version = 1;
  std::string missing_token = "?";
  bool header = false;
  std::optional<std::string> class_column;
  std::vector<ColumnSpec> columns;
};

Schema parse_schema(std::istream& in);
Schema load_schema(const std::string& path);

/// Bin index of an integer value: the number of edges <= value.
std::size_t bin_index(const std::vector<long long>& edges, long long value);

using Cell = std::optional<std::uint32_t>;

struct Dataset {
  Schema schema;
  /// Model-order variables: the kept non-class columns in file order, then
  /// the class column last.
  std::vector<VariableInfo> variables;
  /// File column feeding each variable (0-based).
  std::vector<std::size_t> source_columns;
  std::optional<std::size_t> class_index;
  std::vector<std::vector<Cell>> records;
  std::string provenance;

  std::size_t size() const { return records.size(); }
  std::size_t missing_cells() const;
  /// Number of observed (non-class) variables.
  std::size_t observed_count() const { return variables.size() - (class_index ? 1 : 0); }
};

Dataset parse_csv(std::istream& in, const Schema& schema, const std::string& provenance = "");
Dataset load_csv(const std::string& path, const Schema& schema);

struct EncodedCell {
  Message message;
  bool known = false;
};

/// Known cells become deltas; missing ones the uniform message, flagged
/// unknown.
std::vector<EncodedCell> encode_sample(const std::vector<Cell>& record, const Dataset& data);

/// Argmax of every known cell's message.
std::vector<Cell> decode_sample(const std::vector<EncodedCell>& cells);

/// Evidence for a model built from this dataset. With include_class = false
/// the class cell is left unknown.
Evidence to_evidence(const Dataset& data, const std::vector<Cell>& record, bool include_class = true);

std::vector<Evidence> to_evidence(const Dataset& data, bool include_class = true);

/// Throws ShapeMismatch unless the model's bottom variables are the dataset's
/// variables with identical label tables.
void check_compatible(const Model& model, const Dataset& data);

/// LVM whose bottom variables are the dataset's kept columns (class last).
LvmSpec lvm_spec(const Dataset& data, std::vector<std::size_t> hidden_dims, bool naive_bayes = false,
                 std::uint64_t seed = 0);

struct Split {
  Dataset train;
  Dataset test;
};

/// Seeded shuffle, stratified by the class column when there is one. The test
/// side gets round(size * test_fraction) records, shared out between classes
/// by largest remainder. Both sides keep the file order.
Split split(const Dataset& data, double test_fraction, std::uint64_t seed);

}  // namespace fgrn
