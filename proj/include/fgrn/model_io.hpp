#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "fgrn/model.hpp"

namespace fgrn {

using Metadata = std::vector<std::pair<std::string, std::string>>;

struct ModelFile {
  Model model;
  /// Free-form key/value lines (training flags, split seed, data paths).
  Metadata metadata;
};

/// Text format, one record per line, numbers printed with 17 significant
/// digits so every double survives a round trip:
///
///   FGRN-MODEL 1
///   hidden <H>
///   hidden_var <name> <size> <label>...        (H lines)
///   bottom <B>
///   var <name> <size> <label>...               (B lines)
///   class <index>|none
///   naive_bayes 0|1
///   source <h> frozen 0|1 prior <values>...    (H lines)
///   block <j> frozen 0|1 rows <R> cols <C>     (then R lines of C values)
///   meta <key> <value>                         (any number)
///   end
void save_model(std::ostream& out, const Model& model, const Metadata& metadata = {});
void save_model(const std::string& path, const Model& model, const Metadata& metadata = {});

ModelFile load_model(std::istream& in);
ModelFile load_model(const std::string& path);

/// Value for `key`, or `fallback` if absent.
std::string metadata_value(const Metadata& metadata, const std::string& key,
                           const std::string& fallback = "");

}  // namespace fgrn
