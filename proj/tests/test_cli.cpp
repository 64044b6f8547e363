#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <sys/wait.h>

#include "doctest.h"
#include "fgrn/model_io.hpp"
#include "fixtures.hpp"

using namespace fgrn;
namespace fs = std::filesystem;

namespace {

const std::string kCli = FGRN_CLI;
const std::string kDataDir = FGRN_DATA_DIR;

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  Result r;
  FILE* p = popen((kCli + " " + args + " 2>/dev/null").c_str(), "r");
  REQUIRE(p);
  char buf[4096];
  std::size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream l(line);
    std::string c;
    while (std::getline(l, c, ',')) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("fgrn_cli_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string bc_args() {
  return "--data " + kDataDir + "/breast-cancer-wisconsin.data --schema " + kDataDir + "/breast-cancer-wisconsin.schema";
}

}  // namespace

TEST_CASE("cli bench: counts for ten binary observations on ten states") {
  const Result r = run("bench --repeat 2 --csv");
  REQUIRE(r.code == 0);
  std::map<std::string, std::vector<std::string>> by_impl;
  for (const auto& row : csv_rows(r.out))
    if (row.size() > 2) by_impl[row[0] + "/" + row[1]] = row;
  CHECK(by_impl["inference/optimized"][2] == "670");
  CHECK(by_impl["inference/optimized"][3] == "270");
  CHECK(by_impl["inference/naive"][2] == "1390");
  CHECK(by_impl["inference/naive"][3] == "990");
  CHECK(by_impl["ml/fast"][2] == "800");
  CHECK(by_impl["ml/direct"][2] == "1300");
  CHECK(run("bench --hidden 1 --repeat 1").code == 2);
}

TEST_CASE("cli train: one report row per epoch and a loadable model") {
  TempDir tmp;
  const Result r = run("train " + bc_args() +
                       " --hidden 20 --epochs 20 --mode incremental --freeze-source --seed 42 --csv --out " +
                       tmp / "m.fgrn");
  REQUIRE(r.code == 0);
  std::size_t epochs = 0;
  for (const auto& row : csv_rows(r.out)) epochs += row.size() == 7 && row[0] != "epoch";
  CHECK(epochs == 20);
  const ModelFile f = load_model(tmp / "m.fgrn");
  CHECK(metadata_value(f.metadata, "mode") == "incremental");
  CHECK(f.model.sources[0].frozen());

  const Result batch = run("train " + bc_args() + " --hidden 20 --epochs 3 --mode batch --k 10 --csv");
  REQUIRE(batch.code == 0);
  bool multi = false;
  for (const auto& row : csv_rows(batch.out))
    if (row.size() == 7 && row[0] != "epoch") multi = multi || std::stoul(row[2]) > 1;
  CHECK(multi);
}

TEST_CASE("cli eval: re-splits from the model file and matches training") {
  TempDir tmp;
  const Result t = run("train " + bc_args() + " --hidden 10 --epochs 5 --seed 3 --csv --out " + tmp / "m.fgrn");
  REQUIRE(t.code == 0);
  const Result e = run("eval --model " + tmp / "m.fgrn " + bc_args() + " --csv");
  REQUIRE(e.code == 0);
  std::vector<std::string> train_acc, eval_acc;
  for (const auto& row : csv_rows(t.out))
    if (!row.empty() && row[0] == "accuracy") train_acc.push_back(row[5]);
  for (const auto& row : csv_rows(e.out))
    if (!row.empty() && row[0] == "accuracy") eval_acc.push_back(row[5]);
  CHECK(train_acc.size() == 2);
  CHECK(train_acc == eval_acc);

  const Result mismatch =
      run("eval --model " + tmp / "m.fgrn" + " --data " + kDataDir + "/cmc.data --schema " + kDataDir + "/cmc.schema");
  CHECK(mismatch.code == 2);
}

TEST_CASE("cli: separable toy data reaches full training accuracy") {
  TempDir tmp;
  std::ofstream(tmp / "toy.schema") << "schema_version: 1\nclass_column: c\ncolumn: x\nalphabet: a,b\n"
                                       "column: z\nalphabet: p,q,r\ncolumn: c\nalphabet: no,yes\n";
  {
    std::ofstream csv(tmp / "toy.csv");
    for (int i = 0; i < 40; ++i) csv << (i % 2 ? "b" : "a") << ',' << "pqr"[i % 3] << ',' << (i % 2 ? "yes" : "no") << '\n';
  }
  const Result r = run("train --data " + tmp / "toy.csv" + " --schema " + tmp / "toy.schema" +
                       " --hidden 2 --epochs 20 --test-fraction 0 --csv");
  REQUIRE(r.code == 0);
  bool seen = false;
  for (const auto& row : csv_rows(r.out)) {
    if (row.size() > 5 && row[0] == "accuracy") {
      seen = true;
      CHECK(row[3] == "40");
    }
  }
  CHECK(seen);
}

TEST_CASE("cli: input errors exit with status 2") {
  CHECK(run("train --data " + kDataDir + "/cmc.data --schema /nonexistent.schema").code == 2);
  CHECK(run("train --data /nonexistent.csv --schema " + kDataDir + "/cmc.schema").code == 2);
  CHECK(run("frobnicate").code == 2);
  CHECK(run("bench --impl sideways").code == 2);
  CHECK(run("--help").code == 0);
}

TEST_CASE("cli infer: classify matches enumeration; lookups and guards") {
  TempDir tmp;
  LvmSpec spec;
  spec.hidden_dims = {3};
  spec.observed = {fixtures::variable("A", 3), fixtures::variable("B", 2)};
  spec.class_variable = fixtures::variable("L", 2);
  spec.seed = 31;
  Model m = build(spec);
  m.sources[0].set_prior(Message({0.2, 0.5, 0.3}));
  save_model(tmp / "m.fgrn", m);

  const Result r = run("infer --model " + tmp / "m.fgrn" + " --task classify --set A=A_2 --set B=B_0 --csv");
  REQUIRE(r.code == 0);
  oracle::Observations obs(3);
  obs[0] = oracle::Vec{0, 0, 1};
  obs[1] = oracle::Vec{1, 0};
  const auto exact = oracle::enumerate(fixtures::to_oracle(m), obs, {true, true, true}, {true});
  const auto rows = csv_rows(r.out);
  REQUIRE(rows.size() == 2);
  for (std::size_t k = 0; k < 2; ++k) CHECK(std::abs(std::stod(rows[k][2]) - exact.y[2][k]) <= 1e-10);

  const Result c = run("infer --model " + tmp / "m.fgrn" + " --task centroid --index 2 --csv");
  REQUIRE(c.code == 0);
  const auto crow = csv_rows(c.out);
  REQUIRE(crow.size() == 5);
  for (std::size_t k = 0; k < 3; ++k) CHECK(std::stod(crow[k][2]) == m.blocks[0].theta()(2, k));

  CHECK(run("infer --model " + tmp / "m.fgrn" + " --task prototype --index 99").code == 2);
  CHECK(run("infer --model " + tmp / "m.fgrn" + " --task classify --set A=nope").code == 2);
  CHECK(run("infer --model " + tmp / "m.fgrn" + " --task classify --set Q=A_0").code == 2);
  CHECK(run("infer --model " + tmp / "m.fgrn" + " --task complete --set A=A_1 --class-label L_1").code == 0);
}
