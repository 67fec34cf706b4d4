#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "gel/config.hpp"
#include "gel/io.hpp"
#include "gel/rng.hpp"

using namespace gel;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("float formatting round-trips exactly") {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-17, 1e300, 0.0, -0.0, 123456.789}) {
    const std::string s = format_float(x);
    CHECK(std::stod(s) == x);
    CHECK(s.find(',') == std::string::npos);
  }
}

TEST_CASE("binary matrix round trip") {
  Rng rng(1);
  const Matrix m = rng.normal_matrix(7, 3);
  const std::string path = temp_path("gel_test_mat.bin");
  write_matrix_binary(path, m, 0xdeadbeefULL);
  const BinaryMatrix back = read_matrix_binary(path);
  CHECK(back.m == m);
  CHECK(back.seed == 0xdeadbeefULL);
  // header is exactly 24 bytes
  CHECK(std::filesystem::file_size(path) == 24 + sizeof(double) * 21);

  // corrupt magic
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.write("NOPE", 4);
  }
  CHECK_THROWS_AS(read_matrix_binary(path), std::runtime_error);

  // truncation
  write_matrix_binary(path, m, 1);
  std::filesystem::resize_file(path, 40);
  CHECK_THROWS_AS(read_matrix_binary(path), std::runtime_error);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_matrix_binary(path), std::runtime_error);
}

TEST_CASE("csv matrix write uses 17 significant digits") {
  Matrix m(1, 2);
  m << 0.1, -1.0 / 3.0;
  const std::string path = temp_path("gel_test_mat.csv");
  write_matrix_csv(path, m);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  const auto comma = line.find(',');
  CHECK(std::stod(line.substr(0, comma)) == 0.1);
  CHECK(std::stod(line.substr(comma + 1)) == -1.0 / 3.0);
  std::filesystem::remove(path);
}

TEST_CASE("atomic write leaves no temp file") {
  const std::string path = temp_path("gel_test_atomic.txt");
  atomic_write(path, "hello\n");
  std::ifstream in(path);
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  CHECK(content == "hello\n");
  CHECK(!std::filesystem::exists(path + ".tmp"));
  std::filesystem::remove(path);
}

TEST_CASE("digests") {
  CHECK(fnv1a_digest("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a_digest("a") != fnv1a_digest("b"));
  const std::string path = temp_path("gel_test_digest.txt");
  atomic_write(path, "abc");
  CHECK(file_digest(path) == fnv1a_digest("abc"));
  std::filesystem::remove(path);
}

TEST_CASE("config round trip is the identity") {
  ExperimentConfig cfg;
  cfg.d = 12;
  cfg.n = 34;
  cfg.p_grid = {5, 6, 9};
  cfg.lambda = 0.25;
  cfg.activation = "sine";
  cfg.master_seed = 987654321;
  const std::string s1 = cfg.serialize();
  const ExperimentConfig back = ExperimentConfig::parse(s1);
  CHECK(back.serialize() == s1);
  CHECK(back.d == 12);
  CHECK(back.p_grid == std::vector<Index>{5, 6, 9});
  CHECK(back.lambda == 0.25);
  CHECK(back.master_seed == 987654321);
}

TEST_CASE("config parses key=value with comments and JSON") {
  const ExperimentConfig kv = ExperimentConfig::parse(
      "# comment\nd = 10\nn=20  # trailing\np_grid = 4,8\nlambda=0.5\n\n");
  CHECK(kv.d == 10);
  CHECK(kv.n == 20);
  CHECK(kv.p_grid == std::vector<Index>{4, 8});
  CHECK(kv.lambda == 0.5);

  const ExperimentConfig js = ExperimentConfig::parse(
      R"({"d": "10", "n": "20", "p_grid": "4,8", "lambda": "0.5"})");
  CHECK(js.serialize() == kv.serialize());
}

TEST_CASE("config validation rejects bad fields") {
  ExperimentConfig cfg;
  cfg.p_grid = {200, 100};
  CHECK_THROWS_WITH_AS(cfg.validate(),
                       "config field 'p_grid': must be sorted ascending",
                       std::invalid_argument);
  cfg = ExperimentConfig{};
  cfg.lambda = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = ExperimentConfig{};
  cfg.mc_fresh_samples = 10;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = ExperimentConfig{};
  cfg.d = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::load(temp_path("no_such_config.cfg")),
                  std::invalid_argument);
}

TEST_CASE("default config is valid and matches the bundled experiment shape") {
  ExperimentConfig cfg;
  cfg.validate();
  CHECK(cfg.d == 200);
  CHECK(cfg.n == 600);
  CHECK(cfg.p_grid == std::vector<Index>{100, 200, 400, 800});
  CHECK(cfg.activation == "tanh");
  CHECK(cfg.loss == "logistic");
  CHECK(cfg.lambda == 0.1);
  CHECK(cfg.n_trials == 20);
}
