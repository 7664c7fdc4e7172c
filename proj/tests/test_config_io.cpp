#include "nf/config.hpp"
#include "nf/io.hpp"

#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

using namespace nf;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("nf_test_" + name)).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("empty config is the default") {
  const ExperimentConfig a = parse_config("{}");
  const ExperimentConfig b = load_config("default");
  CHECK(config_hash(a) == config_hash(b));
  CHECK(b.n_points == 2048);
  CHECK(b.experiments.m_ladder == std::vector<double>{10, 100, 1000});
}

TEST_CASE("config round trip through JSON") {
  ExperimentConfig c;
  c.n_points = 512;
  c.experiments.epsilon_ladder = {0.2, 0.1};
  c.noise.rank = 8;
  c.sim.eta.center = -1.5;
  ExperimentConfig d = parse_config(config_to_json(c));
  CHECK(config_hash(c) == config_hash(d));
  CHECK(d.n_points == 512);
  CHECK(d.sim.eta.center == -1.5);
  c.experiments.seed = 2;
  CHECK(config_hash(c) != config_hash(d));
  // output location and thread count do not change results
  d.output_dir = "elsewhere";
  d.experiments.threads = 3;
  c.experiments.seed = 1;
  CHECK(config_hash(c) == config_hash(d));
}

TEST_CASE("bad configs are rejected") {
  CHECK_THROWS_AS(parse_config("{\"grid\": {\"n_points\": 10}}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"grdi\": {}}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"noise\": {\"rank\": \"many\"}}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"experiments\": {\"epsilon_ladder\": [0.05, 0.1]}}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"model\": {\"theta\": 1.5}}"), ConfigError);
  CHECK_THROWS_AS(parse_config("not json"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("snapshot dump round trip and byte layout") {
  const GridSpec g = GridSpec::make(5, 64);
  std::vector<Vec> rows = {Vec::LinSpaced(64, -1, 1), Vec::Constant(64, 0.125)};
  rows[1][3] = -0.0;
  const std::string path = temp_path("snap.bin");
  write_snapshots(path, g, {0.0, 0.5}, rows);
  const SnapshotFile s = read_snapshots(path);
  CHECK(s.grid.n_points == 64);
  CHECK(s.grid.half_length == 5.0);
  CHECK(s.grid.spacing == g.spacing);
  REQUIRE(s.rows.size() == 2);
  CHECK(s.times[1] == 0.5);
  for (int r = 0; r < 2; ++r) CHECK(std::memcmp(s.rows[r].data(), rows[r].data(), 64 * sizeof(double)) == 0);

  const std::string bytes = slurp(path);
  CHECK(bytes.substr(0, 8) == "NFSNAP01");
  CHECK(bytes.size() == 8 + 4 + 8 + 8 + 4 + 4 + 4 + 2 * 8 + 2 * 64 * 8);
  // n_points little-endian right after the two grid doubles
  CHECK(static_cast<unsigned char>(bytes[28]) == 64);
  CHECK(bytes[29] == 0);
  // the value 0.125 = 0x3FC0000000000000: last byte of the first value of row 1
  const std::size_t first = 8 + 4 + 8 + 8 + 4 + 4 + 4 + 2 * 8 + 64 * 8;
  CHECK(static_cast<unsigned char>(bytes[first + 7]) == 0x3F);
  CHECK(static_cast<unsigned char>(bytes[first + 6]) == 0xC0);
  std::remove(path.c_str());
}

TEST_CASE("truncated dumps are refused") {
  const GridSpec g = GridSpec::make(5, 64);
  const std::string path = temp_path("short.bin");
  write_snapshots(path, g, {0.0}, {Vec::Ones(64)});
  std::filesystem::resize_file(path, 100);
  CHECK_THROWS(read_snapshots(path));
  std::remove(path.c_str());
}

TEST_CASE("csv and json writers") {
  const std::string csv = temp_path("t.csv");
  write_csv(csv, {"t", {"a", "b"}, {{1, 0.5}, {2, -3e-20}}});
  const std::string text = slurp(csv);
  CHECK(text.rfind("a,b\n1,0.5\n", 0) == 0);
  const std::string js = temp_path("t.json");
  write_json(js, {{"schema_version", kSchemaVersion}, {"x", 0.1}});
  const auto j = read_json(js);
  CHECK(j["x"].get<double>() == 0.1);
  CHECK(j["schema_version"] == 1);
  std::remove(csv.c_str());
  std::remove(js.c_str());
}
