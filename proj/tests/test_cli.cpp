#include <catch_amalgamated.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "integamp/cli.hpp"

using namespace integamp;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("integamp_cli_" + name)) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

struct Run {
  int code;
  std::string out, err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path write_config(const std::string& name, const std::string& text) {
  const auto p = fs::temp_directory_path() / ("integamp_cli_" + name + ".cfg");
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_CASE("usage errors") {
  const auto none = run({});
  CHECK(none.code == kExitUsage);
  CHECK(none.err.rfind("error: kind=usage", 0) == 0);
  CHECK(run({"frobnicate"}).code == kExitUsage);
  CHECK(run({"gain", "--jobs", "many"}).code == kExitUsage);
  const auto help = run({"--help"});
  CHECK(help.code == kExitOk);
  for (const auto& name : protocol_names()) CHECK(help.out.find(name) != std::string::npos);
}

TEST_CASE("validation errors") {
  const auto cfg = write_config("bad", "itail = 3 uA\nc_load = 200 uV\n");
  const auto r = run({"gain", "--config", cfg.string()});
  CHECK(r.code == kExitValidation);
  CHECK(r.err.find("kind=validation line=2") != std::string::npos);
  fs::remove(cfg);
  CHECK(run({"gain", "--dt", "5 ns"}).code == kExitValidation);
  CHECK(run({"gain", "--config", "/nonexistent/integamp.cfg"}).code == kExitValidation);

  const auto mismatch = write_config("mismatch", "protocol = noise\n");
  CHECK(run({"gain", "--config", mismatch.string()}).code == kExitValidation);
  fs::remove(mismatch);
}

TEST_CASE("gain protocol writes its CSV and summary") {
  TempDir dir("gain");
  const auto r = run({"gain", "--out", dir.str()});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("G=") != std::string::npos);
  const auto csv = slurp(dir.path / "gain.csv");
  CHECK(csv.rfind("#", 0) == 0);
  CHECK(csv.find("design_hash") != std::string::npos);
}

TEST_CASE("outputs are identical across job counts") {
  TempDir a("jobs1"), b("jobs2");
  REQUIRE(run({"input-range", "--out", a.str(), "--jobs", "1"}).code == kExitOk);
  REQUIRE(run({"input-range", "--out", b.str(), "--jobs", "2"}).code == kExitOk);
  const auto x = slurp(a.path / "input_range.csv");
  CHECK(!x.empty());
  CHECK(x == slurp(b.path / "input_range.csv"));
}

TEST_CASE("offset table CSV is 5 by 5") {
  TempDir dir("offset");
  REQUIRE(run({"offset-table", "--out", dir.str()}).code == kExitOk);
  std::istringstream in(slurp(dir.path / "offset_table.csv"));
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') rows.push_back(line);
  REQUIRE(rows.size() == 6);  // header + 5 rows
  for (const auto& row : rows) CHECK(std::count(row.begin(), row.end(), ',') == 5);
}

TEST_CASE("a failing protocol removes partial outputs") {
  TempDir dir("partial");
  // With the trigger above any reachable mid-node voltage no gain point triggers.
  const auto cfg = write_config("partial", "vtrig = 1.7 V\n");
  const auto r = run({"reproduce-all", "--config", cfg.string(), "--out", dir.str()});
  fs::remove(cfg);
  CHECK(r.code == kExitProtocol);
  CHECK(r.err.find("kind=protocol") != std::string::npos);
  CHECK_FALSE(fs::exists(dir.path / "trace.csv"));
  CHECK_FALSE(fs::exists(dir.path / "gain.csv"));
}
