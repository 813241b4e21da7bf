#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path scratch = fs::temp_directory_path() / "cnls_cli_tests";

int run(const std::string& args) {
  const std::string cmd = std::string(CNLS_CLI_PATH) + " " + args + " --log-level off > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path write(const std::string& name, const std::string& text) {
  fs::create_directories(scratch);
  const fs::path p = scratch / name;
  std::ofstream(p) << text;
  return p;
}

const std::string constant_yaml = R"(name: const
couplings: {mu1: 1.0, mu2: 1.0, beta: BETA}
potentials:
  a: {family: constant, top: 1.0}
  b: {family: constant, top: 2.0}
domain:
  lambda: {shape: ball, radius: 6.0}
  O: [{center: [0, 0, 0], radius: 3.5}]
eps_ladder: [0.3]
)";

std::string with_beta(const std::string& beta) {
  std::string s = constant_yaml;
  s.replace(s.find("BETA"), 4, beta);
  return s;
}

}  // namespace

TEST_CASE("beta at or below beta0 exits with status 2") {
  const fs::path cfg = write("low_beta.yaml", with_beta("2.0"));  // beta0 = 2
  const fs::path out = scratch / "low_beta";
  fs::remove_all(out);
  CHECK(run("landscape --config " + cfg.string() + " --out " + out.string()) == 2);
  auto err = nlohmann::json::parse(slurp(out / "error.json"));
  CHECK(err["kind"] == "admissibility");
  CHECK(err["exit_code"] == 2);
}

TEST_CASE("malformed config exits with status 2") {
  const fs::path cfg = write("bad.yaml", with_beta("2.5") + "unexpected: 1\n");
  const fs::path out = scratch / "bad";
  fs::remove_all(out);
  CHECK(run("oracle --config " + cfg.string() + " --out " + out.string()) == 2);
  CHECK(nlohmann::json::parse(slurp(out / "error.json"))["kind"] == "configuration");
}

TEST_CASE("oracle cache is reused byte for byte") {
  const fs::path out = scratch / "oracle";
  fs::remove_all(out);
  REQUIRE(run("oracle --out " + out.string()) == 0);
  const std::string first = slurp(out / "oracle.json");
  std::string cache_name;
  for (const auto& e : fs::directory_iterator(out / "cache")) cache_name = e.path().filename().string();
  REQUIRE(!cache_name.empty());
  const std::string cached = slurp(out / "cache" / cache_name);
  REQUIRE(run("oracle --out " + out.string()) == 0);
  CHECK(slurp(out / "cache" / cache_name) == cached);
  auto a = nlohmann::json::parse(first), b = nlohmann::json::parse(slurp(out / "oracle.json"));
  CHECK(a["E1"] == b["E1"]);
  CHECK(b["from_cache"] == true);
}

TEST_CASE("full pipeline writes every artifact deterministically") {
  const fs::path a = scratch / "all_a", b = scratch / "all_b";
  fs::remove_all(a);
  fs::remove_all(b);
  REQUIRE(run("all --config " + std::string(CNLS_SOURCE_DIR) + "/configs/standard.yaml --out " + a.string()) == 0);
  REQUIRE(run("all --config " + std::string(CNLS_SOURCE_DIR) + "/configs/standard.yaml --out " + b.string() +
              " --workers 2") == 0);
  for (const char* f : {"oracle.json", "landscape.csv", "landscape.json", "eps_series.csv", "eps_series.json",
                        "verify_report.json", "decay_profile.csv", "manifest.json"})
    CHECK_MESSAGE(fs::exists(a / f), f);
  for (const char* f : {"landscape.csv", "eps_series.csv", "decay_profile.csv"}) CHECK(slurp(a / f) == slurp(b / f));

  auto manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
  std::size_t listed = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), a).generic_string();
    if (rel == "manifest.json") continue;
    ++listed;
    bool found = false;
    for (const auto& f : manifest["artifacts"])
      if (f["file"] == rel) found = f["bytes"] == fs::file_size(entry.path());
    CHECK_MESSAGE(found, rel);
  }
  CHECK(manifest["artifacts"].size() == listed);
  CHECK(nlohmann::json::parse(slurp(a / "verify_report.json"))["all_passed"] == true);
}
