#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

using nlohmann::json;

namespace {

std::string cli_bin() {
  const char* env = std::getenv("KEEN_CLI_BIN");
  REQUIRE_MESSAGE(env != nullptr, "KEEN_CLI_BIN must point at the binary");
  return env;
}

struct RunResult {
  int rc = -1;
  std::string out;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = cli_bin() + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0)
    out.append(buf.data(), n);
  const int st = pclose(pipe);
  return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, out};
}

std::string temp_dir() {
  char tmpl[] = "/tmp/keen_cli_test_XXXXXX";
  const char* d = mkdtemp(tmpl);
  REQUIRE(d != nullptr);
  return d;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE_MESSAGE(in.good(), path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

}  // namespace

TEST_CASE("classify: exit code, JSON output, manifest") {
  const std::string dir = temp_dir();
  const RunResult r = run_cli("classify --set s=0.285 --out " + dir);
  REQUIRE_MESSAGE(r.rc == 0, r.out);
  const json j = json::parse(r.out);
  CHECK(j.at("regime") == "DeferredCollapse");
  CHECK(j.at("mu0").at("re").get<double>() ==
        doctest::Approx(0.0814706).epsilon(1e-6));

  const json artifact = json::parse(slurp(dir + "/classify.json"));
  CHECK(artifact == j);
  const json manifest = json::parse(slurp(dir + "/manifest.json"));
  CHECK(manifest.at("command") == "classify");
  CHECK(!manifest.at("outputs").empty());
  CHECK(manifest.at("version").is_string());
}

TEST_CASE("config file: model block plus per-command block") {
  const std::string dir = temp_dir();
  spit(dir + "/cfg.json",
       R"({"s":0.285, "simulate":{"t_end":25,"sample_dt":0.5}})");
  const RunResult r = run_cli("simulate --config " + dir + "/cfg.json --out " +
                              dir + " --format csv");
  REQUIRE_MESSAGE(r.rc == 0, r.out);
  CHECK(r.out.rfind("t,B_C,", 0) == 0);
  // 25 / 0.5 + 1 rows plus header.
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 52);
  CHECK(slurp(dir + "/simulate.csv") == r.out);
}

TEST_CASE("CLI flags override config-block values") {
  const std::string dir = temp_dir();
  spit(dir + "/cfg.json", R"({"simulate":{"t_end":25}})");
  const RunResult r =
      run_cli("simulate --config " + dir + "/cfg.json --t-end 10 --out " + dir);
  REQUIRE(r.rc == 0);
  CHECK(json::parse(r.out).at("n_samples").get<int>() == 201);
}

TEST_CASE("unknown config keys are listed and exit 1") {
  const std::string dir = temp_dir();
  spit(dir + "/cfg.json", R"({"tua_B":1.0,"vv":3})");
  const RunResult r =
      run_cli("classify --config " + dir + "/cfg.json --out " + dir);
  CHECK(r.rc == 1);
  CHECK(r.out.find("tua_B") != std::string::npos);
  CHECK(r.out.find("vv") != std::string::npos);
}

TEST_CASE("usage problems exit 1, numerical failures exit 2") {
  const std::string dir = temp_dir();
  CHECK(run_cli("no-such-command --out " + dir).rc == 1);
  CHECK(run_cli("sweep1d --out " + dir).rc == 1);  // missing --param
  // modes on a complex-root model is a usage refusal.
  CHECK(run_cli("modes --out " + dir).rc == 1);
  // interp outside the trajectory span of a short stored run: numerical.
  REQUIRE(run_cli("simulate --t-end 20 --set s=0.285 --out " + dir).rc == 0);
  const RunResult r = run_cli("ratio --set s=0.285 --window 60 100 --out " +
                              dir + " --input " + dir + "/simulate.csv");
  CHECK(r.rc == 2);
}

TEST_CASE("--plot emits SVG without changing the JSON payload") {
  const std::string a = temp_dir(), b = temp_dir();
  REQUIRE(run_cli("sweep1d --param s --out " + a).rc == 0);
  REQUIRE(run_cli("sweep1d --param s --plot --out " + b).rc == 0);
  CHECK(slurp(a + "/sweep1d.json") == slurp(b + "/sweep1d.json"));
  CHECK(slurp(b + "/sweep1d.svg").find("<svg") != std::string::npos);
}

TEST_CASE("seeded Monte Carlo reruns are bit-identical") {
  const std::string a = temp_dir(), b = temp_dir();
  REQUIRE(run_cli("mc-ic --set s=0.285 --n 10 --seed 42 --out " + a).rc == 0);
  REQUIRE(run_cli("mc-ic --set s=0.285 --n 10 --seed 42 --out " + b).rc == 0);
  CHECK(slurp(a + "/mc-ic.csv") == slurp(b + "/mc-ic.csv"));
  CHECK(slurp(a + "/mc-ic.json") == slurp(b + "/mc-ic.json"));
}

TEST_CASE("simulate then collapse-fit on the emitted CSV matches in-process") {
  const std::string dir = temp_dir();
  REQUIRE(run_cli("simulate --t-end 400 --out " + dir).rc == 0);
  const RunResult direct = run_cli("collapse-fit --out " + dir);
  REQUIRE(direct.rc == 0);
  const RunResult viafile =
      run_cli("collapse-fit --input " + dir + "/simulate.csv --out " + dir);
  REQUIRE(viafile.rc == 0);
  const json a = json::parse(direct.out);
  const json b = json::parse(viafile.out);
  for (const char* key : {"bc0", "bc1", "fl1", "kr1", "lambda1", "fd0", "bp0",
                          "c1", "c2", "kr_rate", "lambda_rate", "fl_rate"}) {
    CHECK_MESSAGE(
        b.at(key).get<double>() ==
            doctest::Approx(a.at(key).get<double>()).epsilon(1e-12),
        key);
  }
}

TEST_CASE("KEEN_JOBS environment fallback") {
  const std::string dir = temp_dir();
  const std::string base = "regime2d --ns 7 --nv 7 --out " + dir;
  const RunResult a = run_cli(base);
  // Run again with the env var set; results must be identical.
  const std::string cmd = "KEEN_JOBS=3 " + cli_bin() + " " + base + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0)
    out.append(buf.data(), n);
  const int st = pclose(pipe);
  REQUIRE(WIFEXITED(st));
  REQUIRE(WEXITSTATUS(st) == 0);
  CHECK(a.rc == 0);
  CHECK(json::parse(a.out) == json::parse(out));
}

TEST_CASE("--version exits 0") {
  CHECK(run_cli("--version").rc == 0);
}
