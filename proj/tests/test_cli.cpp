#include "cltrace/experiments.hpp"

#include <doctest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

struct Run {
  int code;
  std::string out;
};

// stderr is folded into the output only when `with_stderr` is set
Run run(const std::string& args, bool with_stderr = false) {
  const std::string cmd = std::string(CLTRACE_CLI) + " " + args + (with_stderr ? " 2>&1" : " 2>/dev/null");
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  std::array<char, 4096> buf{};
  while (std::size_t got = std::fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), got);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "cltrace_cli_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("laplacian") {
  auto r = run("laplacian --group u --monomial p2");
  CHECK(r.code == 0);
  CHECK(r.out == "-2*n*p[2] - 2*p[1,1]\n");
  CHECK(run("laplacian --group so --monomial p1").out == "-(1/2)*(n-1)*p[1]\n");
  auto bad = run("laplacian --group u --monomial 'p1*p1*p1'", true);
  CHECK(bad.code == 1);
  CHECK(bad.out.find("degree") != std::string::npos);
}

TEST_CASE("expect") {
  CHECK(run("expect --group u --poly 'p2*~p2'").out == "2 (valid for n >= 2)\n");
  CHECK(run("expect --group sp --poly p2").out == "-1 (valid for n >= 1)\n");
  auto below = run("expect --group so --poly p2 --n 2");
  CHECK(below.code == 1);
  auto forced = run("expect --group so --poly p2 --n 2 --force", true);
  CHECK(forced.code == 0);
  CHECK(forced.out.find("not guaranteed") != std::string::npos);
  CHECK(forced.out.find("warning") != std::string::npos);
  CHECK(run("expect --group so --poly p2 --n 3").out == "1 (n = 3, valid for n >= 3)\n");
}

TEST_CASE("usage errors exit with 2") {
  CHECK(run("").code == 2);
  CHECK(run("frobnicate").code == 2);
  CHECK(run("laplacian --group u --monomial p2 --colour red").code == 2);
  CHECK(run("expect --group gl --poly p1").code == 2);
  CHECK(run("expect --group u --poly 'p1 +'").code == 2);
  CHECK(run("sample --group u --n 3 --count 2").code == 2);  // no seed
  CHECK(run("bound --group u --d 1 --r 1").code == 2);
}

TEST_CASE("bound") {
  auto r = run("bound --group u --d 1 --r 1 --n 10");
  CHECK(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["bound"].get<double>() == doctest::Approx(0.112838).epsilon(1e-5));
  CHECK(j["thresholds_ok"] == true);
  CHECK(run("bound --group so --d 2 --r 2 --n 8").code == 1);
  CHECK(nlohmann::json::parse(run("bound --group so --d 2 --r 2 --n 8 --override").out)["thresholds_ok"] == false);
  auto csv = run("bound --group sp --d 2 --r 1 --n 10 --format csv");
  CHECK(std::count(csv.out.begin(), csv.out.end(), '\n') == 2);
  const auto path = scratch("bound.json");
  auto summary = run("bound --group u --d 1 --r 1 --n 10 --out " + path.string());
  CHECK(summary.out.rfind("command=bound ", 0) == 0);
  CHECK(nlohmann::json::parse(slurp(path))["n"] == 10);
}

TEST_CASE("sample") {
  auto r = run("sample --group so --n 9 --count 3 --seed 1");
  CHECK(r.code == 0);
  std::istringstream in(r.out);
  std::string line;
  int rows = -1;
  while (std::getline(in, line)) {
    if (rows >= 0) CHECK(line.substr(line.size() - 4) == "pass");
    ++rows;
  }
  CHECK(rows == 3);
  CHECK(run("sample --group so --n 9 --count 3 --seed 1").out == r.out);
  CHECK(run("sample --group so --n 9 --count 3 --seed 2").out != r.out);
  const auto path = scratch("samples.csv");
  auto s = run("sample --group sp --n 2 --count 4 --seed 3 --d 3 --out " + path.string());
  CHECK(s.out.find("diagnostics=pass") != std::string::npos);
  CHECK(slurp(path).rfind("sample,re_p1,im_p1,re_p2,im_p2,re_p3,im_p3,", 0) == 0);
}

TEST_CASE("study") {
  const auto cfg = scratch("study.json");
  std::ofstream(cfg) << R"({"study": "clt", "group": "u", "d": 2, "r": 2, "n": [6, 12], "samples": 300,
                            "covariance": true, "wasserstein": false})";
  auto missing = run("study --config " + cfg.string(), true);
  CHECK(missing.code == 2);
  CHECK(missing.out.find("'seed'") != std::string::npos);

  const auto a = scratch("a.csv"), b = scratch("b.csv");
  auto ra = run("study --config " + cfg.string() + " --seed 7 --out " + a.string());
  auto rb = run("study --config " + cfg.string() + " --seed 7 --workers 3 --out " + b.string());
  CHECK(ra.code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(ra.out.find("status=pass") != std::string::npos);
  for (std::istringstream in(ra.out); !in.eof();) {
    std::string line;
    std::getline(in, line);
    if (!line.empty()) CHECK(line.rfind("study=clt ", 0) == 0);
  }

  const auto bad = scratch("bad.json");
  std::ofstream(bad) << R"({"study": "clt", "n": 6, "samples": 10, "seed": 1, "colour": "red"})";
  auto rbad = run("study --config " + bad.string(), true);
  CHECK(rbad.code == 2);
  CHECK(rbad.out.find("'colour'") != std::string::npos);
  std::ofstream(bad) << "{ not json";
  CHECK(run("study --config " + bad.string()).code == 2);
  CHECK(run("study --config /nonexistent/file.json").code == 2);
}

TEST_CASE("a failing gate exits with 3") {
  // a W1 decay requirement that cannot hold with three points per rank
  const auto cfg = scratch("fail.json");
  std::ofstream(cfg) << R"({"study": "clt", "group": "u", "d": 1, "r": 1, "n": [4, 8], "samples": 3,
                            "covariance": false, "max_slope": -100})";
  CHECK(run("study --config " + cfg.string() + " --seed 1").code == 3);
}

TEST_CASE("shipped configs parse") {
  for (const auto& entry : std::filesystem::directory_iterator(CLTRACE_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    const auto doc = nlohmann::json::parse(slurp(entry.path()));
    CHECK_NOTHROW(cltrace::StudyConfig::from_json(doc));
  }
}
