// End-to-end tests of the command-line binary.  The path to the built
// executable is supplied through the TPSEL_CLI environment variable.

#include <catch2/catch_amalgamated.hpp>

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

using json = nlohmann::json;

namespace {

std::string cli_path() {
  const char* p = std::getenv("TPSEL_CLI");
  REQUIRE(p != nullptr);
  return p;
}

int run(const std::string& args) {
  const std::string cmd = cli_path() + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json run_json(const std::string& args, const std::string& out) {
  REQUIRE(run(args + " --output " + out) == 0);
  return json::parse(slurp(out));
}

const std::string dir = "cli_tmp_";

}  // namespace

TEST_CASE("simulate is seed-deterministic and writes a parseable CSV") {
  const std::string base =
      "simulate --scenario iid --base laplace --alpha -0.5 --vartheta 4 "
      "--n 60 --p 3 --rho 0.5 --theta 0.8,0,1.2";
  REQUIRE(run(base + " --seed 7 --output " + dir + "a.csv") == 0);
  REQUIRE(run(base + " --seed 7 --output " + dir + "b.csv") == 0);
  REQUIRE(run(base + " --seed 8 --output " + dir + "c.csv") == 0);
  const std::string a = slurp(dir + "a.csv");
  CHECK(a == slurp(dir + "b.csv"));
  CHECK(a != slurp(dir + "c.csv"));
  CHECK(a.substr(0, a.find('\n')) == "y,x1,x2,x3");
}

TEST_CASE("select produces coherent posterior summaries") {
  REQUIRE(run("simulate --scenario iid --base normal --vartheta 1 --n 80 "
              "--p 3 --theta 1.5,0,1.0 --seed 11 --output " + dir + "d.csv") == 0);
  const json doc = run_json(
      "select --input " + dir + "d.csv --family infer --prior mom",
      dir + "sel.json");
  double tot = 0.0;
  for (const auto& m : doc["models"]) tot += m["posterior_prob"].get<double>();
  CHECK(tot == Catch::Approx(1.0).margin(1e-8));
  double ftot = 0.0;
  for (const auto& [k, v] : doc["family_probs"].items()) ftot += v.get<double>();
  CHECK(ftot == Catch::Approx(1.0).margin(1e-8));
  CHECK(doc["inclusion_probs"]["x1"].get<double>() > 0.9);
  CHECK(doc["inclusion_probs"]["x3"].get<double>() > 0.9);
  CHECK(doc["inclusion_probs"]["x2"].get<double>() < 0.5);
  CHECK(doc["inclusion_probs"]["(Intercept)"].get<double>() ==
        Catch::Approx(1.0));  // forced in by default
  CHECK(doc["config"]["seed"].get<long>() == 12345);
}

TEST_CASE("quantile mode at tau=0.5 matches the symmetric Laplace family") {
  REQUIRE(run("simulate --scenario iid --base laplace --alpha -0.4 "
              "--vartheta 2 --n 70 --p 3 --theta 1.0,0,0.6 --seed 21 "
              "--output " + dir + "e.csv") == 0);
  const json ql = run_json(
      "select --input " + dir + "e.csv --family quantile --tau 0.5 --prior mom",
      dir + "q.json");
  const json lp = run_json(
      "select --input " + dir + "e.csv --family laplace --prior mom",
      dir + "l.json");
  const json& qi = ql["by_tau"].begin().value()["inclusion_probs"];
  for (const auto& [k, v] : lp["inclusion_probs"].items())
    CHECK(qi[k].get<double>() == Catch::Approx(v.get<double>()).margin(1e-10));
}

TEST_CASE("fit reports an MLE consistent with the generating model") {
  REQUIRE(run("simulate --scenario iid --base laplace --alpha -0.5 "
              "--vartheta 2 --n 4000 --p 2 --theta 1.0,-0.5 --seed 31 "
              "--output " + dir + "f.csv") == 0);
  const json doc = run_json(
      "fit --input " + dir + "f.csv --family twopiece_laplace --type mle",
      dir + "fit.json");
  CHECK(doc["converged"].get<bool>());
  CHECK(doc["theta"]["x1"].get<double>() == Catch::Approx(1.0).margin(0.1));
  CHECK(doc["theta"]["x2"].get<double>() == Catch::Approx(-0.5).margin(0.1));
  CHECK(doc["alpha"].get<double>() == Catch::Approx(-0.5).margin(0.1));
  CHECK(doc["vartheta"].get<double>() == Catch::Approx(2.0).epsilon(0.2));
}

TEST_CASE("evidence agrees between subcommand and in-process computation") {
  REQUIRE(run("simulate --scenario iid --base normal --vartheta 1 --n 50 "
              "--p 2 --theta 0.8,0 --seed 41 --output " + dir + "g.csv") == 0);
  const json lap = run_json(
      "evidence --input " + dir + "g.csv --include x1 --family normal "
      "--prior mom", dir + "ev1.json");
  const json imp = run_json(
      "evidence --input " + dir + "g.csv --include x1 --family normal "
      "--prior mom --evidence importance --importance-b 20000 --seed 5",
      dir + "ev2.json");
  CHECK(lap["method"] == "laplace");
  CHECK(imp["method"] == "importance");
  CHECK(lap["log_marginal"].get<double>() ==
        Catch::Approx(imp["log_marginal"].get<double>()).margin(0.2));
  // Included set: forced intercept plus x1.
  CHECK(lap["variables"].size() == 2);
}

TEST_CASE("replicate writes experiment tables") {
  REQUIRE(run("replicate --experiment corollary1 --reps 3 --seed 1 "
              "--output " + dir + "rep.csv") == 0);
  const std::string body = slurp(dir + "rep.csv");
  CHECK(body.rfind("seed,theta_laplace,theta_ls", 0) == 0);
  CHECK(body.find("variance_ratio") != std::string::npos);
  CHECK(run("replicate --experiment nosuch --output " + dir + "x.csv") == 1);
}

TEST_CASE("exit codes distinguish usage, data, and numerical errors") {
  CHECK(run("select --input definitely_missing.csv") == 2);
  CHECK(run("select --totally-bogus-flag") == 1);
  CHECK(run("nonexistent-subcommand") == 1);
  CHECK(run("select") == 1);  // missing required --input
  // Unknown response column is a data error.
  REQUIRE(run("simulate --scenario iid --base normal --n 20 --p 2 "
              "--theta 0,0 --seed 2 --output " + dir + "h.csv") == 0);
  CHECK(run("select --input " + dir + "h.csv --response zz") == 2);
  // Bad family name is a usage error.
  CHECK(run("select --input " + dir + "h.csv --family bogus") == 1);
  // Quantile mode without --tau is a usage error.
  CHECK(run("select --input " + dir + "h.csv --family quantile") == 1);
  // Rank-deficient design (duplicated column) is a data error.
  std::ofstream bad(dir + "bad.csv");
  bad << "y,x1,x2\n";
  for (int i = 0; i < 12; ++i)
    bad << 0.1 * i << "," << i << "," << i << "\n";
  bad.close();
  CHECK(run("fit --input " + dir + "bad.csv --family normal") == 2);
}
