#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "impatience/cli.hpp"
#include "impatience/csv.hpp"
#include "impatience/log_io.hpp"
#include "impatience/policy_io.hpp"

using namespace impatience;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path tmp(const std::string& name) {
  const fs::path dir(IMPATIENCE_TEST_TMP);
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path write_config(const std::string& name, const std::string& json) {
  const auto p = tmp(name);
  std::ofstream(p) << json;
  return p;
}

CsvTable table_of(const std::string& text) {
  std::istringstream in(text);
  return read_csv(in);
}

}  // namespace

TEST_CASE("usage errors") {
  CHECK(run({}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"marginals"}).code == 1);  // --log is required
}

TEST_CASE("missing config names the path") {
  const auto r = run({"simulate", "--config", "/no/such/dir/cfg.json", "--out", tmp("x.jsonl").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("/no/such/dir/cfg.json") != std::string::npos);
}

TEST_CASE("simulate is deterministic and writes one line per user") {
  const auto a = tmp("a.jsonl"), b = tmp("b.jsonl");
  REQUIRE(run({"simulate", "--seed", "5", "--out", a.string()}).code == 0);
  REQUIRE(run({"simulate", "--seed", "5", "--threads", "3", "--out", b.string()}).code == 0);
  const auto bytes = slurp(a);
  CHECK(bytes == slurp(b));
  CHECK(std::count(bytes.begin(), bytes.end(), '\n') == 100001);
  CHECK(read_log(a).provenance.tool.find("impatience") == 0);
}

TEST_CASE("pipeline") {
  const auto cfg = write_config("small.json", R"({"simulation":{"n_users":20000},"experiment":{"resamples":100}})");
  const auto log = tmp("small.jsonl");
  const auto marg = tmp("marginals.csv");
  const auto pol = tmp("policy.json");
  REQUIRE(run({"simulate", "--config", cfg.string(), "--out", log.string(), "--trace", tmp("trace.csv").string()}).code == 0);

  const auto m = run({"marginals", "--config", cfg.string(), "--log", log.string()});
  REQUIRE(m.code == 0);
  const auto t = table_of(m.out);
  CHECK(t.rows.size() == 6);
  CHECK(t.comment("config_hash").has_value());
  CHECK(t.comment("source_log_hash").has_value());
  CHECK(t.comment("value_metric") == "value_predicted");
  CHECK(run({"marginals", "--config", cfg.string(), "--log", log.string()}).out == m.out);
  std::ofstream(marg) << m.out;

  const auto o = run({"optimize", "--config", cfg.string(), "--marginals", marg.string(), "--cap", "0.2", "--out",
                      pol.string()});
  REQUIRE(o.code == 0);
  const auto pf = read_policy(pol);
  CHECK(pf.policy.cap_delta == 0.2);
  CHECK(pf.policy.source_log_hash == *t.comment("source_log_hash"));
  CHECK(pf.predicted_dvalue.value() > 0.0);

  const auto e = run({"offline-eval", "--config", cfg.string(), "--log", log.string(), "--policy", pol.string()});
  REQUIRE(e.code == 0);
  CHECK(table_of(e.out).rows.size() == 1);
  const auto s = run({"offline-eval", "--config", cfg.string(), "--log", log.string(), "--sweep", "0,0.1,0.2"});
  REQUIRE(s.code == 0);
  const auto st = table_of(s.out);
  REQUIRE(st.rows.size() == 3);
  CHECK(st.rows[0][st.column("dvalue_exact_ci_low")] == "0");
  CHECK(run({"offline-eval", "--log", log.string(), "--policy", pol.string(), "--sweep", "0.1"}).code == 1);

  const auto ab = run({"ab-simulate", "--config", cfg.string(), "--policy", pol.string(), "--users", "20000"});
  REQUIRE(ab.code == 0);
  const auto at = table_of(ab.out);
  REQUIRE(at.rows.size() == 2);
  CHECK(at.rows[0][at.column("variant")] == "fixed");
  CHECK(at.rows[1][at.column("variant")] == "dynamic");
}

TEST_CASE("one-bucket log gives a single marginals row") {
  const auto cfg = write_config("one.json", R"({"simulation":{"n_users":3000,"buckets":[0]},"experiment":{"resamples":100}})");
  const auto log = tmp("one.jsonl");
  REQUIRE(run({"simulate", "--config", cfg.string(), "--out", log.string()}).code == 0);
  const auto m = run({"marginals", "--config", cfg.string(), "--log", log.string()});
  REQUIRE(m.code == 0);
  CHECK(table_of(m.out).rows.size() == 1);
}

TEST_CASE("infeasible reallocation exits with 2") {
  const auto marg = tmp("neg.csv");
  std::ofstream(marg) << "cluster,label,n_users,dcost,dvalue,mroi\n0,0,10,-1,2,-2\n1,1,10,-2,1,-0.5\n";
  const auto r = run({"optimize", "--marginals", marg.string(), "--out", tmp("neg.json").string()});
  CHECK(r.code == 2);
  CHECK_FALSE(r.err.empty());
}

TEST_CASE("weight profile and two auctions") {
  const auto w = run({"weight-profile", "--alphas", "0.8,1,1.2", "--samples", "1000"});
  REQUIRE(w.code == 0);
  CHECK(table_of(w.out).rows.size() == 3);

  const auto t = run({"two-auctions", "--value", "100", "--step", "0.5"});
  REQUIRE(t.code == 0);
  const auto tt = table_of(t.out);
  CHECK(tt.comment("best_first_bid") == "50");
  CHECK(tt.rows.size() == 201);
  const auto u = run({"two-auctions", "--second", "constant:1000", "--step", "0.5"});
  CHECK(table_of(u.out).comment("best_first_bid") == "100");
  CHECK(run({"two-auctions", "--step", "0"}).code == 1);
}

TEST_CASE("fit-ctr") {
  const auto cfg = write_config("fit.json", R"({"simulation":{"n_users":5000}})");
  const auto r = run({"fit-ctr", "--config", cfg.string()});
  REQUIRE(r.code == 0);
  const auto t = table_of(r.out);
  CHECK(t.rows.size() == 12);

  const auto ev = tmp("events.tsv");
  std::ofstream(ev) << "0.1\t0\t1\n0.2\t1\t0\n-0.3\t2\t0\n0.4\t0\t1\n0.0\t3\t0\n";
  const auto f = run({"fit-ctr", "--events", ev.string(), "--delimiter", "tab", "--no-header", "--features", "0",
                      "--fatigue-column", "1", "--label-column", "2", "--l2", "0.1"});
  CHECK(f.code == 0);

  const auto capped = write_config("capped.json", R"({"predictor":{"max_iters":1}})");
  const auto nc = run({"fit-ctr", "--config", capped.string(), "--events", ev.string(), "--delimiter", "tab",
                       "--no-header", "--features", "0", "--fatigue-column", "1", "--label-column", "2"});
  CHECK(nc.code == 2);
}
