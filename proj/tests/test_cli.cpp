#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "nclil/io.hpp"

using namespace nclil;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "nclil");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("nclil_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const std::string kFixture = std::string(NCLIL_TEST_DATA) + "/selftest_fixture.json";

}  // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"verify"}).code == kExitUsage);
  CHECK(run({"verify", "gt", "--count", "x"}).code == kExitUsage);
  CHECK(run({"verify", "gt", "--bogus"}).code == kExitUsage);
  CHECK(run({"verify", "expineq", "--mode", "sideways"}).code == kExitUsage);
  CHECK(run({"verify", "gt", "--dims", "6..2"}).code == kExitUsage);
  CHECK(run({"--help"}).code == kExitOk);
}

TEST_CASE("malformed or mistyped configs exit 2") {
  const fs::path dir = scratch("config");
  auto config = [&](const std::string& body) {
    const std::string p = (dir / "c.json").string();
    write_file(p, body);
    return run({"lil", "tensor", "--config", p});
  };
  CHECK(config("{\"steps\": ").code == kExitUsage);
  CHECK(config("[1, 2]").code == kExitUsage);
  CHECK(config("{\"stepz\": 3}").code == kExitUsage);
  CHECK(config("{\"steps\": \"3\"}").code == kExitUsage);
  CHECK(config("{\"steps\": -3}").code == kExitUsage);
  CHECK(config("{\"commutative\": 1}").code == kExitUsage);
  CHECK(run({"lil", "tensor", "--config", (dir / "missing.json").string()}).code == kExitUsage);

  const Result ok = config("{\"steps\": 3, \"seed\": 4}");
  CHECK(ok.code == kExitOk);
  CHECK(ok.out.rfind("# lil-csv v1\n", 0) == 0);
}

TEST_CASE("flags override config values") {
  const fs::path dir = scratch("override");
  write_file((dir / "c.json").string(), "{\"steps\": 3}");
  const Result r = run({"lil", "tensor", "--config", (dir / "c.json").string(), "--steps", "5", "--json"});
  REQUIRE(r.code == kExitOk);
  const Json j = Json::parse(r.out);
  CHECK(j["config"]["steps"] == 5);
  CHECK(j["reports"][0]["steps"] == 5);
}

TEST_CASE("verify families exit 0 when every verdict matches") {
  CHECK(run({"verify", "gt", "--count", "20", "--dims", "2..3"}).code == kExitOk);
  CHECK(run({"verify", "igt", "--count", "3", "--dims", "2..2"}).code == kExitOk);
  CHECK(run({"verify", "scalars"}).code == kExitOk);
  CHECK(run({"verify", "chebyshev", "--count", "10", "--dims", "2..3"}).code == kExitOk);
  CHECK(run({"verify", "expineq", "--count", "4"}).code == kExitOk);

  // the as-stated counterexample is an expected failure, so the run is green
  const Result as = run({"verify", "expineq", "--mode", "as-stated", "--json"});
  CHECK(as.code == kExitOk);
  const Json j = Json::parse(as.out);
  CHECK(j["matched"] == true);
  for (const auto& c : j["results"][0]["checks"]) {
    CHECK(c["expected"] == "fail");
    CHECK(c["observed"] == "fail");
  }
}

TEST_CASE("selftest passes and checks fixtures") {
  const Result r = run({"selftest", "--samples", "8", "--fixture", kFixture});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("fixture.two-block.mu") != std::string::npos);

  const fs::path dir = scratch("fixture");
  std::string body = read_file(kFixture);
  body.replace(body.find("\"op_norm\": 3"), 12, "\"op_norm\": 4");
  write_file((dir / "bad.json").string(), body);
  const Result bad = run({"selftest", "--samples", "4", "--fixture", (dir / "bad.json").string()});
  CHECK(bad.code == kExitMismatch);
  CHECK(bad.err.find("fixture.two-block.op-norm") != std::string::npos);

  write_file((dir / "broken.json").string(), "{\"id\": \"x\", \"blocks\": [{\"dim\": 2, \"weight\": 1}], \"x\": [[[1]]]}");
  CHECK(run({"selftest", "--samples", "4", "--fixture", (dir / "broken.json").string()}).code == kExitUsage);
}

TEST_CASE("lil runs are byte-identical across invocations") {
  const std::vector<std::string> args{"lil", "classical", "--atoms", "64", "--steps", "3000", "--seed", "3,1,2"};
  const Result a = run(args), b = run(args);
  REQUIRE(a.code == kExitOk);
  CHECK(a.out == b.out);
  // rows follow the seed list order
  CHECK(a.out.find("\n3,") < a.out.find("\n1,"));
  CHECK(a.out.find("\n1,") < a.out.find("\n2,"));

  const Result g1 = run({"lil", "gue", "--dim", "8", "--steps", "50", "--json"});
  const Result g2 = run({"lil", "gue", "--dim", "8", "--steps", "50", "--json"});
  CHECK(g1.code == kExitOk);
  CHECK(g1.out == g2.out);

  const Result h1 = run({"lil", "hw", "--steps", "100"}), h2 = run({"lil", "hw", "--steps", "100"});
  CHECK(h1.code == kExitOk);
  CHECK(h1.out.rfind("# hw-csv v1\n", 0) == 0);
  CHECK(h1.out == h2.out);
}

TEST_CASE("manifest round-trip reproduces outputs") {
  const fs::path one = scratch("manifest1"), two = scratch("manifest2");
  REQUIRE(run({"lil", "tensor", "--steps", "5", "--seed", "9", "--out", one.string()}).code == kExitOk);
  const Json m = Json::parse(read_file((one / "manifest.json").string()));
  const RunManifest manifest = RunManifest::from_json(m);
  CHECK(manifest.hash_matches());
  CHECK(manifest.command == "lil tensor");
  CHECK(manifest.seeds == std::vector<std::uint64_t>{9});
  CHECK(manifest.outputs == std::vector<std::string>{"lil_tensor.csv", "summary.json"});

  REQUIRE(run({"lil", "tensor", "--config", (one / "manifest.json").string(), "--out", two.string()}).code == kExitOk);
  CHECK(read_file((one / "lil_tensor.csv").string()) == read_file((two / "lil_tensor.csv").string()));
  CHECK(read_file((one / "summary.json").string()) == read_file((two / "summary.json").string()));
  CHECK(Json::parse(read_file((two / "manifest.json").string()))["config_hash"] == m["config_hash"]);

  // a tampered manifest or one from another command is refused
  Json tampered = m;
  tampered["config"]["steps"] = 6;
  write_file((two / "tampered.json").string(), tampered.dump());
  CHECK(run({"lil", "tensor", "--config", (two / "tampered.json").string()}).code == kExitUsage);
  CHECK(run({"lil", "gue", "--config", (one / "manifest.json").string()}).code == kExitUsage);
}

TEST_CASE("config hash ignores key order") {
  const Json a = Json::parse("{\"a\": 1, \"b\": [2, 3]}"), b = Json::parse("{\"b\": [2, 3], \"a\": 1}");
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  CHECK(config_hash(a) != config_hash(Json::parse("{\"a\": 2, \"b\": [2, 3]}")));
}

TEST_CASE("shipped config schemas match the tool") {
  const Result r = run({"schema"});
  REQUIRE(r.code == kExitOk);
  const Json live = Json::parse(r.out);
  CHECK(live == Json::parse(read_file(std::string(NCLIL_DOCS) + "/config-schemas.json")));
  for (const char* cmd : {"selftest", "verify gt", "verify igt", "verify expineq", "verify scalars", "verify chebyshev",
                          "lil classical", "lil tensor", "lil gue", "lil hw"}) {
    REQUIRE(live.contains(cmd));
    CHECK(live[cmd]["additionalProperties"] == false);
  }
}
