#include <filesystem>
#include <fstream>
#include <regex>
#include <string>
#include <thread>

#include "doctest.h"
#include "json.hpp"
#include "recourse/audit_service.hpp"
#include "recourse/http_api.hpp"
#include "support.hpp"

using namespace recourse;
using nlohmann::json;
using testsupport::cli;
using testsupport::TempDir;
namespace fs = std::filesystem;

namespace {

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

// One LSAT model shared by the explain and tables cases.
struct LsatModel {
  TempDir dir{"cli-lsat"};
  std::string path = (dir / "lsat.json").string();
  testsupport::CliResult trained;

  LsatModel() {
    trained = cli({"train", "--dataset", "lsat", "--data-dir", testsupport::data_dir().string(),
                   "--seed", "7", "--out", path});
  }
};

LsatModel& lsat() {
  static LsatModel m;
  return m;
}

std::vector<std::string> explain_args(std::vector<std::string> extra) {
  std::vector<std::string> args{"explain", "--model", lsat().path, "--data-dir",
                                testsupport::data_dir().string(), "--manifest",
                                (lsat().dir / "explain.manifest.json").string()};
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

// Score printed on the "current:" line.
double current_score(const std::string& out) {
  std::smatch m;
  REQUIRE(std::regex_search(out, m, std::regex(R"(-> score (\S+))")));
  return std::stod(m[1]);
}

}  // namespace

TEST_CASE("train lsat reports 941 weights and writes a manifest") {
  const auto& r = lsat().trained;
  REQUIRE(r.code == 0);
  CHECK(r.out.find("parameters: 941") != std::string::npos);
  REQUIRE(fs::exists(lsat().path));
  const auto manifest = read_json(lsat().path + ".manifest.json");
  CHECK(manifest.at("command") == "train");
  CHECK(manifest.at("seeds").at("train") == 7);
  CHECK(manifest.at("config").at("seed") == 7);
  CHECK(manifest.at("outputs")[0] == lsat().path);
  const auto data_file = (testsupport::data_dir() / "lsat.csv").string();
  CHECK(manifest.at("inputs").contains(data_file));
  const auto bundle = read_json(lsat().path);
  CHECK(bundle.at("manifest").at("eval_rows") == 400);
}

TEST_CASE("train xor prints a small final loss") {
  TempDir dir("cli-xor");
  const auto r = cli({"train", "--dataset", "xor", "--out", (dir / "xor.json").string()});
  REQUIRE(r.code == 0);
  std::smatch m;
  REQUIRE(std::regex_search(r.out, m, std::regex(R"(final loss: (\S+))")));
  CHECK(std::stod(m[1]) < 0.05);
  CHECK(r.out.find("parameters: 33") != std::string::npos);
}

TEST_CASE("bad schema path is an input error with no outputs") {
  TempDir dir("cli-bad");
  std::ofstream(dir / "d.csv") << "a,y\n1,2\n";
  const auto model = (dir / "m.json").string();
  const auto r = cli({"train", "--data", (dir / "d.csv").string(), "--schema",
                      (dir / "missing.json").string(), "--out", model});
  CHECK(r.code == 2);
  CHECK(r.err.find("schema") != std::string::npos);
  CHECK_FALSE(fs::exists(model));
  CHECK_FALSE(fs::exists(model + ".manifest.json"));
}

TEST_CASE("usage errors exit 2") {
  CHECK(cli({}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({"train", "--no-such-flag"}).code == 2);
  TempDir dir("cli-usage");
  CHECK(cli({"train", "--dataset", "iris", "--out", (dir / "m.json").string()}).code == 2);
  CHECK(cli({"explain", "--model", (dir / "none.json").string(), "--x", "[1]"}).code == 2);
  CHECK(cli({"train", "--help"}).code == 0);
}

TEST_CASE("explain") {
  REQUIRE(lsat().trained.code == 0);

  SUBCASE("clamped MAD-L1 never gives a fractional race") {
    for (const char* row : {"2", "3"}) {
      const auto r = cli(explain_args({"--row", row, "--metric", "l1mad",
                                       "--clamp-categoricals", "--target", "0"}));
      REQUIRE(r.code == 0);
      CHECK(r.out.find("your LSAT was") != std::string::npos);
      CHECK(r.out.find("your race was") == std::string::npos);
    }
  }
  SUBCASE("unclamped L2 shows the fractional race") {
    const auto r =
        cli(explain_args({"--row", "3", "--metric", "l2", "--target", "0", "--show-raw"}));
    REQUIRE(r.code == 0);
    CHECK(r.out.find("(not a category)") != std::string::npos);
    CHECK(r.out.find("note: protected attribute 'race' changes") != std::string::npos);
  }
  SUBCASE("target equal to the current score") {
    const auto probe = cli(explain_args({"--x", "[3.1, 32.3, 1]", "--target", "0"}));
    const double score = current_score(probe.out);
    const auto r = cli(explain_args({"--x", "{\"GPA\": 3.1, \"LSAT\": 32.3, \"race\": \"black\"}",
                                     "--target", std::to_string(score)}));
    REQUIRE(r.code == 0);
    CHECK(r.out.find("No change needed") != std::string::npos);
  }
  SUBCASE("JSON output and several counterfactuals") {
    const auto out = (lsat().dir / "answer.json").string();
    const auto r = cli(explain_args({"--row", "1", "--target", "0", "--diverse", "3",
                                     "--restarts", "8", "--out", out}));
    REQUIRE(r.code == 0);
    const auto answer = read_json(out);
    CHECK(answer.at("status") == "ok");
    CHECK(answer.at("explanations").size() >= 1);
    CHECK(answer.at("explanations").size() <= 3);
    CHECK(r.out.find("1. If your") != std::string::npos);
  }
  SUBCASE("locking everything cannot converge") {
    const auto r = cli(explain_args({"--x", "[3.1, 32.3, 1]", "--target", "5", "--lock", "GPA",
                                     "--lock", "LSAT", "--lock", "race"}));
    CHECK(r.code == 3);
    CHECK(r.err.find("no counterfactual found") != std::string::npos);
  }
  SUBCASE("exactly one point selector") {
    CHECK(cli(explain_args({"--target", "0"})).code == 2);
    CHECK(cli(explain_args({"--row", "0", "--x", "[3, 30, 0]", "--target", "0"})).code == 2);
    CHECK(cli(explain_args({"--row", "100000", "--target", "0"})).code == 2);
    CHECK(cli(explain_args({"--x", "[3, 30, 2]", "--target", "0"})).code == 2);
  }
}

TEST_CASE("config files fill options that flags did not set") {
  REQUIRE(lsat().trained.code == 0);
  const auto cfg = lsat().dir / "cfg.json";
  std::ofstream(cfg) << R"({"seed": 3, "diverse": 2, "metric": "l2norm", "target": 0})";
  const auto manifest = lsat().dir / "cfg.manifest.json";
  const auto r = cli({"explain", "--model", lsat().path, "--data-dir",
                      testsupport::data_dir().string(), "--row", "0", "--config", cfg.string(),
                      "--seed", "11", "--manifest", manifest.string()});
  REQUIRE(r.code == 0);
  const auto m = read_json(manifest);
  CHECK(m.at("config").at("seed") == 11);
  CHECK(m.at("config").at("diverse") == 2);
  CHECK(m.at("config").at("metric") == "l2norm");
  CHECK(m.at("config_file") == cfg.string());
  CHECK(m.at("inputs").contains(cfg.string()));

  std::ofstream(cfg) << R"({"sed": 3})";
  CHECK(cli({"explain", "--model", lsat().path, "--row", "0", "--config", cfg.string()}).code ==
        2);
}

TEST_CASE("tables") {
  REQUIRE(lsat().trained.code == 0);
  const auto base = std::vector<std::string>{"tables", "--model", lsat().path, "--data-dir",
                                             testsupport::data_dir().string(), "--target", "0"};
  auto with = [&](std::vector<std::string> extra) {
    auto a = base;
    a.insert(a.end(), extra.begin(), extra.end());
    return a;
  };

  auto r = cli(with({"--rows", "0", "--manifest", (lsat().dir / "t0.json").string()}));
  CHECK(r.code == 0);
  CHECK(r.out.find("n/a") != std::string::npos);

  const auto csv = (lsat().dir / "t.csv").string();
  const auto out = (lsat().dir / "t.json").string();
  r = cli(with({"--rows", "3", "--metrics", "l1mad", "--clamp-categoricals", "--csv", csv,
                "--out", out}));
  CHECK(r.code == 0);
  CHECK(r.out.find("== l1mad ==") != std::string::npos);
  CHECK(r.out.find("== l2 ==") == std::string::npos);
  CHECK(r.out.find("median changed features") != std::string::npos);
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header == "metric,row,converged,changed_count,distance,score,GPA,LSAT,race");
  const auto blocks = read_json(out);
  REQUIRE(blocks.at("blocks").size() == 1);
  CHECK(blocks.at("blocks")[0].at("metric") == "l1mad");
  CHECK(blocks.at("blocks")[0].at("rows").size() == 3);

  r = cli(with({"--rows", "2", "--metrics", "l2,l1mad", "--clamp-categoricals", "--manifest",
                (lsat().dir / "t2.json").string()}));
  CHECK(r.code == 0);
  CHECK(r.out.find("== l2 ==") < r.out.find("== l1mad =="));

  CHECK(cli(with({"--metrics", "cosine"})).code == 2);
}

TEST_CASE("appendix1") {
  TempDir dir("cli-app");
  const auto out_dir = (dir / "a1").string();
  const auto r = cli({"appendix1", "--out-dir", out_dir});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("opposite-sign slopes") != std::string::npos);
  for (const char* f : {"curve.csv", "fits.csv", "marker.csv", "summary.json"}) {
    CHECK(fs::exists(fs::path(out_dir) / f));
  }
  const auto summary = read_json(fs::path(out_dir) / "summary.json");
  CHECK(summary.at("opposite_sign_pairs").size() >= 1);
  CHECK(fs::exists(fs::path(out_dir) / "summary.json.manifest.json"));
}

TEST_CASE("serve on an occupied port") {
  TempDir dir("cli-serve");
  AuditService svc(ServiceConfig{dir / "reg"});
  HttpApi api(svc);
  const int port = api.bind("127.0.0.1", 0);
  const auto r = cli({"serve", "--registry", (dir / "reg2").string(), "--port",
                      std::to_string(port), "--manifest", (dir / "m.json").string()});
  CHECK(r.code == 2);
  CHECK_FALSE(fs::exists(dir / "m.json"));
}
