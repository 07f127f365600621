#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "efos/config.hpp"
#include "json.hpp"

using namespace efos;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "efos_cli_test";
const std::string kSmall =
    " --set synth.honest=600 --set synth.efos=40 --set synth.rings=6 --set synth.months=2015:3 --set n_trees=20";

struct Run {
  int code = -1;
  std::string err;
};

Run efos_cli(const std::string& args, const std::string& env = "") {
  const auto err_path = kRoot / "stderr.txt";
  fs::create_directories(kRoot);
  const std::string cmd = env + " \"" EFOS_CLI_PATH "\" " + args + " > /dev/null 2> \"" + err_path.string() + "\"";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(err_path);
  std::stringstream s;
  s << in.rdbuf();
  r.err = s.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t data_lines(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) ++n;
  return n == 0 ? 0 : n - 1;
}

nlohmann::json last_json_line(const std::string& text) {
  std::istringstream in(text);
  std::string line, last;
  while (std::getline(in, line))
    if (!line.empty() && line.front() == '{') last = line;
  return nlohmann::json::parse(last);
}

}  // namespace

TEST_CASE("config text sets values and resolves relative paths") {
  RunConfig c;
  apply_config_text(c,
                    "# desk run\n"
                    "seed = 7\n"
                    "transactions = data/tx.csv   # trailing comment\n"
                    "years = 2015-2017\n"
                    "scenarios = pca\n"
                    "min_tx_scope = node\n"
                    "close_mode = out_only\n"
                    "synth.months = 2016:4\n"
                    "\n",
                    "/base");
  CHECK(c.seed == 7);
  CHECK(c.transactions == fs::path("/base/data/tx.csv"));
  CHECK(c.years == std::vector<int>{2015, 2016, 2017});
  CHECK(c.scenarios == std::vector<Transform>{Transform::pca});
  CHECK(c.yearly.scope == MinTxScope::node);
  CHECK(c.proximity.close == CloseMode::out_only);
  CHECK(c.synth.months.size() == 4);
  CHECK(c.synth.months.front() == MonthKey{2016, 1});

  apply_setting(c, "years", "2015,2018");
  CHECK(c.years == std::vector<int>{2015, 2018});
}

TEST_CASE("bad settings are rejected") {
  RunConfig c;
  for (auto [k, v] : std::vector<std::pair<std::string, std::string>>{
           {"nope", "1"}, {"seed", "abc"}, {"close_mode", "sideways"}, {"years", "2017-2015"}, {"n_trees", "-1"}}) {
    CAPTURE(k);
    try {
      apply_setting(c, k, v);
      FAIL("accepted " << k << " = " << v);
    } catch (const Error& e) {
      CHECK(e.code() == "bad_config");
    }
  }
  CHECK_THROWS_AS(apply_config_text(c, "seed 5\n"), Error);
  RunConfig q;
  q.quartile = 1.5;
  CHECK_THROWS_AS(q.validate(), Error);
}

TEST_CASE("config hash tracks result-relevant settings only") {
  RunConfig a, b;
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  b.threads = 8;
  b.output_dir = "elsewhere";
  CHECK(config_hash(a) == config_hash(b));
  b.seed = 43;
  CHECK(config_hash(a) != config_hash(b));

  // canonical settings reproduce the configuration
  RunConfig c;
  apply_setting(c, "theta_sigma", "0.7");
  apply_setting(c, "synth.rings", "3");
  RunConfig d;
  for (const auto& [k, v] : settings(c)) apply_setting(d, k, v);
  CHECK(config_hash(c) == config_hash(d));
  CHECK(settings(c) == settings(d));
}

TEST_CASE("cli flag errors exit 2 with a json message") {
  auto r = efos_cli("validate --no-such-flag");
  CHECK(r.code == 2);
  CHECK(last_json_line(r.err)["exit_code"] == 2);

  r = efos_cli("generate -q -o \"" + (kRoot / "x").string() + "\" --set bogus=1");
  CHECK(r.code == 2);
  CHECK(last_json_line(r.err)["error"] == "bad_config");

  r = efos_cli("validate -q --format xml");
  CHECK(r.code == 2);
}

TEST_CASE("cli runtime failures exit 1") {
  const auto r = efos_cli("validate -q --transactions \"" + (kRoot / "missing.csv").string() + "\"");
  CHECK(r.code == 1);
  CHECK(last_json_line(r.err)["exit_code"] == 1);
}

TEST_CASE("validate lists malformed rows and still succeeds") {
  const auto dir = kRoot / "validate";
  fs::remove_all(dir);
  REQUIRE(efos_cli("generate -q -o \"" + dir.string() + "\"" + kSmall).code == 0);
  {
    std::ofstream tx(dir / "transactions.csv", std::ios::app);
    tx << "A1,B2,2015,3,income,1,1000.00,160.00,900.00,0.00\n"
          "A1,B2,2015,13,income,1,1.00,0.00,1.00,0.00\n"
          "A1,B2,2015,3,income,x,1.00,0.00,1.00,0.00\n";
  }
  const auto r = efos_cli("validate -q -o \"" + dir.string() + "\"");
  CHECK(r.code == 0);
  CHECK(data_lines(dir / "diagnostics.csv") == 3);
  const auto summary = nlohmann::json::parse(slurp(dir / "validation_summary.json"));
  CHECK(summary["diagnostics"] == 3);
  CHECK(fs::exists(dir / "diagnostics.csv.meta.json"));
}

TEST_CASE("pipeline from a config file is repeatable") {
  const auto dir = kRoot / "pipe";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream conf(dir / "desk.conf");
    conf << "seed = 11\nsynth.honest = 600\nsynth.efos = 40\nsynth.rings = 6\nsynth.months = 2015:3\n"
            "n_trees = 20\n";
  }
  const auto conf = (dir / "desk.conf").string();
  REQUIRE(efos_cli("generate -q -c \"" + conf + "\"", "EFOS_OUTPUT_DIR=\"" + dir.string() + "\"").code == 0);
  CHECK(fs::exists(dir / "transactions.csv"));
  REQUIRE(efos_cli("pipeline -q -c \"" + conf + "\" -o \"" + dir.string() + "\"").code == 0);
  const auto first = slurp(dir / "suspects.csv");
  CHECK_FALSE(first.empty());
  CHECK(fs::exists(dir / "estimates.csv"));
  const auto meta = nlohmann::json::parse(slurp(dir / "suspects.csv.meta.json"));
  CHECK(meta["seed"] == 11);
  CHECK(meta["version"] == 1);
  REQUIRE(efos_cli("pipeline -q --threads 4 -c \"" + conf + "\" -o \"" + dir.string() + "\"").code == 0);
  CHECK(slurp(dir / "suspects.csv") == first);
  fs::remove_all(kRoot);
}
