#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "efos/pipeline.hpp"
#include "json.hpp"

namespace {

enum Exit { kOk = 0, kFailed = 1, kBadFlags = 2 };

int fail(const std::string& code, const std::string& message, int exit_code) {
  nlohmann::ordered_json j{{"error", code}, {"message", message}, {"exit_code", exit_code}};
  std::cerr << j.dump() << '\n';
  return exit_code;
}

struct Flags {
  std::string config;
  std::string output;
  std::string transactions, registry, labels, statements;
  std::string years;
  std::string format;
  std::string scenarios;
  std::vector<std::string> settings;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  bool quiet = false;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("-c,--config", f.config, "key = value config file");
  sub->add_option("-o,--output", f.output, "output directory (env EFOS_OUTPUT_DIR)");
  sub->add_option("--seed", f.seed, "root seed");
  sub->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--format", f.format, "export format")->check(CLI::IsMember({"csv", "jsonl"}));
  sub->add_option("--transactions", f.transactions, "transactions file");
  sub->add_option("--registry", f.registry, "registry file");
  sub->add_option("--labels", f.labels, "labels file");
  sub->add_option("--statements", f.statements, "tax statements file");
  sub->add_option("--years", f.years, "years, e.g. 2015,2016 or 2015-2018");
  sub->add_option("--scenarios", f.scenarios, "comma list of none, boxcox, pca");
  sub->add_option("--set", f.settings, "override any setting: key=value")->take_all();
  sub->add_flag("-q,--quiet", f.quiet, "no progress output");
}

efos::RunConfig resolve(const Flags& f, const CLI::App& sub) {
  efos::RunConfig config;
  if (!f.config.empty()) efos::apply_config_file(config, f.config);
  if (const char* env = std::getenv("EFOS_OUTPUT_DIR"); env && *env) config.output_dir = env;
  auto flag = [&](const char* name, const std::string& key, const std::string& value) {
    if (sub.count(name) > 0) efos::apply_setting(config, key, value);
  };
  flag("--output", "output_dir", f.output);
  flag("--seed", "seed", std::to_string(f.seed));
  flag("--threads", "threads", std::to_string(f.threads));
  flag("--format", "format", f.format);
  flag("--transactions", "transactions", f.transactions);
  flag("--registry", "registry", f.registry);
  flag("--labels", "labels", f.labels);
  flag("--statements", "statements", f.statements);
  flag("--years", "years", f.years);
  flag("--scenarios", "scenarios", f.scenarios);
  for (const auto& s : f.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw efos::Error("bad_flag", "--set expects key=value, got '" + s + "'");
    efos::apply_setting(config, s.substr(0, eq), s.substr(eq + 1));
  }
  config.validate();
  return config;
}

bool is_flag_error(const std::string& code) { return code == "bad_flag" || code == "bad_config"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Invoice-mill (EFOS) detection pipeline over invoice networks"};
  app.require_subcommand(1);
  Flags flags;
  const std::map<std::string, std::string> commands = {
      {"generate", "write a seeded synthetic economy and its ground truth"},
      {"validate", "ingest inputs and list diagnostics"},
      {"regime", "monthly EFOS amount interquartile table"},
      {"network", "yearly EFOS networks, SCC statistics and exports"},
      {"metrics", "reach curves and proximity indices"},
      {"train", "train one forest per scenario and year"},
      {"score", "score every emitter per year"},
      {"importance", "perturbation and PCA variable importance"},
      {"report", "suspects, estimates, breakdown and cohort tables"},
      {"pipeline", "validate through report in one run"},
  };
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("bad_flag", e.what(), kBadFlags);
  }

  const CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  try {
    efos::StageContext ctx(resolve(flags, *sub), flags.quiet ? nullptr : &std::cerr);
    if (name == "generate") efos::run_generate(ctx);
    else if (name == "validate") efos::run_validate(ctx);
    else if (name == "regime") efos::run_regime(ctx);
    else if (name == "network") efos::run_network(ctx);
    else if (name == "metrics") efos::run_metrics(ctx);
    else if (name == "train") efos::run_train(ctx);
    else if (name == "score") efos::run_score(ctx);
    else if (name == "importance") efos::run_importance(ctx);
    else if (name == "report") efos::run_report(ctx);
    else efos::run_pipeline(ctx);
    if (!flags.quiet)
      for (const auto& p : ctx.written()) std::cout << p.generic_string() << '\n';
  } catch (const efos::Error& e) {
    return fail(e.code(), e.what(), is_flag_error(e.code()) ? kBadFlags : kFailed);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), kFailed);
  }
  return kOk;
}
