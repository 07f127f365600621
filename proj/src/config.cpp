#include "efos/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "efos/rng.hpp"

namespace efos {

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& why) {
  throw Error("bad_config", "setting '" + key + "' = '" + value + "': " + why);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = first + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc{} || ptr != last) bad(key, value, "not a valid number");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad(key, value, "expected true or false");
}

double parse_ratio(const std::string& key, const std::string& value) {
  const auto v = parse_number<double>(key, value);
  if (!(v >= 0.0 && v <= 1.0)) bad(key, value, "must lie in [0, 1]");
  return v;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<int> parse_years(const std::string& key, const std::string& value) {
  std::vector<int> years;
  for (const auto& item : split_list(value)) {
    const auto dash = item.find('-', 1);
    if (dash == std::string::npos) {
      years.push_back(parse_number<int>(key, item));
      continue;
    }
    const int lo = parse_number<int>(key, trim(item.substr(0, dash)));
    const int hi = parse_number<int>(key, trim(item.substr(dash + 1)));
    if (hi < lo || hi - lo > 200) bad(key, value, "bad year range");
    for (int y = lo; y <= hi; ++y) years.push_back(y);
  }
  std::sort(years.begin(), years.end());
  years.erase(std::unique(years.begin(), years.end()), years.end());
  return years;
}

std::string join_years(const std::vector<int>& years) {
  std::string out;
  for (std::size_t i = 0; i < years.size(); ++i) out += (i ? "," : "") + std::to_string(years[i]);
  return out;
}

struct Setting {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
  bool affects_results = true;
};

template <class T>
Setting number(T RunConfig::*member) {
  return {[member](RunConfig& c, const std::string& k, const std::string& v) { c.*member = parse_number<T>(k, v); },
          [member](const RunConfig& c) { return std::to_string(c.*member); }};
}

template <class T>
Setting forest_number(T ForestConfig::*member) {
  return {[member](RunConfig& c, const std::string& k, const std::string& v) {
            c.forest.*member = parse_number<T>(k, v);
          },
          [member](const RunConfig& c) { return std::to_string(c.forest.*member); }};
}

template <class T>
Setting synth_number(T SynthConfig::*member) {
  return {[member](RunConfig& c, const std::string& k, const std::string& v) {
            c.synth.*member = parse_number<T>(k, v);
          },
          [member](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return format_double(c.synth.*member);
            else return std::to_string(c.synth.*member);
          }};
}

Setting ratio(double RunConfig::*member) {
  return {[member](RunConfig& c, const std::string& k, const std::string& v) { c.*member = parse_ratio(k, v); },
          [member](const RunConfig& c) { return format_double(c.*member); }};
}

Setting path(std::filesystem::path RunConfig::*member, bool affects = true) {
  return {[member](RunConfig& c, const std::string&, const std::string& v) { c.*member = v; },
          [member](const RunConfig& c) { return (c.*member).generic_string(); }, affects};
}

const std::map<std::string, Setting>& registry() {
  static const std::map<std::string, Setting> table = [] {
    std::map<std::string, Setting> t;
    t["transactions"] = path(&RunConfig::transactions);
    t["registry"] = path(&RunConfig::registry);
    t["labels"] = path(&RunConfig::labels);
    t["statements"] = path(&RunConfig::statements);
    t["output_dir"] = path(&RunConfig::output_dir, false);
    t["seed"] = number(&RunConfig::seed);
    t["years"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.years = parse_years(k, v); },
                  [](const RunConfig& c) { return join_years(c.years); }};
    t["min_tx"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                     c.yearly.min_tx = parse_number<std::int64_t>(k, v);
                   },
                   [](const RunConfig& c) { return std::to_string(c.yearly.min_tx); }};
    t["min_tx_scope"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                           if (v == "edge") c.yearly.scope = MinTxScope::edge;
                           else if (v == "node") c.yearly.scope = MinTxScope::node;
                           else bad(k, v, "expected edge or node");
                         },
                         [](const RunConfig& c) { return c.yearly.scope == MinTxScope::edge ? "edge" : "node"; }};
    t["edge_kinds"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                         if (v == "income") c.yearly.kinds = c.monthly_kinds = EdgeKinds::income;
                         else if (v == "all") c.yearly.kinds = c.monthly_kinds = EdgeKinds::all;
                         else bad(k, v, "expected income or all");
                       },
                       [](const RunConfig& c) { return c.monthly_kinds == EdgeKinds::income ? "income" : "all"; }};
    t["close_mode"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                         if (v == "either") c.proximity.close = CloseMode::either_direction;
                         else if (v == "out_only") c.proximity.close = CloseMode::out_only;
                         else bad(k, v, "expected either or out_only");
                       },
                       [](const RunConfig& c) {
                         return c.proximity.close == CloseMode::either_direction ? "either" : "out_only";
                       }};
    t["close_distance"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                             c.proximity.max_distance = parse_number<int>(k, v);
                           },
                           [](const RunConfig& c) { return std::to_string(c.proximity.max_distance); }};
    t["sigma_numerator"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                              if (v == "per_month") c.proximity.numerator = SigmaNumerator::per_month;
                              else if (v == "distinct_yearly") c.proximity.numerator = SigmaNumerator::distinct_yearly;
                              else bad(k, v, "expected per_month or distinct_yearly");
                            },
                            [](const RunConfig& c) {
                              return c.proximity.numerator == SigmaNumerator::per_month ? "per_month"
                                                                                        : "distinct_yearly";
                            }};
    t["d_max"] = number(&RunConfig::d_max);
    t["n_trees"] = forest_number(&ForestConfig::n_trees);
    t["max_depth"] = forest_number(&ForestConfig::max_depth);
    t["min_samples_leaf"] = forest_number(&ForestConfig::min_samples_leaf);
    t["mtry"] = forest_number(&ForestConfig::mtry);
    t["pca_components"] = forest_number(&ForestConfig::pca_components);
    t["bootstrap"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                        c.forest.bootstrap = parse_bool(k, v);
                      },
                      [](const RunConfig& c) { return std::string(c.forest.bootstrap ? "true" : "false"); }};
    t["scenarios"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                        c.scenarios.clear();
                        for (const auto& item : split_list(v)) {
                          try {
                            const auto s = parse_transform(item);
                            if (std::find(c.scenarios.begin(), c.scenarios.end(), s) == c.scenarios.end())
                              c.scenarios.push_back(s);
                          } catch (const Error&) {
                            bad(k, v, "scenarios are none, boxcox or pca");
                          }
                        }
                        if (c.scenarios.empty()) bad(k, v, "at least one scenario required");
                      },
                      [](const RunConfig& c) {
                        std::string out;
                        for (std::size_t i = 0; i < c.scenarios.size(); ++i)
                          out += (i ? "," : "") + std::string(to_string(c.scenarios[i]));
                        return out;
                      }};
    t["positives"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                        if (v == "definitive") c.positives = PositiveLabels::definitive;
                        else if (v == "any") c.positives = PositiveLabels::any_labeled;
                        else bad(k, v, "expected definitive or any");
                      },
                      [](const RunConfig& c) {
                        return c.positives == PositiveLabels::definitive ? "definitive" : "any";
                      }};
    t["proba_threshold"] = ratio(&RunConfig::proba_threshold);
    t["theta_sigma"] = ratio(&RunConfig::theta_sigma);
    t["quartile"] = ratio(&RunConfig::quartile);
    t["noise_scale"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                          c.noise_scale = parse_number<double>(k, v);
                        },
                        [](const RunConfig& c) { return format_double(c.noise_scale); }};
    t["histogram_bins"] = number(&RunConfig::histogram_bins);
    t["max_errors"] = number(&RunConfig::max_errors);
    t["threads"] = number(&RunConfig::threads);
    t["threads"].affects_results = false;
    t["format"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                     if (v != "csv" && v != "jsonl") bad(k, v, "expected csv or jsonl");
                     c.format = parse_export_format(v);
                   },
                   [](const RunConfig& c) { return std::string(c.format == ExportFormat::csv ? "csv" : "jsonl"); }};

    t["synth.honest"] = synth_number(&SynthConfig::n_honest);
    t["synth.efos"] = synth_number(&SynthConfig::n_efos);
    t["synth.rings"] = synth_number(&SynthConfig::n_rings);
    t["synth.ring_size"] = synth_number(&SynthConfig::ring_size);
    t["synth.edos_per_ring"] = synth_number(&SynthConfig::edos_per_ring);
    t["synth.colluder_links"] = synth_number(&SynthConfig::colluder_links);
    t["synth.honest_degree"] = synth_number(&SynthConfig::honest_degree);
    t["synth.efos_client_degree"] = synth_number(&SynthConfig::efos_client_degree);
    t["synth.ring_activity"] = synth_number(&SynthConfig::ring_activity);
    t["synth.labeled_fraction"] = synth_number(&SynthConfig::labeled_fraction);
    t["synth.definitive_share"] = synth_number(&SynthConfig::definitive_share);
    t["synth.efos_underreport"] = synth_number(&SynthConfig::efos_underreport);
    t["synth.colluder_underreport"] = synth_number(&SynthConfig::colluder_underreport);
    t["synth.efos_legal_share"] = synth_number(&SynthConfig::efos_legal_share);
    t["synth.registry_missing_rate"] = synth_number(&SynthConfig::registry_missing_rate);
    t["synth.months"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                           // "YYYY" (twelve months) or "YYYY:count"
                           const auto colon = v.find(':');
                           const int year = parse_number<int>(k, trim(v.substr(0, colon)));
                           const int count = colon == std::string::npos ? 12 : parse_number<int>(k, trim(v.substr(colon + 1)));
                           if (count < 1 || count > 1200) bad(k, v, "month count out of range");
                           c.synth.months = SynthConfig::default_months(year, count);
                         },
                         [](const RunConfig& c) {
                           if (c.synth.months.empty()) return std::string();
                           return std::to_string(c.synth.months.front().year) + ":" +
                                  std::to_string(c.synth.months.size());
                         }};
    t["synth.bridge_rings"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                                 c.synth.bridge_rings = parse_bool(k, v);
                               },
                               [](const RunConfig& c) { return std::string(c.synth.bridge_rings ? "true" : "false"); }};
    return t;
  }();
  return table;
}

}  // namespace

void RunConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw Error("bad_config", msg);
  };
  require(yearly.min_tx >= 0, "min_tx must be non-negative");
  require(proximity.max_distance >= 1, "close_distance must be at least 1");
  require(d_max >= 1 && d_max <= 64, "d_max must lie in [1, 64]");
  require(forest.n_trees >= 1, "n_trees must be positive");
  require(!scenarios.empty(), "at least one scenario required");
  require(histogram_bins >= 1, "histogram_bins must be positive");
  require(threads >= 1, "threads must be positive");
  require(noise_scale >= 0, "noise_scale must be non-negative");
  for (double v : {proba_threshold, theta_sigma, quartile}) require(v >= 0 && v <= 1, "thresholds must lie in [0, 1]");
}

void apply_setting(RunConfig& config, const std::string& key, const std::string& value) {
  const auto& table = registry();
  auto it = table.find(key);
  if (it == table.end()) throw Error("bad_config", "unknown setting '" + key + "'");
  it->second.set(config, key, value);
}

void apply_config_text(RunConfig& config, const std::string& text, const std::filesystem::path& base) {
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error("bad_config", "line " + std::to_string(number) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    const bool is_path = key == "transactions" || key == "registry" || key == "labels" || key == "statements" ||
                         key == "output_dir";
    if (is_path && !base.empty() && !value.empty() && std::filesystem::path(value).is_relative())
      value = (base / value).lexically_normal().generic_string();
    apply_setting(config, key, value);
  }
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("bad_config", "cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  apply_config_text(config, buf.str(), path.parent_path());
}

std::map<std::string, std::string> settings(const RunConfig& config) {
  std::map<std::string, std::string> out;
  for (const auto& [key, s] : registry()) out[key] = s.get(config);
  return out;
}

std::string config_hash(const RunConfig& config) {
  std::string canonical;
  for (const auto& [key, s] : registry()) {
    if (!s.affects_results) continue;
    canonical += key + " = " + s.get(config) + "\n";
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical)));
  return buf;
}

}  // namespace efos
