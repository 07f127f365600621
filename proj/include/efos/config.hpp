#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "efos/classifier/forest.hpp"
#include "efos/classifier/sampling.hpp"
#include "efos/metrics.hpp"
#include "efos/network.hpp"
#include "efos/synthgen.hpp"
#include "efos/table.hpp"

namespace efos {

struct RunConfig {
  std::filesystem::path transactions, registry, labels, statements;
  std::filesystem::path output_dir = "efos_out";
  std::uint64_t seed = 42;
  std::vector<int> years;  // empty = every year in the data

  YearlyNetworkOptions yearly;
  EdgeKinds monthly_kinds = EdgeKinds::income;
  ProximityOptions proximity;
  int d_max = 10;

  ForestConfig forest;
  std::vector<Transform> scenarios = {Transform::boxcox, Transform::none};
  PositiveLabels positives = PositiveLabels::definitive;

  double proba_threshold = 0.8;
  double theta_sigma = 0.9;
  double quartile = 0.75;
  double noise_scale = 0.2;
  std::size_t histogram_bins = 20;

  std::size_t max_errors = 1000;
  unsigned threads = 1;
  ExportFormat format = ExportFormat::csv;

  SynthConfig synth;

  /// Throws Error{"bad_config"} on out-of-range values.
  void validate() const;
};

/// Applies one `key = value` setting. Throws Error{"bad_config"} for unknown
/// keys or unparsable values.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

/// `key = value` lines; `#` starts a comment. Relative input paths resolve
/// against the file's directory.
void apply_config_file(RunConfig& config, const std::filesystem::path& path);
void apply_config_text(RunConfig& config, const std::string& text, const std::filesystem::path& base = {});

/// Every setting as canonical `key = value` text, in a fixed key order.
std::map<std::string, std::string> settings(const RunConfig& config);

/// Hash of the settings that influence results (threads and output_dir
/// excluded), as 16 hex digits.
std::string config_hash(const RunConfig& config);

}  // namespace efos
