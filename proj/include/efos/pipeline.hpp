#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "efos/config.hpp"
#include "efos/ingest.hpp"

namespace efos {

/// Shared state of one CLI invocation. Each stage reads what it needs from
/// the inputs or from earlier stage files in the output directory.
class StageContext {
 public:
  explicit StageContext(RunConfig config, std::ostream* log = nullptr);

  const RunConfig& config() const noexcept { return config_; }

  /// Loaded once on first use. Input paths left empty default to
  /// <output_dir>/<name>.csv or .jsonl when such a file exists.
  const Dataset& dataset();
  const std::vector<std::pair<std::string, Diagnostic>>& load_diagnostics();
  InputPaths input_paths() const;

  /// Years to process: the configured list, or every year in the data.
  std::vector<int> years();

  std::filesystem::path artifact(const std::string& stem) const;
  std::filesystem::path json_artifact(const std::string& stem) const;

  /// Writes the table plus a `.meta.json` sidecar and remembers the path.
  void save(const Table& table, const std::string& stem, const std::string& stage);
  void save_json(const std::string& json_text, const std::string& stem, const std::string& stage);
  void save_stream(const std::filesystem::path& path, const std::string& stage,
                   const std::function<void(std::ostream&)>& writer);

  const std::vector<std::filesystem::path>& written() const noexcept { return written_; }
  void note(const std::string& message);

 private:
  void sidecar(const std::filesystem::path& path, const std::string& stage);

  RunConfig config_;
  std::ostream* log_;
  std::string hash_;
  std::optional<LoadResult> loaded_;
  std::vector<std::filesystem::path> written_;
};

void run_generate(StageContext& ctx);
/// Returns the number of diagnostics.
std::size_t run_validate(StageContext& ctx);
void run_regime(StageContext& ctx);
void run_network(StageContext& ctx);
void run_metrics(StageContext& ctx);
void run_train(StageContext& ctx);
void run_score(StageContext& ctx);
void run_importance(StageContext& ctx);
void run_report(StageContext& ctx);
/// validate, regime, network, metrics, train, score, importance, report.
void run_pipeline(StageContext& ctx);

}  // namespace efos
