#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "efos/table.hpp"
#include "efos/types.hpp"

namespace efos {

enum class InputFormat { csv, jsonl };

/// Picks jsonl for *.jsonl / *.json, csv otherwise.
InputFormat format_for_path(const std::filesystem::path& path);

struct Diagnostic {
  enum class Kind { malformed_row, duplicate, missing_data };
  Kind kind = Kind::malformed_row;
  std::size_t line = 0;  // 1-based physical line; 0 when not tied to a line
  std::string reason;
};

std::string_view to_string(Diagnostic::Kind k) noexcept;

struct ParseOptions {
  InputFormat format = InputFormat::csv;
  /// Malformed rows tolerated before parsing aborts with `too_many_errors`.
  std::size_t max_errors = 1000;
};

template <typename T>
struct Parsed {
  T value;
  std::vector<Diagnostic> diagnostics;
};

using RegistryMap = std::map<TaxpayerId, TaxpayerRecord>;
using LabelMap = std::map<TaxpayerId, LabelRecord>;
using StatementMap = std::map<std::pair<TaxpayerId, int>, TaxStatement>;

/// Exact decimal pesos ("1160.00", "7", "0.5") to centavos. Rejects more than
/// two fractional digits, signs other than a leading '-', and overflow.
/// Negative values are returned as negative; callers decide policy.
std::optional<Centavos> parse_amount(std::string_view text);

Parsed<std::vector<TransactionRecord>> parse_transactions(std::istream& in, const ParseOptions& opts = {});
Parsed<RegistryMap> parse_registry(std::istream& in, const ParseOptions& opts = {});
Parsed<LabelMap> parse_labels(std::istream& in, const ParseOptions& opts = {});
Parsed<StatementMap> parse_statements(std::istream& in, const ParseOptions& opts = {});

/// Alias tables used by parse_registry / parse_labels (case-insensitive).
TaxpayerType parse_taxpayer_type(std::string_view token);
TaxpayerStatus parse_taxpayer_status(std::string_view token);
std::optional<LabelKind> parse_label_kind(std::string_view token);

void write_transactions(std::ostream& out, std::span<const TransactionRecord> records,
                        ExportFormat format = ExportFormat::csv);
void write_registry(std::ostream& out, const RegistryMap& registry, ExportFormat format = ExportFormat::csv);
void write_labels(std::ostream& out, const LabelMap& labels, ExportFormat format = ExportFormat::csv);
void write_statements(std::ostream& out, const StatementMap& statements,
                      ExportFormat format = ExportFormat::csv);

using TaxpayerIndex = std::uint32_t;

/// Struct-of-arrays transaction store. Rows are aggregated per
/// (period, emitter, receiver, kind) and sorted by that key.
struct TransactionColumns {
  std::vector<TaxpayerIndex> emitter;
  std::vector<TaxpayerIndex> receiver;
  std::vector<MonthKey> period;
  std::vector<TxKind> kind;
  std::vector<std::int64_t> tx_count;
  std::vector<Centavos> subtotal;
  std::vector<Centavos> vat;
  std::vector<Centavos> total;
  std::vector<Centavos> cancelled_total;

  std::size_t size() const noexcept { return emitter.size(); }
};

struct RowRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const noexcept { return end - begin; }
  bool empty() const noexcept { return begin == end; }
};

/// Immutable, indexed view of all inputs. Taxpayers are numbered densely in
/// lexicographic id order, so the result does not depend on input row order.
class Dataset {
 public:
  Dataset() = default;

  std::size_t taxpayer_count() const noexcept { return taxpayers_.size(); }
  const TaxpayerId& id(TaxpayerIndex i) const { return taxpayers_.at(i).id; }
  const TaxpayerRecord& taxpayer(TaxpayerIndex i) const { return taxpayers_.at(i); }
  std::optional<TaxpayerIndex> find(const TaxpayerId& id) const;
  bool synthesized(TaxpayerIndex i) const { return synthesized_.at(i) != 0; }

  std::optional<LabelKind> label(TaxpayerIndex i) const;
  NodeClass node_class(TaxpayerIndex i) const { return efos::node_class(label(i)); }
  bool is_labeled_efos(TaxpayerIndex i) const { return label(i).has_value(); }

  std::optional<Centavos> vat_paid(TaxpayerIndex i, int year) const;

  const TransactionColumns& transactions() const noexcept { return tx_; }
  TransactionRecord record(std::size_t row) const;
  std::vector<TransactionRecord> records() const;

  std::span<const std::uint32_t> rows_emitted_by(TaxpayerIndex i) const;
  std::span<const std::uint32_t> rows_received_by(TaxpayerIndex i) const;
  RowRange rows_in_period(const MonthKey& period) const;
  RowRange rows_in_year(int year) const;

  const std::vector<MonthKey>& periods() const noexcept { return periods_; }
  std::vector<MonthKey> periods_in_year(int year) const;
  std::vector<int> years() const;
  bool has_year(int year) const;

  /// Taxpayers with at least one emitted record.
  std::size_t active_emitter_count() const noexcept { return active_emitters_; }

  const RegistryMap& registry() const noexcept { return registry_; }
  const LabelMap& labels() const noexcept { return labels_; }
  const StatementMap& statements() const noexcept { return statements_; }

  friend bool operator==(const Dataset& a, const Dataset& b);

 private:
  friend Dataset build_dataset(std::vector<TransactionRecord>, RegistryMap, LabelMap, StatementMap);

  std::vector<TaxpayerRecord> taxpayers_;
  std::vector<std::uint8_t> synthesized_;
  std::vector<std::int8_t> label_;  // -1 none, otherwise LabelKind
  std::unordered_map<TaxpayerId, TaxpayerIndex> lookup_;
  std::map<std::pair<TaxpayerIndex, int>, Centavos> vat_paid_;

  TransactionColumns tx_;
  std::vector<std::uint32_t> emit_offsets_, emit_rows_;
  std::vector<std::uint32_t> recv_offsets_, recv_rows_;
  std::vector<MonthKey> periods_;
  std::vector<std::size_t> period_offsets_;  // periods_.size() + 1
  std::size_t active_emitters_ = 0;

  RegistryMap registry_;
  LabelMap labels_;
  StatementMap statements_;
};

/// Aggregates duplicate (emitter, receiver, period, kind) rows, synthesizes
/// registry rows for unknown taxpayers and builds the emitter / receiver /
/// period indices.
Dataset build_dataset(std::vector<TransactionRecord> transactions, RegistryMap registry = {},
                      LabelMap labels = {}, StatementMap statements = {});

struct InputPaths {
  std::filesystem::path transactions;
  std::filesystem::path registry;
  std::filesystem::path labels;
  std::filesystem::path statements;
};

struct LoadResult {
  Dataset dataset;
  std::vector<std::pair<std::string, Diagnostic>> diagnostics;  // (file tag, diagnostic)
};

/// Parses whichever inputs are given (empty path = absent) and builds the Dataset.
LoadResult load_dataset(const InputPaths& paths, std::size_t max_errors = 1000);

}  // namespace efos
