#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace efos {

enum class ExportFormat { csv, jsonl };

/// Small typed table used for every export so CSV and JSONL share one path.
/// An empty Cell (monostate) is written as an empty CSV field / JSON null.
class Table {
 public:
  using Cell = std::variant<std::monostate, std::string, std::int64_t, double>;

  explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void add_row(std::vector<Cell> row);

  const std::vector<std::string>& columns() const noexcept { return columns_; }
  const std::vector<std::vector<Cell>>& rows() const noexcept { return rows_; }

  void write(std::ostream& out, ExportFormat format) const;
  void write_csv(std::ostream& out) const;
  void write_jsonl(std::ostream& out) const;
  void save(const std::filesystem::path& path, ExportFormat format = ExportFormat::csv) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<Cell>> rows_;
};

/// Shortest round-trip decimal representation; stable across runs.
std::string format_double(double value);

/// Pesos with exactly two fractional digits, e.g. 116000 -> "1160.00".
std::string format_centavos(std::int64_t centavos);

ExportFormat parse_export_format(const std::string& token);

/// Splits one CSV line honouring double-quoted fields. nullopt on an
/// unterminated quote.
std::optional<std::vector<std::string>> split_csv(std::string_view line);

/// Reads a table written by Table::save (format from the extension). Every
/// non-empty cell comes back as a string.
Table read_table(const std::filesystem::path& path);
std::string cell_text(const Table::Cell& cell);
/// Throws Error{"malformed_input"} when the column is absent.
std::size_t column_index(const Table& t, const std::string& name);

}  // namespace efos
