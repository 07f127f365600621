#include "efos/table.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "efos/types.hpp"
#include "json.hpp"

namespace efos {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) return "0";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

std::string format_centavos(std::int64_t centavos) {
  const bool neg = centavos < 0;
  const std::uint64_t mag = neg ? static_cast<std::uint64_t>(-(centavos + 1)) + 1
                                : static_cast<std::uint64_t>(centavos);
  std::string out = std::to_string(mag / 100);
  const auto frac = mag % 100;
  out += '.';
  out += static_cast<char>('0' + frac / 10);
  out += static_cast<char>('0' + frac % 10);
  return neg ? "-" + out : out;
}

ExportFormat parse_export_format(const std::string& token) {
  if (token == "csv") return ExportFormat::csv;
  if (token == "jsonl") return ExportFormat::jsonl;
  throw Error("bad_flag", "unknown format '" + token + "' (expected csv or jsonl)");
}

std::optional<std::vector<std::string>> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) return std::nullopt;
  out.push_back(std::move(cur));
  return out;
}

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != columns_.size())
    throw std::invalid_argument("table row arity does not match header");
  rows_.push_back(std::move(row));
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

void Table::write_csv(std::ostream& out) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) out << (i ? "," : "") << columns_[i];
  out << '\n';
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::string>) out << csv_escape(v);
            else if constexpr (std::is_same_v<T, std::int64_t>) out << v;
            else if constexpr (std::is_same_v<T, double>) out << format_double(v);
          },
          row[i]);
    }
    out << '\n';
  }
}

void Table::write_jsonl(std::ostream& out) const {
  for (const auto& row : rows_) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) obj[columns_[i]] = nullptr;
            else obj[columns_[i]] = v;
          },
          row[i]);
    }
    out << obj.dump() << '\n';
  }
}

void Table::write(std::ostream& out, ExportFormat format) const {
  if (format == ExportFormat::csv) write_csv(out);
  else write_jsonl(out);
}

void Table::save(const std::filesystem::path& path, ExportFormat format) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io", "cannot write " + path.string());
  write(out, format);
}

Table read_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot read " + path.string());
  const bool jsonl = path.extension() == ".jsonl";
  std::string line;
  if (!jsonl) {
    if (!std::getline(in, line)) throw Error("malformed_input", path.string() + " is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split_csv(line);
    if (!header) throw Error("malformed_input", "bad header in " + path.string());
    Table t(*header);
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      auto cells = split_csv(line);
      if (!cells || cells->size() != header->size()) throw Error("malformed_input", "bad row in " + path.string());
      std::vector<Table::Cell> row;
      for (auto& c : *cells) row.emplace_back(c.empty() ? Table::Cell{} : Table::Cell{std::move(c)});
      t.add_row(std::move(row));
    }
    return t;
  }
  std::vector<std::string> columns;
  std::vector<std::vector<Table::Cell>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto obj = nlohmann::ordered_json::parse(line, nullptr, false);
    if (!obj.is_object()) throw Error("malformed_input", "bad JSON line in " + path.string());
    if (columns.empty())
      for (const auto& [k, v] : obj.items()) columns.push_back(k);
    std::vector<Table::Cell> row;
    for (const auto& c : columns) {
      const auto it = obj.find(c);
      if (it == obj.end() || it->is_null()) row.emplace_back();
      else if (it->is_string()) row.emplace_back(it->get<std::string>());
      else if (it->is_number_integer()) row.emplace_back(std::to_string(it->get<std::int64_t>()));
      else if (it->is_number()) row.emplace_back(format_double(it->get<double>()));
      else row.emplace_back(it->dump());
    }
    rows.push_back(std::move(row));
  }
  Table t(columns);
  for (auto& r : rows) t.add_row(std::move(r));
  return t;
}

std::string cell_text(const Table::Cell& cell) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) return {};
        else if constexpr (std::is_same_v<T, std::string>) return v;
        else if constexpr (std::is_same_v<T, std::int64_t>) return std::to_string(v);
        else return format_double(v);
      },
      cell);
}

std::size_t column_index(const Table& t, const std::string& name) {
  const auto& cols = t.columns();
  const auto it = std::find(cols.begin(), cols.end(), name);
  if (it == cols.end()) throw Error("malformed_input", "missing column '" + name + "'");
  return static_cast<std::size_t>(it - cols.begin());
}

}  // namespace efos
