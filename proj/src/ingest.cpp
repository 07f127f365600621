#include "efos/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <tuple>

#include "json.hpp"

namespace efos {

namespace {

using json = nlohmann::json;

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

struct Column {
  std::string_view name;
  bool required;
};

using Fields = std::vector<std::optional<std::string>>;

class Collector {
 public:
  explicit Collector(std::size_t cap) : cap_(cap) {}

  void malformed(std::size_t line, std::string reason) {
    diagnostics_.push_back({Diagnostic::Kind::malformed_row, line, std::move(reason)});
    if (++malformed_ > cap_)
      throw Error("too_many_errors", "aborting after " + std::to_string(malformed_) +
                                         " malformed rows (cap " + std::to_string(cap_) + ")");
  }
  void note(Diagnostic::Kind kind, std::size_t line, std::string reason) {
    diagnostics_.push_back({kind, line, std::move(reason)});
  }
  std::vector<Diagnostic> take() { return std::move(diagnostics_); }

 private:
  std::size_t cap_;
  std::size_t malformed_ = 0;
  std::vector<Diagnostic> diagnostics_;
};

std::string json_scalar_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_float()) {
    char buf[128];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v.get<double>(), std::chars_format::fixed);
    if (ec != std::errc{}) return "nan";
    return std::string(buf, end);
  }
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return v.dump();
}

/// Streams rows as positional fields ordered like `columns`. Missing optional
/// columns come through as nullopt.
template <typename OnRow>
void read_rows(std::istream& in, const ParseOptions& opts, std::span<const Column> columns,
               Collector& diag, OnRow&& on_row) {
  std::string line;
  std::size_t lineno = 0;
  if (opts.format == InputFormat::jsonl) {
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      json obj;
      try {
        obj = json::parse(line);
      } catch (const json::exception& e) {
        diag.malformed(lineno, std::string("invalid json: ") + e.what());
        continue;
      }
      if (!obj.is_object()) {
        diag.malformed(lineno, "json row is not an object");
        continue;
      }
      Fields fields(columns.size());
      bool ok = true;
      for (std::size_t c = 0; c < columns.size(); ++c) {
        auto it = obj.find(std::string(columns[c].name));
        if (it == obj.end() || it->is_null()) {
          if (columns[c].required) {
            diag.malformed(lineno, "missing field '" + std::string(columns[c].name) + "'");
            ok = false;
            break;
          }
          continue;
        }
        fields[c] = json_scalar_text(*it);
      }
      if (ok) on_row(lineno, fields);
    }
    return;
  }

  std::vector<std::optional<std::size_t>> position(columns.size());
  std::size_t width = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header) {
      if (trim(line).empty()) continue;
      std::string_view header = line;
      if (header.starts_with("\xEF\xBB\xBF")) header.remove_prefix(3);
      auto names = split_csv(header);
      if (!names) throw Error("malformed_input", "unterminated quote in header");
      width = names->size();
      for (std::size_t i = 0; i < names->size(); ++i) {
        const auto name = lower(trim((*names)[i]));
        for (std::size_t c = 0; c < columns.size(); ++c)
          if (name == columns[c].name) position[c] = i;
      }
      for (std::size_t c = 0; c < columns.size(); ++c)
        if (columns[c].required && !position[c])
          throw Error("malformed_input", "header lacks required column '" +
                                             std::string(columns[c].name) + "'");
      have_header = true;
      continue;
    }
    if (trim(line).empty()) continue;
    auto cells = split_csv(line);
    if (!cells) {
      diag.malformed(lineno, "unterminated quote");
      continue;
    }
    if (cells->size() != width) {
      diag.malformed(lineno, "expected " + std::to_string(width) + " fields, got " +
                                 std::to_string(cells->size()));
      continue;
    }
    Fields fields(columns.size());
    for (std::size_t c = 0; c < columns.size(); ++c)
      if (position[c]) fields[c] = std::string(trim((*cells)[*position[c]]));
    on_row(lineno, fields);
  }
}

template <typename Int>
std::optional<Int> parse_int(std::string_view s) {
  s = trim(s);
  Int v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

bool valid_iso_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  auto y = parse_int<int>(s.substr(0, 4));
  auto m = parse_int<int>(s.substr(5, 2));
  auto d = parse_int<int>(s.substr(8, 2));
  if (!y || !m || !d || *m < 1 || *m > 12 || *d < 1) return false;
  static constexpr int days[] = {31, 29, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (*d > days[*m - 1]) return false;
  const bool leap = (*y % 4 == 0 && *y % 100 != 0) || *y % 400 == 0;
  return !(*m == 2 && *d == 29 && !leap);
}

/// Row-level amount check shared by transactions and statements.
std::optional<Centavos> amount_field(const std::string& text, std::string_view name, std::size_t line,
                                     Collector& diag) {
  auto v = parse_amount(text);
  if (!v) {
    diag.malformed(line, "invalid amount in '" + std::string(name) + "': " + text);
    return std::nullopt;
  }
  if (*v < 0) {
    diag.malformed(line, "negative amount in '" + std::string(name) + "'");
    return std::nullopt;
  }
  return v;
}

}  // namespace

std::string_view to_string(Diagnostic::Kind k) noexcept {
  switch (k) {
    case Diagnostic::Kind::malformed_row: return "malformed_row";
    case Diagnostic::Kind::duplicate: return "duplicate";
    case Diagnostic::Kind::missing_data: break;
  }
  return "missing_data";
}

InputFormat format_for_path(const std::filesystem::path& path) {
  const auto ext = lower(path.extension().string());
  return (ext == ".jsonl" || ext == ".json" || ext == ".ndjson") ? InputFormat::jsonl : InputFormat::csv;
}

std::optional<Centavos> parse_amount(std::string_view text) {
  text = trim(text);
  bool neg = false;
  if (!text.empty() && text.front() == '-') {
    neg = true;
    text.remove_prefix(1);
  }
  const auto dot = text.find('.');
  const std::string_view whole = text.substr(0, dot);
  const std::string_view frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
  if (whole.empty() || frac.size() > 2 || (dot != std::string_view::npos && frac.empty())) return std::nullopt;
  auto digits = [](std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
  };
  if (!digits(whole) || !digits(frac)) return std::nullopt;
  auto pesos = parse_int<std::int64_t>(whole);
  if (!pesos || *pesos > std::numeric_limits<Centavos>::max() / 100 - 1) return std::nullopt;
  Centavos cents = 0;
  if (!frac.empty()) cents = (frac[0] - '0') * 10 + (frac.size() == 2 ? frac[1] - '0' : 0);
  const Centavos v = *pesos * 100 + cents;
  return neg ? -v : v;
}

TaxpayerType parse_taxpayer_type(std::string_view token) {
  const auto t = lower(trim(token));
  if (t == "legal" || t == "moral" || t == "persona_moral" || t == "pm" || t == "entity" || t == "company")
    return TaxpayerType::legal;
  if (t == "natural" || t == "fisica" || t == "f\xC3\xADsica" || t == "persona_fisica" || t == "pf" ||
      t == "individual" || t == "person")
    return TaxpayerType::natural;
  return TaxpayerType::unknown;
}

TaxpayerStatus parse_taxpayer_status(std::string_view token) {
  const auto t = lower(trim(token));
  if (t == "active" || t == "activo") return TaxpayerStatus::active;
  if (t == "cancelled" || t == "canceled" || t == "cancelado") return TaxpayerStatus::cancelled;
  if (t == "suspended" || t == "suspendido") return TaxpayerStatus::suspended;
  return TaxpayerStatus::unknown;
}

std::optional<LabelKind> parse_label_kind(std::string_view token) {
  const auto t = lower(trim(token));
  if (t == "definitive" || t == "definitivo" || t == "definitive_efos") return LabelKind::definitive_efos;
  if (t == "alleged" || t == "presunto" || t == "alleged_efos") return LabelKind::alleged_efos;
  return std::nullopt;
}

Parsed<std::vector<TransactionRecord>> parse_transactions(std::istream& in, const ParseOptions& opts) {
  static constexpr Column cols[] = {{"emitter", true}, {"receiver", true}, {"year", true},
                                    {"month", true},   {"kind", true},     {"tx_count", true},
                                    {"subtotal", true}, {"vat", true},     {"total", true},
                                    {"cancelled_total", true}};
  Collector diag(opts.max_errors);
  std::vector<TransactionRecord> out;
  read_rows(in, opts, cols, diag, [&](std::size_t line, const Fields& f) {
    TransactionRecord r;
    r.emitter = TaxpayerId(*f[0]);
    r.receiver = TaxpayerId(*f[1]);
    if (r.emitter.empty() || r.receiver.empty()) return diag.malformed(line, "empty taxpayer id");
    auto year = parse_int<int>(*f[2]);
    auto month = parse_int<int>(*f[3]);
    if (!year || !month || *month < 1 || *month > 12) return diag.malformed(line, "invalid year/month");
    r.period = {*year, *month};
    const auto kind = lower(*f[4]);
    if (kind == "income" || kind == "i" || kind == "ingreso") r.kind = TxKind::income;
    else if (kind == "outcome" || kind == "e" || kind == "egreso") r.kind = TxKind::outcome;
    else return diag.malformed(line, "unknown kind '" + *f[4] + "'");
    auto count = parse_int<std::int64_t>(*f[5]);
    if (!count || *count <= 0) return diag.malformed(line, "tx_count must be a positive integer");
    r.tx_count = *count;
    auto sub = amount_field(*f[6], "subtotal", line, diag);
    if (!sub) return;
    auto vat = amount_field(*f[7], "vat", line, diag);
    if (!vat) return;
    auto total = amount_field(*f[8], "total", line, diag);
    if (!total) return;
    auto cancelled = amount_field(*f[9], "cancelled_total", line, diag);
    if (!cancelled) return;
    if (*total < *sub) return diag.malformed(line, "total < subtotal");
    r.subtotal = *sub;
    r.vat = *vat;
    r.total = *total;
    r.cancelled_total = *cancelled;
    out.push_back(std::move(r));
  });
  return {std::move(out), diag.take()};
}

Parsed<RegistryMap> parse_registry(std::istream& in, const ParseOptions& opts) {
  static constexpr Column cols[] = {{"id", true},       {"type", false},     {"status", false},
                                    {"sector", false},  {"location", false}, {"registered", false}};
  Collector diag(opts.max_errors);
  RegistryMap out;
  read_rows(in, opts, cols, diag, [&](std::size_t line, const Fields& f) {
    TaxpayerRecord r;
    r.id = TaxpayerId(*f[0]);
    if (r.id.empty()) return diag.malformed(line, "empty taxpayer id");
    r.taxpayer_type = parse_taxpayer_type(f[1].value_or(""));
    r.status = parse_taxpayer_status(f[2].value_or(""));
    r.sector = f[3].value_or("");
    r.location = f[4].value_or("");
    r.registered = f[5].value_or("");
    if (!r.registered.empty() && !valid_iso_date(r.registered))
      return diag.malformed(line, "registered is not an ISO-8601 date: " + r.registered);
    auto [it, inserted] = out.insert_or_assign(r.id, r);
    if (!inserted) diag.note(Diagnostic::Kind::duplicate, line, "duplicate id " + r.id.str() + ", last row wins");
  });
  return {std::move(out), diag.take()};
}

Parsed<LabelMap> parse_labels(std::istream& in, const ParseOptions& opts) {
  static constexpr Column cols[] = {{"id", true}, {"label", true}};
  Collector diag(opts.max_errors);
  LabelMap out;
  read_rows(in, opts, cols, diag, [&](std::size_t line, const Fields& f) {
    TaxpayerId id(*f[0]);
    if (id.empty()) return diag.malformed(line, "empty taxpayer id");
    auto kind = parse_label_kind(*f[1]);
    if (!kind) return diag.malformed(line, "unknown label '" + *f[1] + "'");
    auto it = out.find(id);
    if (it == out.end()) {
      out.emplace(id, LabelRecord{id, *kind});
      return;
    }
    // definitive outranks alleged whichever row comes first
    if (*kind == LabelKind::definitive_efos) it->second.label = LabelKind::definitive_efos;
    diag.note(Diagnostic::Kind::duplicate, line,
              "duplicate label for " + id.str() + ", kept " + std::string(to_string(it->second.label)));
  });
  return {std::move(out), diag.take()};
}

Parsed<StatementMap> parse_statements(std::istream& in, const ParseOptions& opts) {
  static constexpr Column cols[] = {{"id", true}, {"year", true}, {"vat_paid", true}};
  Collector diag(opts.max_errors);
  StatementMap out;
  read_rows(in, opts, cols, diag, [&](std::size_t line, const Fields& f) {
    TaxpayerId id(*f[0]);
    if (id.empty()) return diag.malformed(line, "empty taxpayer id");
    auto year = parse_int<int>(*f[1]);
    if (!year) return diag.malformed(line, "invalid year");
    auto paid = amount_field(*f[2], "vat_paid", line, diag);
    if (!paid) return;
    auto [it, inserted] = out.insert_or_assign({id, *year}, TaxStatement{id, *year, *paid});
    if (!inserted)
      diag.note(Diagnostic::Kind::duplicate, line,
                "duplicate statement for " + id.str() + "/" + std::to_string(*year) + ", last row wins");
  });
  return {std::move(out), diag.take()};
}

namespace {

/// JSON amounts are numbers in pesos; exact for anything a peso ledger holds.
double pesos(Centavos c) { return static_cast<double>(c) / 100.0; }

}  // namespace

void write_transactions(std::ostream& out, std::span<const TransactionRecord> records, ExportFormat format) {
  if (format == ExportFormat::csv) {
    out << "emitter,receiver,year,month,kind,tx_count,subtotal,vat,total,cancelled_total\n";
    for (const auto& r : records) {
      out << r.emitter.str() << ',' << r.receiver.str() << ',' << r.period.year << ',' << r.period.month << ','
          << to_string(r.kind) << ',' << r.tx_count << ',' << format_centavos(r.subtotal) << ','
          << format_centavos(r.vat) << ',' << format_centavos(r.total) << ','
          << format_centavos(r.cancelled_total) << '\n';
    }
    return;
  }
  for (const auto& r : records) {
    nlohmann::ordered_json o;
    o["emitter"] = r.emitter.str();
    o["receiver"] = r.receiver.str();
    o["year"] = r.period.year;
    o["month"] = r.period.month;
    o["kind"] = to_string(r.kind);
    o["tx_count"] = r.tx_count;
    o["subtotal"] = pesos(r.subtotal);
    o["vat"] = pesos(r.vat);
    o["total"] = pesos(r.total);
    o["cancelled_total"] = pesos(r.cancelled_total);
    out << o.dump() << '\n';
  }
}

void write_registry(std::ostream& out, const RegistryMap& registry, ExportFormat format) {
  Table t({"id", "type", "status", "sector", "location", "registered"});
  for (const auto& [id, r] : registry)
    t.add_row({id.str(), std::string(to_string(r.taxpayer_type)), std::string(to_string(r.status)), r.sector,
               r.location, r.registered});
  t.write(out, format);
}

void write_labels(std::ostream& out, const LabelMap& labels, ExportFormat format) {
  Table t({"id", "label"});
  for (const auto& [id, r] : labels) t.add_row({id.str(), std::string(to_string(r.label))});
  t.write(out, format);
}

void write_statements(std::ostream& out, const StatementMap& statements, ExportFormat format) {
  if (format == ExportFormat::csv) {
    out << "id,year,vat_paid\n";
    for (const auto& [key, s] : statements)
      out << s.id.str() << ',' << s.year << ',' << format_centavos(s.vat_paid) << '\n';
    return;
  }
  for (const auto& [key, s] : statements) {
    nlohmann::ordered_json o;
    o["id"] = s.id.str();
    o["year"] = s.year;
    o["vat_paid"] = pesos(s.vat_paid);
    out << o.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// Dataset

std::optional<TaxpayerIndex> Dataset::find(const TaxpayerId& id) const {
  auto it = lookup_.find(id);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<LabelKind> Dataset::label(TaxpayerIndex i) const {
  const auto v = label_.at(i);
  if (v < 0) return std::nullopt;
  return static_cast<LabelKind>(v);
}

std::optional<Centavos> Dataset::vat_paid(TaxpayerIndex i, int year) const {
  auto it = vat_paid_.find({i, year});
  if (it == vat_paid_.end()) return std::nullopt;
  return it->second;
}

TransactionRecord Dataset::record(std::size_t row) const {
  return TransactionRecord{id(tx_.emitter[row]), id(tx_.receiver[row]), tx_.period[row],
                           tx_.kind[row],        tx_.tx_count[row],    tx_.subtotal[row],
                           tx_.vat[row],         tx_.total[row],       tx_.cancelled_total[row]};
}

std::vector<TransactionRecord> Dataset::records() const {
  std::vector<TransactionRecord> out;
  out.reserve(tx_.size());
  for (std::size_t r = 0; r < tx_.size(); ++r) out.push_back(record(r));
  return out;
}

std::span<const std::uint32_t> Dataset::rows_emitted_by(TaxpayerIndex i) const {
  return std::span<const std::uint32_t>(emit_rows_).subspan(emit_offsets_.at(i),
                                                            emit_offsets_.at(i + 1) - emit_offsets_[i]);
}

std::span<const std::uint32_t> Dataset::rows_received_by(TaxpayerIndex i) const {
  return std::span<const std::uint32_t>(recv_rows_).subspan(recv_offsets_.at(i),
                                                            recv_offsets_.at(i + 1) - recv_offsets_[i]);
}

RowRange Dataset::rows_in_period(const MonthKey& period) const {
  auto it = std::lower_bound(periods_.begin(), periods_.end(), period);
  if (it == periods_.end() || *it != period) return {};
  const auto k = static_cast<std::size_t>(it - periods_.begin());
  return {period_offsets_[k], period_offsets_[k + 1]};
}

RowRange Dataset::rows_in_year(int year) const {
  auto lo = std::lower_bound(periods_.begin(), periods_.end(), MonthKey{year, 1});
  auto hi = std::upper_bound(periods_.begin(), periods_.end(), MonthKey{year, 12});
  if (lo == hi) return {};
  return {period_offsets_[static_cast<std::size_t>(lo - periods_.begin())],
          period_offsets_[static_cast<std::size_t>(hi - periods_.begin())]};
}

std::vector<MonthKey> Dataset::periods_in_year(int year) const {
  std::vector<MonthKey> out;
  for (const auto& p : periods_)
    if (p.year == year) out.push_back(p);
  return out;
}

std::vector<int> Dataset::years() const {
  std::vector<int> out;
  for (const auto& p : periods_)
    if (out.empty() || out.back() != p.year) out.push_back(p.year);
  return out;
}

bool Dataset::has_year(int year) const { return !rows_in_year(year).empty(); }

bool operator==(const Dataset& a, const Dataset& b) {
  const auto& x = a.tx_;
  const auto& y = b.tx_;
  return a.taxpayers_ == b.taxpayers_ && a.synthesized_ == b.synthesized_ && a.label_ == b.label_ &&
         a.vat_paid_ == b.vat_paid_ && x.emitter == y.emitter && x.receiver == y.receiver &&
         x.period == y.period && x.kind == y.kind && x.tx_count == y.tx_count && x.subtotal == y.subtotal &&
         x.vat == y.vat && x.total == y.total && x.cancelled_total == y.cancelled_total;
}

namespace {

void build_csr(std::size_t n, const std::vector<TaxpayerIndex>& keys, std::vector<std::uint32_t>& offsets,
               std::vector<std::uint32_t>& rows) {
  offsets.assign(n + 1, 0);
  for (auto k : keys) ++offsets[k + 1];
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  rows.resize(keys.size());
  std::vector<std::uint32_t> cursor(offsets.begin(), offsets.end() - 1);
  for (std::uint32_t r = 0; r < keys.size(); ++r) rows[cursor[keys[r]]++] = r;
}

}  // namespace

Dataset build_dataset(std::vector<TransactionRecord> transactions, RegistryMap registry, LabelMap labels,
                      StatementMap statements) {
  Dataset ds;

  std::vector<TaxpayerId> ids;
  ids.reserve(registry.size() + labels.size() + transactions.size() / 4);
  for (const auto& [id, _] : registry) ids.push_back(id);
  for (const auto& [id, _] : labels) ids.push_back(id);
  for (const auto& [key, _] : statements) ids.push_back(key.first);
  for (const auto& r : transactions) {
    ids.push_back(r.emitter);
    ids.push_back(r.receiver);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  const std::size_t n = ids.size();
  ds.taxpayers_.resize(n);
  ds.synthesized_.assign(n, 0);
  ds.label_.assign(n, -1);
  ds.lookup_.reserve(n);
  for (TaxpayerIndex i = 0; i < n; ++i) {
    ds.lookup_.emplace(ids[i], i);
    if (auto it = registry.find(ids[i]); it != registry.end()) {
      ds.taxpayers_[i] = it->second;
    } else {
      ds.taxpayers_[i].id = ids[i];
      ds.synthesized_[i] = 1;
    }
  }
  for (const auto& [id, l] : labels) ds.label_[ds.lookup_.at(id)] = static_cast<std::int8_t>(l.label);
  for (const auto& [key, s] : statements) ds.vat_paid_[{ds.lookup_.at(key.first), key.second}] = s.vat_paid;

  struct Row {
    MonthKey period;
    TaxpayerIndex emitter, receiver;
    TxKind kind;
    std::int64_t tx_count;
    Centavos subtotal, vat, total, cancelled;
  };
  std::vector<Row> rows;
  rows.reserve(transactions.size());
  for (const auto& r : transactions)
    rows.push_back({r.period, ds.lookup_.at(r.emitter), ds.lookup_.at(r.receiver), r.kind, r.tx_count,
                    r.subtotal, r.vat, r.total, r.cancelled_total});
  transactions.clear();
  transactions.shrink_to_fit();
  auto key = [](const Row& r) { return std::tie(r.period, r.emitter, r.receiver, r.kind); };
  std::sort(rows.begin(), rows.end(), [&](const Row& a, const Row& b) { return key(a) < key(b); });

  auto& tx = ds.tx_;
  for (const auto& r : rows) {
    if (tx.size() > 0) {
      const auto last = tx.size() - 1;
      if (tx.period[last] == r.period && tx.emitter[last] == r.emitter && tx.receiver[last] == r.receiver &&
          tx.kind[last] == r.kind) {
        tx.tx_count[last] += r.tx_count;
        tx.subtotal[last] += r.subtotal;
        tx.vat[last] += r.vat;
        tx.total[last] += r.total;
        tx.cancelled_total[last] += r.cancelled;
        continue;
      }
    }
    tx.period.push_back(r.period);
    tx.emitter.push_back(r.emitter);
    tx.receiver.push_back(r.receiver);
    tx.kind.push_back(r.kind);
    tx.tx_count.push_back(r.tx_count);
    tx.subtotal.push_back(r.subtotal);
    tx.vat.push_back(r.vat);
    tx.total.push_back(r.total);
    tx.cancelled_total.push_back(r.cancelled);
  }

  build_csr(n, tx.emitter, ds.emit_offsets_, ds.emit_rows_);
  build_csr(n, tx.receiver, ds.recv_offsets_, ds.recv_rows_);
  for (std::size_t r = 0; r < tx.size(); ++r) {
    if (ds.periods_.empty() || ds.periods_.back() != tx.period[r]) {
      ds.periods_.push_back(tx.period[r]);
      ds.period_offsets_.push_back(r);
    }
  }
  ds.period_offsets_.push_back(tx.size());
  for (std::size_t i = 0; i < n; ++i)
    if (ds.emit_offsets_[i + 1] > ds.emit_offsets_[i]) ++ds.active_emitters_;

  ds.registry_ = std::move(registry);
  ds.labels_ = std::move(labels);
  ds.statements_ = std::move(statements);
  return ds;
}

LoadResult load_dataset(const InputPaths& paths, std::size_t max_errors) {
  LoadResult result;
  auto open = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("io", "cannot open " + p.string());
    return in;
  };
  auto keep = [&](const char* tag, std::vector<Diagnostic>& d) {
    for (auto& x : d) result.diagnostics.emplace_back(tag, std::move(x));
  };
  std::vector<TransactionRecord> tx;
  RegistryMap registry;
  LabelMap labels;
  StatementMap statements;
  if (!paths.transactions.empty()) {
    auto in = open(paths.transactions);
    auto p = parse_transactions(in, {format_for_path(paths.transactions), max_errors});
    tx = std::move(p.value);
    keep("transactions", p.diagnostics);
  }
  if (!paths.registry.empty()) {
    auto in = open(paths.registry);
    auto p = parse_registry(in, {format_for_path(paths.registry), max_errors});
    registry = std::move(p.value);
    keep("registry", p.diagnostics);
  }
  if (!paths.labels.empty()) {
    auto in = open(paths.labels);
    auto p = parse_labels(in, {format_for_path(paths.labels), max_errors});
    labels = std::move(p.value);
    keep("labels", p.diagnostics);
  }
  if (!paths.statements.empty()) {
    auto in = open(paths.statements);
    auto p = parse_statements(in, {format_for_path(paths.statements), max_errors});
    statements = std::move(p.value);
    keep("statements", p.diagnostics);
  }
  result.dataset = build_dataset(std::move(tx), std::move(registry), std::move(labels), std::move(statements));
  return result;
}

}  // namespace efos
