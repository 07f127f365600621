#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace efos {

/// Monetary amounts are held as integer centavos (1 peso = 100 centavos).
using Centavos = std::int64_t;

/// Anonymized taxpayer identifier. Opaque; only equality and ordering matter.
class TaxpayerId {
 public:
  TaxpayerId() = default;
  explicit TaxpayerId(std::string value) : value_(std::move(value)) {}

  const std::string& str() const noexcept { return value_; }
  bool empty() const noexcept { return value_.empty(); }

  friend auto operator<=>(const TaxpayerId&, const TaxpayerId&) = default;
  friend bool operator==(const TaxpayerId&, const TaxpayerId&) = default;

 private:
  std::string value_;
};

struct MonthKey {
  int year = 0;
  int month = 1;  // 1..12

  friend auto operator<=>(const MonthKey&, const MonthKey&) = default;
  friend bool operator==(const MonthKey&, const MonthKey&) = default;

  /// Dense ordinal, monotone in (year, month).
  int ordinal() const noexcept { return year * 12 + (month - 1); }
  static MonthKey from_ordinal(int ordinal) noexcept {
    int y = ordinal >= 0 ? ordinal / 12 : -((-ordinal + 11) / 12);
    return MonthKey{y, ordinal - y * 12 + 1};
  }
  bool valid() const noexcept { return month >= 1 && month <= 12; }
};

std::string to_string(const MonthKey& m);  // "YYYY-MM"

enum class TxKind : std::uint8_t { income, outcome };
enum class TaxpayerType : std::uint8_t { legal, natural, unknown };
enum class TaxpayerStatus : std::uint8_t { active, cancelled, suspended, unknown };
enum class LabelKind : std::uint8_t { definitive_efos, alleged_efos };

/// Class tag carried by graph nodes and used for cohort reporting.
enum class NodeClass : std::uint8_t { definitive_efos, alleged_efos, unclassified };

std::string_view to_string(TxKind k) noexcept;
std::string_view to_string(TaxpayerType t) noexcept;
std::string_view to_string(TaxpayerStatus s) noexcept;
std::string_view to_string(LabelKind l) noexcept;
std::string_view to_string(NodeClass c) noexcept;

inline NodeClass node_class(std::optional<LabelKind> label) noexcept {
  if (!label) return NodeClass::unclassified;
  return *label == LabelKind::definitive_efos ? NodeClass::definitive_efos
                                              : NodeClass::alleged_efos;
}

struct TransactionRecord {
  TaxpayerId emitter;
  TaxpayerId receiver;
  MonthKey period;
  TxKind kind = TxKind::income;
  std::int64_t tx_count = 1;
  Centavos subtotal = 0;
  Centavos vat = 0;
  Centavos total = 0;
  Centavos cancelled_total = 0;

  friend bool operator==(const TransactionRecord&, const TransactionRecord&) = default;
};

struct TaxpayerRecord {
  TaxpayerId id;
  TaxpayerType taxpayer_type = TaxpayerType::unknown;
  TaxpayerStatus status = TaxpayerStatus::unknown;
  std::string sector;
  std::string location;
  std::string registered;  // ISO-8601 date or empty

  friend bool operator==(const TaxpayerRecord&, const TaxpayerRecord&) = default;
};

struct LabelRecord {
  TaxpayerId id;
  LabelKind label = LabelKind::definitive_efos;

  friend bool operator==(const LabelRecord&, const LabelRecord&) = default;
};

struct TaxStatement {
  TaxpayerId id;
  int year = 0;
  Centavos vat_paid = 0;

  friend bool operator==(const TaxStatement&, const TaxStatement&) = default;
};

/// Portion of `amount` attributable to the cancelled part of an aggregate,
/// i.e. round(amount * cancelled_total / total). Zero when total is zero.
Centavos cancelled_share(Centavos amount, Centavos cancelled_total, Centavos total) noexcept;

/// amount minus its cancelled share.
inline Centavos active_share(Centavos amount, Centavos cancelled_total, Centavos total) noexcept {
  return amount - cancelled_share(amount, cancelled_total, total);
}

/// Base for all pipeline errors; `code()` is a stable machine-readable tag.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace efos

template <>
struct std::hash<efos::TaxpayerId> {
  std::size_t operator()(const efos::TaxpayerId& id) const noexcept {
    return std::hash<std::string>{}(id.str());
  }
};
