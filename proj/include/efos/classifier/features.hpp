#pragma once

#include <array>
#include <string_view>
#include <vector>

#include "efos/classifier/matrix.hpp"
#include "efos/ingest.hpp"

namespace efos {

inline constexpr std::size_t kFeatureCount = 7;

/// Column order of FeatureRow::values().
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "sub_active",       "total_active", "total_after_active", "vat_after_active",
    "cancelled_amount", "tx_count",     "distinct_receivers"};

/// Yearly CFDI aggregates of one emitter. Amounts in centavos.
///  - sub_active: subtotal minus its cancelled share
///  - total_active: total of records with no cancellation at all
///  - total_after_active: total minus cancelled_total
///  - vat_after_active: vat minus its cancelled share
struct FeatureRow {
  TaxpayerId id;
  int year = 0;
  Centavos sub_active = 0;
  Centavos total_active = 0;
  Centavos total_after_active = 0;
  Centavos vat_after_active = 0;
  Centavos cancelled_amount = 0;
  std::int64_t tx_count = 0;
  std::int64_t distinct_receivers = 0;

  std::array<double, kFeatureCount> values() const;
  friend bool operator==(const FeatureRow&, const FeatureRow&) = default;
};

/// One row per taxpayer that emitted any record (either kind) in `year`,
/// ordered by id.
std::vector<FeatureRow> build_features(const Dataset& ds, int year);

FeatureMatrix to_matrix(std::span<const FeatureRow> rows);

}  // namespace efos
