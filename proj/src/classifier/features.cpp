#include "efos/classifier/features.hpp"

#include <algorithm>

namespace efos {

std::array<double, kFeatureCount> FeatureRow::values() const {
  return {static_cast<double>(sub_active),       static_cast<double>(total_active),
          static_cast<double>(total_after_active), static_cast<double>(vat_after_active),
          static_cast<double>(cancelled_amount), static_cast<double>(tx_count),
          static_cast<double>(distinct_receivers)};
}

std::vector<FeatureRow> build_features(const Dataset& ds, int year) {
  const auto& tx = ds.transactions();
  std::vector<FeatureRow> out;
  std::vector<TaxpayerIndex> receivers;
  // Taxpayer indices follow id order, so iterating them yields sorted rows.
  for (TaxpayerIndex i = 0; i < ds.taxpayer_count(); ++i) {
    FeatureRow row;
    receivers.clear();
    bool any = false;
    for (auto r : ds.rows_emitted_by(i)) {
      if (tx.period[r].year != year) continue;
      any = true;
      row.sub_active += active_share(tx.subtotal[r], tx.cancelled_total[r], tx.total[r]);
      if (tx.cancelled_total[r] == 0) row.total_active += tx.total[r];
      row.total_after_active += tx.total[r] - std::min(tx.cancelled_total[r], tx.total[r]);
      row.vat_after_active += active_share(tx.vat[r], tx.cancelled_total[r], tx.total[r]);
      row.cancelled_amount += tx.cancelled_total[r];
      row.tx_count += tx.tx_count[r];
      receivers.push_back(tx.receiver[r]);
    }
    if (!any) continue;
    std::sort(receivers.begin(), receivers.end());
    row.distinct_receivers =
        static_cast<std::int64_t>(std::unique(receivers.begin(), receivers.end()) - receivers.begin());
    row.id = ds.id(i);
    row.year = year;
    out.push_back(std::move(row));
  }
  return out;
}

FeatureMatrix to_matrix(std::span<const FeatureRow> rows) {
  FeatureMatrix m(rows.size(), kFeatureCount);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto v = rows[r].values();
    std::copy(v.begin(), v.end(), m.row(r).begin());
  }
  return m;
}

}  // namespace efos
