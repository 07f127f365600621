#include "efos/types.hpp"

#include <cstdio>

namespace efos {

std::string to_string(const MonthKey& m) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d", m.year, m.month);
  return buf;
}

std::string_view to_string(TxKind k) noexcept {
  return k == TxKind::income ? "income" : "outcome";
}

std::string_view to_string(TaxpayerType t) noexcept {
  switch (t) {
    case TaxpayerType::legal: return "legal";
    case TaxpayerType::natural: return "natural";
    case TaxpayerType::unknown: break;
  }
  return "unknown";
}

std::string_view to_string(TaxpayerStatus s) noexcept {
  switch (s) {
    case TaxpayerStatus::active: return "active";
    case TaxpayerStatus::cancelled: return "cancelled";
    case TaxpayerStatus::suspended: return "suspended";
    case TaxpayerStatus::unknown: break;
  }
  return "unknown";
}

std::string_view to_string(LabelKind l) noexcept {
  return l == LabelKind::definitive_efos ? "definitive" : "alleged";
}

std::string_view to_string(NodeClass c) noexcept {
  switch (c) {
    case NodeClass::definitive_efos: return "definitive_efos";
    case NodeClass::alleged_efos: return "alleged_efos";
    case NodeClass::unclassified: break;
  }
  return "unclassified";
}

Centavos cancelled_share(Centavos amount, Centavos cancelled_total, Centavos total) noexcept {
  if (total <= 0 || cancelled_total <= 0) return 0;
  if (cancelled_total >= total) return amount;
  const __int128 num = static_cast<__int128>(amount) * cancelled_total;
  return static_cast<Centavos>((num + total / 2) / total);
}

}  // namespace efos
