#include "efos/estimate.hpp"

#include <algorithm>
#include <cmath>

#include "efos/stats.hpp"

namespace efos {

std::set<TaxpayerId> intersect_suspects(const std::set<TaxpayerId>& a, const std::set<TaxpayerId>& b) {
  std::set<TaxpayerId> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
  return out;
}

std::string_view to_string(CohortMeasure m) noexcept {
  return m == CohortMeasure::active_subtotal ? "active_subtotal" : "cancelled_total";
}

std::string_view to_string(Cohort c) noexcept {
  switch (c) {
    case Cohort::definitive_efos: return "definitive_efos";
    case Cohort::alleged_efos: return "alleged_efos";
    case Cohort::suspect: return "suspect";
    case Cohort::unclassified: break;
  }
  return "unclassified";
}

namespace {

struct MonthAmounts {
  Centavos active_subtotal = 0;
  Centavos cancelled_total = 0;
  Centavos get(CohortMeasure m) const { return m == CohortMeasure::active_subtotal ? active_subtotal : cancelled_total; }
};

// period ordinal -> emitted amounts of one taxpayer
std::map<int, MonthAmounts> monthly_amounts(const Dataset& ds, TaxpayerIndex i) {
  std::map<int, MonthAmounts> out;
  const auto& tx = ds.transactions();
  for (auto r : ds.rows_emitted_by(i)) {
    auto& m = out[tx.period[r].ordinal()];
    m.active_subtotal += active_share(tx.subtotal[r], tx.cancelled_total[r], tx.total[r]);
    m.cancelled_total += tx.cancelled_total[r];
  }
  return out;
}

double log10_pesos(Centavos c) { return std::log10(static_cast<double>(c) / 100.0); }

}  // namespace

std::vector<CohortQuartiles> cohort_distribution_summary(const Dataset& ds, const Cohorts& cohorts) {
  std::vector<CohortQuartiles> out;
  for (const auto& [name, members] : cohorts) {
    std::map<int, std::vector<Centavos>> by_month[2];
    for (const auto& id : members) {
      const auto i = ds.find(id);
      if (!i) continue;
      for (const auto& [period, m] : monthly_amounts(ds, *i)) {
        by_month[0][period].push_back(m.active_subtotal);
        by_month[1][period].push_back(m.cancelled_total);
      }
    }
    for (int k = 0; k < 2; ++k) {
      const auto measure = k == 0 ? CohortMeasure::active_subtotal : CohortMeasure::cancelled_total;
      for (const auto& [period, amounts] : by_month[k]) {
        CohortQuartiles row;
        row.cohort = name;
        row.period = MonthKey::from_ordinal(period);
        row.measure = measure;
        std::vector<double> logs;
        for (auto a : amounts) {
          if (a > 0) logs.push_back(log10_pesos(a));
          else ++row.excluded;
        }
        row.count = logs.size();
        if (!logs.empty()) {
          std::sort(logs.begin(), logs.end());
          row.q1 = stats::percentile_sorted(logs, 0.25);
          row.median = stats::percentile_sorted(logs, 0.5);
          row.q3 = stats::percentile_sorted(logs, 0.75);
        }
        out.push_back(std::move(row));
      }
    }
  }
  return out;
}

std::vector<double> cohort_log_amounts(const Dataset& ds, const std::set<TaxpayerId>& members, CohortMeasure measure,
                                       int year) {
  std::vector<double> out;
  for (const auto& id : members) {
    const auto i = ds.find(id);
    if (!i) continue;
    for (const auto& [period, m] : monthly_amounts(ds, *i)) {
      if (year != 0 && MonthKey::from_ordinal(period).year != year) continue;
      if (m.get(measure) > 0) out.push_back(log10_pesos(m.get(measure)));
    }
  }
  return out;
}

std::vector<BreakdownRow> taxpayer_breakdown(const RegistryMap& registry, const std::set<TaxpayerId>& suspects) {
  std::vector<BreakdownRow> out;
  if (suspects.empty()) return out;
  std::size_t types[3] = {0, 0, 0};
  std::size_t statuses[4] = {0, 0, 0, 0};
  for (const auto& id : suspects) {
    auto it = registry.find(id);
    const auto t = it == registry.end() ? TaxpayerType::unknown : it->second.taxpayer_type;
    const auto s = it == registry.end() ? TaxpayerStatus::unknown : it->second.status;
    ++types[static_cast<int>(t)];
    ++statuses[static_cast<int>(s)];
  }
  const double n = static_cast<double>(suspects.size());
  auto add = [&](const char* dim, std::string category, std::size_t count) {
    if (count) out.push_back({dim, std::move(category), count, 100.0 * static_cast<double>(count) / n});
  };
  add("taxpayer_type", "legal", types[0]);
  add("taxpayer_type", "natural", types[1]);
  add("taxpayer_type", "without_info", types[2]);
  add("status", "active", statuses[0]);
  add("status", "cancelled", statuses[1]);
  add("status", "suspended", statuses[2]);
  add("status", "without_info", statuses[3]);
  return out;
}

bool emitted_income(const Dataset& ds, TaxpayerIndex i, int year) {
  const auto& tx = ds.transactions();
  for (auto r : ds.rows_emitted_by(i))
    if (tx.kind[r] == TxKind::income && tx.period[r].year == year) return true;
  return false;
}

VatGap vat_gap_detail(const Dataset& ds, const TaxpayerId& id, int year) {
  const auto i = ds.find(id);
  VatGap g;
  bool any = false;
  if (i) {
    const auto& tx = ds.transactions();
    for (auto r : ds.rows_emitted_by(*i)) {
      if (tx.kind[r] != TxKind::income || tx.period[r].year != year) continue;
      any = true;
      g.nominal += active_share(tx.vat[r], tx.cancelled_total[r], tx.total[r]);
    }
  }
  if (!any) throw Error("no_emissions", id.str() + " emitted no income record in " + std::to_string(year));
  const auto paid = ds.vat_paid(*i, year);
  g.paid = paid.value_or(0);
  g.statement_missing = !paid;
  return g;
}

Centavos vat_gap(const Dataset& ds, const TaxpayerId& id, int year) { return vat_gap_detail(ds, id, year).gap(); }

EvasionEstimate evasion_estimate(const Dataset& ds, const std::set<TaxpayerId>& suspects,
                                 std::span<const ProximityIndex> indices, int year, double quartile,
                                 std::vector<std::string>* diagnostics) {
  if (suspects.empty()) throw Error("empty_suspects", "evasion estimate needs at least one suspect");
  std::vector<ProximityIndex> in_year;
  for (const auto& p : indices)
    if (p.year == year) in_year.push_back(p);
  const auto top = in_year.empty() ? std::set<TaxpayerId>{} : quartile_cut(in_year, quartile);

  EvasionEstimate e;
  e.year = year;
  for (const auto& id : suspects) {
    const auto i = ds.find(id);
    if (!i || !emitted_income(ds, *i, year)) continue;
    const auto g = vat_gap_detail(ds, id, year);
    if (g.statement_missing && diagnostics)
      diagnostics->push_back("missing tax statement for " + id.str() + " in " + std::to_string(year) +
                             "; vat paid taken as 0");
    const Centavos floored = std::max<Centavos>(0, g.gap());
    e.max_estimate += floored;
    ++e.max_population;
    if (top.contains(id)) {
      e.min_estimate += floored;
      ++e.min_population;
    }
  }
  return e;
}

std::vector<SuspectRow> build_suspect_report(const Dataset& ds, const YearlyProbas& probas,
                                             const std::set<TaxpayerId>& suspects,
                                             std::span<const ProximityIndex> indices) {
  std::map<std::pair<TaxpayerId, int>, SuspectRow> rows;
  auto row_for = [&](const TaxpayerId& id, int year) -> SuspectRow& {
    auto [it, inserted] = rows.try_emplace({id, year});
    if (inserted) {
      it->second.id = id;
      it->second.year = year;
    }
    return it->second;
  };
  for (const auto& [key, p] : probas) row_for(key.first, key.second).proba = p;
  for (const auto& p : indices) {
    auto& r = row_for(p.node, p.year);
    r.close_efos = p.total_close_efos;
    r.months_close = p.months_close;
    r.sigma = p.sigma;
    r.sigma_hat = p.sigma_hat;
  }
  std::vector<SuspectRow> out;
  out.reserve(rows.size());
  for (auto& [key, r] : rows) {
    const auto i = ds.find(r.id);
    const auto label = i ? ds.label(*i) : std::nullopt;
    r.suspicious = suspects.contains(r.id);
    if (label) r.cohort = *label == LabelKind::definitive_efos ? Cohort::definitive_efos : Cohort::alleged_efos;
    else if (r.suspicious) r.cohort = Cohort::suspect;
    if (i && emitted_income(ds, *i, r.year)) r.vat_gap = vat_gap_detail(ds, r.id, r.year).gap();
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

Table::Cell opt(const std::optional<double>& v) {
  return v ? Table::Cell{*v} : Table::Cell{};
}

}  // namespace

Table suspects_table(std::span<const SuspectRow> rows) {
  Table t({"id", "year", "proba", "suspicious", "close_efos", "months_close", "sigma", "sigma_hat", "vat_gap",
           "cohort"});
  for (const auto& r : rows)
    t.add_row({r.id.str(), std::int64_t{r.year}, opt(r.proba), std::int64_t{r.suspicious ? 1 : 0}, r.close_efos,
               std::int64_t{r.months_close}, opt(r.sigma), opt(r.sigma_hat),
               r.vat_gap ? Table::Cell{format_centavos(*r.vat_gap)} : Table::Cell{}, std::string(to_string(r.cohort))});
  return t;
}

Table estimates_table(std::span<const EvasionEstimate> rows) {
  Table t({"year", "min_estimate", "midpoint", "max_estimate", "min_population", "max_population"});
  for (const auto& e : rows)
    t.add_row({std::int64_t{e.year}, format_centavos(e.min_estimate), format_centavos(e.midpoint()),
               format_centavos(e.max_estimate), static_cast<std::int64_t>(e.min_population),
               static_cast<std::int64_t>(e.max_population)});
  return t;
}

Table breakdown_table(std::span<const BreakdownRow> rows) {
  Table t({"dimension", "category", "count", "percent"});
  for (const auto& r : rows)
    t.add_row({r.dimension, r.category, static_cast<std::int64_t>(r.count), r.percent});
  return t;
}

Table cohort_quartiles_table(std::span<const CohortQuartiles> rows) {
  Table t({"cohort", "period", "measure", "count", "excluded", "q1", "median", "q3"});
  for (const auto& r : rows)
    t.add_row({r.cohort, to_string(r.period), std::string(to_string(r.measure)), static_cast<std::int64_t>(r.count),
               static_cast<std::int64_t>(r.excluded), opt(r.q1), opt(r.median), opt(r.q3)});
  return t;
}

std::vector<std::filesystem::path> write_report_bundle(const std::filesystem::path& dir, const ReportBundle& bundle,
                                                       ExportFormat format) {
  const std::string ext = format == ExportFormat::csv ? ".csv" : ".jsonl";
  std::vector<std::filesystem::path> paths;
  auto save = [&](const Table& t, const char* stem) {
    paths.push_back(dir / (std::string(stem) + ext));
    t.save(paths.back(), format);
  };
  save(suspects_table(bundle.suspects), "suspects");
  save(estimates_table(bundle.estimates), "estimates");
  save(breakdown_table(bundle.breakdown), "breakdown");
  save(cohort_quartiles_table(bundle.cohort_quartiles), "cohort_quartiles");
  return paths;
}

}  // namespace efos
