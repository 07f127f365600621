#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "efos/classifier/evaluation.hpp"
#include "efos/ingest.hpp"
#include "efos/metrics.hpp"
#include "efos/table.hpp"

namespace efos {

std::set<TaxpayerId> intersect_suspects(const std::set<TaxpayerId>& a, const std::set<TaxpayerId>& b);

enum class CohortMeasure { active_subtotal, cancelled_total };
std::string_view to_string(CohortMeasure m) noexcept;

/// Quartiles of log10(pesos) over the cohort members that emitted in a
/// month. Members whose amount is zero are counted in `excluded` only; when
/// nothing is left the quartiles are absent.
struct CohortQuartiles {
  std::string cohort;
  MonthKey period;
  CohortMeasure measure = CohortMeasure::active_subtotal;
  std::size_t count = 0;
  std::size_t excluded = 0;
  std::optional<double> q1, median, q3;
};

using Cohorts = std::map<std::string, std::set<TaxpayerId>>;

std::vector<CohortQuartiles> cohort_distribution_summary(const Dataset& ds, const Cohorts& cohorts);

/// Per (member, month) log10 pesos of the measure, zeros dropped, in
/// (member, month) order. `year` = 0 takes every period.
std::vector<double> cohort_log_amounts(const Dataset& ds, const std::set<TaxpayerId>& members,
                                       CohortMeasure measure, int year = 0);

struct BreakdownRow {
  std::string dimension;  // "taxpayer_type" or "status"
  std::string category;
  std::size_t count = 0;
  double percent = 0;
};

/// Share of suspects per taxpayer type and per status; ids missing from the
/// registry and unknown values are reported as "without_info".
std::vector<BreakdownRow> taxpayer_breakdown(const RegistryMap& registry, const std::set<TaxpayerId>& suspects);

struct VatGap {
  Centavos nominal = 0;
  Centavos paid = 0;
  bool statement_missing = false;
  Centavos gap() const noexcept { return nominal - paid; }
};

/// Active income VAT emitted in `year` against the VAT paid in the yearly
/// statement (0 when absent). Throws Error{"no_emissions"} when the taxpayer
/// emitted no income record that year.
VatGap vat_gap_detail(const Dataset& ds, const TaxpayerId& id, int year);
Centavos vat_gap(const Dataset& ds, const TaxpayerId& id, int year);

/// True when the taxpayer emitted at least one income record in `year`.
bool emitted_income(const Dataset& ds, TaxpayerIndex i, int year);

struct EvasionEstimate {
  int year = 0;
  Centavos min_estimate = 0;
  Centavos max_estimate = 0;
  std::size_t min_population = 0;
  std::size_t max_population = 0;

  /// (min + max) / 2, rounded toward zero.
  Centavos midpoint() const noexcept { return min_estimate + (max_estimate - min_estimate) / 2; }
};

/// Sums of gaps floored at zero: over every suspect that emitted income in
/// `year` (max) and over those also in the top quartile of `indices` for that
/// year (min). Missing statements are reported through `diagnostics`.
/// Throws Error{"empty_suspects"}.
EvasionEstimate evasion_estimate(const Dataset& ds, const std::set<TaxpayerId>& suspects,
                                 std::span<const ProximityIndex> indices, int year, double quartile = 0.75,
                                 std::vector<std::string>* diagnostics = nullptr);

enum class Cohort { definitive_efos, alleged_efos, suspect, unclassified };
std::string_view to_string(Cohort c) noexcept;

struct SuspectRow {
  TaxpayerId id;
  int year = 0;
  std::optional<double> proba;
  bool suspicious = false;
  std::int64_t close_efos = 0;
  int months_close = 0;
  std::optional<double> sigma, sigma_hat;
  std::optional<Centavos> vat_gap;  // absent without income emissions
  Cohort cohort = Cohort::unclassified;
};

/// One row per (taxpayer, year) that has a probability or a proximity index,
/// ordered by id then year.
std::vector<SuspectRow> build_suspect_report(const Dataset& ds, const YearlyProbas& probas,
                                             const std::set<TaxpayerId>& suspects,
                                             std::span<const ProximityIndex> indices);

struct ReportBundle {
  std::vector<SuspectRow> suspects;
  std::vector<EvasionEstimate> estimates;
  std::vector<BreakdownRow> breakdown;
  std::vector<CohortQuartiles> cohort_quartiles;
};

Table suspects_table(std::span<const SuspectRow> rows);
Table estimates_table(std::span<const EvasionEstimate> rows);
Table breakdown_table(std::span<const BreakdownRow> rows);
Table cohort_quartiles_table(std::span<const CohortQuartiles> rows);

/// suspects, estimates, breakdown and cohort_quartiles under `dir`; returns
/// the written paths.
std::vector<std::filesystem::path> write_report_bundle(const std::filesystem::path& dir, const ReportBundle& bundle,
                                                       ExportFormat format = ExportFormat::csv);

}  // namespace efos
