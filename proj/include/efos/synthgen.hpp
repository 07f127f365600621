#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "efos/ingest.hpp"

namespace efos {

/// Lognormal amount law in natural-log pesos.
struct LogNormalLaw {
  double mu = 0.0;
  double sigma = 1.0;
};

/// Seeded synthetic economy with planted invoice-mill rings.
///
/// Rings are directed cycles among EFOS that fire together in a month.
/// Each ring has `edos_per_ring` colluding clients (drawn from the honest
/// population) that receive invoices from `colluder_links` ring members in
/// every active month. Honest taxpayers emit `honest_degree` invoices per
/// month (Poisson) to uniformly random counterparts.
struct SynthConfig {
  std::size_t n_honest = 5000;
  std::size_t n_efos = 100;
  std::size_t n_rings = 20;
  std::size_t ring_size = 5;
  std::vector<MonthKey> months = default_months(2015);

  LogNormalLaw honest_amount{8.987, 1.5};  // median ~8,000 pesos
  LogNormalLaw efos_amount{10.187, 0.5};   // median ~26,600 pesos
  double ring_amount_boost = 0.15;  // extra log-pesos on EFOS-to-EFOS invoices
  double december_uplift = 2.0;

  double honest_degree = 16.0;
  double efos_client_degree = 4.0;
  double ring_activity = 1.0;
  std::size_t edos_per_ring = 10;
  std::size_t colluder_links = 5;
  bool bridge_rings = false;  // ring r's first member also invoices ring r+1's first member

  double labeled_fraction = 0.7;
  double definitive_share = 0.6;

  double vat_rate = 0.16;
  double efos_underreport = 0.9;      // share of nominal VAT planted EFOS leave unpaid
  double colluder_underreport = 0.2;  // same for colluders
  double honest_overpay = 0.05;       // honest payers add U(0, x) of nominal

  double honest_cancel_rate = 0.02;
  double efos_cancel_rate = 0.15;
  double outcome_rate = 0.03;

  double efos_legal_share = 0.8;
  double honest_legal_share = 0.6;
  double registry_missing_rate = 0.02;

  std::uint64_t seed = 42;

  static std::vector<MonthKey> default_months(int year, int count = 12);
};

/// Throws Error{"config_invalid"} describing the first violated constraint.
void validate(const SynthConfig& config);

struct GroundTruth {
  std::set<TaxpayerId> efos_ids;
  std::map<TaxpayerId, std::size_t> ring_membership;
  std::set<TaxpayerId> colluder_ids;

  std::vector<std::vector<TaxpayerId>> rings;  // members in cycle order
  std::set<TaxpayerId> labeled_ids;
  std::size_t emitter_count = 0;
  /// Nominal active income VAT minus VAT paid, for planted evaders only.
  std::map<std::pair<TaxpayerId, int>, Centavos> planted_gap;
};

struct SynthOutput {
  Dataset dataset;
  GroundTruth truth;
};

SynthOutput generate(const SynthConfig& config);

void write_ground_truth(std::ostream& out, const GroundTruth& truth);
GroundTruth read_ground_truth(std::istream& in);

}  // namespace efos
