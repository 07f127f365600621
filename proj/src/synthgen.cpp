#include "efos/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <tuple>

#include "efos/rng.hpp"
#include "json.hpp"

namespace efos {

std::vector<MonthKey> SynthConfig::default_months(int year, int count) {
  std::vector<MonthKey> out;
  for (int i = 0; i < count; ++i) out.push_back(MonthKey::from_ordinal(MonthKey{year, 1}.ordinal() + i));
  return out;
}

void validate(const SynthConfig& c) {
  auto fail = [](const std::string& why) { throw Error("config_invalid", "synthetic config: " + why); };
  auto prob = [&](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) fail(std::string(name) + " must lie in [0,1]");
  };
  if (c.n_honest + c.n_efos < 2) fail("need at least two taxpayers");
  if (c.n_rings > 0 && c.ring_size < 2) fail("ring_size must be >= 2");
  if (c.n_rings * c.ring_size > c.n_efos) fail("n_rings * ring_size exceeds n_efos");
  if (c.months.empty()) fail("months is empty");
  for (const auto& m : c.months)
    if (!m.valid()) fail("month out of range in " + to_string(m));
  if (!(c.efos_amount.mu > c.honest_amount.mu)) fail("efos_amount.mu must exceed honest_amount.mu");
  if (!(c.honest_amount.sigma > 0) || !(c.efos_amount.sigma > 0)) fail("amount sigmas must be positive");
  if (!(c.december_uplift >= 1.0)) fail("december_uplift must be >= 1");
  if (!(c.honest_degree >= 0) || !(c.efos_client_degree >= 0)) fail("degrees must be non-negative");
  if (c.edos_per_ring > 0 && c.n_rings > 0 && (c.colluder_links < 2 || c.colluder_links > c.ring_size))
    fail("colluder_links must lie in [2, ring_size]");
  if (c.n_rings * c.edos_per_ring > c.n_honest) fail("not enough honest taxpayers for colluders");
  prob(c.ring_activity, "ring_activity");
  prob(c.labeled_fraction, "labeled_fraction");
  prob(c.definitive_share, "definitive_share");
  prob(c.vat_rate, "vat_rate");
  prob(c.efos_underreport, "efos_underreport");
  prob(c.colluder_underreport, "colluder_underreport");
  prob(c.honest_overpay, "honest_overpay");
  prob(c.honest_cancel_rate, "honest_cancel_rate");
  prob(c.efos_cancel_rate, "efos_cancel_rate");
  prob(c.outcome_rate, "outcome_rate");
  prob(c.efos_legal_share, "efos_legal_share");
  prob(c.honest_legal_share, "honest_legal_share");
  prob(c.registry_missing_rate, "registry_missing_rate");
}

namespace {

struct RawRecord {
  int period;
  std::uint32_t emitter, receiver;
  TxKind kind;
  std::int64_t tx_count;
  Centavos subtotal, vat, total, cancelled;
};

enum class Role : std::uint8_t { honest, colluder, efos };

class Economy {
 public:
  explicit Economy(const SynthConfig& c) : c_(c), rng_(derive_seed(c.seed, "generator")) {}

  SynthOutput run() {
    layout();
    for (const auto& m : c_.months) month(m);
    return finish();
  }

 private:
  const SynthConfig& c_;
  Rng rng_;
  std::size_t n_ = 0;
  std::vector<Role> role_;
  std::vector<std::string> name_;
  std::vector<std::vector<std::uint32_t>> rings_;          // efos node ids
  std::vector<std::vector<std::uint32_t>> ring_colluders_; // honest node ids
  std::vector<std::uint32_t> loners_;
  std::vector<RawRecord> records_;

  // Nodes 0..n_efos-1 are EFOS, the rest honest. Names come from a seeded
  // permutation so identifiers carry no class information.
  void layout() {
    n_ = c_.n_efos + c_.n_honest;
    role_.assign(n_, Role::honest);
    std::fill(role_.begin(), role_.begin() + static_cast<std::ptrdiff_t>(c_.n_efos), Role::efos);
    std::vector<std::uint32_t> perm(n_);
    std::iota(perm.begin(), perm.end(), 0u);
    std::shuffle(perm.begin(), perm.end(), rng_);
    name_.resize(n_);
    const int width = n_ < 1000000 ? 6 : 9;
    for (std::size_t i = 0; i < n_; ++i) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "RFCA%0*u", width, perm[i]);
      name_[i] = buf;
    }
    for (std::size_t r = 0; r < c_.n_rings; ++r) {
      std::vector<std::uint32_t> members;
      for (std::size_t k = 0; k < c_.ring_size; ++k)
        members.push_back(static_cast<std::uint32_t>(r * c_.ring_size + k));
      rings_.push_back(std::move(members));
    }
    for (std::size_t e = c_.n_rings * c_.ring_size; e < c_.n_efos; ++e) loners_.push_back(static_cast<std::uint32_t>(e));

    std::vector<std::uint32_t> honest(c_.n_honest);
    std::iota(honest.begin(), honest.end(), static_cast<std::uint32_t>(c_.n_efos));
    std::shuffle(honest.begin(), honest.end(), rng_);
    ring_colluders_.resize(c_.n_rings);
    std::size_t next = 0;
    for (std::size_t r = 0; r < c_.n_rings; ++r)
      for (std::size_t k = 0; k < c_.edos_per_ring; ++k) {
        ring_colluders_[r].push_back(honest[next]);
        role_[honest[next++]] = Role::colluder;
      }
  }

  Centavos draw_amount(const LogNormalLaw& law, double boost, bool december) {
    std::lognormal_distribution<double> dist(law.mu + boost, law.sigma);
    double pesos = dist(rng_) * (december ? c_.december_uplift : 1.0);
    return std::max<Centavos>(1, std::llround(pesos * 100.0));
  }

  void emit(int period, std::uint32_t from, std::uint32_t to, TxKind kind, Centavos subtotal,
            std::int64_t tx_count) {
    const Centavos vat = std::llround(static_cast<double>(subtotal) * c_.vat_rate);
    const Centavos total = subtotal + vat;
    const double rate = role_[from] == Role::efos ? c_.efos_cancel_rate : c_.honest_cancel_rate;
    Centavos cancelled = 0;
    if (std::bernoulli_distribution(rate)(rng_)) {
      const double frac = std::uniform_real_distribution<double>(0.1, 1.0)(rng_);
      cancelled = std::llround(static_cast<double>(total) * frac);
    }
    records_.push_back({period, from, to, kind, tx_count, subtotal, vat, total, cancelled});
  }

  std::uint32_t random_other(std::uint32_t self, std::size_t lo, std::size_t hi) {
    std::uniform_int_distribution<std::size_t> pick(lo, hi - 1);
    for (;;) {
      auto v = static_cast<std::uint32_t>(pick(rng_));
      if (v != self) return v;
    }
  }

  void month(const MonthKey& m) {
    const int period = m.ordinal();
    const bool december = m.month == 12;
    std::uniform_int_distribution<std::int64_t> ring_tx(1, 12);
    std::uniform_int_distribution<std::int64_t> honest_tx(1, 3);
    std::bernoulli_distribution active(c_.ring_activity);
    std::poisson_distribution<int> clients(c_.efos_client_degree);

    auto efos_clients = [&](std::uint32_t e, int count) {
      for (int k = 0; k < count; ++k) {
        if (c_.n_honest == 0) return;
        auto to = random_other(e, c_.n_efos, n_);
        emit(period, e, to, TxKind::income, draw_amount(c_.efos_amount, 0.0, december), ring_tx(rng_));
      }
    };

    std::vector<char> ring_active(rings_.size());
    for (std::size_t r = 0; r < rings_.size(); ++r) {
      ring_active[r] = active(rng_);
      if (!ring_active[r]) continue;
      const auto& ring = rings_[r];
      for (std::size_t k = 0; k < ring.size(); ++k)
        emit(period, ring[k], ring[(k + 1) % ring.size()], TxKind::income,
             draw_amount(c_.efos_amount, c_.ring_amount_boost, december), ring_tx(rng_));
      for (auto colluder : ring_colluders_[r]) {
        std::vector<std::uint32_t> senders(ring);
        std::shuffle(senders.begin(), senders.end(), rng_);
        for (std::size_t k = 0; k < c_.colluder_links; ++k)
          emit(period, senders[k], colluder, TxKind::income, draw_amount(c_.efos_amount, 0.0, december),
               ring_tx(rng_));
      }
      for (auto e : ring) efos_clients(e, clients(rng_));
    }
    if (c_.bridge_rings && rings_.size() > 1) {
      for (std::size_t r = 0; r < rings_.size(); ++r) {
        const auto to = (r + 1) % rings_.size();
        if (ring_active[r] && ring_active[to])
          emit(period, rings_[r][0], rings_[to][0], TxKind::income,
               draw_amount(c_.efos_amount, c_.ring_amount_boost, december), ring_tx(rng_));
      }
    }
    for (auto e : loners_)
      if (active(rng_)) efos_clients(e, clients(rng_) + static_cast<int>(c_.colluder_links));

    std::poisson_distribution<int> degree(c_.honest_degree);
    std::bernoulli_distribution outcome(c_.outcome_rate);
    std::uniform_real_distribution<double> refund(0.05, 0.5);
    for (std::size_t h = c_.n_efos; h < n_; ++h) {
      const auto self = static_cast<std::uint32_t>(h);
      const int k = degree(rng_);
      for (int j = 0; j < k; ++j) {
        const auto to = random_other(self, 0, n_);
        const Centavos amount = draw_amount(c_.honest_amount, 0.0, december);
        emit(period, self, to, TxKind::income, amount, honest_tx(rng_));
        if (outcome(rng_))
          emit(period, self, to, TxKind::outcome,
               std::max<Centavos>(1, std::llround(static_cast<double>(amount) * refund(rng_))), 1);
      }
    }
  }

  SynthOutput finish() {
    auto key = [](const RawRecord& r) { return std::tie(r.period, r.emitter, r.receiver, r.kind); };
    std::sort(records_.begin(), records_.end(), [&](const auto& a, const auto& b) { return key(a) < key(b); });
    std::vector<RawRecord> merged;
    merged.reserve(records_.size());
    for (const auto& r : records_) {
      if (!merged.empty() && key(merged.back()) == key(r)) {
        auto& m = merged.back();
        m.tx_count += r.tx_count;
        m.subtotal += r.subtotal;
        m.vat += r.vat;
        m.total += r.total;
        m.cancelled += r.cancelled;
      } else {
        merged.push_back(r);
      }
    }
    records_.clear();
    records_.shrink_to_fit();

    GroundTruth truth;
    auto id = [&](std::uint32_t i) { return TaxpayerId(name_[i]); };
    for (std::size_t e = 0; e < c_.n_efos; ++e) truth.efos_ids.insert(id(static_cast<std::uint32_t>(e)));
    for (std::size_t r = 0; r < rings_.size(); ++r) {
      std::vector<TaxpayerId> members;
      for (auto m : rings_[r]) {
        truth.ring_membership.emplace(id(m), r);
        members.push_back(id(m));
      }
      truth.rings.push_back(std::move(members));
      for (auto col : ring_colluders_[r]) truth.colluder_ids.insert(id(col));
    }

    // Labels. Unlabeled ring members sit on non-adjacent cycle positions so
    // every ring edge keeps a labeled endpoint.
    const auto n_unlabeled =
        c_.n_efos - static_cast<std::size_t>(std::llround(c_.labeled_fraction * static_cast<double>(c_.n_efos)));
    std::vector<std::uint32_t> candidates(loners_);
    std::vector<std::uint32_t> fallback;
    for (const auto& ring : rings_) {
      const std::size_t s = ring.size();
      const std::size_t offset = std::uniform_int_distribution<std::size_t>(0, s - 1)(rng_);
      for (std::size_t k = 0; k < s; ++k) {
        const bool independent = k % 2 == 0 && k + 1 < s;
        (independent ? candidates : fallback).push_back(ring[(k + offset) % s]);
      }
    }
    std::shuffle(candidates.begin(), candidates.end(), rng_);
    std::shuffle(fallback.begin(), fallback.end(), rng_);
    candidates.insert(candidates.end(), fallback.begin(), fallback.end());
    std::vector<char> labeled(c_.n_efos, 1);
    for (std::size_t k = 0; k < std::min(n_unlabeled, candidates.size()); ++k) labeled[candidates[k]] = 0;

    LabelMap labels;
    std::bernoulli_distribution definitive(c_.definitive_share);
    for (std::size_t e = 0; e < c_.n_efos; ++e) {
      if (!labeled[e]) continue;
      auto tid = id(static_cast<std::uint32_t>(e));
      truth.labeled_ids.insert(tid);
      labels.emplace(tid, LabelRecord{tid, definitive(rng_) ? LabelKind::definitive_efos : LabelKind::alleged_efos});
    }

    RegistryMap registry;
    std::bernoulli_distribution missing(c_.registry_missing_rate);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> sector(1, 20), state(1, 32), year(2000, 2014), month(1, 12), day(1, 28);
    for (std::size_t i = 0; i < n_; ++i) {
      const bool planted = role_[i] != Role::honest;
      if (!planted && missing(rng_)) continue;
      TaxpayerRecord r;
      r.id = id(static_cast<std::uint32_t>(i));
      r.taxpayer_type = unit(rng_) < (planted ? c_.efos_legal_share : c_.honest_legal_share)
                            ? TaxpayerType::legal
                            : TaxpayerType::natural;
      const double s = unit(rng_);
      r.status = s < 0.9 ? TaxpayerStatus::active
                 : s < 0.94 ? TaxpayerStatus::cancelled
                 : s < 0.96 ? TaxpayerStatus::suspended
                            : TaxpayerStatus::unknown;
      char buf[32];
      std::snprintf(buf, sizeof buf, "%02d", sector(rng_));
      r.sector = buf;
      std::snprintf(buf, sizeof buf, "MX-%02d", state(rng_));
      r.location = buf;
      std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year(rng_), month(rng_), day(rng_));
      r.registered = buf;
      registry.emplace(r.id, std::move(r));
    }

    // Statements from nominal active income VAT per (emitter, year).
    std::map<std::pair<std::uint32_t, int>, Centavos> nominal;
    std::vector<char> emitted(n_, 0);
    for (const auto& r : merged) {
      emitted[r.emitter] = 1;
      if (r.kind != TxKind::income) continue;
      const int y = MonthKey::from_ordinal(r.period).year;
      nominal[{r.emitter, y}] += active_share(r.vat, r.cancelled, r.total);
    }
    truth.emitter_count = static_cast<std::size_t>(std::count(emitted.begin(), emitted.end(), 1));
    StatementMap statements;
    std::uniform_real_distribution<double> overpay(0.0, c_.honest_overpay);
    for (const auto& [key, vat] : nominal) {
      const auto [node, y] = key;
      Centavos paid = 0;
      switch (role_[node]) {
        case Role::efos: paid = std::llround(static_cast<double>(vat) * (1.0 - c_.efos_underreport)); break;
        case Role::colluder: paid = std::llround(static_cast<double>(vat) * (1.0 - c_.colluder_underreport)); break;
        case Role::honest: paid = vat + std::llround(static_cast<double>(vat) * overpay(rng_)); break;
      }
      auto tid = id(node);
      statements.emplace(std::pair{tid, y}, TaxStatement{tid, y, paid});
      if (role_[node] != Role::honest) truth.planted_gap[{tid, y}] = vat - paid;
    }

    std::vector<TransactionRecord> tx;
    tx.reserve(merged.size());
    for (const auto& r : merged)
      tx.push_back({id(r.emitter), id(r.receiver), MonthKey::from_ordinal(r.period), r.kind, r.tx_count,
                    r.subtotal, r.vat, r.total, r.cancelled});
    merged.clear();
    merged.shrink_to_fit();
    return {build_dataset(std::move(tx), std::move(registry), std::move(labels), std::move(statements)),
            std::move(truth)};
  }
};

}  // namespace

SynthOutput generate(const SynthConfig& config) {
  validate(config);
  return Economy(config).run();
}

void write_ground_truth(std::ostream& out, const GroundTruth& truth) {
  nlohmann::ordered_json j;
  auto ids = [](const std::set<TaxpayerId>& s) {
    std::vector<std::string> v;
    for (const auto& x : s) v.push_back(x.str());
    return v;
  };
  j["efos_ids"] = ids(truth.efos_ids);
  nlohmann::ordered_json rings = nlohmann::ordered_json::object();
  for (const auto& [id, r] : truth.ring_membership) rings[id.str()] = r;
  j["ring_membership"] = rings;
  j["colluder_ids"] = ids(truth.colluder_ids);
  std::vector<std::vector<std::string>> ordered;
  for (const auto& ring : truth.rings) {
    ordered.emplace_back();
    for (const auto& m : ring) ordered.back().push_back(m.str());
  }
  j["rings"] = ordered;
  j["labeled_ids"] = ids(truth.labeled_ids);
  j["emitter_count"] = truth.emitter_count;
  nlohmann::ordered_json gaps = nlohmann::ordered_json::array();
  for (const auto& [key, gap] : truth.planted_gap)
    gaps.push_back({{"id", key.first.str()}, {"year", key.second}, {"gap_centavos", gap}});
  j["planted_gap"] = gaps;
  out << j.dump(2) << '\n';
}

GroundTruth read_ground_truth(std::istream& in) {
  const auto j = nlohmann::json::parse(in);
  GroundTruth t;
  for (const auto& s : j.at("efos_ids")) t.efos_ids.emplace(s.get<std::string>());
  for (const auto& [k, v] : j.at("ring_membership").items()) t.ring_membership.emplace(TaxpayerId(k), v.get<std::size_t>());
  for (const auto& s : j.at("colluder_ids")) t.colluder_ids.emplace(s.get<std::string>());
  if (j.contains("rings"))
    for (const auto& ring : j["rings"]) {
      t.rings.emplace_back();
      for (const auto& m : ring) t.rings.back().emplace_back(m.get<std::string>());
    }
  if (j.contains("labeled_ids"))
    for (const auto& s : j["labeled_ids"]) t.labeled_ids.emplace(s.get<std::string>());
  t.emitter_count = j.value("emitter_count", std::size_t{0});
  if (j.contains("planted_gap"))
    for (const auto& g : j["planted_gap"])
      t.planted_gap[{TaxpayerId(g.at("id").get<std::string>()), g.at("year").get<int>()}] =
          g.at("gap_centavos").get<Centavos>();
  return t;
}

}  // namespace efos
