// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "efos/classifier/evaluation.hpp"
#include "efos/classifier/features.hpp"
#include "efos/classifier/forest.hpp"
#include "efos/classifier/sampling.hpp"
#include "efos/classifier/transforms.hpp"
#include "efos/estimate.hpp"
#include "efos/metrics.hpp"
#include "efos/rng.hpp"
#include "efos/synthgen.hpp"
#include "efos/table.hpp"
#include "oracles.hpp"

using namespace efos;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int run_cli(const std::string& command, const std::string& args) {
  const std::string cmd = "\"" EFOS_CLI_PATH "\" " + command + " -q " + args + " > /dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome scc_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::size_t> size(1, 12);
  std::uniform_real_distribution<double> dens(0.05, 0.5);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = size(rng);
    const auto g = oracle::make_graph(n, oracle::random_edges(n, dens(rng), rng));
    const auto p = strongly_connected_components(g);
    const auto label = oracle::mutual_reachability_components(g);
    for (NodeIndex a = 0; a < n; ++a)
      for (NodeIndex b = 0; b < n; ++b)
        if ((p.component[a] == p.component[b]) != (label[a] == label[b])) {
          ++mismatches;
          a = b = static_cast<NodeIndex>(n);
        }
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 10, fmt("1000 graphs, %d mismatches, %.2fs", mismatches, secs)};
}

Outcome reach_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::size_t> size(2, 500);
  std::uniform_real_distribution<double> dens(0.002, 0.02);
  int mismatches = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = size(rng);
    auto edges = oracle::random_edges(n, dens(rng), rng);
    std::vector<NodeIndex> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < n; ++i) edges.emplace_back(order[i], order[(i + 1) % n]);
    const auto g = oracle::make_graph(n, edges);
    const auto d = oracle::distances(g);
    for (NodeIndex v = 0; v < n; ++v) {
      const auto r = reach(g, v, 10);
      for (int k = 1; k <= 10; ++k) {
        std::size_t count = 0;
        for (std::size_t j = 0; j < n; ++j) count += d[v][j] <= k;
        if (r.at(k) != static_cast<double>(count) / static_cast<double>(n)) ++mismatches;
      }
    }
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 60, fmt("50 SCCs, %d mismatched values, %.2fs", mismatches, secs)};
}

Outcome auc_oracle() {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> size(2, 300);
  std::uniform_int_distribution<int> coarse(0, 25);
  std::bernoulli_distribution cls(0.4);
  double worst = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = size(rng);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = coarse(rng) / 25.0;
      y[i] = cls(rng);
    }
    y[0] = 1;
    y[1] = 0;
    worst = std::max(worst, std::abs(roc_auc(s, y).auc - oracle::concordance(s, y)));
  }
  return {worst <= 1e-9, fmt("200 sets, max |diff| = %.3g", worst)};
}

Outcome confusion_arithmetic() {
  const auto a = confusion_metrics(881, 0, 119, 0);
  const auto b = confusion_metrics(448, 84, 52, 416);
  const bool ok = std::abs(*a.recall - 0.881) < 1e-12 && std::abs(*a.f1 - 0.94) <= 0.005 &&
                  std::abs(*b.recall - 0.896) < 1e-12 && std::abs(*b.f1 - 0.87) <= 0.01;
  return {ok, fmt("recall %.3f F1 %.4f; recall %.3f F1 %.4f", *a.recall, *a.f1, *b.recall, *b.f1)};
}

Outcome ring_recovery(const SynthOutput& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& ds = out.dataset;
  const auto& truth = out.truth;
  const auto g = build_yearly_efos_network(ds, 2015);
  const auto p = strongly_connected_components(g);

  std::set<TaxpayerId> predicted;
  for (NodeIndex v = 0; v < g.node_count(); ++v)
    if (p.sizes[p.component[v]] >= 2) predicted.insert(g.id(v));
  std::size_t hits = 0;
  for (const auto& id : predicted) hits += truth.ring_membership.contains(id);

  // rings whose cycle edges all pass the yearly minimum must sit in one SCC
  std::size_t eligible = 0, intact = 0;
  const auto& tx = ds.transactions();
  for (const auto& ring : truth.rings) {
    bool passes = true;
    for (std::size_t k = 0; k < ring.size(); ++k) {
      const auto a = *ds.find(ring[k]);
      const auto b = *ds.find(ring[(k + 1) % ring.size()]);
      std::int64_t count = 0;
      for (auto r : ds.rows_emitted_by(a))
        if (tx.receiver[r] == b && tx.kind[r] == TxKind::income && tx.period[r].year == 2015) count += tx.tx_count[r];
      passes = passes && count >= 10;
    }
    if (!passes) continue;
    ++eligible;
    bool same = true;
    std::optional<std::uint32_t> comp;
    for (const auto& id : ring) {
      const auto v = g.find(id);
      if (!v) {
        same = false;
        break;
      }
      if (!comp) comp = p.component[*v];
      same = same && p.component[*v] == *comp;
    }
    intact += same;
  }
  const double precision = predicted.empty() ? 0 : double(hits) / double(predicted.size());
  const double recall = double(hits) / double(truth.ring_membership.size());
  const double secs = seconds_since(t0);
  const bool ok = intact == eligible && precision >= 0.95 && recall >= 0.95 && secs < 120;
  return {ok, fmt("%zu/%zu eligible rings intact, precision %.3f, recall %.3f, %.2fs", intact, eligible, precision,
                  recall, secs)};
}

Outcome network_separation(const SynthOutput& out) {
  const auto monthly = build_monthly_networks(out.dataset, 2015);
  int good = 0;
  for (const auto& g : monthly) {
    const auto s = largest_scc_subgraph(g, strongly_connected_components(g));
    std::vector<NodeIndex> efos, honest;
    for (NodeIndex v = 0; v < s.node_count(); ++v) {
      if (out.truth.efos_ids.contains(s.id(v))) efos.push_back(v);
      else if (!out.truth.colluder_ids.contains(s.id(v))) honest.push_back(v);
    }
    if (efos.empty() || honest.empty()) continue;
    const auto me = mean_reach(s, efos), mh = mean_reach(s, honest);
    bool ok = true;
    for (int d = 3; d <= 7; ++d) ok = ok && me[d - 1] >= mh[d - 1];
    good += ok;
  }
  return {good >= 10, fmt("%d of %zu monthly SCCs", good, monthly.size())};
}

Outcome proximity_discrimination() {
  double sum = 0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SynthConfig c;
    c.seed = seed;
    const auto out = generate(c);
    const auto& ds = out.dataset;
    std::set<TaxpayerId> efos;
    for (const auto& [id, l] : ds.labels()) efos.insert(id);
    const auto monthly = build_monthly_networks(ds, 2015);
    std::map<TaxpayerId, double> sigma;
    for (const auto& p : proximity_indices(monthly, efos)) sigma[p.node] = p.sigma;
    std::vector<double> scores;
    std::vector<int> classes;
    for (TaxpayerIndex i = 0; i < ds.taxpayer_count(); ++i) {
      if (ds.is_labeled_efos(i)) continue;
      const auto& id = ds.id(i);
      const auto it = sigma.find(id);
      scores.push_back(it == sigma.end() ? 0.0 : it->second);  // never close: lowest rank
      classes.push_back(out.truth.colluder_ids.contains(id) || out.truth.efos_ids.contains(id));
    }
    const double auc = roc_auc(scores, classes).auc;
    sum += auc;
    per_seed += fmt(" %.3f", auc);
  }
  const double mean = sum / 5;
  return {mean >= 0.90, fmt("mean AUC %.4f over seeds 1-5 (%s )", mean, per_seed.c_str())};
}

Outcome classifier_recovery() {
  double f1_sum = 0, worst_gap = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SynthConfig c;
    c.seed = seed;
    const auto out = generate(c);
    const auto& ds = out.dataset;
    const auto rows = build_features(ds, 2015);
    std::vector<FeatureRow> positives, unlabeled, honest;
    for (const auto& r : rows) {
      if (ds.is_labeled_efos(*ds.find(r.id))) {
        positives.push_back(r);
        continue;
      }
      unlabeled.push_back(r);
      if (!out.truth.efos_ids.contains(r.id) && !out.truth.colluder_ids.contains(r.id)) honest.push_back(r);
    }
    Rng rng(derive_seed(seed, "split"));
    std::shuffle(positives.begin(), positives.end(), rng);
    std::shuffle(honest.begin(), honest.end(), rng);
    const std::size_t n_train = (positives.size() * 7 + 5) / 10;
    std::vector<FeatureRow> train(positives.begin(), positives.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<FeatureRow> test(positives.begin() + static_cast<std::ptrdiff_t>(n_train), positives.end());
    const std::size_t n_pos_test = test.size();
    test.insert(test.end(), honest.begin(), honest.begin() + static_cast<std::ptrdiff_t>(n_pos_test));

    std::set<TaxpayerId> held;
    for (const auto& r : test) held.insert(r.id);
    std::vector<SampleClass> classes(train.size(), SampleClass::positive);
    for (const auto& r : unlabeled)
      if (!held.contains(r.id)) {
        train.push_back(r);
        classes.push_back(SampleClass::unlabeled);
      }
    const auto ts = undersample(train, classes, derive_seed(seed, "undersample"));
    ForestConfig fc;
    fc.n_trees = 100;
    fc.transform = Transform::boxcox;
    const auto model = train_forest(to_matrix(ts.rows), ts.classes, fc, derive_seed(seed, "forest"));

    std::vector<int> y(n_pos_test, 1);
    y.resize(test.size(), 0);
    const auto m = confusion_at(model.predict_proba(to_matrix(test)), y);
    f1_sum += m.f1.value_or(0);
    worst_gap = std::max(worst_gap, std::abs(model.oob_error - m.error));
  }
  const double f1 = f1_sum / 5;
  return {f1 >= 0.85 && worst_gap <= 0.05, fmt("mean held-out F1 %.4f, max |OOB - held-out error| %.4f", f1, worst_gap)};
}

Outcome transform_properties(const SynthOutput& out) {
  double worst_lambda = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    std::lognormal_distribution<double> law(8.0 + static_cast<double>(seed) / 5, 0.5 + static_cast<double>(seed) / 10);
    std::vector<double> col(2000);
    for (auto& v : col) v = law(rng);
    worst_lambda = std::max(worst_lambda, std::abs(box_cox_fit_column(col)));
  }

  std::vector<PcaModel> models;
  const auto features = to_matrix(build_features(out.dataset, 2015));
  models.push_back(pca_fit(features));
  models.push_back(pca_fit(box_cox_apply(box_cox_fit(features), features)));
  Rng rng(9);
  std::normal_distribution<double> z;
  for (std::size_t p : {2u, 3u, 7u}) {
    FeatureMatrix iso(5000, p), line(200, p);
    for (std::size_t r = 0; r < iso.rows(); ++r)
      for (std::size_t c = 0; c < p; ++c) iso(r, c) = z(rng);
    for (std::size_t r = 0; r < line.rows(); ++r)
      for (std::size_t c = 0; c < p; ++c) line(r, c) = static_cast<double>(r) * static_cast<double>(c + 1);
    models.push_back(pca_fit(iso));
    models.push_back(pca_fit(line));
  }
  double worst_dot = 0;
  bool ordered = true;
  for (const auto& m : models) {
    for (std::size_t a = 0; a < m.components.size(); ++a)
      for (std::size_t b = 0; b < m.components.size(); ++b) {
        double dot = 0;
        for (std::size_t j = 0; j < m.dimension(); ++j) dot += m.components[a][j] * m.components[b][j];
        worst_dot = std::max(worst_dot, std::abs(dot - (a == b ? 1.0 : 0.0)));
      }
    for (std::size_t a = 1; a < m.variances.size(); ++a) ordered = ordered && m.variances[a] <= m.variances[a - 1];
  }
  const bool ok = worst_lambda <= 0.15 && worst_dot <= 1e-9 && ordered;
  return {ok, fmt("max |lambda| %.3f over 10 seeds; %zu PCA fits, max orthonormality error %.2g, variances %s",
                  worst_lambda, models.size(), worst_dot, ordered ? "nonincreasing" : "UNORDERED")};
}

Outcome threshold_semantics() {
  const TaxpayerId a("a"), b("b");
  const YearlyProbas exact{{{a, 2015}, 0.8}, {{a, 2016}, 0.8}, {{b, 2015}, 0.9}, {{b, 2016}, 0.79}};
  const auto s = classify_yearly(exact, 0.8);
  bool ok = s.contains(a) && !s.contains(b);

  Rng rng(10);
  std::uniform_real_distribution<double> u(0, 1);
  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    YearlyProbas p;
    for (int i = 0; i < 20; ++i)
      for (int y = 2015; y <= 2015 + i % 4; ++y) p[{TaxpayerId("t" + std::to_string(i)), y}] = u(rng);
    const double t1 = u(rng), t2 = u(rng);
    const auto lo = classify_yearly(p, std::min(t1, t2));
    const auto hi = classify_yearly(p, std::max(t1, t2));
    violations += !std::includes(lo.begin(), lo.end(), hi.begin(), hi.end());
  }
  ok = ok && violations == 0;
  return {ok, fmt("0.8 everywhere -> suspicious, 0.79 once -> not; %d antitonicity violations in 1000 draws",
                  violations)};
}

Outcome estimate_bounds(const fs::path& run_dir) {
  // pipeline output against the generator's bookkeeping
  const auto truth = [&] {
    std::ifstream in(run_dir / "ground_truth.json");
    return read_ground_truth(in);
  }();
  const auto suspects_t = read_table(run_dir / "suspects.csv");
  const auto id_col = column_index(suspects_t, "id");
  const auto cohort_col = column_index(suspects_t, "cohort");
  std::set<TaxpayerId> suspects;
  for (const auto& row : suspects_t.rows())
    if (cell_text(row[cohort_col]) == "suspect") suspects.insert(TaxpayerId(cell_text(row[id_col])));

  const auto est = read_table(run_dir / "estimates.csv");
  bool ok = est.rows().size() > 0;
  std::string detail;
  for (const auto& row : est.rows()) {
    const int year = std::stoi(cell_text(row[column_index(est, "year")]));
    const double lo = std::stod(cell_text(row[column_index(est, "min_estimate")]));
    const double hi = std::stod(cell_text(row[column_index(est, "max_estimate")]));
    double planted = 0;
    for (const auto& [key, gap] : truth.planted_gap)
      if (key.second == year && suspects.contains(key.first)) planted += std::max<Centavos>(gap, 0) / 100.0;
    const double rel = planted > 0 ? std::abs(hi - planted) / planted : 1.0;
    ok = ok && lo <= hi && rel <= 0.05;
    detail += fmt("%d: min %.2f <= max %.2f, planted %.2f (%.2f%%); ", year, lo, hi, planted, 100 * rel);
  }

  // linearity and floor over random gap vectors
  Rng rng(11);
  std::uniform_int_distribution<Centavos> gap(-80000, 80000);
  std::uniform_int_distribution<std::size_t> size(1, 10);
  int violations = 0;
  auto estimate_for = [](const std::vector<Centavos>& gaps, const std::set<std::size_t>& pick) {
    std::vector<TransactionRecord> recs;
    StatementMap st;
    std::set<TaxpayerId> sus;
    std::vector<ProximityIndex> idx;
    for (std::size_t i = 0; i < gaps.size(); ++i) {
      const TaxpayerId id("s" + std::to_string(i));
      const Centavos nominal = 200000;
      recs.push_back({id, TaxpayerId("buyer"), {2015, 1}, TxKind::income, 1, 1000000, nominal, 1200000, 0});
      st[{id, 2015}] = {id, 2015, nominal - gaps[i]};
      if (pick.contains(i)) sus.insert(id);
      ProximityIndex p;
      p.node = id;
      p.year = 2015;
      p.sigma = 1;
      idx.push_back(p);
    }
    return evasion_estimate(build_dataset(recs, {}, {}, st), sus, idx, 2015);
  };
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = size(rng);
    std::vector<Centavos> g(n), scaled(n);
    std::set<std::size_t> all, left, right;
    Centavos floored = 0;
    std::bernoulli_distribution coin(0.5);
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = gap(rng);
      scaled[i] = 3 * g[i];
      floored += std::max<Centavos>(g[i], 0);
      all.insert(i);
      (coin(rng) ? left : right).insert(i);
    }
    const auto e = estimate_for(g, all);
    Centavos parts = 0;
    if (!left.empty()) parts += estimate_for(g, left).max_estimate;
    if (!right.empty()) parts += estimate_for(g, right).max_estimate;
    violations += e.max_estimate != floored;
    violations += parts != e.max_estimate;
    violations += estimate_for(scaled, all).max_estimate != 3 * e.max_estimate;
    violations += e.min_estimate > e.max_estimate;
  }
  ok = ok && violations == 0;
  detail += fmt("%d invariant violations on 1000 gap vectors", violations);
  return {ok, detail};
}

Outcome determinism(const fs::path& base) {
  const auto one = base / "threads1", eight = base / "threads8";
  fs::create_directories(eight);
  for (std::string input : {"transactions.csv", "registry.csv", "labels.csv", "statements.csv", "ground_truth.json"})
    for (const auto& name : {input, input + ".meta.json"})
      fs::copy_file(one / name, eight / name, fs::copy_options::overwrite_existing);
  const int rc = run_cli("pipeline", "--threads 8 -o \"" + eight.string() + "\"");
  if (rc != 0) return {false, fmt("pipeline at 8 threads exited %d", rc)};
  std::size_t compared = 0, differing = 0;
  for (const auto& entry : fs::directory_iterator(one)) {
    ++compared;
    const auto other = eight / entry.path().filename();
    if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) ++differing;
  }
  return {differing == 0 && compared > 0, fmt("%zu files compared, %zu differ", compared, differing)};
}

}  // namespace

int main() {
  const auto base = fs::temp_directory_path() / "efos_acceptance";
  fs::remove_all(base);
  const auto run_dir = base / "threads1";

  int failures = 0;
  auto report = [&](const char* id, const char* name, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("[%s] %-3s %-28s %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
  };

  report("C1", "scc oracle", scc_oracle);
  report("C2", "reach oracle", reach_oracle);
  report("C3", "auc oracle", auc_oracle);
  report("C4", "confusion arithmetic", confusion_arithmetic);

  const auto economy = generate(SynthConfig{});
  report("C5", "planted ring recovery", [&] { return ring_recovery(economy); });
  report("C6", "network separation", [&] { return network_separation(economy); });
  report("C7", "proximity discrimination", proximity_discrimination);
  report("C8", "classifier recovery", classifier_recovery);
  report("C9", "transform properties", [&] { return transform_properties(economy); });
  report("C10", "threshold semantics", threshold_semantics);

  const int gen = run_cli("generate", "-o \"" + run_dir.string() + "\"");
  const int pipe = gen == 0 ? run_cli("pipeline", "--threads 1 -o \"" + run_dir.string() + "\"") : -1;
  if (gen != 0 || pipe != 0) {
    const auto msg = fmt("generate exited %d, pipeline exited %d", gen, pipe);
    report("C11", "estimate bounds", [&] { return Outcome{false, msg}; });
    report("C12", "determinism", [&] { return Outcome{false, msg}; });
  } else {
    report("C11", "estimate bounds", [&] { return estimate_bounds(run_dir); });
    report("C12", "determinism", [&] { return determinism(base); });
  }

  fs::remove_all(base);
  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
