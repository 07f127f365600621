#include "efos/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "efos/classifier/evaluation.hpp"
#include "efos/classifier/features.hpp"
#include "efos/classifier/importance.hpp"
#include "efos/classifier/sampling.hpp"
#include "efos/estimate.hpp"
#include "efos/rng.hpp"
#include "json.hpp"

namespace efos {

namespace fs = std::filesystem;

namespace {

constexpr int kArtifactVersion = 1;

std::string ext(ExportFormat f) { return f == ExportFormat::csv ? ".csv" : ".jsonl"; }

std::optional<double> parse_optional_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::stod(s);
}

std::vector<std::string> feature_names() { return {kFeatureNames.begin(), kFeatureNames.end()}; }

std::uint64_t year_seed(std::uint64_t root, std::string_view stream, int year) {
  return derive_seed(derive_seed(root, stream), static_cast<std::uint64_t>(year));
}

std::string model_stem(Transform t, int year) {
  return "model_" + std::string(to_string(t)) + "_" + std::to_string(year);
}

std::string scores_stem(Transform t) { return "scores_" + std::string(to_string(t)); }

double pesos(double centavos) { return centavos / 100.0; }

}  // namespace

StageContext::StageContext(RunConfig config, std::ostream* log)
    : config_(std::move(config)), log_(log), hash_(config_hash(config_)) {
  config_.validate();
}

InputPaths StageContext::input_paths() const {
  auto pick = [&](const fs::path& given, const char* name) -> fs::path {
    if (!given.empty()) return given;
    for (const char* e : {".csv", ".jsonl"}) {
      auto p = config_.output_dir / (std::string(name) + e);
      if (fs::exists(p)) return p;
    }
    return {};
  };
  return {pick(config_.transactions, "transactions"), pick(config_.registry, "registry"),
          pick(config_.labels, "labels"), pick(config_.statements, "statements")};
}

const Dataset& StageContext::dataset() {
  if (!loaded_) {
    const auto paths = input_paths();
    if (paths.transactions.empty()) throw Error("missing_input", "no transactions file given or found");
    loaded_ = load_dataset(paths, config_.max_errors);
    note("loaded " + std::to_string(loaded_->dataset.transactions().size()) + " aggregated records, " +
         std::to_string(loaded_->dataset.taxpayer_count()) + " taxpayers");
  }
  return loaded_->dataset;
}

const std::vector<std::pair<std::string, Diagnostic>>& StageContext::load_diagnostics() {
  dataset();
  return loaded_->diagnostics;
}

std::vector<int> StageContext::years() {
  if (!config_.years.empty()) return config_.years;
  return dataset().years();
}

fs::path StageContext::artifact(const std::string& stem) const {
  return config_.output_dir / (stem + ext(config_.format));
}
fs::path StageContext::json_artifact(const std::string& stem) const { return config_.output_dir / (stem + ".json"); }

void StageContext::sidecar(const fs::path& path, const std::string& stage) {
  nlohmann::ordered_json meta;
  meta["artifact"] = path.filename().string();
  meta["stage"] = stage;
  meta["config_hash"] = hash_;
  meta["seed"] = config_.seed;
  meta["version"] = kArtifactVersion;
  std::ofstream out(path.string() + ".meta.json", std::ios::binary);
  if (!out) throw Error("io", "cannot write sidecar for " + path.string());
  out << meta.dump(2) << '\n';
}

void StageContext::save_stream(const fs::path& path, const std::string& stage,
                               const std::function<void(std::ostream&)>& writer) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("io", "cannot write " + path.string());
    writer(out);
    if (!out) throw Error("io", "write failed for " + path.string());
  }
  sidecar(path, stage);
  written_.push_back(path);
}

void StageContext::save(const Table& table, const std::string& stem, const std::string& stage) {
  save_stream(artifact(stem), stage, [&](std::ostream& o) { table.write(o, config_.format); });
}

void StageContext::save_json(const std::string& json_text, const std::string& stem, const std::string& stage) {
  save_stream(json_artifact(stem), stage, [&](std::ostream& o) { o << json_text << '\n'; });
}

void StageContext::note(const std::string& message) {
  if (log_) *log_ << message << '\n';
}

void run_generate(StageContext& ctx) {
  auto synth = ctx.config().synth;
  synth.seed = derive_seed(ctx.config().seed, "generator");
  validate(synth);
  const auto out = generate(synth);
  const auto& ds = out.dataset;
  const auto format = ctx.config().format;
  const auto records = ds.records();
  ctx.save_stream(ctx.artifact("transactions"), "generate",
                  [&](std::ostream& o) { write_transactions(o, records, format); });
  ctx.save_stream(ctx.artifact("registry"), "generate",
                  [&](std::ostream& o) { write_registry(o, ds.registry(), format); });
  ctx.save_stream(ctx.artifact("labels"), "generate", [&](std::ostream& o) { write_labels(o, ds.labels(), format); });
  ctx.save_stream(ctx.artifact("statements"), "generate",
                  [&](std::ostream& o) { write_statements(o, ds.statements(), format); });
  ctx.save_stream(ctx.json_artifact("ground_truth"), "generate",
                  [&](std::ostream& o) { write_ground_truth(o, out.truth); });
  ctx.note("generated " + std::to_string(records.size()) + " records for " + std::to_string(ds.taxpayer_count()) +
           " taxpayers");
}

std::size_t run_validate(StageContext& ctx) {
  const auto& ds = ctx.dataset();
  const auto& diags = ctx.load_diagnostics();
  Table t({"file", "kind", "line", "reason"});
  for (const auto& [file, d] : diags)
    t.add_row({file, std::string(to_string(d.kind)), static_cast<std::int64_t>(d.line), d.reason});
  ctx.save(t, "diagnostics", "validate");

  nlohmann::ordered_json summary;
  summary["records"] = ds.transactions().size();
  summary["taxpayers"] = ds.taxpayer_count();
  summary["active_emitters"] = ds.active_emitter_count();
  summary["labeled"] = ds.labels().size();
  summary["statements"] = ds.statements().size();
  summary["periods"] = ds.periods().size();
  summary["diagnostics"] = diags.size();
  ctx.save_json(summary.dump(2), "validation_summary", "validate");
  ctx.note(std::to_string(diags.size()) + " diagnostics");
  return diags.size();
}

void run_regime(StageContext& ctx) {
  const auto& ds = ctx.dataset();
  Table t({"period", "q1", "q3", "sample_size"});
  for (int year : ctx.years()) {
    for (const auto& period : ds.periods_in_year(year)) {
      try {
        const auto r = compute_activity_regime(ds, period, ctx.config().monthly_kinds);
        t.add_row({to_string(period), pesos(r.q1), pesos(r.q3), static_cast<std::int64_t>(r.sample_size)});
      } catch (const Error& e) {
        if (e.code() != "no_efos_activity") throw;
        t.add_row({to_string(period), Table::Cell{}, Table::Cell{}, std::int64_t{0}});
      }
    }
  }
  ctx.save(t, "regime", "regime");
}

namespace {

void add_scc_row(Table& t, const std::string& slice, const TemporalGraph& g) {
  const auto p = strongly_connected_components(g);
  std::size_t active = 0;
  for (NodeIndex v = 0; v < g.node_count(); ++v)
    if (!g.out_neighbors(v).empty() || !g.in_neighbors(v).empty()) ++active;
  std::size_t largest = 0, largest_efos = 0;
  if (g.node_count() > 0) {
    largest = p.sizes[p.largest];
    for (auto v : p.members(p.largest)) largest_efos += static_cast<std::size_t>(g.is_efos(v));
  }
  t.add_row({slice, static_cast<std::int64_t>(active), static_cast<std::int64_t>(g.edge_count()),
             static_cast<std::int64_t>(p.nontrivial_count()), static_cast<std::int64_t>(largest),
             static_cast<std::int64_t>(largest_efos)});
}

}  // namespace

void run_network(StageContext& ctx) {
  const auto& ds = ctx.dataset();
  const auto& cfg = ctx.config();
  Table stats({"slice", "nodes", "edges", "nontrivial_sccs", "largest_scc", "largest_scc_efos"});
  for (int year : ctx.years()) {
    const auto yearly = build_yearly_efos_network(ds, year, cfg.yearly);
    add_scc_row(stats, "efos-" + std::to_string(year), yearly);
    const auto stem = "yearly_efos_" + std::to_string(year);
    ctx.save_stream(cfg.output_dir / (stem + "_edges.csv"), "network",
                    [&](std::ostream& o) { write_edge_list(o, yearly); });
    ctx.save_stream(cfg.output_dir / (stem + "_nodes.csv"), "network",
                    [&](std::ostream& o) { write_node_classes(o, yearly); });
    for (const auto& g : build_monthly_networks(ds, year, cfg.monthly_kinds, cfg.threads))
      add_scc_row(stats, g.slice().label(), g);
  }
  ctx.save(stats, "network_stats", "network");
}

void run_metrics(StageContext& ctx) {
  const auto& ds = ctx.dataset();
  const auto& cfg = ctx.config();
  std::set<TaxpayerId> efos;
  for (const auto& [id, label] : ds.labels()) efos.insert(id);

  Table reach_table({"slice", "d", "mean_reach_efos", "mean_reach_unclassified"});
  Table close_hist({"slice", "close_count", "node_fraction"});
  Table prox({"id", "year", "close_efos", "months_close", "sigma", "sigma_hat", "selected", "top_quartile"});
  for (int year : ctx.years()) {
    const auto monthly = build_monthly_networks(ds, year, cfg.monthly_kinds, cfg.threads);
    for (const auto& g : monthly) {
      const auto efos_nodes_g = efos_nodes(g);
      const auto close = close_efos_sets(g, efos_nodes_g, cfg.proximity.close, cfg.proximity.max_distance);
      std::map<std::size_t, std::size_t> histogram;
      std::size_t active = 0;
      for (NodeIndex v = 0; v < g.node_count(); ++v) {
        if (g.out_neighbors(v).empty() && g.in_neighbors(v).empty()) continue;
        ++active;
        ++histogram[close[v].size()];
      }
      for (const auto& [count, nodes] : histogram)
        close_hist.add_row({g.slice().label(), static_cast<std::int64_t>(count),
                            static_cast<double>(nodes) / static_cast<double>(active)});

      const auto p = strongly_connected_components(g);
      if (g.node_count() == 0 || p.sizes[p.largest] < 2) continue;
      const auto scc = largest_scc_subgraph(g, p);
      std::vector<NodeIndex> group[2];
      for (NodeIndex v = 0; v < scc.node_count(); ++v) group[scc.is_efos(v) ? 0 : 1].push_back(v);
      std::vector<double> curve[2];
      for (int k = 0; k < 2; ++k)
        if (!group[k].empty()) curve[k] = mean_reach(scc, group[k], cfg.d_max, cfg.threads);
      for (int d = 1; d <= cfg.d_max; ++d) {
        auto at = [&](int k) -> Table::Cell {
          if (curve[k].empty()) return {};
          return curve[k][static_cast<std::size_t>(d - 1)];
        };
        reach_table.add_row({g.slice().label(), std::int64_t{d}, at(0), at(1)});
      }
    }
    if (monthly.empty()) continue;
    auto indices = proximity_indices(monthly, efos, cfg.proximity, cfg.threads);
    if (indices.empty()) continue;
    const auto top = quartile_cut(indices, cfg.quartile);
    for (const auto& q : indices)
      prox.add_row({q.node.str(), std::int64_t{q.year}, q.total_close_efos, std::int64_t{q.months_close}, q.sigma,
                    q.sigma_hat, std::int64_t{q.sigma_hat >= cfg.theta_sigma ? 1 : 0},
                    std::int64_t{top.contains(q.node) ? 1 : 0}});
  }
  ctx.save(reach_table, "reach", "metrics");
  ctx.save(close_hist, "close_histogram", "metrics");
  ctx.save(prox, "proximity", "metrics");
}

void run_train(StageContext& ctx) {
  const auto& ds = ctx.dataset();
  const auto& cfg = ctx.config();
  Table summary({"scenario", "year", "train_rows", "oob_error", "oob_auc", "oob_f1"});
  for (auto scenario : cfg.scenarios) {
    for (int year : ctx.years()) {
      const auto rows = build_features(ds, year);
      const auto classes = sample_classes(ds, rows, cfg.positives);
      const auto sample = undersample(rows, classes, year_seed(cfg.seed, "undersample", year));
      auto fc = cfg.forest;
      fc.transform = scenario;
      const auto model = train_forest(to_matrix(sample.rows), sample.classes, fc,
                                      year_seed(cfg.seed, "forest", year), cfg.threads, feature_names());

      auto j = to_json(model);
      nlohmann::ordered_json training = nlohmann::ordered_json::array();
      std::vector<double> oob;
      std::vector<int> oob_classes;
      for (std::size_t r = 0; r < sample.rows.size(); ++r) {
        const double p = model.oob_proba[r];
        nlohmann::ordered_json item{{"id", sample.rows[r].id.str()}, {"class", sample.classes[r]}};
        item["oob"] = std::isnan(p) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(p);
        training.push_back(std::move(item));
        if (!std::isnan(p)) {
          oob.push_back(p);
          oob_classes.push_back(sample.classes[r]);
        }
      }
      j["year"] = year;
      j["training"] = std::move(training);
      ctx.save_json(j.dump(), model_stem(scenario, year), "train");

      Table::Cell auc, f1;
      try {
        auc = roc_auc(oob, oob_classes).auc;
        if (auto m = confusion_at(oob, oob_classes, kDecisionThreshold); m.f1) f1 = *m.f1;
      } catch (const Error&) {
      }
      summary.add_row({std::string(to_string(scenario)), std::int64_t{year},
                       static_cast<std::int64_t>(sample.rows.size()), model.oob_error, auc, f1});
      ctx.note("trained " + std::string(to_string(scenario)) + " " + std::to_string(year) +
               " oob_error=" + format_double(model.oob_error));
    }
  }
  ctx.save(summary, "scenarios", "train");
}

namespace {

struct LoadedModel {
  ForestModel model;
  std::vector<std::pair<TaxpayerId, int>> training;  // id, class
  std::map<TaxpayerId, double> oob;
};

LoadedModel load_model(const StageContext& ctx, Transform scenario, int year) {
  const auto path = ctx.json_artifact(model_stem(scenario, year));
  std::ifstream in(path);
  if (!in) throw Error("missing_input", "model " + path.string() + " not found; run train first");
  const auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error("bad_model", "cannot parse " + path.string());
  LoadedModel out{forest_from_json(j), {}, {}};
  for (const auto& item : j.value("training", nlohmann::json::array())) {
    TaxpayerId id(item.at("id").get<std::string>());
    out.training.emplace_back(id, item.at("class").get<int>());
    if (!item.at("oob").is_null()) out.oob[id] = item.at("oob").get<double>();
  }
  return out;
}

}  // namespace

void run_score(StageContext& ctx) {
  const auto& ds = ctx.dataset();
  const auto& cfg = ctx.config();
  for (auto scenario : cfg.scenarios) {
    Table scores({"id", "year", "proba"});
    std::vector<double> labeled, unlabeled;
    for (int year : ctx.years()) {
      const auto m = load_model(ctx, scenario, year);
      const auto rows = build_features(ds, year);
      auto proba = m.model.predict_proba(to_matrix(rows), cfg.threads);
      for (std::size_t r = 0; r < rows.size(); ++r) {
        // training rows are scored by the trees that did not see them
        if (auto it = m.oob.find(rows[r].id); it != m.oob.end()) proba[r] = it->second;
        scores.add_row({rows[r].id.str(), std::int64_t{year}, proba[r]});
        const auto i = ds.find(rows[r].id);
        (i && ds.is_labeled_efos(*i) ? labeled : unlabeled).push_back(proba[r]);
      }
    }
    ctx.save(scores, scores_stem(scenario), "score");

    Table hist({"cohort", "bin_lo", "bin_hi", "fraction"});
    for (const auto& [name, values] : {std::pair{"labeled_efos", &labeled}, std::pair{"unlabeled", &unlabeled}})
      for (const auto& b : probability_histogram(*values, cfg.histogram_bins))
        hist.add_row({std::string(name), b.lo, b.hi, b.fraction});
    ctx.save(hist, "histogram_" + std::string(to_string(scenario)), "score");
  }
}

void run_importance(StageContext& ctx) {
  const auto& ds = ctx.dataset();
  const auto& cfg = ctx.config();
  for (auto scenario : cfg.scenarios) {
    Table t({"year", "method", "rank", "feature", "score"});
    for (int year : ctx.years()) {
      const auto m = load_model(ctx, scenario, year);
      std::map<TaxpayerId, FeatureRow> by_id;
      for (auto& r : build_features(ds, year)) by_id.emplace(r.id, r);
      FeatureMatrix sample;
      for (const auto& [id, cls] : m.training)
        if (auto it = by_id.find(id); it != by_id.end()) sample.append_row(it->second.values());
      if (sample.rows() == 0) continue;

      const auto perturbed = perturbation_importance(m.model, sample, cfg.noise_scale,
                                                     year_seed(cfg.seed, "importance", year), cfg.threads);
      for (std::size_t k = 0; k < perturbed.size(); ++k)
        t.add_row({std::int64_t{year}, std::string("perturbation"), static_cast<std::int64_t>(k + 1),
                   perturbed[k].name, perturbed[k].score});

      // loadings in the space the forest saw
      PcaModel pca = m.model.config.transform == Transform::pca ? m.model.pca : PcaModel{};
      if (pca.components.empty()) {
        FeatureMatrix input;
        for (std::size_t r = 0; r < sample.rows(); ++r) input.append_row(m.model.transform_row(sample.row(r)));
        if (input.rows() >= 2) pca = pca_fit(input);
      }
      if (!pca.components.empty()) {
        const auto loadings = pca_importance(pca, feature_names());
        for (std::size_t k = 0; k < loadings.size(); ++k)
          t.add_row({std::int64_t{year}, std::string("pca_loading"), static_cast<std::int64_t>(k + 1),
                     loadings[k].name, loadings[k].score});
      }
    }
    ctx.save(t, "importance_" + std::string(to_string(scenario)), "importance");
  }
}

void run_report(StageContext& ctx) {
  const auto& ds = ctx.dataset();
  const auto& cfg = ctx.config();
  const auto years = ctx.years();

  // Stage outputs only: scores and proximity indices come from disk.
  std::vector<std::set<TaxpayerId>> lists;
  YearlyProbas first_probas;
  for (auto scenario : cfg.scenarios) {
    const auto t = read_table(ctx.artifact(scores_stem(scenario)));
    const auto c_id = column_index(t, "id"), c_year = column_index(t, "year"), c_p = column_index(t, "proba");
    YearlyProbas probas;
    for (const auto& row : t.rows()) {
      TaxpayerId id(cell_text(row[c_id]));
      const auto i = ds.find(id);
      if (i && ds.is_labeled_efos(*i)) continue;
      probas[{id, std::stoi(cell_text(row[c_year]))}] = std::stod(cell_text(row[c_p]));
    }
    lists.push_back(classify_yearly(probas, cfg.proba_threshold));
    if (lists.size() == 1) first_probas = std::move(probas);
  }
  auto suspects = lists.front();
  for (std::size_t k = 1; k < lists.size(); ++k) suspects = intersect_suspects(suspects, lists[k]);

  std::vector<ProximityIndex> indices;
  {
    const auto t = read_table(ctx.artifact("proximity"));
    const auto c_id = column_index(t, "id"), c_year = column_index(t, "year"), c_close = column_index(t, "close_efos"),
               c_months = column_index(t, "months_close"), c_sigma = column_index(t, "sigma"),
               c_hat = column_index(t, "sigma_hat");
    for (const auto& row : t.rows()) {
      ProximityIndex q;
      q.node = TaxpayerId(cell_text(row[c_id]));
      q.year = std::stoi(cell_text(row[c_year]));
      q.total_close_efos = std::stoll(cell_text(row[c_close]));
      q.months_close = std::stoi(cell_text(row[c_months]));
      q.sigma = parse_optional_double(cell_text(row[c_sigma])).value_or(0.0);
      q.sigma_hat = parse_optional_double(cell_text(row[c_hat])).value_or(0.0);
      indices.push_back(std::move(q));
    }
  }

  ReportBundle bundle;
  bundle.suspects = build_suspect_report(ds, first_probas, suspects, indices);
  std::vector<std::string> diagnostics;
  for (int year : years) {
    if (suspects.empty()) {
      bundle.estimates.push_back({year, 0, 0, 0, 0});
      continue;
    }
    bundle.estimates.push_back(evasion_estimate(ds, suspects, indices, year, cfg.quartile, &diagnostics));
  }
  bundle.breakdown = taxpayer_breakdown(ds.registry(), suspects);

  Cohorts cohorts;
  for (const auto& [id, label] : ds.labels())
    cohorts[label.label == LabelKind::definitive_efos ? "definitive_efos" : "alleged_efos"].insert(id);
  if (!suspects.empty()) cohorts["suspect"] = suspects;
  for (TaxpayerIndex i = 0; i < ds.taxpayer_count(); ++i)
    if (!ds.is_labeled_efos(i) && !suspects.contains(ds.id(i))) cohorts["unclassified"].insert(ds.id(i));
  bundle.cohort_quartiles = cohort_distribution_summary(ds, cohorts);

  ctx.save(suspects_table(bundle.suspects), "suspects", "report");
  ctx.save(estimates_table(bundle.estimates), "estimates", "report");
  ctx.save(breakdown_table(bundle.breakdown), "breakdown", "report");
  ctx.save(cohort_quartiles_table(bundle.cohort_quartiles), "cohort_quartiles", "report");

  std::size_t selected = 0, selected_suspects = 0;
  for (const auto& q : indices)
    if (q.sigma_hat >= cfg.theta_sigma) {
      ++selected;
      selected_suspects += static_cast<std::size_t>(suspects.contains(q.node));
    }
  nlohmann::ordered_json summary;
  nlohmann::ordered_json per_scenario = nlohmann::ordered_json::object();
  for (std::size_t k = 0; k < cfg.scenarios.size(); ++k)
    per_scenario[std::string(to_string(cfg.scenarios[k]))] = lists[k].size();
  summary["suspects_per_scenario"] = per_scenario;
  summary["suspects"] = suspects.size();
  summary["proximity_selected"] = selected;
  summary["proximity_selected_suspects"] = selected_suspects;
  summary["diagnostics"] = diagnostics;
  ctx.save_json(summary.dump(2), "report_summary", "report");
  ctx.note(std::to_string(suspects.size()) + " suspects");
}

void run_pipeline(StageContext& ctx) {
  run_validate(ctx);
  run_regime(ctx);
  run_network(ctx);
  run_metrics(ctx);
  run_train(ctx);
  run_score(ctx);
  run_importance(ctx);
  run_report(ctx);
}

}  // namespace efos
