#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>
#include <random>

#include "efos/classifier/evaluation.hpp"
#include "efos/classifier/features.hpp"
#include "efos/classifier/forest.hpp"
#include "efos/classifier/importance.hpp"
#include "efos/classifier/sampling.hpp"
#include "efos/classifier/transforms.hpp"
#include "efos/synthgen.hpp"
#include "oracles.hpp"

using namespace efos;

namespace {

TransactionRecord tx(const char* from, const char* to, int month, Centavos subtotal, Centavos cancelled = 0) {
  const Centavos vat = subtotal * 16 / 100;
  return {TaxpayerId(from), TaxpayerId(to), MonthKey{2015, month}, TxKind::income, 1, subtotal, vat,
          subtotal + vat,   cancelled};
}

FeatureRow row(std::string id, Centavos v = 1) {
  FeatureRow r;
  r.id = TaxpayerId(std::move(id));
  r.year = 2015;
  r.sub_active = v;
  return r;
}

std::vector<FeatureRow> rows_named(const char* prefix, std::size_t n) {
  std::vector<FeatureRow> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(row(prefix + std::to_string(i), static_cast<Centavos>(i + 1)));
  return out;
}

void check_pca(const PcaModel& m) {
  const auto k = m.components.size();
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) {
      double dot = 0;
      for (std::size_t j = 0; j < m.dimension(); ++j) dot += m.components[a][j] * m.components[b][j];
      CHECK(std::abs(dot - (a == b ? 1.0 : 0.0)) < 1e-9);
    }
  for (std::size_t a = 1; a < m.variances.size(); ++a) CHECK(m.variances[a] <= m.variances[a - 1]);
}

FeatureMatrix gaussian(std::size_t n, std::size_t p, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  FeatureMatrix m(n, p);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < p; ++c) m(r, c) = z(rng);
  return m;
}

// Two shifted gaussian clouds in p dimensions; only feature 0 separates them.
std::pair<FeatureMatrix, std::vector<int>> two_clouds(std::size_t n, std::size_t p, double gap,
                                                      std::mt19937_64& rng) {
  auto x = gaussian(2 * n, p, rng);
  std::vector<int> y(2 * n);
  for (std::size_t r = 0; r < 2 * n; ++r) {
    y[r] = r < n ? 1 : 0;
    if (y[r]) x(r, 0) += gap;
  }
  return {x, y};
}

ForestModel forest_of_votes(std::size_t yes, std::size_t total) {
  ForestModel m;
  m.n_features = 1;
  for (std::size_t t = 0; t < total; ++t) m.trees.emplace_back(std::vector<TreeNode>{{-1, 0, 0, 0, t < yes ? 1 : 0}});
  return m;
}

}  // namespace

TEST_CASE("feature rows aggregate one emitter-year") {
  auto ds = build_dataset({tx("A", "B", 1, 1000), tx("A", "C", 2, 2000, 1160), tx("B", "C", 1, 50),
                           {TaxpayerId("A"), TaxpayerId("C"), {2016, 1}, TxKind::income, 1, 7, 0, 7, 0}});
  const auto f = build_features(ds, 2015);
  REQUIRE(f.size() == 2);
  const auto& a = f[0];
  CHECK(a.id == TaxpayerId("A"));
  // second record is half cancelled
  CHECK(a.sub_active == 1000 + 1000);
  CHECK(a.total_active == 1160);
  CHECK(a.total_after_active == 1160 + 2320 - 1160);
  CHECK(a.vat_after_active == 160 + 160);
  CHECK(a.cancelled_amount == 1160);
  CHECK(a.tx_count == 2);
  CHECK(a.distinct_receivers == 2);
  CHECK(f[1].id == TaxpayerId("B"));
  CHECK(f[1].sub_active == 50);
  CHECK(build_features(ds, 2014).empty());

  const auto single = build_features(build_dataset({tx("A", "B", 1, 1000)}), 2015);
  CHECK(single[0].sub_active == 1000);
  CHECK(single[0].cancelled_amount == 0);
  const auto m = to_matrix(f);
  CHECK(m.rows() == 2);
  CHECK(m.cols() == kFeatureCount);
  CHECK(m(0, 0) == 2000);
}

TEST_CASE("undersample balances positives against unlabeled rows") {
  auto rows = rows_named("e", 10);
  auto un = rows_named("u", 1000);
  rows.insert(rows.end(), un.begin(), un.end());
  std::vector<SampleClass> cls(rows.size(), SampleClass::unlabeled);
  std::fill(cls.begin(), cls.begin() + 10, SampleClass::positive);
  const auto a = undersample(rows, cls, 7);
  CHECK(a.rows.size() == 20);
  CHECK(std::count(a.classes.begin(), a.classes.end(), 1) == 10);
  const auto b = undersample(rows, cls, 7);
  CHECK(a.rows == b.rows);
  std::set<TaxpayerId> distinct;
  for (const auto& r : a.rows) distinct.insert(r.id);
  CHECK(distinct.size() == 20);

  std::vector<FeatureRow> few(rows.begin(), rows.begin() + 15);
  std::vector<SampleClass> few_cls(cls.begin(), cls.begin() + 15);
  CHECK_THROWS_AS(undersample(few, few_cls, 7), Error);
}

TEST_CASE("undersample draws unlabeled rows uniformly") {
  auto rows = rows_named("e", 5);
  auto un = rows_named("u", 20);
  rows.insert(rows.end(), un.begin(), un.end());
  std::vector<SampleClass> cls(rows.size(), SampleClass::unlabeled);
  std::fill(cls.begin(), cls.begin() + 5, SampleClass::positive);
  std::map<TaxpayerId, int> hits;
  const int trials = 4000;
  for (int s = 0; s < trials; ++s)
    for (const auto& r : undersample(rows, cls, static_cast<std::uint64_t>(s)).rows) ++hits[r.id];
  for (const auto& u : un) CHECK(hits[u.id] / double(trials) == doctest::Approx(0.25).epsilon(0.1));
}

TEST_CASE("resample minority") {
  auto rows = rows_named("e", 2);
  auto un = rows_named("u", 6);
  rows.insert(rows.end(), un.begin(), un.end());
  const std::vector<int> cls{1, 1, 0, 0, 0, 0, 0, 0};
  const auto r = resample_minority(rows, cls, 3);
  CHECK(r.rows.size() == 12);
  CHECK(std::count(r.classes.begin(), r.classes.end(), 1) == 6);
  for (std::size_t i = 8; i < 12; ++i) CHECK(r.rows[i].id.str()[0] == 'e');

  const std::vector<int> bal{1, 1, 0, 0};
  const std::vector<FeatureRow> four(rows.begin(), rows.begin() + 4);
  const auto same = resample_minority(four, std::vector<int>{1, 1, 0, 0}, 3);
  CHECK(same.rows == four);
  CHECK(same.classes == bal);
  CHECK_THROWS_AS(resample_minority(four, std::vector<int>{0, 0, 0, 0}, 3), Error);
}

TEST_CASE("sample classes follow labels") {
  LabelMap labels;
  labels[TaxpayerId("d")] = {TaxpayerId("d"), LabelKind::definitive_efos};
  labels[TaxpayerId("a")] = {TaxpayerId("a"), LabelKind::alleged_efos};
  auto ds = build_dataset({tx("d", "x", 1, 10), tx("a", "x", 1, 10), tx("u", "x", 1, 10)}, {}, labels);
  const auto f = build_features(ds, 2015);  // a, d, u
  const auto def = sample_classes(ds, f);
  CHECK(def == std::vector<SampleClass>{SampleClass::excluded, SampleClass::positive, SampleClass::unlabeled});
  const auto any = sample_classes(ds, f, PositiveLabels::any_labeled);
  CHECK(any == std::vector<SampleClass>{SampleClass::positive, SampleClass::positive, SampleClass::unlabeled});
}

TEST_CASE("box-cox formula") {
  for (double x : {0.5, 1.0, 3.0, 100.0}) {
    CHECK(box_cox(x, 1.0) == doctest::Approx(x - 1));
    CHECK(box_cox(x, 0.0) == doctest::Approx(std::log(x)));
    CHECK(box_cox(x, 1e-12) == doctest::Approx(std::log(x)));
  }
}

TEST_CASE("box-cox recovers lambda near zero on lognormal data") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::lognormal_distribution<double> law(9.0, 1.5);
    std::vector<double> col(2000);
    for (auto& v : col) v = law(rng);
    CAPTURE(seed);
    CHECK(std::abs(box_cox_fit_column(col)) <= 0.15);
  }
}

TEST_CASE("box-cox fit handles constant columns and applies row-wise") {
  FeatureMatrix m(4, 2);
  for (std::size_t r = 0; r < 4; ++r) {
    m(r, 0) = 5;
    m(r, 1) = std::exp(static_cast<double>(r));
  }
  std::vector<std::string> diag;
  const auto p = box_cox_fit(m, &diag);
  CHECK(p.lambda[0] == 1.0);
  CHECK(diag.size() == 1);
  const auto out = box_cox_apply(p, m);
  std::vector<double> row{m(2, 0), m(2, 1)};
  box_cox_apply_row(p, row);
  CHECK(row[0] == out(2, 0));
  CHECK(row[1] == out(2, 1));
}

TEST_CASE("pca on perfectly correlated data") {
  FeatureMatrix m(50, 2);
  for (std::size_t r = 0; r < 50; ++r) m(r, 0) = m(r, 1) = static_cast<double>(r);
  const auto p = pca_fit(m);
  check_pca(p);
  CHECK(std::abs(p.components[0][0]) == doctest::Approx(1 / std::sqrt(2.0)));
  CHECK(std::abs(p.components[0][1]) == doctest::Approx(1 / std::sqrt(2.0)));
  CHECK(p.variances[1] == doctest::Approx(0).epsilon(1e-9));
  const auto imp = pca_importance(p, {"a", "b"});
  CHECK(imp[0].score == doctest::Approx(0.7071).epsilon(1e-4));
  CHECK(imp[1].score == doctest::Approx(0.7071).epsilon(1e-4));

  const auto scores = pca_apply(p, m, 1);
  CHECK(scores.cols() == 1);
  const auto row = pca_apply_row(p, m.row(10), 1);
  CHECK(row[0] == doctest::Approx(scores(10, 0)));
}

TEST_CASE("pca on isotropic data") {
  std::mt19937_64 rng(5);
  const auto m = gaussian(20000, 3, rng);
  const auto p = pca_fit(m);
  check_pca(p);
  for (double v : p.variances) CHECK(v == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("pca loading of a zero-variance feature is zero") {
  std::mt19937_64 rng(6);
  auto m = gaussian(200, 3, rng);
  for (std::size_t r = 0; r < m.rows(); ++r) m(r, 1) = 4.0;
  const auto p = pca_fit(m);
  check_pca(p);
  for (const auto& f : pca_importance(p))
    if (f.feature == 1) CHECK(f.score == doctest::Approx(0).epsilon(1e-12));
  CHECK_THROWS_AS(pca_fit(FeatureMatrix(1, 3)), Error);
}

TEST_CASE("single tree separates one feature perfectly") {
  FeatureMatrix x(20, 1);
  std::vector<int> y(20);
  for (std::size_t r = 0; r < 20; ++r) {
    x(r, 0) = static_cast<double>(r);
    y[r] = r >= 10;
  }
  ForestConfig cfg;
  cfg.n_trees = 1;
  cfg.bootstrap = false;
  const auto m = train_forest(x, y, cfg, 1);
  REQUIRE(m.trees.size() == 1);
  CHECK(m.trees[0].nodes()[0].threshold == 9.5);
  for (std::size_t r = 0; r < 20; ++r) {
    const double p = m.predict_proba(x.row(r));
    CHECK(p == static_cast<double>(y[r]));
  }
}

TEST_CASE("predict_proba is the vote fraction") {
  const std::vector<double> in{0.0};
  CHECK(forest_of_votes(100, 100).predict_proba(in) == 1.0);
  auto m = forest_of_votes(60, 100);
  CHECK(m.predict_proba(in) == 0.6);
  std::reverse(m.trees.begin(), m.trees.end());
  CHECK(m.predict_proba(in) == 0.6);
  CHECK_THROWS_AS(m.predict_proba(std::vector<double>{1, 2}), Error);
  CHECK_THROWS_AS(ForestModel{}.predict_proba(in), Error);
}

TEST_CASE("forest training is deterministic across thread counts") {
  std::mt19937_64 rng(8);
  auto [x, y] = two_clouds(150, 4, 2.0, rng);
  for (auto t : {Transform::none, Transform::pca}) {
    ForestConfig cfg;
    cfg.n_trees = 30;
    cfg.transform = t;
    const auto a = train_forest(x, y, cfg, 99, 1);
    const auto b = train_forest(x, y, cfg, 99, 8);
    CHECK(a.trees == b.trees);
    CHECK(a.predict_proba(x, 1) == b.predict_proba(x, 8));
    CHECK(a.oob_error == b.oob_error);
    if (t == Transform::pca) check_pca(a.pca);
  }
}

TEST_CASE("forest respects depth and leaf limits") {
  std::mt19937_64 rng(9);
  auto [x, y] = two_clouds(100, 3, 0.5, rng);
  ForestConfig cfg;
  cfg.n_trees = 10;
  cfg.max_depth = 2;
  for (const auto& t : train_forest(x, y, cfg, 1).trees) CHECK(t.depth() <= 2);
  CHECK_THROWS_AS(train_forest(x, std::vector<int>(y.size(), 0), cfg, 1), Error);
}

TEST_CASE("out-of-bag error tracks held-out error") {
  std::mt19937_64 rng(10);
  auto [x, y] = two_clouds(300, 5, 1.5, rng);
  auto [tx_, ty] = two_clouds(300, 5, 1.5, rng);
  ForestConfig cfg;
  cfg.transform = Transform::boxcox;
  // Box-Cox needs positive inputs
  for (auto* m : {&x, &tx_})
    for (std::size_t r = 0; r < m->rows(); ++r)
      for (std::size_t c = 0; c < m->cols(); ++c) (*m)(r, c) = std::exp((*m)(r, c));
  const auto model = train_forest(x, y, cfg, 4);
  const auto probas = model.predict_proba(tx_);
  const auto held = confusion_at(probas, ty);
  CHECK(std::abs(model.oob_error - held.error) < 0.05);
  CHECK(held.error < 0.3);
  for (double p : model.oob_proba) CHECK((std::isnan(p) || (p >= 0 && p <= 1)));
}

TEST_CASE("forest json round trip") {
  std::mt19937_64 rng(12);
  auto [x, y] = two_clouds(60, 3, 1.0, rng);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) x(r, c) = std::exp(x(r, c));
  for (auto t : {Transform::none, Transform::boxcox, Transform::pca}) {
    ForestConfig cfg;
    cfg.n_trees = 15;
    cfg.transform = t;
    const auto m = train_forest(x, y, cfg, 5, 1, {"a", "b", "c"});
    const auto back = forest_from_json(nlohmann::json::parse(to_json(m).dump()));
    CHECK(back.trees == m.trees);
    CHECK(back.feature_names == m.feature_names);
    CHECK(back.predict_proba(x) == m.predict_proba(x));
    if (t == Transform::pca) check_pca(back.pca);
  }
  CHECK_THROWS_AS(forest_from_json(nlohmann::json::parse(R"({"format":"other"})")), Error);
}

TEST_CASE("transform names") {
  CHECK(parse_transform("boxcox") == Transform::boxcox);
  CHECK(parse_transform("box-cox") == Transform::boxcox);
  CHECK(parse_transform("raw") == Transform::none);
  CHECK(parse_transform("pca") == Transform::pca);
  CHECK(to_string(Transform::boxcox) == "boxcox");
  CHECK_THROWS_AS(parse_transform("logit"), Error);
}

TEST_CASE("confusion metrics") {
  const auto a = confusion_metrics(881, 0, 119, 0);
  CHECK(*a.precision == 1.0);
  CHECK(*a.recall == doctest::Approx(0.881));
  CHECK(*a.f1 == doctest::Approx(0.9367).epsilon(1e-4));
  CHECK(std::abs(*a.f1 - 0.94) < 0.005);

  const auto b = confusion_metrics(448, 84, 52, 416);
  CHECK(*b.recall == doctest::Approx(0.896));
  CHECK(*b.precision == doctest::Approx(448.0 / 532.0));
  CHECK(std::abs(*b.f1 - 0.87) < 0.01);
  CHECK(b.error == doctest::Approx(136.0 / 1000.0));

  const auto c = confusion_metrics(7, 0, 0, 0);
  CHECK(*c.precision == 1.0);
  CHECK(*c.recall == 1.0);
  CHECK(*c.f1 == 1.0);

  const auto d = confusion_metrics(0, 0, 0, 5);
  CHECK_FALSE(d.precision);
  CHECK_FALSE(d.recall);
  CHECK_THROWS_AS(confusion_metrics(0, 0, 0, 0), Error);

  const std::vector<double> s{0.9, 0.5, 0.2, 0.6};
  const std::vector<int> y{1, 1, 0, 0};
  const auto e = confusion_at(s, y);
  CHECK(e.tp == 2);
  CHECK(e.fp == 1);
  CHECK(e.tn == 1);
}

TEST_CASE("roc auc") {
  const std::vector<int> y{1, 1, 0, 0};
  CHECK(roc_auc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, y).auc == 1.0);
  CHECK(roc_auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, y).auc == 0.0);
  CHECK(roc_auc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, y).auc == 0.5);
  const auto r = roc_auc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, y);
  CHECK(r.points.front().first == 0.0);
  CHECK(r.points.back().first == 1.0);
  CHECK(r.points.back().second == 1.0);
  CHECK_THROWS_AS(roc_auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), Error);
}

TEST_CASE("roc auc matches pairwise concordance") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> s(200);
    std::vector<int> y(200);
    std::uniform_int_distribution<int> coarse(0, 20);
    std::bernoulli_distribution cls(0.3);
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = coarse(rng) / 20.0;  // plenty of ties
      y[i] = cls(rng);
    }
    y[0] = 1;
    y[1] = 0;
    CHECK(std::abs(roc_auc(s, y).auc - oracle::concordance(s, y)) < 1e-9);
  }
}

TEST_CASE("yearly suspicion rule") {
  const TaxpayerId a("a"), b("b"), c("c");
  YearlyProbas p{{{a, 2015}, 0.9}, {{a, 2016}, 0.85}, {{b, 2015}, 0.9}, {{b, 2016}, 0.79},
                 {{c, 2015}, 0.8}, {{c, 2016}, 0.8}};
  CHECK(classify_yearly(p) == std::set<TaxpayerId>{a, c});
  CHECK(classify_yearly(YearlyProbas{}).empty());
}

TEST_CASE("yearly suspicion rule is antitone in the threshold") {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    YearlyProbas p;
    for (int i = 0; i < 30; ++i)
      for (int y = 2015; y < 2015 + 1 + i % 3; ++y) p[{TaxpayerId("t" + std::to_string(i)), y}] = u(rng);
    const double lo = u(rng), hi = u(rng);
    const auto a = classify_yearly(p, std::min(lo, hi));
    const auto b = classify_yearly(p, std::max(lo, hi));
    CHECK(std::includes(a.begin(), a.end(), b.begin(), b.end()));
  }
}

TEST_CASE("probability histogram") {
  const std::vector<double> p{0.0, 0.04, 0.5, 1.0};
  const auto h = probability_histogram(p, 20);
  REQUIRE(h.size() == 20);
  CHECK(h[0].fraction == 0.5);
  CHECK(h[10].fraction == 0.25);
  CHECK(h[19].fraction == 0.25);
  double sum = 0;
  for (const auto& b : h) sum += b.fraction;
  CHECK(sum == doctest::Approx(1.0));
}

TEST_CASE("perturbation importance") {
  std::mt19937_64 rng(15);
  auto [x, y] = two_clouds(100, 3, 3.0, rng);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) x(r, c) += 10.0;  // keep column means away from 0
  ForestConfig cfg;
  cfg.n_trees = 20;
  cfg.max_depth = 1;
  cfg.mtry = 3;
  const auto m = train_forest(x, y, cfg, 3);
  const auto imp = perturbation_importance(m, x, 0.2, 7);
  REQUIRE(imp.size() == 3);
  CHECK(imp[0].feature == 0);
  for (const auto& f : imp) {
    bool used = false;
    for (const auto& t : m.trees) used = used || t.uses_feature(f.feature);
    if (!used) CHECK(f.score == 0.0);
  }
  CHECK(perturbation_importance(m, x, 0.2, 7, 4) == imp);
}
