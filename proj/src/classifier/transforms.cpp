#include "efos/classifier/transforms.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "efos/types.hpp"

namespace efos {

double box_cox(double x, double lambda) {
  if (lambda == 0.0) return std::log(x);
  return std::expm1(lambda * std::log(x)) / lambda;
}

namespace {

double variance(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

}  // namespace

double box_cox_log_likelihood(std::span<const double> x, double lambda) {
  const auto n = static_cast<double>(x.size());
  std::vector<double> logs(x.size());
  double sum_log = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    logs[i] = std::log(x[i]);
    sum_log += logs[i];
  }
  // ln var(y) computed as ln var(x^lambda) - 2 ln|lambda| with x^lambda
  // rescaled by its largest term; avoids overflow and cancellation at the
  // grid ends.
  double log_var;
  if (lambda == 0.0) {
    log_var = std::log(variance(logs));
  } else {
    double peak = -std::numeric_limits<double>::infinity();
    for (double l : logs) peak = std::max(peak, lambda * l);
    std::vector<double> u(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) u[i] = std::exp(lambda * logs[i] - peak);
    log_var = 2.0 * peak + std::log(variance(u)) - 2.0 * std::log(std::abs(lambda));
  }
  return -0.5 * n * log_var + (lambda - 1.0) * sum_log;
}

double box_cox_fit_column(std::span<const double> x) {
  double best_lambda = 1.0;
  double best = -std::numeric_limits<double>::infinity();
  for (int k = -200; k <= 200; ++k) {
    const double lambda = k / 100.0;
    const double ll = box_cox_log_likelihood(x, lambda);
    if (ll > best) {
      best = ll;
      best_lambda = lambda;
    }
  }
  return best_lambda;
}

BoxCoxParams box_cox_fit(const FeatureMatrix& columns, std::vector<std::string>* diagnostics) {
  BoxCoxParams p;
  for (std::size_t c = 0; c < columns.cols(); ++c) {
    auto col = columns.column(c);
    const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
    const double shift = col.empty() ? 0.0 : std::max(0.0, 1.0 - *lo);
    p.shift.push_back(shift);
    if (col.empty() || *lo == *hi) {
      p.lambda.push_back(1.0);
      if (diagnostics) diagnostics->push_back("column " + std::to_string(c) + " is constant; lambda set to 1");
      continue;
    }
    for (auto& v : col) v += shift;
    p.lambda.push_back(box_cox_fit_column(col));
  }
  return p;
}

void box_cox_apply_row(const BoxCoxParams& params, std::span<double> row) {
  if (row.size() != params.lambda.size()) throw Error("arity_mismatch", "box_cox_apply: row arity mismatch");
  for (std::size_t c = 0; c < row.size(); ++c)
    row[c] = box_cox(std::max(1.0, row[c] + params.shift[c]), params.lambda[c]);
}

FeatureMatrix box_cox_apply(const BoxCoxParams& params, const FeatureMatrix& columns) {
  FeatureMatrix out = columns;
  for (std::size_t r = 0; r < out.rows(); ++r) box_cox_apply_row(params, out.row(r));
  return out;
}

PcaModel pca_fit(const FeatureMatrix& data) {
  if (data.rows() < 2) throw Error("degenerate_matrix", "pca_fit needs at least two rows");
  const auto n = static_cast<Eigen::Index>(data.rows());
  const auto p = static_cast<Eigen::Index>(data.cols());
  Eigen::MatrixXd x(n, p);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < p; ++c) {
      const double v = data(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
      if (!std::isfinite(v)) throw Error("degenerate_matrix", "pca_fit: non-finite value");
      x(r, c) = v;
    }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw Error("degenerate_matrix", "pca_fit: eigen decomposition failed");

  PcaModel model;
  model.mean.assign(mean.data(), mean.data() + p);
  // Eigen sorts ascending; walk backwards for descending variance.
  for (Eigen::Index k = p - 1; k >= 0; --k) {
    Eigen::VectorXd axis = solver.eigenvectors().col(k);
    Eigen::Index arg = 0;
    for (Eigen::Index i = 1; i < p; ++i)
      if (std::abs(axis(i)) > std::abs(axis(arg))) arg = i;
    if (axis(arg) < 0) axis = -axis;
    model.components.emplace_back(axis.data(), axis.data() + p);
    model.variances.push_back(std::max(0.0, solver.eigenvalues()(k)));
  }
  return model;
}

std::vector<double> pca_apply_row(const PcaModel& model, std::span<const double> row, std::size_t k) {
  if (row.size() != model.dimension()) throw Error("arity_mismatch", "pca_apply: row arity mismatch");
  if (k == 0 || k > model.components.size()) k = model.components.size();
  std::vector<double> out(k, 0.0);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t c = 0; c < row.size(); ++c) out[j] += (row[c] - model.mean[c]) * model.components[j][c];
  return out;
}

FeatureMatrix pca_apply(const PcaModel& model, const FeatureMatrix& data, std::size_t k) {
  if (k == 0 || k > model.components.size()) k = model.components.size();
  FeatureMatrix out(data.rows(), k);
  for (std::size_t r = 0; r < data.rows(); ++r) {
    auto scores = pca_apply_row(model, data.row(r), k);
    std::copy(scores.begin(), scores.end(), out.row(r).begin());
  }
  return out;
}

}  // namespace efos
