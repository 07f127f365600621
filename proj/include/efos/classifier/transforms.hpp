#pragma once

#include <span>
#include <string>
#include <vector>

#include "efos/classifier/matrix.hpp"

namespace efos {

/// Per-column Box-Cox parameters. `shift` is added before transforming so the
/// smallest training value becomes at least 1 (one centavo).
struct BoxCoxParams {
  std::vector<double> lambda;
  std::vector<double> shift;
};

/// (x^lambda - 1) / lambda, or ln x at lambda = 0. Requires x > 0.
double box_cox(double x, double lambda);

/// Profile log-likelihood of lambda for positive data:
///   -n/2 * ln(var(y_lambda)) + (lambda - 1) * sum(ln x)
double box_cox_log_likelihood(std::span<const double> x, double lambda);

/// Grid search over [-2, 2] in steps of 0.01. Constant columns get lambda = 1
/// and a note in `diagnostics` when given.
BoxCoxParams box_cox_fit(const FeatureMatrix& columns, std::vector<std::string>* diagnostics = nullptr);
double box_cox_fit_column(std::span<const double> positive_values);

/// Values that fall below the fitted floor after shifting are clamped to 1.
FeatureMatrix box_cox_apply(const BoxCoxParams& params, const FeatureMatrix& columns);
void box_cox_apply_row(const BoxCoxParams& params, std::span<double> row);

/// Principal axes of the sample covariance. components[k] is the k-th unit
/// axis; variances are the matching eigenvalues, nonincreasing.
struct PcaModel {
  std::vector<double> mean;
  std::vector<std::vector<double>> components;
  std::vector<double> variances;

  std::size_t dimension() const noexcept { return mean.size(); }
};

/// Throws Error{"degenerate_matrix"} for fewer than two rows or non-finite values.
PcaModel pca_fit(const FeatureMatrix& data);

/// Scores on the first k components (k = 0 means all).
FeatureMatrix pca_apply(const PcaModel& model, const FeatureMatrix& data, std::size_t k = 0);
std::vector<double> pca_apply_row(const PcaModel& model, std::span<const double> row, std::size_t k = 0);

}  // namespace efos
