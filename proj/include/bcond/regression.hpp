/*
 * Copyright 2026 The bcond Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bcond/types.hpp"

namespace bcond {

/// One building for the retained-value regression. retained_value is the
/// share of replacement cost remaining (1 minus the age/condition discount).
struct RegressionObservation {
  int year_built = 0;
  ConditionClass condition = ConditionClass::A;
  std::optional<double> retained_value;
};

/// Design matrix with columns (intercept, year_built, d_B, d_C); class A is
/// the baseline absorbed by the intercept.
struct Design {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  /// Observations dropped for lacking a response.
  std::size_t n_excluded = 0;
};

inline constexpr std::array<const char*, 4> kDesignColumns = {"intercept", "year_built", "d_B", "d_C"};

/// Throws InvalidArgument on empty input or non-finite values.
Design build_design(std::span<const RegressionObservation> observations);

struct RegressionFit {
  std::vector<double> coefficients;
  std::vector<double> std_errors;
  std::vector<double> t_values;
  /// Two-sided, Student-t with dof degrees of freedom.
  std::vector<double> p_values;
  double r_squared = 0.0;
  double adj_r_squared = 0.0;
  /// Residual standard error sqrt(RSS / dof).
  double sigma = 0.0;
  double f_statistic = 0.0;
  double f_p_value = 1.0;
  std::size_t n = 0;
  std::size_t dof = 0;
};

/// Ordinary least squares via Householder QR. Requires n >= p + 1 (and at
/// least 5 rows) and a full-rank design; rank deficiency raises
/// SingularDesignError naming the offending column.
RegressionFit ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// Fitted response for a building: beta . (1, year, d_B, d_C).
double predict_value(const RegressionFit& fit, int year_built, ConditionClass condition);

/// Generative retained-value model: coefficients (intercept, year, B/A, C/A)
/// and residual standard deviation.
struct ValueModel {
  std::array<double, 4> coefficients;
  double sigma;
};

/// Reference appraiser-condition model for the cost-approach regression.
inline constexpr ValueModel kAppraiserValueModel{{-11.471, 0.006, -0.049, -0.090}, 0.133};

double mean_value(const ValueModel& model, int year_built, ConditionClass condition);

/// "***" for p < 0.001, "**" for p < 0.01, "*" for p < 0.05.
std::string significance_stars(double p);

struct ComparisonRecord {
  int year_built = 0;
  double retained_value = 0.0;
  ConditionClass truth = ConditionClass::A;
  ConditionClass mv = ConditionClass::A;
  ConditionClass lh = ConditionClass::A;
};

struct ModelComparison {
  RegressionFit truth;
  RegressionFit mv;
  RegressionFit lh;
};

/// Fits the same specification three times, swapping only the condition source.
ModelComparison compare_models(std::span<const ComparisonRecord> records);

/// Aligned text table: coefficients with stars, standard errors in
/// parentheses, then adj. R^2, sigma, F and p per model.
std::string format_comparison(const ModelComparison& comparison);

/// The same layout for a single fit.
std::string format_fit(const RegressionFit& fit, const std::string& title = "True");

nlohmann::json to_json(const RegressionFit& fit);
nlohmann::json to_json(const ModelComparison& comparison);

}  // namespace bcond
