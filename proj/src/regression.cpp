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

#include "bcond/regression.hpp"

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <iomanip>
#include <sstream>

#include "bcond/error.hpp"

namespace bcond {

namespace {

Eigen::Index numerical_rank(const Eigen::MatrixXd& X) {
  // Column scaling keeps the raw year column from dominating the tolerance.
  Eigen::MatrixXd scaled = X;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double norm = X.col(j).norm();
    if (norm > 0.0) scaled.col(j) /= norm;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
  qr.setThreshold(1e-10);
  return qr.rank();
}

std::string column_name(Eigen::Index j) {
  if (j < static_cast<Eigen::Index>(kDesignColumns.size())) return kDesignColumns[static_cast<std::size_t>(j)];
  return "column " + std::to_string(j);
}

[[noreturn]] void report_singular(const Eigen::MatrixXd& X) {
  for (Eigen::Index j = X.cols(); j-- > 0;) {
    if (X.col(j).isZero(0.0)) {
      throw SingularDesignError(column_name(j), "singular design: column " + column_name(j) +
                                                    " is all zero (no observations of that level)");
    }
  }
  // Name the last column whose removal restores full rank.
  for (Eigen::Index j = X.cols(); j-- > 0;) {
    Eigen::MatrixXd reduced(X.rows(), X.cols() - 1);
    for (Eigen::Index c = 0, k = 0; c < X.cols(); ++c) {
      if (c != j) reduced.col(k++) = X.col(c);
    }
    if (numerical_rank(reduced) == reduced.cols()) {
      throw SingularDesignError(column_name(j), "singular design: column " + column_name(j) +
                                                    " is collinear with the other columns");
    }
  }
  throw SingularDesignError("design", "singular design: rank-deficient in several columns");
}

}  // namespace

Design build_design(std::span<const RegressionObservation> observations) {
  if (observations.empty()) throw InvalidArgument("regression", "no observations for the design");
  std::vector<const RegressionObservation*> used;
  for (const auto& o : observations) {
    if (o.retained_value) {
      if (!std::isfinite(*o.retained_value)) throw InvalidArgument("regression", "non-finite retained value");
      used.push_back(&o);
    }
  }
  Design d;
  d.n_excluded = observations.size() - used.size();
  d.X.resize(static_cast<Eigen::Index>(used.size()), 4);
  d.y.resize(static_cast<Eigen::Index>(used.size()));
  for (std::size_t i = 0; i < used.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    d.X(r, 0) = 1.0;
    d.X(r, 1) = static_cast<double>(used[i]->year_built);
    d.X(r, 2) = used[i]->condition == ConditionClass::B ? 1.0 : 0.0;
    d.X(r, 3) = used[i]->condition == ConditionClass::C ? 1.0 : 0.0;
    d.y(r) = *used[i]->retained_value;
  }
  return d;
}

RegressionFit ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const auto n = X.rows();
  const auto p = X.cols();
  if (y.size() != n) throw InvalidArgument("regression", "design and response differ in length");
  if (p < 1) throw InvalidArgument("regression", "design has no columns");
  if (n < std::max<Eigen::Index>(5, p + 1)) {
    throw InvalidArgument("regression", "need at least " + std::to_string(std::max<Eigen::Index>(5, p + 1)) +
                                            " observations, got " + std::to_string(n));
  }
  if (!X.allFinite() || !y.allFinite()) throw InvalidArgument("regression", "non-finite design or response");
  if (numerical_rank(X) < p) report_singular(X);

  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(X);
  const Eigen::VectorXd beta = qr.solve(y);
  const Eigen::MatrixXd R = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  // (X'X)^-1 = R^-1 R^-T
  const Eigen::MatrixXd R_inv =
      R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd cov_unscaled = R_inv * R_inv.transpose();

  const Eigen::VectorXd residuals = y - X * beta;
  const double rss = residuals.squaredNorm();
  const double tss = (y.array() - y.mean()).square().sum();

  RegressionFit fit;
  fit.n = static_cast<std::size_t>(n);
  fit.dof = static_cast<std::size_t>(n - p);
  const auto dof = static_cast<double>(fit.dof);
  fit.sigma = std::sqrt(rss / dof);
  // A constant response leaves R^2 undefined; report it as 0.
  fit.r_squared = tss > 0.0 ? 1.0 - rss / tss : 0.0;
  fit.adj_r_squared = 1.0 - (1.0 - fit.r_squared) * (static_cast<double>(n) - 1.0) / dof;

  const boost::math::students_t_distribution<double> t_dist(dof);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double b = beta(j);
    const double se = fit.sigma * std::sqrt(cov_unscaled(j, j));
    double t;
    if (se > 0.0) {
      t = b / se;
    } else {
      t = b == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), b);
    }
    const double pv = std::isinf(t) ? 0.0 : 2.0 * boost::math::cdf(boost::math::complement(t_dist, std::abs(t)));
    fit.coefficients.push_back(b);
    fit.std_errors.push_back(se);
    fit.t_values.push_back(t);
    fit.p_values.push_back(std::clamp(pv, 0.0, 1.0));
  }

  const double df_model = static_cast<double>(p - 1);
  if (p > 1 && tss > 0.0) {
    // Sums of squares rather than R^2: 1 - R^2 rounds to 0 on near-exact fits.
    const double f = rss > 0.0 ? ((tss - rss) / df_model) / (rss / dof) : 0.0;
    if (rss > 0.0 && std::isfinite(f)) {
      fit.f_statistic = std::max(f, 0.0);
      const boost::math::fisher_f_distribution<double> f_dist(df_model, dof);
      fit.f_p_value = boost::math::cdf(boost::math::complement(f_dist, fit.f_statistic));
    } else {
      fit.f_statistic = std::numeric_limits<double>::infinity();
      fit.f_p_value = 0.0;
    }
  }
  return fit;
}

double predict_value(const RegressionFit& fit, int year_built, ConditionClass condition) {
  if (fit.coefficients.size() != 4) throw InvalidArgument("regression", "fit is not a condition/year model");
  const auto& b = fit.coefficients;
  return b[0] + b[1] * year_built + (condition == ConditionClass::B ? b[2] : 0.0) +
         (condition == ConditionClass::C ? b[3] : 0.0);
}

double mean_value(const ValueModel& model, int year_built, ConditionClass condition) {
  const auto& b = model.coefficients;
  return b[0] + b[1] * year_built + (condition == ConditionClass::B ? b[2] : 0.0) +
         (condition == ConditionClass::C ? b[3] : 0.0);
}

std::string significance_stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

ModelComparison compare_models(std::span<const ComparisonRecord> records) {
  const auto fit_with = [&](auto condition_of) {
    std::vector<RegressionObservation> obs;
    obs.reserve(records.size());
    for (const auto& r : records) obs.push_back({r.year_built, condition_of(r), r.retained_value});
    const auto design = build_design(obs);
    return ols_fit(design.X, design.y);
  };
  return {fit_with([](const ComparisonRecord& r) { return r.truth; }),
          fit_with([](const ComparisonRecord& r) { return r.mv; }),
          fit_with([](const ComparisonRecord& r) { return r.lh; })};
}

namespace {

std::string fixed(double v, int digits = 3) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

}  // namespace

std::string format_comparison(const ModelComparison& comparison) {
  const std::array<const RegressionFit*, 3> fits = {&comparison.truth, &comparison.mv, &comparison.lh};
  const std::array<const char*, 3> prefixes = {"true", "predictedMV", "predictedLH"};
  constexpr int kLabel = 22;
  constexpr int kCell = 14;
  std::ostringstream out;
  const auto row = [&](const std::string& label, const std::array<std::string, 3>& cells) {
    out << std::left << std::setw(kLabel) << label;
    for (const auto& c : cells) out << std::right << std::setw(kCell) << c;
    out << '\n';
  };
  const auto rule = [&] { out << std::string(kLabel + 3 * kCell, '-') << '\n'; };
  const auto coefficient_rows = [&](const std::string& label, std::size_t j, int only) {
    std::array<std::string, 3> est, se;
    for (int m = 0; m < 3; ++m) {
      if (only >= 0 && m != only) continue;
      const auto& f = *fits[static_cast<std::size_t>(m)];
      est[static_cast<std::size_t>(m)] = fixed(f.coefficients[j]) + significance_stars(f.p_values[j]);
      se[static_cast<std::size_t>(m)] = "(" + fixed(f.std_errors[j]) + ")";
    }
    row(label, est);
    row("", se);
  };

  row("", {"True", "MV", "LH"});
  rule();
  coefficient_rows("(Intercept)", 0, -1);
  coefficient_rows("year of construction", 1, -1);
  for (int m = 0; m < 3; ++m) {
    rule();
    coefficient_rows(std::string(prefixes[static_cast<std::size_t>(m)]) + ": B/A", 2, m);
    coefficient_rows(std::string(prefixes[static_cast<std::size_t>(m)]) + ": C/A", 3, m);
  }
  rule();
  row("adj. R^2", {fixed(fits[0]->adj_r_squared), fixed(fits[1]->adj_r_squared), fixed(fits[2]->adj_r_squared)});
  row("sigma", {fixed(fits[0]->sigma), fixed(fits[1]->sigma), fixed(fits[2]->sigma)});
  row("F", {fixed(fits[0]->f_statistic), fixed(fits[1]->f_statistic), fixed(fits[2]->f_statistic)});
  row("p", {fixed(fits[0]->f_p_value), fixed(fits[1]->f_p_value), fixed(fits[2]->f_p_value)});
  rule();
  out << "***p<0.001, **p<0.01, *p<0.05\n";
  return out.str();
}

std::string format_fit(const RegressionFit& fit, const std::string& title) {
  if (fit.coefficients.size() != 4) throw InvalidArgument("regression", "fit is not a condition/year model");
  constexpr int kLabel = 22;
  constexpr int kCell = 14;
  std::ostringstream out;
  const auto row = [&](const std::string& label, const std::string& cell) {
    out << std::left << std::setw(kLabel) << label << std::right << std::setw(kCell) << cell << '\n';
  };
  const auto rule = [&] { out << std::string(kLabel + kCell, '-') << '\n'; };
  const std::array<const char*, 4> labels = {"(Intercept)", "year of construction", "B/A", "C/A"};
  row("", title);
  rule();
  for (std::size_t j = 0; j < 4; ++j) {
    row(labels[j], fixed(fit.coefficients[j]) + significance_stars(fit.p_values[j]));
    row("", "(" + fixed(fit.std_errors[j]) + ")");
  }
  rule();
  row("adj. R^2", fixed(fit.adj_r_squared));
  row("sigma", fixed(fit.sigma));
  row("F", fixed(fit.f_statistic));
  row("p", fixed(fit.f_p_value));
  rule();
  out << "***p<0.001, **p<0.01, *p<0.05\n";
  return out.str();
}

nlohmann::json to_json(const RegressionFit& fit) {
  nlohmann::json j;
  const std::array<const char*, 4> names = {"intercept", "year_built", "B/A", "C/A"};
  for (std::size_t i = 0; i < fit.coefficients.size(); ++i) {
    const std::string name = i < names.size() ? names[i] : "x" + std::to_string(i);
    j["coefficients"][name] = {{"estimate", fit.coefficients[i]},
                               {"std_error", fit.std_errors[i]},
                               {"t", fit.t_values[i]},
                               {"p", fit.p_values[i]},
                               {"stars", significance_stars(fit.p_values[i])}};
  }
  j["r_squared"] = fit.r_squared;
  j["adj_r_squared"] = fit.adj_r_squared;
  j["sigma"] = fit.sigma;
  j["F"] = fit.f_statistic;
  j["p"] = fit.f_p_value;
  j["n"] = fit.n;
  j["dof"] = fit.dof;
  return j;
}

nlohmann::json to_json(const ModelComparison& comparison) {
  return {{"true", to_json(comparison.truth)}, {"MV", to_json(comparison.mv)}, {"LH", to_json(comparison.lh)}};
}

}  // namespace bcond
