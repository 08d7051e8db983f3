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

#include "bcond/softmax_regression.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bcond/error.hpp"
#include "bcond/rng.hpp"

namespace bcond {

void TrainConfig::validate() const {
  if (epochs < 1) throw InvalidArgument("classifier", "epochs must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidArgument("classifier", "learning rate must be finite and non-negative");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("classifier", "momentum must lie in [0,1)");
  if (!(weight_decay >= 0.0)) throw InvalidArgument("classifier", "weight decay must be >= 0");
  if (!(lr_decay >= 0.0)) throw InvalidArgument("classifier", "learning-rate decay must be >= 0");
  if (batch_size < 1) throw InvalidArgument("classifier", "batch size must be >= 1");
}

std::vector<double> softmax(std::span<const double> scores) {
  std::vector<double> out(scores.begin(), scores.end());
  if (out.empty()) return out;
  const double top = *std::max_element(out.begin(), out.end());
  double sum = 0.0;
  for (auto& v : out) {
    v = std::exp(v - top);
    sum += v;
  }
  for (auto& v : out) v /= sum;
  return out;
}

SoftmaxRegression::SoftmaxRegression(std::size_t classes, std::size_t dim)
    : classes_(classes), dim_(dim), params_(classes * dim + classes, 0.0) {}

SoftmaxRegression::SoftmaxRegression(std::size_t classes, std::size_t dim, std::vector<double> parameters)
    : classes_(classes), dim_(dim), params_(std::move(parameters)) {
  if (params_.size() != classes * dim + classes) {
    throw InvalidArgument("classifier", "parameter count does not match model shape");
  }
}

std::vector<double> SoftmaxRegression::scores(std::span<const double> x) const {
  if (x.size() != dim_) {
    throw InvalidArgument("classifier", "feature length " + std::to_string(x.size()) +
                                            " does not match model dimension " + std::to_string(dim_));
  }
  std::vector<double> s(classes_);
  for (std::size_t k = 0; k < classes_; ++k) {
    const double* w = params_.data() + k * dim_;
    s[k] = std::inner_product(x.begin(), x.end(), w, params_[classes_ * dim_ + k]);
  }
  return s;
}

std::vector<double> SoftmaxRegression::probabilities(std::span<const double> x) const {
  return softmax(scores(x));
}

double SoftmaxRegression::weight_norm() const {
  double sum = 0.0;
  for (const double w : weights()) sum += w * w;
  return std::sqrt(sum);
}

double cross_entropy(const SoftmaxRegression& model, std::span<const std::vector<double>> features,
                     std::span<const std::size_t> labels, std::span<const std::size_t> rows,
                     std::vector<double>* gradient) {
  const std::size_t classes = model.classes();
  const std::size_t dim = model.dim();
  if (gradient) gradient->assign(model.parameters().size(), 0.0);
  if (rows.empty()) return 0.0;
  double loss = 0.0;
  const double inv = 1.0 / static_cast<double>(rows.size());
  for (const std::size_t r : rows) {
    const auto& x = features[r];
    const auto s = model.scores(x);
    const double top = *std::max_element(s.begin(), s.end());
    double sum = 0.0;
    for (const double v : s) sum += std::exp(v - top);
    const double log_z = top + std::log(sum);
    loss += log_z - s[labels[r]];
    if (gradient) {
      for (std::size_t k = 0; k < classes; ++k) {
        const double residual = (std::exp(s[k] - log_z) - (labels[r] == k ? 1.0 : 0.0)) * inv;
        double* g = gradient->data() + k * dim;
        for (std::size_t j = 0; j < dim; ++j) g[j] += residual * x[j];
        (*gradient)[classes * dim + k] += residual;
      }
    }
  }
  return loss * inv;
}

SoftmaxTraining train_softmax(std::span<const std::vector<double>> features,
                              std::span<const std::size_t> labels, std::size_t classes,
                              const TrainConfig& config) {
  config.validate();
  if (features.empty()) throw TrainingError("classifier", "no training samples");
  if (features.size() != labels.size()) throw InvalidArgument("classifier", "features and labels differ in length");
  const std::size_t dim = features.front().size();
  for (const auto& x : features) {
    if (x.size() != dim) throw InvalidArgument("classifier", "inconsistent feature lengths");
  }
  for (const auto y : labels) {
    if (y >= classes) throw InvalidArgument("classifier", "label " + std::to_string(y) + " out of range");
  }

  SoftmaxTraining result{SoftmaxRegression(classes, dim), {}};
  auto params = result.model.parameters();
  const std::size_t n_weights = classes * dim;
  std::vector<double> velocity(params.size(), 0.0);
  std::vector<double> gradient;
  std::vector<std::size_t> order(features.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(config.seed);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    const double lr = config.learning_rate / (1.0 + config.lr_decay * static_cast<double>(epoch));
    double epoch_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> batch(order.data() + start, stop - start);
      const double loss = cross_entropy(result.model, features, labels, batch, &gradient);
      if (!std::isfinite(loss)) {
        throw TrainingError("classifier", "non-finite loss at epoch " + std::to_string(epoch + 1) +
                                              ", batch " + std::to_string(batch_index + 1));
      }
      epoch_loss += loss * static_cast<double>(batch.size());
      for (std::size_t i = 0; i < params.size(); ++i) {
        const double decay = i < n_weights ? config.weight_decay * params[i] : 0.0;
        velocity[i] = config.momentum * velocity[i] - lr * (gradient[i] + decay);
        params[i] += velocity[i];
      }
    }
    result.loss_trace.push_back(epoch_loss / static_cast<double>(order.size()));
  }
  return result;
}

}  // namespace bcond
