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

#include <cstdint>
#include <span>
#include <vector>

namespace bcond {

/// Optimizer settings. Defaults are the reference fine-tuning values:
/// 30 epochs, learning rate 1e-4, momentum 0.9, weight decay 5e-4.
struct TrainConfig {
  std::size_t epochs = 30;
  double learning_rate = 1e-4;
  double momentum = 0.9;
  /// L2 penalty coefficient applied to the weights (not the biases).
  double weight_decay = 5e-4;
  /// Optional learning-rate decay: lr_epoch = lr / (1 + lr_decay * epoch).
  double lr_decay = 0.0;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;

  /// Throws InvalidArgument when an invariant is violated.
  void validate() const;
};

std::vector<double> softmax(std::span<const double> scores);

/// Multinomial logistic regression. Parameters are stored flat as the
/// row-major weight matrix (classes x dim) followed by the biases.
class SoftmaxRegression {
 public:
  SoftmaxRegression() = default;
  SoftmaxRegression(std::size_t classes, std::size_t dim);
  SoftmaxRegression(std::size_t classes, std::size_t dim, std::vector<double> parameters);

  std::size_t classes() const noexcept { return classes_; }
  std::size_t dim() const noexcept { return dim_; }

  std::span<const double> parameters() const noexcept { return params_; }
  std::span<double> parameters() noexcept { return params_; }
  std::span<const double> weights() const noexcept { return {params_.data(), classes_ * dim_}; }
  std::span<const double> biases() const noexcept { return {params_.data() + classes_ * dim_, classes_}; }
  double& weight(std::size_t cls, std::size_t j) { return params_[cls * dim_ + j]; }
  double& bias(std::size_t cls) { return params_[classes_ * dim_ + cls]; }

  std::vector<double> scores(std::span<const double> x) const;
  std::vector<double> probabilities(std::span<const double> x) const;

  /// Euclidean norm of the weight matrix (biases excluded).
  double weight_norm() const;

 private:
  std::size_t classes_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> params_;
};

/// Mean softmax cross-entropy over the selected rows. When gradient is not
/// null it receives the gradient of that mean with respect to the flat
/// parameters (no weight-decay term).
double cross_entropy(const SoftmaxRegression& model, std::span<const std::vector<double>> features,
                     std::span<const std::size_t> labels, std::span<const std::size_t> rows,
                     std::vector<double>* gradient = nullptr);

struct SoftmaxTraining {
  SoftmaxRegression model;
  /// Sample-weighted mean batch loss per epoch, measured before each update.
  std::vector<double> loss_trace;
};

/// Mini-batch SGD from zero-initialized parameters. Rows are reshuffled every
/// epoch with a generator seeded from config.seed. The update is
///   v <- momentum * v - lr * (grad + weight_decay * w);  w <- w + v.
/// Throws TrainingError on a non-finite loss (reporting epoch and batch).
SoftmaxTraining train_softmax(std::span<const std::vector<double>> features,
                              std::span<const std::size_t> labels, std::size_t classes,
                              const TrainConfig& config);

}  // namespace bcond
