#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ipmine/corpus.hpp"
#include "ipmine/features.hpp"
#include "ipmine/rng.hpp"

namespace ipmine {

struct Hyperparams {
  double l2_lambda = 1e-3;
  double learning_rate = 0.1;  // initial step; halved until the loss decreases
  int max_epochs = 1000;
  double tolerance = 1e-6;
};

// A labeled instance with its feature vector attached.
struct Example {
  std::string key;
  Label label = Label::negative;
  FeatureVector features;
};

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t total() const { return tp + fp + tn + fn; }
};

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double accuracy = 0.0;
  Confusion confusion;
};

inline Metrics metrics_from_confusion(const Confusion& c) {
  Metrics m;
  m.confusion = c;
  m.precision = (c.tp + c.fp) > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  m.recall = (c.tp + c.fn) > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  m.accuracy = c.total() > 0 ? static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total()) : 0.0;
  return m;
}

// Binary logistic regression bound to a feature space. Weights are dense over
// the space's dimensions; probabilities are for the positive class.
struct Model {
  SpacePtr space;
  std::vector<double> weights;
  double bias = 0.0;
  Hyperparams hyperparams;
  std::uint64_t rng_seed = 0;
};

struct TrainTrace {
  std::vector<double> loss;  // loss before training, then after each accepted epoch
  int epochs = 0;
};

inline double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace detail {

// log(1 + e^z) without overflow.
inline double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

struct Batch {
  std::vector<std::size_t> offsets;  // row i spans [offsets[i], offsets[i+1])
  std::vector<std::size_t> cols;
  std::vector<double> vals;
  std::vector<double> y;
  std::size_t dim = 0;
};

inline Batch make_batch(const std::vector<Example>& examples) {
  if (examples.empty()) throw std::invalid_argument("train: empty example list");
  const SpacePtr& space = examples.front().features.space;
  if (!space) throw std::invalid_argument("train: example without a feature space");
  Batch b;
  b.dim = space->size();
  b.offsets.reserve(examples.size() + 1);
  b.offsets.push_back(0);
  bool has_pos = false, has_neg = false;
  for (const Example& ex : examples) {
    if (ex.features.space != space)
      throw std::invalid_argument("train: examples must share one feature space");
    for (const auto& [dim, value] : ex.features.entries) {
      if (!std::isfinite(value))
        throw std::invalid_argument("train: non-finite feature value in example \"" + ex.key + "\"");
      b.cols.push_back(dim);
      b.vals.push_back(value);
    }
    b.offsets.push_back(b.cols.size());
    b.y.push_back(ex.label == Label::positive ? 1.0 : 0.0);
    (ex.label == Label::positive ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg)
    throw std::invalid_argument("train: need at least one example of each class");
  return b;
}

inline double batch_loss(const Batch& b, std::span<const double> w, double bias, double l2_lambda) {
  const std::size_t n = b.y.size();
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double z = bias;
    for (std::size_t k = b.offsets[i]; k < b.offsets[i + 1]; ++k) z += w[b.cols[k]] * b.vals[k];
    loss += softplus(z) - b.y[i] * z;
  }
  loss /= static_cast<double>(n);
  double reg = 0.0;
  for (double wi : w) reg += wi * wi;
  return loss + 0.5 * l2_lambda * reg;
}

inline void batch_gradient(const Batch& b, std::span<const double> w, double bias, double l2_lambda,
                           std::span<double> grad_w, double& grad_b) {
  const std::size_t n = b.y.size();
  std::fill(grad_w.begin(), grad_w.end(), 0.0);
  grad_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double z = bias;
    for (std::size_t k = b.offsets[i]; k < b.offsets[i + 1]; ++k) z += w[b.cols[k]] * b.vals[k];
    const double err = sigmoid(z) - b.y[i];
    for (std::size_t k = b.offsets[i]; k < b.offsets[i + 1]; ++k) grad_w[b.cols[k]] += err * b.vals[k];
    grad_b += err;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t d = 0; d < grad_w.size(); ++d) grad_w[d] = grad_w[d] * inv_n + l2_lambda * w[d];
  grad_b *= inv_n;
}

inline void validate(const Hyperparams& hp) {
  if (hp.l2_lambda < 0.0) throw std::invalid_argument("hyperparams: l2_lambda must be >= 0");
  if (hp.learning_rate <= 0.0) throw std::invalid_argument("hyperparams: learning_rate must be > 0");
  if (hp.max_epochs < 1) throw std::invalid_argument("hyperparams: max_epochs must be >= 1");
  if (hp.tolerance <= 0.0) throw std::invalid_argument("hyperparams: tolerance must be > 0");
}

}  // namespace detail

// Mean log-loss plus (l2_lambda / 2) * ||w||^2; the objective train() descends.
inline double log_loss(const std::vector<Example>& examples, std::span<const double> weights,
                       double bias, double l2_lambda) {
  return detail::batch_loss(detail::make_batch(examples), weights, bias, l2_lambda);
}

// Analytic gradient of log_loss with respect to (weights, bias).
inline std::pair<std::vector<double>, double> loss_gradient(const std::vector<Example>& examples,
                                                            std::span<const double> weights,
                                                            double bias, double l2_lambda) {
  const detail::Batch b = detail::make_batch(examples);
  std::vector<double> grad_w(b.dim, 0.0);
  double grad_b = 0.0;
  detail::batch_gradient(b, weights, bias, l2_lambda, grad_w, grad_b);
  return {std::move(grad_w), grad_b};
}

// Full-batch gradient descent from zero weights. The descent direction is
// preconditioned by the fixed per-dimension inverse second moment of the
// features, which equalizes step scales between raw octet values and tf-idf
// weights without changing the objective or its minimizer. Each epoch starts
// at learning_rate and halves the step until the loss does not increase, so
// the recorded loss decreases strictly until convergence. Stops when the
// improvement drops below tolerance or after max_epochs.
inline Model train(const std::vector<Example>& examples, const Hyperparams& hp,
                   std::uint64_t rng_seed, TrainTrace* trace = nullptr) {
  detail::validate(hp);
  const detail::Batch b = detail::make_batch(examples);

  Model model;
  model.space = examples.front().features.space;
  model.weights.assign(b.dim, 0.0);
  model.bias = 0.0;
  model.hyperparams = hp;
  model.rng_seed = rng_seed;

  std::vector<double> precond(b.dim, 0.0);
  for (std::size_t k = 0; k < b.cols.size(); ++k) precond[b.cols[k]] += b.vals[k] * b.vals[k];
  for (std::size_t d = 0; d < b.dim; ++d) {
    const double mean_sq = precond[d] / static_cast<double>(b.y.size());
    precond[d] = 1.0 / std::max(1.0, mean_sq);  // never amplify small dimensions
  }

  std::vector<double> grad_w(b.dim, 0.0);
  std::vector<double> next_w(b.dim, 0.0);
  double loss = detail::batch_loss(b, model.weights, model.bias, hp.l2_lambda);
  if (trace) {
    trace->loss.clear();
    trace->loss.push_back(loss);
    trace->epochs = 0;
  }

  for (int epoch = 0; epoch < hp.max_epochs; ++epoch) {
    double grad_b = 0.0;
    detail::batch_gradient(b, model.weights, model.bias, hp.l2_lambda, grad_w, grad_b);

    double step = hp.learning_rate;
    double next_loss = std::numeric_limits<double>::infinity();
    double next_b = model.bias;
    while (true) {
      for (std::size_t d = 0; d < b.dim; ++d)
        next_w[d] = model.weights[d] - step * precond[d] * grad_w[d];
      next_b = model.bias - step * grad_b;
      next_loss = detail::batch_loss(b, next_w, next_b, hp.l2_lambda);
      if (next_loss < loss || step < 1e-14) break;
      step *= 0.5;
    }
    if (next_loss >= loss) break;  // no descent direction left at this scale
    model.weights.swap(next_w);
    model.bias = next_b;
    const double improvement = loss - next_loss;
    loss = next_loss;
    if (trace) {
      trace->loss.push_back(loss);
      trace->epochs = epoch + 1;
    }
    if (improvement < hp.tolerance) break;
  }
  return model;
}

// sigmoid(w . v + b); probability of the positive class. Clamped strictly
// inside (0, 1) so a saturated score can never meet a confidence threshold
// of 1.
inline double predict_proba(const Model& model, const FeatureVector& v) {
  const FeatureVector* scored = &v;
  FeatureVector projected;
  if (v.space != model.space) {
    projected = project(v, model.space);
    scored = &projected;
  }
  double z = model.bias;
  for (const auto& [dim, value] : scored->entries) z += model.weights[dim] * value;
  constexpr double kEps = 1e-15;
  return std::min(std::max(sigmoid(z), kEps), 1.0 - kEps);
}

// Ties at 0.5 resolve to positive.
inline Label predict(const Model& model, const FeatureVector& v) {
  return predict_proba(model, v) >= 0.5 ? Label::positive : Label::negative;
}

// Confusion metrics for a probability list against known labels (threshold
// 0.5, ties positive).
inline Metrics metrics_against(const std::vector<double>& probs, const std::vector<Label>& truth) {
  if (probs.size() != truth.size()) throw std::invalid_argument("metrics_against: size mismatch");
  Confusion c;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const bool predicted_pos = probs[i] >= 0.5;
    const bool actual_pos = truth[i] == Label::positive;
    if (predicted_pos && actual_pos) ++c.tp;
    else if (predicted_pos && !actual_pos) ++c.fp;
    else if (!predicted_pos && actual_pos) ++c.fn;
    else ++c.tn;
  }
  return metrics_from_confusion(c);
}

inline Metrics evaluate(const Model& model, const std::vector<Example>& test) {
  if (test.empty()) throw std::invalid_argument("evaluate: empty test set");
  Confusion c;
  for (const Example& ex : test) {
    const bool predicted_pos = predict(model, ex.features) == Label::positive;
    const bool actual_pos = ex.label == Label::positive;
    if (predicted_pos && actual_pos) ++c.tp;
    else if (predicted_pos && !actual_pos) ++c.fp;
    else if (!predicted_pos && actual_pos) ++c.fn;
    else ++c.tn;
  }
  return metrics_from_confusion(c);
}

struct CvResult {
  std::vector<Metrics> folds;
  Metrics mean;  // averaged rates; confusion counts summed over folds
};

// Stratified k-fold with a seeded per-class shuffle. Class members are dealt
// to folds through one rolling cursor so fold sizes differ by at most one.
inline CvResult kfold_cv(const std::vector<Example>& examples, int k, const Hyperparams& hp,
                         std::uint64_t rng_seed) {
  if (k < 2) throw std::invalid_argument("kfold_cv: k must be >= 2");
  if (examples.size() < static_cast<std::size_t>(k))
    throw std::invalid_argument("kfold_cv: need at least k examples");

  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < examples.size(); ++i)
    (examples[i].label == Label::positive ? pos : neg).push_back(i);
  Rng rng(rng_seed);
  rng.shuffle(pos);
  rng.shuffle(neg);

  std::vector<int> fold_of(examples.size(), 0);
  std::size_t cursor = 0;
  for (std::size_t idx : pos) fold_of[idx] = static_cast<int>(cursor++ % static_cast<std::size_t>(k));
  for (std::size_t idx : neg) fold_of[idx] = static_cast<int>(cursor++ % static_cast<std::size_t>(k));

  CvResult result;
  Confusion total;
  double sum_p = 0.0, sum_r = 0.0, sum_a = 0.0;
  for (int f = 0; f < k; ++f) {
    std::vector<Example> train_set, test_set;
    for (std::size_t i = 0; i < examples.size(); ++i)
      (fold_of[i] == f ? test_set : train_set).push_back(examples[i]);
    const Model model = train(train_set, hp, rng_seed);
    const Metrics m = evaluate(model, test_set);
    sum_p += m.precision;
    sum_r += m.recall;
    sum_a += m.accuracy;
    total.tp += m.confusion.tp;
    total.fp += m.confusion.fp;
    total.tn += m.confusion.tn;
    total.fn += m.confusion.fn;
    result.folds.push_back(m);
  }
  result.mean.precision = sum_p / k;
  result.mean.recall = sum_r / k;
  result.mean.accuracy = sum_a / k;
  result.mean.confusion = total;
  return result;
}

inline nlohmann::json model_to_json(const Model& model) {
  return nlohmann::json{
      {"version", 1},
      {"bias", model.bias},
      {"weights", model.weights},
      {"rng_seed", model.rng_seed},
      {"hyperparams",
       {{"l2_lambda", model.hyperparams.l2_lambda},
        {"learning_rate", model.hyperparams.learning_rate},
        {"max_epochs", model.hyperparams.max_epochs},
        {"tolerance", model.hyperparams.tolerance}}},
      {"space", model.space->to_json()}};
}

inline Model model_from_json(const nlohmann::json& j) {
  if (!j.contains("version") || j["version"].get<int>() != 1)
    throw std::runtime_error("model: unsupported version");
  Model model;
  model.space = std::make_shared<FeatureSpace>(FeatureSpace::from_json(j.at("space")));
  model.weights = j.at("weights").get<std::vector<double>>();
  model.bias = j.at("bias").get<double>();
  model.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  const auto& h = j.at("hyperparams");
  model.hyperparams.l2_lambda = h.at("l2_lambda").get<double>();
  model.hyperparams.learning_rate = h.at("learning_rate").get<double>();
  model.hyperparams.max_epochs = h.at("max_epochs").get<int>();
  model.hyperparams.tolerance = h.at("tolerance").get<double>();
  if (model.weights.size() != model.space->size())
    throw std::runtime_error("model: weight count does not match space dimensions");
  return model;
}

inline void save_model(const Model& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file: " + path);
  out << model_to_json(model).dump(2) << '\n';
}

inline Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  nlohmann::json j;
  in >> j;
  return model_from_json(j);
}

}  // namespace ipmine
