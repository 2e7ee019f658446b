#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ipmine/classifier.hpp"
#include "ipmine/features.hpp"

namespace ipmine {

// Knobs for cross-forum transfer. The confidence threshold is open on both
// ends: probabilities never reach 1, and 0.5 would accept everything.
struct TransferConfig {
  double threshold = 0.85;
  int min_seed_per_class = 10;
  std::optional<std::size_t> per_class_cap;
  Hyperparams hyperparams;
  std::uint64_t rng_seed = 0;
  std::string source_model_id = "source";
};

// An unlabeled target-forum instance, vectorized over the union space.
struct TargetInstance {
  std::string key;
  FeatureVector features;
};

struct SeedInstance {
  std::string key;
  FeatureVector features;
  Label pseudo_label = Label::negative;
  double confidence = 0.0;  // max(p, 1 - p), in [0.5, 1)
};

// Pseudo-labeled target instances harvested at `threshold` (the final value
// after any relaxation steps).
struct SeedSet {
  std::vector<SeedInstance> instances;
  double threshold = 0.0;
  std::string source_model_id;

  std::size_t count(Label label) const {
    std::size_t n = 0;
    for (const SeedInstance& s : instances)
      if (s.pseudo_label == label) ++n;
    return n;
  }
};

namespace detail {

inline void validate(const TransferConfig& config) {
  if (!(config.threshold > 0.5 && config.threshold < 1.0))
    throw std::invalid_argument("transfer: threshold must be in (0.5, 1)");
  if (config.min_seed_per_class < 1)
    throw std::invalid_argument("transfer: min_seed_per_class must be >= 1");
}

}  // namespace detail

// Applies the source-forum model directly to the target instances; returns
// the positive-class probability per instance, in input order.
inline std::vector<double> cross_port(const Model& source_model,
                                      const std::vector<TargetInstance>& target_instances) {
  std::vector<double> probs;
  probs.reserve(target_instances.size());
  for (const TargetInstance& inst : target_instances)
    probs.push_back(predict_proba(source_model, inst.features));
  return probs;
}

// Single-threshold filter without relaxation or class balancing: every
// instance whose confidence max(p, 1-p) clears `threshold`, pseudo-labeled by
// the source model's thresholded prediction. Exposed separately so the
// anti-monotonicity of the threshold can be checked directly.
inline std::vector<SeedInstance> seed_candidates(const Model& source_model,
                                                 const std::vector<TargetInstance>& target_instances,
                                                 double threshold) {
  std::vector<SeedInstance> out;
  for (const TargetInstance& inst : target_instances) {
    const double p = predict_proba(source_model, inst.features);
    const double confidence = std::max(p, 1.0 - p);
    if (confidence + 1e-12 < threshold) continue;
    out.push_back(SeedInstance{inst.key, inst.features,
                               p >= 0.5 ? Label::positive : Label::negative, confidence});
  }
  return out;
}

// High-confidence seed selection. If either class has fewer than
// min_seed_per_class instances the threshold relaxes downward in 0.05 steps
// (floor 0.5, where every instance qualifies); a class still empty at the
// floor is an error. Classes are then balanced by keeping the top-confidence
// min(class counts) per class, further capped by per_class_cap when set.
inline SeedSet select_seed(const Model& source_model,
                           const std::vector<TargetInstance>& target_instances,
                           const TransferConfig& config) {
  detail::validate(config);
  double threshold = config.threshold;
  std::vector<SeedInstance> kept;
  while (true) {
    kept = seed_candidates(source_model, target_instances, threshold);
    std::size_t pos = 0, neg = 0;
    for (const SeedInstance& s : kept) (s.pseudo_label == Label::positive ? pos : neg)++;
    const std::size_t want = static_cast<std::size_t>(config.min_seed_per_class);
    if (pos >= want && neg >= want) break;
    if (threshold <= 0.5) {
      if (pos == 0 || neg == 0)
        throw std::runtime_error(
            "seed infeasible: class \"" + std::string(pos == 0 ? "positive" : "negative") +
            "\" is empty at the threshold floor 0.5");
      break;  // floor reached with both classes non-empty but under-populated
    }
    threshold = std::max(0.5, threshold - 0.05);
  }

  // Balance by top-confidence truncation; ties keep input order.
  std::vector<std::size_t> pos_idx, neg_idx;
  for (std::size_t i = 0; i < kept.size(); ++i)
    (kept[i].pseudo_label == Label::positive ? pos_idx : neg_idx).push_back(i);
  auto by_confidence = [&](std::size_t a, std::size_t b) {
    return kept[a].confidence > kept[b].confidence;
  };
  std::stable_sort(pos_idx.begin(), pos_idx.end(), by_confidence);
  std::stable_sort(neg_idx.begin(), neg_idx.end(), by_confidence);
  std::size_t cap = std::min(pos_idx.size(), neg_idx.size());
  if (config.per_class_cap) cap = std::min(cap, *config.per_class_cap);
  pos_idx.resize(cap);
  neg_idx.resize(cap);

  std::vector<std::size_t> chosen;
  chosen.reserve(2 * cap);
  chosen.insert(chosen.end(), pos_idx.begin(), pos_idx.end());
  chosen.insert(chosen.end(), neg_idx.begin(), neg_idx.end());
  std::sort(chosen.begin(), chosen.end());

  SeedSet seed;
  seed.threshold = threshold;
  seed.source_model_id = config.source_model_id;
  seed.instances.reserve(chosen.size());
  for (std::size_t i : chosen) seed.instances.push_back(std::move(kept[i]));
  return seed;
}

struct CrossSeedResult {
  Model model;                      // target-specific classifier over the union space
  Model source_model;               // the seeding model, kept for cross-port comparisons
  SeedSet seed;
  std::vector<double> predictions;  // new model's probabilities, per target instance
};

// The four-step transfer: apply the source classifier, harvest a
// high-confidence seed, train a target classifier on the seed, apply it to
// every target instance. Source examples and target instances must already be
// vectorized over the shared union space.
inline CrossSeedResult cross_seed(const std::vector<Example>& source_labeled,
                                  const std::vector<TargetInstance>& target_unlabeled,
                                  const TransferConfig& config) {
  detail::validate(config);
  if (target_unlabeled.empty()) throw std::invalid_argument("cross_seed: empty target instance set");

  Model source_model = train(source_labeled, config.hyperparams, config.rng_seed);
  SeedSet seed = select_seed(source_model, target_unlabeled, config);

  std::vector<Example> seed_examples;
  seed_examples.reserve(seed.instances.size());
  for (const SeedInstance& s : seed.instances)
    seed_examples.push_back(Example{s.key, s.pseudo_label, s.features});

  CrossSeedResult result;
  result.model = train(seed_examples, config.hyperparams, config.rng_seed);
  result.source_model = std::move(source_model);
  result.predictions.reserve(target_unlabeled.size());
  for (const TargetInstance& inst : target_unlabeled)
    result.predictions.push_back(predict_proba(result.model, inst.features));
  result.seed = std::move(seed);
  return result;
}

// Pools the labeled sets of all source forums (over the union space) to train
// the seeding model, then proceeds exactly as cross_seed.
inline CrossSeedResult multi_source_cross_seed(const std::vector<std::vector<Example>>& sources,
                                               const std::vector<TargetInstance>& target_unlabeled,
                                               const TransferConfig& config) {
  if (sources.empty()) throw std::invalid_argument("multi_source_cross_seed: need at least one source");
  std::vector<Example> pooled;
  for (const auto& src : sources) pooled.insert(pooled.end(), src.begin(), src.end());
  return cross_seed(pooled, target_unlabeled, config);
}

}  // namespace ipmine
