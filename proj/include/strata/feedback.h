#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "strata/errors.h"
#include "strata/inverted_index.h"
#include "strata/qrels.h"
#include "strata/ranked_list.h"

namespace strata {

/// Sparse vector as (dimension, value) pairs sorted by dimension.
using SparseVector = std::vector<std::pair<std::uint32_t, double>>;

/// Term -> dimension map plus per-dimension idf, shared by every topic model.
struct FeatureSpace {
  std::unordered_map<std::string, std::uint32_t> dimension;
  std::vector<double> idf;

  std::size_t size() const { return idf.size(); }

  /// Vocabulary = all terms of `index` in sorted order, idf from the index.
  static std::shared_ptr<const FeatureSpace> from_index(const InvertedIndex& index);
};

/// (1 + ln tf) * idf per in-vocabulary term, L2-normalized. All-OOV text
/// yields the empty (zero) vector.
SparseVector tfidf_vector(std::string_view text, const FeatureSpace& features);

struct TrainingOptions {
  double l2 = 1.0;
  double learning_rate = 0.5;
  std::size_t max_iterations = 200;
  double gradient_tolerance = 1e-6;
};

/// Regularized logistic loss over m examples with labels in {0, 1}:
///   J(w, b) = (1/m) sum_i log(1 + exp(-s_i (w.x_i + b))) + (l2 / 2m) |w|^2
/// with s_i = +1 / -1. The bias is not regularized.
struct Objective {
  double loss = 0.0;
  std::vector<double> grad_w;
  double grad_b = 0.0;
};

Objective logistic_objective(std::span<const double> weights, double bias, std::span<const SparseVector> examples,
                             std::span<const int> labels, double l2);

struct FeedbackModel {
  int topic_id = 0;
  std::shared_ptr<const FeatureSpace> features;
  std::vector<double> weights;
  double bias = 0.0;
  /// Objective value before each iteration and after the last one.
  std::vector<double> loss_history;

  double probability(std::string_view text) const;
};

/// Thrown when a topic has no positive or no negative judged document with text.
class SingleClassError : public Error {
 public:
  using Error::Error;
};

using TextLookup = std::function<const std::string*(const std::string& doc_id)>;

/// Full-batch gradient descent from zero. Positives are grade > 0; judged docs
/// without text are skipped.
FeedbackModel train_classifier(int topic_id, const Qrels& qrels, const TextLookup& texts,
                               std::shared_ptr<const FeatureSpace> features, const TrainingOptions& options = {});

/// final = (1 - alpha) * minmax(original) + alpha * P(relevant | doc), sorted
/// desc with ties kept in prior order. A candidate without text gets the
/// probability of the empty document.
RankedList classify_interpolate(const FeedbackModel& model, const RankedList& candidates, const TextLookup& texts,
                                double alpha);

/// Removes every document judged for the list's topic and renumbers ranks.
RankedList residual_filter(const RankedList& candidates, const Qrels& qrels);

}  // namespace strata
