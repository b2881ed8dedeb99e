#include "strata/feedback.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "strata/text.h"

namespace strata {

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(t)) without overflow.
double softplus(double t) { return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

double dot(std::span<const double> w, const SparseVector& x) {
  double s = 0.0;
  for (const auto& [dim, value] : x) s += w[dim] * value;
  return s;
}

}  // namespace

std::shared_ptr<const FeatureSpace> FeatureSpace::from_index(const InvertedIndex& index) {
  auto space = std::make_shared<FeatureSpace>();
  const auto terms = index.vocabulary();
  space->dimension.reserve(terms.size());
  space->idf.reserve(terms.size());
  for (std::uint32_t i = 0; i < terms.size(); ++i) {
    space->dimension.emplace(terms[i], i);
    space->idf.push_back(index.idf(terms[i]));
  }
  return space;
}

SparseVector tfidf_vector(std::string_view text, const FeatureSpace& features) {
  std::unordered_map<std::uint32_t, std::uint32_t> tf;
  for (const std::string& token : tokenize(text)) {
    auto it = features.dimension.find(token);
    if (it != features.dimension.end()) ++tf[it->second];
  }
  SparseVector v;
  v.reserve(tf.size());
  for (const auto& [dim, count] : tf) {
    v.emplace_back(dim, (1.0 + std::log(static_cast<double>(count))) * features.idf[dim]);
  }
  std::sort(v.begin(), v.end());
  double norm = 0.0;
  for (const auto& [dim, value] : v) norm += value * value;
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (auto& [dim, value] : v) value /= norm;
  } else {
    v.clear();
  }
  return v;
}

Objective logistic_objective(std::span<const double> weights, double bias, std::span<const SparseVector> examples,
                             std::span<const int> labels, double l2) {
  Objective obj;
  obj.grad_w.assign(weights.size(), 0.0);
  const double m = static_cast<double>(examples.size());
  if (examples.empty()) return obj;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const double z = dot(weights, examples[i]) + bias;
    const double sign = labels[i] > 0 ? 1.0 : -1.0;
    obj.loss += softplus(-sign * z);
    const double residual = sigmoid(z) - (labels[i] > 0 ? 1.0 : 0.0);
    for (const auto& [dim, value] : examples[i]) obj.grad_w[dim] += residual * value;
    obj.grad_b += residual;
  }
  double sq = 0.0;
  for (std::size_t d = 0; d < weights.size(); ++d) {
    sq += weights[d] * weights[d];
    obj.grad_w[d] = obj.grad_w[d] / m + l2 / m * weights[d];
  }
  obj.loss = obj.loss / m + l2 / (2.0 * m) * sq;
  obj.grad_b /= m;
  return obj;
}

double FeedbackModel::probability(std::string_view text) const {
  return sigmoid(dot(weights, tfidf_vector(text, *features)) + bias);
}

FeedbackModel train_classifier(int topic_id, const Qrels& qrels, const TextLookup& texts,
                               std::shared_ptr<const FeatureSpace> features, const TrainingOptions& options) {
  std::vector<SparseVector> examples;
  std::vector<int> labels;
  std::size_t positives = 0;
  for (const auto& [doc, judgment] : qrels.topic(topic_id)) {
    const std::string* text = texts(doc);
    if (!text) continue;
    examples.push_back(tfidf_vector(*text, *features));
    labels.push_back(judgment.grade > 0 ? 1 : 0);
    positives += judgment.grade > 0 ? 1 : 0;
  }
  if (positives == 0 || positives == examples.size()) {
    throw SingleClassError("topic " + std::to_string(topic_id) +
                           " lacks positive or negative judged documents; use unmixed scores");
  }

  FeedbackModel model;
  model.topic_id = topic_id;
  model.weights.assign(features->size(), 0.0);
  model.features = std::move(features);

  bool converged = false;
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    const Objective obj = logistic_objective(model.weights, model.bias, examples, labels, options.l2);
    model.loss_history.push_back(obj.loss);
    double inf_norm = std::abs(obj.grad_b);
    for (double g : obj.grad_w) inf_norm = std::max(inf_norm, std::abs(g));
    if (inf_norm < options.gradient_tolerance) {
      converged = true;
      break;
    }
    for (std::size_t d = 0; d < model.weights.size(); ++d) model.weights[d] -= options.learning_rate * obj.grad_w[d];
    model.bias -= options.learning_rate * obj.grad_b;
  }
  if (!converged) {
    model.loss_history.push_back(
        logistic_objective(model.weights, model.bias, examples, labels, options.l2).loss);
  }
  return model;
}

RankedList classify_interpolate(const FeedbackModel& model, const RankedList& candidates, const TextLookup& texts,
                                double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw UsageError("mixing weight must lie in [0, 1]");
  RankedList out;
  out.topic_id = candidates.topic_id;
  out.tag = candidates.tag;
  if (candidates.empty()) return out;

  double lo = candidates.entries.front().score;
  double hi = lo;
  for (const RankedEntry& e : candidates.entries) {
    lo = std::min(lo, e.score);
    hi = std::max(hi, e.score);
  }
  static const std::string kEmpty;
  std::vector<double> final_score(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const RankedEntry& e = candidates.entries[i];
    const double norm = hi > lo ? (e.score - lo) / (hi - lo) : 0.0;
    const std::string* text = texts(e.doc_id);
    const double p = model.probability(text ? *text : kEmpty);
    final_score[i] = (1.0 - alpha) * norm + alpha * p;
  }
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return final_score[a] > final_score[b]; });
  for (std::size_t i : order) out.entries.push_back({candidates.entries[i].doc_id, 0, final_score[i]});
  out.renumber();
  return out;
}

RankedList residual_filter(const RankedList& candidates, const Qrels& qrels) {
  RankedList out;
  out.topic_id = candidates.topic_id;
  out.tag = candidates.tag;
  for (const RankedEntry& e : candidates.entries) {
    if (!qrels.judged(candidates.topic_id, e.doc_id)) out.entries.push_back(e);
  }
  out.renumber();
  return out;
}

}  // namespace strata
