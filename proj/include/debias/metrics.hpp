/*
 * Copyright 2026 The debias-forge Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DEBIAS_METRICS_HPP_
#define DEBIAS_METRICS_HPP_

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "debias/manifest.hpp"

namespace debias {

class GroupLexicon;

// Shared token substituted for every group term in captions, so the
// attacker cannot simply read the group word.
inline constexpr std::string_view kGroupPlaceholder = "<group>";

// Sorted token list fixed from the training split.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::set<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& id() const { return id_; }
  std::optional<std::size_t> index_of(std::string_view token) const;

 private:
  std::vector<std::string> tokens_;
  std::string id_;  // digest of the token list
};

struct FeatureVector {
  std::vector<double> values;
  std::string vocabulary_id;
};

// Binary bag of attributes; out-of-vocabulary labels are dropped.
FeatureVector featurize_objects(const std::set<std::string>& objects, const Vocabulary& vocabulary);

// Lowercased tokens with group terms replaced by the placeholder.
std::vector<std::string> caption_tokens(std::string_view caption, const GroupLexicon& lexicon);
// Token counts over the vocabulary after group-term masking.
FeatureVector featurize_caption(std::string_view caption, const Vocabulary& vocabulary,
                                const GroupLexicon& lexicon);

struct AttackerConfig {
  double learning_rate = 0.1;
  int epochs = 500;
  double l2 = 1e-4;
  std::uint64_t seed = 0;
  // Subsample the training set to equal group sizes before fitting.
  bool balance_groups = true;

  Json to_json() const;
};

struct LabeledFeatures {
  FeatureVector features;
  std::size_t group = 0;  // index into the group set
};

// Multinomial logistic regression over bag features.
class GroupClassifier {
 public:
  GroupClassifier(std::size_t num_groups, std::size_t dim, std::string vocabulary_id,
                  AttackerConfig config);

  std::size_t num_groups() const { return num_groups_; }
  std::size_t dim() const { return dim_; }
  const std::string& vocabulary_id() const { return vocabulary_id_; }
  const AttackerConfig& config() const { return config_; }

  // Row-major num_groups x dim weights followed by num_groups biases.
  const std::vector<double>& parameters() const { return params_; }
  std::vector<double>& mutable_parameters() { return params_; }

  std::vector<double> logits(const FeatureVector& x) const;
  // Softmax over the logits: non-negative, sums to 1.
  std::vector<double> predict_proba(const FeatureVector& x) const;

 private:
  std::size_t num_groups_;
  std::size_t dim_;
  std::string vocabulary_id_;
  AttackerConfig config_;
  std::vector<double> params_;
};

std::vector<double> softmax(const std::vector<double>& logits);

// Mean cross-entropy plus (l2/2)*||W||^2 (biases unregularized) at
// `params`; fills `grad` with the analytic gradient when non-null.
double attacker_objective(const std::vector<double>& params, const std::vector<LabeledFeatures>& data,
                          std::size_t num_groups, std::size_t dim, double l2,
                          std::vector<double>* grad);

// Full-batch gradient descent from zero weights. Throws when fewer than two
// groups are present or the loss becomes non-finite. `loss_trace` receives
// the objective before every epoch plus the final value.
GroupClassifier train_group_classifier(const std::vector<LabeledFeatures>& data,
                                       std::size_t num_groups, const AttackerConfig& config,
                                       std::vector<double>* loss_trace = nullptr);

struct PredictionRecord {
  std::string record_id;
  std::string true_group;
  std::optional<std::string> pred_group;
  std::optional<std::set<std::string>> pred_objects;
  std::optional<std::string> pred_caption;
  std::optional<std::set<std::string>> gt_objects;
  std::optional<std::string> gt_caption;
};

enum class LeakageMode { kObjects, kCaptions };

struct LeakageResult {
  double lk_model = 0.0;
  double lk_data = 0.0;
  double leakage = 0.0;  // lk_model - lk_data
  std::size_t n_train = 0;
  std::size_t n_test = 0;
};

// Trains one attacker on model outputs and one on ground truth (same
// vocabulary, config and seed) and scores each on its own side of `test`:
// mean of f_g(y) * [argmax f(y) == g].
LeakageResult leakage(const std::vector<PredictionRecord>& train,
                      const std::vector<PredictionRecord>& test, LeakageMode mode,
                      const GroupSet& groups, const AttackerConfig& config,
                      const GroupLexicon* lexicon = nullptr);

struct AttackerSplit {
  std::vector<PredictionRecord> train;
  std::vector<PredictionRecord> test;
};

// Deterministic split by a seeded hash of record_id.
AttackerSplit split_for_attacker(const std::vector<PredictionRecord>& records, std::uint64_t seed,
                                 double train_fraction = 0.7);

// Caption leakage with group terms masked: leakage(mode = captions) on a
// 70/30 split of `records`.
double lic(const std::vector<PredictionRecord>& records, const GroupSet& groups,
           const GroupLexicon& lexicon, const AttackerConfig& config);

// max(r, 1/r) with r = #first group / #second group. Throws when either
// count is zero (the ratio is undefined) or the group set is not binary.
double ratio(const std::vector<std::string>& pred_groups, const GroupSet& groups);
// r itself, without folding.
double directed_ratio(const std::vector<std::string>& pred_groups, const GroupSet& groups);

struct BiasReport {
  std::optional<double> ratio;  // unset when undefined
  double lk_model = 0.0;
  double lk_data = 0.0;
  double leakage = 0.0;
  std::optional<double> lic;
  Json config = Json::object();
};

}  // namespace debias

#endif  // DEBIAS_METRICS_HPP_
