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

#include "debias/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <unordered_set>

#include "debias/error.hpp"
#include "debias/lexicon.hpp"
#include "debias/util.hpp"

namespace debias {
namespace {

std::vector<std::size_t> balanced_indices(const std::vector<LabeledFeatures>& data,
                                          std::size_t num_groups, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> by_group(num_groups);
  for (std::size_t i = 0; i < data.size(); ++i) by_group[data[i].group].push_back(i);
  std::size_t smallest = SIZE_MAX;
  for (const auto& g : by_group) {
    if (!g.empty()) smallest = std::min(smallest, g.size());
  }
  SeededRng rng(seed);
  std::vector<std::size_t> keep;
  for (auto& g : by_group) {
    if (g.empty()) continue;
    // Partial Fisher-Yates keeps a uniform subset of size `smallest`.
    for (std::size_t i = 0; i < smallest; ++i) {
      std::swap(g[i], g[i + rng.uniform(g.size() - i)]);
    }
    keep.insert(keep.end(), g.begin(), g.begin() + static_cast<std::ptrdiff_t>(smallest));
  }
  std::sort(keep.begin(), keep.end());
  return keep;
}

std::set<std::string> record_tokens(const PredictionRecord& r, LeakageMode mode, bool model_side,
                                    const GroupLexicon* lexicon) {
  if (mode == LeakageMode::kObjects) {
    const auto& objs = model_side ? r.pred_objects : r.gt_objects;
    if (!objs) {
      throw ValidationError("record '" + r.record_id + "' lacks " +
                            (model_side ? "pred_objects" : "gt_objects"));
    }
    return *objs;
  }
  const auto& cap = model_side ? r.pred_caption : r.gt_caption;
  if (!cap) {
    throw ValidationError("record '" + r.record_id + "' lacks " +
                          (model_side ? "pred_caption" : "gt_caption"));
  }
  auto toks = caption_tokens(*cap, *lexicon);
  return {toks.begin(), toks.end()};
}

FeatureVector featurize(const PredictionRecord& r, LeakageMode mode, bool model_side,
                        const Vocabulary& vocab, const GroupLexicon* lexicon) {
  if (mode == LeakageMode::kObjects) {
    return featurize_objects(record_tokens(r, mode, model_side, lexicon), vocab);
  }
  const auto& cap = model_side ? r.pred_caption : r.gt_caption;
  if (!cap) {
    throw ValidationError("record '" + r.record_id + "' lacks " +
                          (model_side ? "pred_caption" : "gt_caption"));
  }
  return featurize_caption(*cap, vocab, *lexicon);
}

// Mean of f_g(y) * [argmax f(y) == g] for one side of the test set.
double leakage_score(const GroupClassifier& attacker, const std::vector<LabeledFeatures>& test) {
  double sum = 0.0;
  for (const auto& ex : test) {
    const auto p = attacker.predict_proba(ex.features);
    const auto argmax = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    if (argmax == ex.group) sum += p[ex.group];
  }
  return sum / static_cast<double>(test.size());
}

std::pair<std::int64_t, std::int64_t> binary_counts(const std::vector<std::string>& pred_groups,
                                                    const GroupSet& groups) {
  if (groups.groups.size() != 2) throw ValidationError("ratio needs exactly two groups");
  std::int64_t first = 0;
  std::int64_t second = 0;
  for (const auto& g : pred_groups) {
    if (g == groups.groups[0]) {
      ++first;
    } else if (g == groups.groups[1]) {
      ++second;
    } else {
      throw ValidationError("predicted group '" + g + "' is not in the group set");
    }
  }
  return {first, second};
}

}  // namespace

Vocabulary::Vocabulary(std::set<std::string> tokens) : tokens_(tokens.begin(), tokens.end()) {
  std::string joined;
  for (const auto& t : tokens_) {
    joined += t;
    joined += '\n';
  }
  id_ = sha256_hex(joined).substr(0, 16);
}

std::optional<std::size_t> Vocabulary::index_of(std::string_view token) const {
  auto it = std::lower_bound(tokens_.begin(), tokens_.end(), token);
  if (it == tokens_.end() || *it != token) return std::nullopt;
  return static_cast<std::size_t>(it - tokens_.begin());
}

FeatureVector featurize_objects(const std::set<std::string>& objects, const Vocabulary& vocabulary) {
  FeatureVector fv{std::vector<double>(vocabulary.size(), 0.0), vocabulary.id()};
  for (const auto& o : objects) {
    if (auto i = vocabulary.index_of(o)) fv.values[*i] = 1.0;
  }
  return fv;
}

std::vector<std::string> caption_tokens(std::string_view caption, const GroupLexicon& lexicon) {
  std::vector<std::string> toks = lowercase_tokens(caption);
  for (auto& t : toks) {
    if (lexicon.group_of(t)) t = std::string(kGroupPlaceholder);
  }
  return toks;
}

FeatureVector featurize_caption(std::string_view caption, const Vocabulary& vocabulary,
                                const GroupLexicon& lexicon) {
  FeatureVector fv{std::vector<double>(vocabulary.size(), 0.0), vocabulary.id()};
  for (const auto& t : caption_tokens(caption, lexicon)) {
    if (auto i = vocabulary.index_of(t)) fv.values[*i] += 1.0;
  }
  return fv;
}

Json AttackerConfig::to_json() const {
  Json j = Json::object();
  j["learning_rate"] = learning_rate;
  j["epochs"] = epochs;
  j["l2"] = l2;
  j["seed"] = seed;
  j["balance_groups"] = balance_groups;
  return j;
}

GroupClassifier::GroupClassifier(std::size_t num_groups, std::size_t dim, std::string vocabulary_id,
                                 AttackerConfig config)
    : num_groups_(num_groups),
      dim_(dim),
      vocabulary_id_(std::move(vocabulary_id)),
      config_(config),
      params_(num_groups * dim + num_groups, 0.0) {}

std::vector<double> GroupClassifier::logits(const FeatureVector& x) const {
  if (x.values.size() != dim_) throw ValidationError("feature dimension does not match the classifier");
  std::vector<double> z(num_groups_);
  for (std::size_t g = 0; g < num_groups_; ++g) {
    double s = params_[num_groups_ * dim_ + g];
    const double* w = &params_[g * dim_];
    for (std::size_t j = 0; j < dim_; ++j) s += w[j] * x.values[j];
    z[g] = s;
  }
  return z;
}

std::vector<double> GroupClassifier::predict_proba(const FeatureVector& x) const {
  return softmax(logits(x));
}

std::vector<double> softmax(const std::vector<double>& logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

double attacker_objective(const std::vector<double>& params, const std::vector<LabeledFeatures>& data,
                          std::size_t num_groups, std::size_t dim, double l2,
                          std::vector<double>* grad) {
  if (params.size() != num_groups * dim + num_groups) throw ValidationError("parameter size mismatch");
  if (data.empty()) throw ValidationError("empty training data");
  if (grad) grad->assign(params.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(data.size());
  const std::size_t bias_at = num_groups * dim;

  double loss = 0.0;
  std::vector<double> z(num_groups);
  for (const auto& ex : data) {
    const auto& x = ex.features.values;
    for (std::size_t g = 0; g < num_groups; ++g) {
      double s = params[bias_at + g];
      const double* w = &params[g * dim];
      for (std::size_t j = 0; j < dim; ++j) s += w[j] * x[j];
      z[g] = s;
    }
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - mx);
    const double log_sum = mx + std::log(sum);
    loss += (log_sum - z[ex.group]) * inv_n;
    if (grad) {
      for (std::size_t g = 0; g < num_groups; ++g) {
        const double residual = (std::exp(z[g] - log_sum) - (g == ex.group ? 1.0 : 0.0)) * inv_n;
        double* gw = &(*grad)[g * dim];
        for (std::size_t j = 0; j < dim; ++j) gw[j] += residual * x[j];
        (*grad)[bias_at + g] += residual;
      }
    }
  }
  double reg = 0.0;
  for (std::size_t i = 0; i < bias_at; ++i) {
    reg += params[i] * params[i];
    if (grad) (*grad)[i] += l2 * params[i];
  }
  return loss + 0.5 * l2 * reg;
}

GroupClassifier train_group_classifier(const std::vector<LabeledFeatures>& data,
                                       std::size_t num_groups, const AttackerConfig& config,
                                       std::vector<double>* loss_trace) {
  if (data.empty()) throw ValidationError("attacker training data is empty");
  if (!(config.learning_rate > 0.0) || config.epochs < 0 || !(config.l2 >= 0.0)) {
    throw ValidationError("invalid attacker config");
  }
  const std::size_t dim = data.front().features.values.size();
  const std::string& vocab_id = data.front().features.vocabulary_id;
  std::vector<bool> present(num_groups, false);
  for (const auto& ex : data) {
    if (ex.group >= num_groups) throw ValidationError("group index out of range");
    if (ex.features.values.size() != dim || ex.features.vocabulary_id != vocab_id) {
      throw ValidationError("training features disagree on vocabulary");
    }
    present[ex.group] = true;
  }
  if (std::count(present.begin(), present.end(), true) < 2) {
    throw ValidationError("attacker training needs at least two groups in the data");
  }

  std::vector<LabeledFeatures> subset;
  const std::vector<LabeledFeatures>* fit = &data;
  if (config.balance_groups) {
    for (std::size_t i : balanced_indices(data, num_groups, config.seed)) subset.push_back(data[i]);
    fit = &subset;
  }

  GroupClassifier model(num_groups, dim, vocab_id, config);
  std::vector<double>& params = model.mutable_parameters();
  std::vector<double> grad;
  if (loss_trace) loss_trace->clear();
  for (int epoch = 0; epoch <= config.epochs; ++epoch) {
    const bool last = epoch == config.epochs;
    const double loss = attacker_objective(params, *fit, num_groups, dim, config.l2, last ? nullptr : &grad);
    if (!std::isfinite(loss)) {
      throw ValidationError("attacker loss became non-finite at epoch " + std::to_string(epoch) +
                            "; lower the learning rate");
    }
    if (loss_trace) loss_trace->push_back(loss);
    if (last) break;
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= config.learning_rate * grad[i];
  }
  return model;
}

LeakageResult leakage(const std::vector<PredictionRecord>& train,
                      const std::vector<PredictionRecord>& test, LeakageMode mode,
                      const GroupSet& groups, const AttackerConfig& config,
                      const GroupLexicon* lexicon) {
  if (test.empty()) throw ValidationError("leakage needs a non-empty test set");
  if (train.empty()) throw ValidationError("leakage needs a non-empty attacker training set");
  if (mode == LeakageMode::kCaptions && lexicon == nullptr) {
    throw ValidationError("caption leakage needs a group lexicon for term masking");
  }
  std::unordered_set<std::string> train_ids;
  for (const auto& r : train) train_ids.insert(r.record_id);
  for (const auto& r : test) {
    if (train_ids.count(r.record_id)) {
      throw ValidationError("record '" + r.record_id + "' is in both attacker train and test sets");
    }
  }

  // One vocabulary for both sides so the two attackers see the same space.
  std::set<std::string> tokens;
  for (const auto& r : train) {
    for (bool side : {true, false}) {
      auto t = record_tokens(r, mode, side, lexicon);
      tokens.insert(t.begin(), t.end());
    }
  }
  const Vocabulary vocab(std::move(tokens));

  const auto labeled = [&](const std::vector<PredictionRecord>& rs, bool model_side) {
    std::vector<LabeledFeatures> out;
    out.reserve(rs.size());
    for (const auto& r : rs) {
      if (!groups.contains(r.true_group)) {
        throw ValidationError("record '" + r.record_id + "' has unknown group '" + r.true_group + "'");
      }
      out.push_back({featurize(r, mode, model_side, vocab, lexicon), groups.index_of(r.true_group)});
    }
    return out;
  };

  const std::size_t ng = groups.groups.size();
  const GroupClassifier model_attacker = train_group_classifier(labeled(train, true), ng, config);
  const GroupClassifier data_attacker = train_group_classifier(labeled(train, false), ng, config);

  LeakageResult res;
  res.lk_model = leakage_score(model_attacker, labeled(test, true));
  res.lk_data = leakage_score(data_attacker, labeled(test, false));
  res.leakage = res.lk_model - res.lk_data;
  res.n_train = train.size();
  res.n_test = test.size();
  return res;
}

AttackerSplit split_for_attacker(const std::vector<PredictionRecord>& records, std::uint64_t seed,
                                 double train_fraction) {
  AttackerSplit split;
  const std::string salt = std::to_string(seed) + ":";
  for (const auto& r : records) {
    const auto digest = sha256_bytes(salt + r.record_id);
    std::uint64_t h = 0;
    for (int i = 0; i < 8; ++i) h = (h << 8) | digest[static_cast<std::size_t>(i)];
    const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    (u < train_fraction ? split.train : split.test).push_back(r);
  }
  return split;
}

double lic(const std::vector<PredictionRecord>& records, const GroupSet& groups,
           const GroupLexicon& lexicon, const AttackerConfig& config) {
  const AttackerSplit split = split_for_attacker(records, config.seed);
  return leakage(split.train, split.test, LeakageMode::kCaptions, groups, config, &lexicon).leakage;
}

double ratio(const std::vector<std::string>& pred_groups, const GroupSet& groups) {
  const auto [first, second] = binary_counts(pred_groups, groups);
  if (first == 0 || second == 0) {
    throw ValidationError("ratio is undefined: a group was never predicted");
  }
  const auto hi = static_cast<double>(std::max(first, second));
  const auto lo = static_cast<double>(std::min(first, second));
  return hi / lo;
}

double directed_ratio(const std::vector<std::string>& pred_groups, const GroupSet& groups) {
  const auto [first, second] = binary_counts(pred_groups, groups);
  if (second == 0) {
    throw ValidationError("directed ratio is undefined: group '" + groups.groups[1] + "' was never predicted");
  }
  return static_cast<double>(first) / static_cast<double>(second);
}

}  // namespace debias
