/*
 * Copyright 2026 The SimpleRec Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "simplerec/ckg.hpp"

namespace simplerec {

// Binary-relevance NDCG over the top-k of a ranked list. IDCG normalizes by
// min(|relevant|, k) ideal slots. Callers skip users with empty relevant
// sets.
double ndcg_at_k(const std::vector<NodeId>& ranked, const std::unordered_set<NodeId>& relevant,
                 int k);

double recall_at_k(const std::vector<NodeId>& ranked, const std::unordered_set<NodeId>& relevant,
                   int k);

double precision_at_k(const std::vector<NodeId>& ranked,
                      const std::unordered_set<NodeId>& relevant, int k);

/// Fraction of the catalog covered by the union of all top-k lists.
double coverage_at_k(const std::vector<std::vector<NodeId>>& ranked_lists, int item_count);

struct IndcgResult {
  double mean = 0.0;   // per-positive average
  int n_positives = 0;
  bool truncated = false; // fewer unrated items than requested negatives
};

// Subsampled-ranking NDCG: for each test positive, rank it against
// `negatives_per_positive` sampled unrated items and score the (N+1)-list.
// `item_scores` is indexed by item id. Ties break by ascending item id.
IndcgResult indcg_sampled(const Eigen::VectorXd& item_scores,
                          const std::vector<NodeId>& positives,
                          const std::vector<NodeId>& unrated, int negatives_per_positive,
                          std::uint64_t seed);

struct WilcoxonResult {
  double p_value = 1.0;
  int n_effective = 0;  // pairs with nonzero difference
  bool degenerate = false; // all pairs tied
};

/// Two-sided Wilcoxon signed-rank test over paired per-user values. Exact
/// null distribution (dynamic program over signed midranks) up to n=25,
/// normal approximation with tie correction beyond.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b);

// ---------------------------------------------------------------------------

struct UserMetricRow {
  NodeId user = -1;
  std::string user_key;
  double ndcg = 0.0, recall = 0.0, precision = 0.0;
  double indcg = 0.0;
  bool has_indcg = false;
};

// Per-user and aggregate evaluation results; serializes to a TSV table and
// a structured JSON document (schema: metric, k, value, n_users, p_value).
struct MetricReport {
  std::string scorer;  // "model", "toppop", ...
  std::string mode;    // warm | cold
  int k = 20;
  std::string candidate_policy;
  int n_users = 0;
  int n_skipped = 0; // users with no test positives
  int indcg_negatives = 0;
  std::vector<UserMetricRow> rows; // sorted by user id
  double ndcg = 0.0, recall = 0.0, precision = 0.0, coverage = 0.0, indcg = 0.0;
  std::map<std::string, double> p_values; // metric -> p, vs. comparison report
  std::string compared_to;
  nlohmann::ordered_json config_echo;

  void finalize(); // aggregates from rows
  std::string to_tsv() const;
  nlohmann::ordered_json to_json() const;
  static MetricReport from_json(const nlohmann::ordered_json& j);

  void save(const std::string& path) const; // path.tsv alongside path (json)
  static MetricReport load(const std::string& path);
};

/// Paired significance of `metric` ("ndcg", "recall", "precision", "indcg")
/// between two reports over the same user set.
WilcoxonResult paired_significance(const MetricReport& a, const MetricReport& b,
                                   const std::string& metric);

}  // namespace simplerec
