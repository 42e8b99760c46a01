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

#include "simplerec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "simplerec/rng.hpp"

namespace simplerec {

namespace {

double dcg_weight(int position) { return 1.0 / std::log2(static_cast<double>(position) + 1.0); }

int hits_at_k(const std::vector<NodeId>& ranked, const std::unordered_set<NodeId>& relevant,
              int k) {
  int hits = 0;
  const int limit = std::min<int>(k, static_cast<int>(ranked.size()));
  for (int p = 0; p < limit; ++p)
    if (relevant.contains(ranked[p])) ++hits;
  return hits;
}

}  // namespace

double ndcg_at_k(const std::vector<NodeId>& ranked, const std::unordered_set<NodeId>& relevant,
                 int k) {
  if (k < 1) throw ConfigError("ndcg_at_k: k must be >= 1");
  if (relevant.empty()) throw ConfigError("ndcg_at_k: empty relevant set (skip this user)");
  double dcg = 0.0;
  const int limit = std::min<int>(k, static_cast<int>(ranked.size()));
  for (int p = 0; p < limit; ++p)
    if (relevant.contains(ranked[p])) dcg += dcg_weight(p + 1);
  double idcg = 0.0;
  const int ideal = std::min<int>(k, static_cast<int>(relevant.size()));
  for (int p = 1; p <= ideal; ++p) idcg += dcg_weight(p);
  return dcg / idcg;
}

double recall_at_k(const std::vector<NodeId>& ranked, const std::unordered_set<NodeId>& relevant,
                   int k) {
  if (k < 1) throw ConfigError("recall_at_k: k must be >= 1");
  if (relevant.empty()) throw ConfigError("recall_at_k: empty relevant set (skip this user)");
  return static_cast<double>(hits_at_k(ranked, relevant, k)) /
         static_cast<double>(relevant.size());
}

double precision_at_k(const std::vector<NodeId>& ranked,
                      const std::unordered_set<NodeId>& relevant, int k) {
  if (k < 1) throw ConfigError("precision_at_k: k must be >= 1");
  if (relevant.empty()) throw ConfigError("precision_at_k: empty relevant set (skip this user)");
  return static_cast<double>(hits_at_k(ranked, relevant, k)) / static_cast<double>(k);
}

double coverage_at_k(const std::vector<std::vector<NodeId>>& ranked_lists, int item_count) {
  if (item_count < 1) throw ConfigError("coverage_at_k: empty catalog");
  std::unordered_set<NodeId> covered;
  for (const auto& list : ranked_lists) covered.insert(list.begin(), list.end());
  return static_cast<double>(covered.size()) / static_cast<double>(item_count);
}

IndcgResult indcg_sampled(const Eigen::VectorXd& item_scores,
                          const std::vector<NodeId>& positives,
                          const std::vector<NodeId>& unrated, int negatives_per_positive,
                          std::uint64_t seed) {
  if (negatives_per_positive < 1) throw ConfigError("indcg_sampled: N must be >= 1");
  IndcgResult result;
  Rng rng(seed);
  const int n_unrated = static_cast<int>(unrated.size());
  for (const NodeId pos : positives) {
    int n_draw = negatives_per_positive;
    if (n_draw > n_unrated) {
      n_draw = n_unrated;
      result.truncated = true;
    }
    const auto idx = rng.sample_without_replacement(n_unrated, n_draw);
    // Rank of the positive among positive + sampled negatives. Ties break
    // by ascending item id.
    const double s_pos = item_scores[pos];
    int rank = 1;
    for (int j : idx) {
      const NodeId neg = unrated[j];
      const double s = item_scores[neg];
      if (s > s_pos || (s == s_pos && neg < pos)) ++rank;
    }
    result.mean += dcg_weight(rank); // single relevant item: NDCG = 1/log2(rank+1)
    ++result.n_positives;
  }
  if (result.n_positives > 0) result.mean /= static_cast<double>(result.n_positives);
  return result;
}

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size())
    throw ConfigError("wilcoxon_signed_rank: paired samples differ in length");

  std::vector<double> diffs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (d != 0.0) diffs.push_back(d);
  }
  WilcoxonResult result;
  result.n_effective = static_cast<int>(diffs.size());
  if (diffs.empty()) {
    result.degenerate = true;
    result.p_value = 1.0;
    return result;
  }

  // Midranks of |d|; doubled so ties stay integral for the exact DP.
  const int n = static_cast<int>(diffs.size());
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    return std::abs(diffs[x]) < std::abs(diffs[y]);
  });
  std::vector<int> doubled_rank(n);
  int i = 0;
  while (i < n) {
    int j = i;
    while (j < n && std::abs(diffs[order[j]]) == std::abs(diffs[order[i]])) ++j;
    const int sum2 = (i + 1 + j) * (j - i); // 2 * sum of ranks i+1..j
    for (int t = i; t < j; ++t) doubled_rank[order[t]] = sum2 / (j - i);
    i = j;
  }

  long long w_plus2 = 0;
  long long total2 = 0;
  for (int t = 0; t < n; ++t) {
    total2 += doubled_rank[t];
    if (diffs[t] > 0) w_plus2 += doubled_rank[t];
  }

  if (n <= 25) {
    // Exact distribution of 2*W+ under random signs via subset-sum counts.
    std::vector<double> count(static_cast<std::size_t>(total2) + 1, 0.0);
    count[0] = 1.0;
    for (int t = 0; t < n; ++t)
      for (long long s = total2; s >= doubled_rank[t]; --s)
        count[s] += count[s - doubled_rank[t]];
    const double all = std::pow(2.0, n);
    double le = 0.0, ge = 0.0;
    for (long long s = 0; s <= total2; ++s) {
      if (s <= w_plus2) le += count[s];
      if (s >= w_plus2) ge += count[s];
    }
    result.p_value = std::min(1.0, 2.0 * std::min(le, ge) / all);
  } else {
    // Normal approximation with tie correction and continuity correction.
    const double w = static_cast<double>(w_plus2) / 2.0;
    const double mean = static_cast<double>(n) * (n + 1) / 4.0;
    double var = static_cast<double>(n) * (n + 1) * (2 * n + 1) / 24.0;
    // Tie correction: subtract sum(t^3 - t)/48 per tie group.
    i = 0;
    while (i < n) {
      int j = i;
      while (j < n && std::abs(diffs[order[j]]) == std::abs(diffs[order[i]])) ++j;
      const double t = j - i;
      var -= (t * t * t - t) / 48.0;
      i = j;
    }
    const double z = (w - mean - (w > mean ? 0.5 : -0.5)) / std::sqrt(var);
    result.p_value = std::min(1.0, std::erfc(std::abs(z) / std::sqrt(2.0)));
  }
  return result;
}

void MetricReport::finalize() {
  std::sort(rows.begin(), rows.end(),
            [](const UserMetricRow& a, const UserMetricRow& b) { return a.user < b.user; });
  n_users = static_cast<int>(rows.size());
  ndcg = recall = precision = indcg = 0.0;
  int n_indcg = 0;
  for (const auto& row : rows) {
    ndcg += row.ndcg;
    recall += row.recall;
    precision += row.precision;
    if (row.has_indcg) {
      indcg += row.indcg;
      ++n_indcg;
    }
  }
  if (n_users > 0) {
    ndcg /= n_users;
    recall /= n_users;
    precision /= n_users;
  }
  indcg = n_indcg > 0 ? indcg / n_indcg : 0.0;
}

std::string MetricReport::to_tsv() const {
  std::string out;
  out += fmt::format("# scorer={} mode={} k={} candidates={} n_users={} n_skipped={}\n", scorer,
                     mode, k, candidate_policy, n_users, n_skipped);
  out += "metric\tk\tvalue\tn_users\tp_value\n";
  auto p_of = [&](const std::string& m) {
    auto it = p_values.find(m);
    return it == p_values.end() ? std::string("-") : fmt::format("{}", it->second);
  };
  out += fmt::format("ndcg\t{}\t{}\t{}\t{}\n", k, ndcg, n_users, p_of("ndcg"));
  out += fmt::format("recall\t{}\t{}\t{}\t{}\n", k, recall, n_users, p_of("recall"));
  out += fmt::format("precision\t{}\t{}\t{}\t{}\n", k, precision, n_users, p_of("precision"));
  out += fmt::format("coverage\t{}\t{}\t{}\t-\n", k, coverage, n_users);
  if (indcg_negatives > 0)
    out += fmt::format("indcg\t{}\t{}\t{}\t{}\n", indcg_negatives, indcg, n_users, p_of("indcg"));
  return out;
}

nlohmann::ordered_json MetricReport::to_json() const {
  nlohmann::ordered_json j;
  j["scorer"] = scorer;
  j["mode"] = mode;
  j["k"] = k;
  j["candidate_policy"] = candidate_policy;
  j["n_users"] = n_users;
  j["n_skipped"] = n_skipped;
  j["indcg_negatives"] = indcg_negatives;
  j["aggregates"] = {{"ndcg", ndcg},
                     {"recall", recall},
                     {"precision", precision},
                     {"coverage", coverage},
                     {"indcg", indcg}};
  if (!p_values.empty()) {
    j["compared_to"] = compared_to;
    j["p_values"] = p_values;
  }
  j["config"] = config_echo;
  nlohmann::ordered_json users = nlohmann::ordered_json::array();
  for (const auto& row : rows) {
    nlohmann::ordered_json u;
    u["user"] = row.user;
    u["key"] = row.user_key;
    u["ndcg"] = row.ndcg;
    u["recall"] = row.recall;
    u["precision"] = row.precision;
    if (row.has_indcg) u["indcg"] = row.indcg;
    users.push_back(std::move(u));
  }
  j["per_user"] = std::move(users);
  return j;
}

MetricReport MetricReport::from_json(const nlohmann::ordered_json& j) {
  MetricReport r;
  r.scorer = j.value("scorer", "");
  r.mode = j.value("mode", "");
  r.k = j.value("k", 0);
  r.candidate_policy = j.value("candidate_policy", "");
  r.n_users = j.value("n_users", 0);
  r.n_skipped = j.value("n_skipped", 0);
  r.indcg_negatives = j.value("indcg_negatives", 0);
  if (j.contains("aggregates")) {
    const auto& a = j["aggregates"];
    r.ndcg = a.value("ndcg", 0.0);
    r.recall = a.value("recall", 0.0);
    r.precision = a.value("precision", 0.0);
    r.coverage = a.value("coverage", 0.0);
    r.indcg = a.value("indcg", 0.0);
  }
  if (j.contains("config")) r.config_echo = j["config"];
  if (j.contains("per_user")) {
    for (const auto& u : j["per_user"]) {
      UserMetricRow row;
      row.user = u.value("user", -1);
      row.user_key = u.value("key", "");
      row.ndcg = u.value("ndcg", 0.0);
      row.recall = u.value("recall", 0.0);
      row.precision = u.value("precision", 0.0);
      if (u.contains("indcg")) {
        row.indcg = u["indcg"].get<double>();
        row.has_indcg = true;
      }
      r.rows.push_back(std::move(row));
    }
  }
  return r;
}

void MetricReport::save(const std::string& path) const {
  std::ofstream json_out(path);
  if (!json_out) throw DataError(fmt::format("cannot write report '{}'", path));
  json_out << to_json().dump(2) << '\n';
  std::ofstream tsv_out(path + ".tsv");
  if (!tsv_out) throw DataError(fmt::format("cannot write report '{}.tsv'", path));
  tsv_out << to_tsv();
}

MetricReport MetricReport::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open report '{}'", path));
  nlohmann::ordered_json j;
  in >> j;
  return from_json(j);
}

WilcoxonResult paired_significance(const MetricReport& a, const MetricReport& b,
                                   const std::string& metric) {
  std::map<NodeId, double> values_b;
  auto pick = [&metric](const UserMetricRow& row) {
    if (metric == "ndcg") return row.ndcg;
    if (metric == "recall") return row.recall;
    if (metric == "precision") return row.precision;
    if (metric == "indcg") return row.indcg;
    throw ConfigError(fmt::format("unknown metric '{}'", metric));
  };
  for (const auto& row : b.rows) values_b[row.user] = pick(row);
  std::vector<double> xs, ys;
  for (const auto& row : a.rows) {
    auto it = values_b.find(row.user);
    if (it == values_b.end())
      throw ConfigError("paired_significance: reports cover different user sets");
    xs.push_back(pick(row));
    ys.push_back(it->second);
  }
  if (xs.size() != b.rows.size())
    throw ConfigError("paired_significance: reports cover different user sets");
  return wilcoxon_signed_rank(xs, ys);
}

}  // namespace simplerec
