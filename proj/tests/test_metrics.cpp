#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "simplerec/metrics.hpp"
#include "simplerec/rng.hpp"

using namespace simplerec;

namespace {

// Independent scalar implementation used as the oracle.
double brute_ndcg(const std::vector<NodeId>& ranked, const std::unordered_set<NodeId>& relevant,
                  int k) {
  double dcg = 0.0;
  for (int p = 0; p < std::min<int>(k, ranked.size()); ++p)
    if (relevant.count(ranked[p])) dcg += 1.0 / std::log2(p + 2.0);
  double idcg = 0.0;
  for (int p = 0; p < std::min<int>(k, static_cast<int>(relevant.size())); ++p)
    idcg += 1.0 / std::log2(p + 2.0);
  return dcg / idcg;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("single relevant item at rank 1 scores 1.0") {
  CHECK(ndcg_at_k({7, 1, 2}, {7}, 20) == 1.0);
}

TEST_CASE("single relevant item at rank 2 scores 1/log2(3)") {
  CHECK(ndcg_at_k({1, 7, 2}, {7}, 20) == doctest::Approx(0.63093).epsilon(1e-4));
  CHECK(ndcg_at_k({1, 7, 2}, {7}, 20) == doctest::Approx(1.0 / std::log2(3.0)));
}

TEST_CASE("ndcg matches the brute-force oracle on random instances") {
  Rng rng(10);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + rng.uniform_int(30);
    std::vector<NodeId> ranked;
    for (int i = 0; i < n; ++i) ranked.push_back(i);
    rng.shuffle(ranked);
    std::unordered_set<NodeId> relevant;
    const int n_rel = 1 + rng.uniform_int(n);
    for (int i = 0; i < n_rel; ++i) relevant.insert(rng.uniform_int(n + 5));
    const int k = 1 + rng.uniform_int(25);
    CHECK(ndcg_at_k(ranked, relevant, k) ==
          doctest::Approx(brute_ndcg(ranked, relevant, k)).epsilon(1e-12));
  }
}

TEST_CASE("the best permutation of <=5 items scores exactly 1") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + rng.uniform_int(4); // 2..5 items
    std::vector<NodeId> items;
    for (int i = 0; i < n; ++i) items.push_back(i);
    std::unordered_set<NodeId> relevant;
    const int n_rel = 1 + rng.uniform_int(n);
    while (static_cast<int>(relevant.size()) < n_rel) relevant.insert(rng.uniform_int(n));
    const int k = 1 + rng.uniform_int(5);

    std::sort(items.begin(), items.end());
    double best = 0.0;
    do {
      best = std::max(best, ndcg_at_k(items, relevant, k));
    } while (std::next_permutation(items.begin(), items.end()));
    CHECK(best == doctest::Approx(1.0));
  }
}

TEST_CASE("recall and precision edge cases") {
  CHECK(recall_at_k({1, 2, 3}, {1, 2}, 3) == 1.0);
  CHECK(recall_at_k({4, 5, 6}, {1, 2}, 3) == 0.0);
  CHECK(precision_at_k({4, 5, 6}, {1, 2}, 3) == 0.0);
  CHECK(precision_at_k({1, 2, 6}, {1, 2}, 3) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("recall * |relevant| equals precision * k on random lists") {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + rng.uniform_int(40);
    std::vector<NodeId> ranked;
    for (int i = 0; i < n; ++i) ranked.push_back(i);
    rng.shuffle(ranked);
    std::unordered_set<NodeId> relevant;
    const int n_rel = 1 + rng.uniform_int(15);
    for (int i = 0; i < n_rel; ++i) relevant.insert(rng.uniform_int(n + 10));
    const int k = 1 + rng.uniform_int(30);
    const double lhs = recall_at_k(ranked, relevant, k) * relevant.size();
    const double rhs = precision_at_k(ranked, relevant, k) * k;
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("identical lists cover exactly k/|I|") {
  const std::vector<NodeId> list = {3, 1, 4};
  const std::vector<std::vector<NodeId>> lists(25, list);
  CHECK(coverage_at_k(lists, 30) == doctest::Approx(3.0 / 30.0));
}

TEST_CASE("jointly exhaustive lists cover 1.0") {
  std::vector<std::vector<NodeId>> lists = {{0, 1, 2}, {3, 4, 5}, {6, 7, 8}, {9, 0, 1}};
  CHECK(coverage_at_k(lists, 10) == 1.0);
}

TEST_CASE("coverage equals an independent set-union count and ignores order") {
  Rng rng(13);
  std::vector<std::vector<NodeId>> lists;
  std::set<NodeId> expected;
  for (int u = 0; u < 20; ++u) {
    std::vector<NodeId> list;
    for (int j = 0; j < 5; ++j) {
      const NodeId item = rng.uniform_int(50);
      list.push_back(item);
      expected.insert(item);
    }
    lists.push_back(list);
  }
  CHECK(coverage_at_k(lists, 50) == doctest::Approx(expected.size() / 50.0));
  for (auto& list : lists) std::reverse(list.begin(), list.end());
  CHECK(coverage_at_k(lists, 50) == doctest::Approx(expected.size() / 50.0));
}

// ---------------------------------------------------------------------------

TEST_CASE("I-NDCG is 1.0 when the positive always wins") {
  Eigen::VectorXd scores = Eigen::VectorXd::Zero(200);
  scores[0] = 10.0;
  std::vector<NodeId> unrated;
  for (NodeId i = 1; i < 200; ++i) unrated.push_back(i);
  const auto r = indcg_sampled(scores, {0}, unrated, 99, 5);
  CHECK(r.mean == 1.0);
  CHECK(r.n_positives == 1);
  CHECK(!r.truncated);
}

TEST_CASE("I-NDCG at the bottom of a 99-negative list is 1/log2(101)") {
  Eigen::VectorXd scores = Eigen::VectorXd::Zero(200);
  scores[0] = -10.0;
  for (NodeId i = 1; i < 200; ++i) scores[i] = 1.0 + i;
  std::vector<NodeId> unrated;
  for (NodeId i = 1; i < 200; ++i) unrated.push_back(i);
  const auto r = indcg_sampled(scores, {0}, unrated, 99, 6);
  CHECK(r.mean == doctest::Approx(1.0 / std::log2(101.0)).epsilon(1e-12));
  CHECK(r.mean == doctest::Approx(0.15019).epsilon(1e-3));
}

TEST_CASE("I-NDCG ignores which negatives were drawn when all score below") {
  Eigen::VectorXd scores(50);
  for (NodeId i = 0; i < 50; ++i) scores[i] = -static_cast<double>(i);
  std::vector<NodeId> unrated;
  for (NodeId i = 1; i < 50; ++i) unrated.push_back(i);
  for (const std::uint64_t seed : {1ULL, 2ULL, 3ULL})
    CHECK(indcg_sampled(scores, {0}, unrated, 10, seed).mean == 1.0);
}

TEST_CASE("I-NDCG with every negative equals full NDCG for a single positive") {
  Rng rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    const int n_items = 6 + rng.uniform_int(10);
    Eigen::VectorXd scores(n_items);
    for (int i = 0; i < n_items; ++i) scores[i] = rng.normal();
    const NodeId positive = rng.uniform_int(n_items);
    std::vector<NodeId> unrated;
    for (NodeId i = 0; i < n_items; ++i)
      if (i != positive) unrated.push_back(i);

    const auto r = indcg_sampled(scores, {positive}, unrated,
                                 static_cast<int>(unrated.size()), 7);
    // full ranking of all items
    std::vector<NodeId> ranked(n_items);
    for (int i = 0; i < n_items; ++i) ranked[i] = i;
    std::sort(ranked.begin(), ranked.end(), [&](NodeId a, NodeId b) {
      if (scores[a] != scores[b]) return scores[a] > scores[b];
      return a < b;
    });
    CHECK(r.mean == doctest::Approx(ndcg_at_k(ranked, {positive}, n_items)).epsilon(1e-12));
  }
}

TEST_CASE("I-NDCG flags truncation when negatives run out") {
  Eigen::VectorXd scores = Eigen::VectorXd::Zero(5);
  const auto r = indcg_sampled(scores, {0}, {1, 2, 3}, 99, 8);
  CHECK(r.truncated);
}

// ---------------------------------------------------------------------------

TEST_CASE("identical reports give p = 1 and degenerate flag") {
  const std::vector<double> a = {0.5, 0.25, 0.75};
  const auto r = wilcoxon_signed_rank(a, a);
  CHECK(r.p_value == 1.0);
  CHECK(r.degenerate);
}

TEST_CASE("uniform dominance over 50 users is highly significant") {
  std::vector<double> a(50), b(50);
  Rng rng(15);
  for (int i = 0; i < 50; ++i) {
    b[i] = rng.uniform();
    a[i] = b[i] + 0.05 + 0.1 * rng.uniform();
  }
  const auto r = wilcoxon_signed_rank(a, b);
  CHECK(r.p_value < 0.001);
  CHECK(!r.degenerate);
}

TEST_CASE("exact small-n distribution matches brute-force sign enumeration") {
  Rng rng(16);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 8;
    std::vector<double> a(n), b(n);
    std::vector<double> diffs(n);
    for (int i = 0; i < n; ++i) {
      b[i] = rng.uniform();
      // distinct magnitudes keep the oracle's ranks unambiguous
      diffs[i] = (rng.uniform() < 0.5 ? 1 : -1) * (0.01 * (i + 1) + 0.001);
      a[i] = b[i] + diffs[i];
    }
    const auto result = wilcoxon_signed_rank(a, b);

    // oracle: ranks of |d|, then enumerate all 2^8 sign assignments
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](int x, int y) { return std::abs(diffs[x]) < std::abs(diffs[y]); });
    std::vector<int> rank(n);
    for (int i = 0; i < n; ++i) rank[order[i]] = i + 1;
    int w_plus = 0;
    for (int i = 0; i < n; ++i)
      if (diffs[i] > 0) w_plus += rank[i];
    int le = 0, ge = 0;
    for (int mask = 0; mask < (1 << n); ++mask) {
      int w = 0;
      for (int i = 0; i < n; ++i)
        if (mask & (1 << i)) w += i + 1; // ranks 1..n assigned to sorted positions
      if (w <= w_plus) ++le;
      if (w >= w_plus) ++ge;
    }
    const double expected = std::min(1.0, 2.0 * std::min(le, ge) / 256.0);
    CHECK(result.p_value == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("report round trip and paired significance plumbing") {
  MetricReport a, b;
  a.scorer = "model";
  b.scorer = "toppop";
  a.k = b.k = 5;
  Rng rng(17);
  for (int u = 0; u < 12; ++u) {
    UserMetricRow ra, rb;
    ra.user = rb.user = u;
    ra.user_key = rb.user_key = "u" + std::to_string(u);
    rb.ndcg = rng.uniform();
    ra.ndcg = rb.ndcg + 0.1;
    ra.recall = rb.recall = 0.5;
    a.rows.push_back(ra);
    b.rows.push_back(rb);
  }
  a.finalize();
  b.finalize();

  const auto sig = paired_significance(a, b, "ndcg");
  CHECK(sig.p_value < 0.01);
  const auto tied = paired_significance(a, b, "recall");
  CHECK(tied.degenerate);

  const auto j = a.to_json();
  const MetricReport back = MetricReport::from_json(j);
  CHECK(back.n_users == a.n_users);
  CHECK(back.ndcg == doctest::Approx(a.ndcg));
  CHECK(back.rows.size() == a.rows.size());

  MetricReport c = b;
  c.rows.pop_back();
  c.finalize();
  CHECK_THROWS_AS(static_cast<void>(paired_significance(a, c, "ndcg")), ConfigError);
}

TEST_CASE("metric values always land in [0,1]") {
  Rng rng(18);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + rng.uniform_int(20);
    std::vector<NodeId> ranked;
    for (int i = 0; i < n; ++i) ranked.push_back(i);
    rng.shuffle(ranked);
    std::unordered_set<NodeId> relevant;
    for (int i = 0; i <= rng.uniform_int(6); ++i) relevant.insert(rng.uniform_int(n + 3));
    const int k = 1 + rng.uniform_int(10);
    for (const double v : {ndcg_at_k(ranked, relevant, k), recall_at_k(ranked, relevant, k),
                           precision_at_k(ranked, relevant, k)}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

}  // TEST_SUITE
