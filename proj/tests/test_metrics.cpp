#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "nep/errors.hpp"
#include "nep/labels.hpp"
#include "nep/metrics.hpp"
#include "nep/rng.hpp"

using namespace nep;
using doctest::Approx;

namespace {

constexpr EventLabel A = EventLabel::Terrorism;
constexpr EventLabel B = EventLabel::SuicideBombing;
constexpr EventLabel C = EventLabel::SexAbuse;

void append(std::vector<EventLabel>& pred, std::vector<EventLabel>& gold,
            EventLabel g, EventLabel p, std::size_t times) {
  for (std::size_t i = 0; i < times; ++i) {
    pred.push_back(p);
    gold.push_back(g);
  }
}

// Random tiling of 0..n-1 into passages (labels irrelevant to clustering).
std::vector<Passage> random_tiling(Rng& rng, std::size_t n) {
  std::vector<Passage> passages;
  std::size_t start = 0;
  while (start < n) {
    const std::size_t len = 1 + rng.below(n - start);
    passages.push_back(Passage{start, start + len - 1, A});
    start += len;
  }
  return passages;
}

// Same arithmetic as BCubedTotals::add, written from the per-sentence
// definition instead of the two-pointer sweep.
void oracle_bcubed(std::span<const Passage> pred,
                   std::span<const Passage> gold, std::size_t n,
                   double& p_sum, double& r_sum) {
  const auto cluster_of = [](std::span<const Passage> tiling, std::size_t s) {
    for (const Passage& p : tiling) {
      if (s >= p.start && s <= p.end) return p;
    }
    REQUIRE(false);
    return Passage{};
  };
  for (std::size_t s = 0; s < n; ++s) {
    const Passage p = cluster_of(pred, s);
    const Passage g = cluster_of(gold, s);
    const std::size_t lo = std::max(p.start, g.start);
    const std::size_t hi = std::min(p.end, g.end);
    const auto overlap = static_cast<double>(hi - lo + 1);
    p_sum += overlap / static_cast<double>(p.length());
    r_sum += overlap / static_cast<double>(g.length());
  }
}

}  // namespace

TEST_SUITE("prf1") {
  TEST_CASE("perfect predictions score one everywhere") {
    const std::vector<EventLabel> labels = {A, B, B, C, A, A};
    const PRF1Report report = prf1(labels, labels);
    CHECK(report.per_class[label_index(A)].precision == 1.0);
    CHECK(report.per_class[label_index(A)].recall == 1.0);
    CHECK(report.per_class[label_index(A)].f1 == 1.0);
    CHECK(report.per_class[label_index(A)].support == 3);
    CHECK(report.per_class[label_index(B)].support == 2);
    CHECK(report.per_class[label_index(C)].support == 1);
    CHECK(report.per_class[label_index(EventLabel::Strike)].support == 0);
    CHECK(report.per_class[label_index(EventLabel::Strike)].f1 == 0.0);
    CHECK(report.weighted_precision == 1.0);
    CHECK(report.weighted_recall == 1.0);
    CHECK(report.weighted_f1 == 1.0);
  }

  TEST_CASE("constant predictor against a half-half gold") {
    std::vector<EventLabel> pred, gold;
    append(pred, gold, A, A, 10);
    append(pred, gold, B, A, 10);
    const PRF1Report report = prf1(pred, gold);
    const ClassMetrics& a = report.per_class[label_index(A)];
    CHECK(a.precision == 0.5);
    CHECK(a.recall == 1.0);
    CHECK(a.f1 == Approx(2.0 / 3.0).epsilon(1e-12));
    const ClassMetrics& b = report.per_class[label_index(B)];
    CHECK(b.precision == 0.0);
    CHECK(b.recall == 0.0);
    CHECK(b.f1 == 0.0);
    CHECK(b.support == 10);
    CHECK(report.weighted_precision == 0.25);
    CHECK(report.weighted_recall == 0.5);
    CHECK(report.weighted_f1 == Approx(1.0 / 3.0).epsilon(1e-12));
  }

  TEST_CASE("twenty items reproduce the hand confusion matrix") {
    // gold A x8 -> 5 A, 2 B, 1 C; gold B x7 -> 1 A, 6 B; gold C x5 -> 2 A,
    // 1 B, 2 C. Column sums: pred A 8, pred B 9, pred C 3.
    std::vector<EventLabel> pred, gold;
    append(pred, gold, A, A, 5);
    append(pred, gold, A, B, 2);
    append(pred, gold, A, C, 1);
    append(pred, gold, B, A, 1);
    append(pred, gold, B, B, 6);
    append(pred, gold, C, A, 2);
    append(pred, gold, C, B, 1);
    append(pred, gold, C, C, 2);
    REQUIRE(pred.size() == 20);

    const PRF1Report report = prf1(pred, gold);
    const ClassMetrics& a = report.per_class[label_index(A)];
    CHECK(a.precision == Approx(5.0 / 8.0).epsilon(1e-12));
    CHECK(a.recall == Approx(5.0 / 8.0).epsilon(1e-12));
    CHECK(a.f1 == Approx(5.0 / 8.0).epsilon(1e-12));
    CHECK(a.support == 8);
    const ClassMetrics& b = report.per_class[label_index(B)];
    CHECK(b.precision == Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(b.recall == Approx(6.0 / 7.0).epsilon(1e-12));
    CHECK(b.f1 == Approx(3.0 / 4.0).epsilon(1e-12));
    CHECK(b.support == 7);
    const ClassMetrics& c = report.per_class[label_index(C)];
    CHECK(c.precision == Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(c.recall == Approx(2.0 / 5.0).epsilon(1e-12));
    CHECK(c.f1 == Approx(1.0 / 2.0).epsilon(1e-12));
    CHECK(c.support == 5);

    CHECK(report.weighted_precision == Approx(13.0 / 20.0).epsilon(1e-12));
    CHECK(report.weighted_recall == Approx(13.0 / 20.0).epsilon(1e-12));
    CHECK(report.weighted_f1 == Approx(51.0 / 80.0).epsilon(1e-12));
  }

  TEST_CASE("per-class true positives sum to the exact-match count") {
    Rng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t n = 1 + rng.below(60);
      std::vector<EventLabel> pred, gold;
      std::size_t matches = 0;
      for (std::size_t i = 0; i < n; ++i) {
        pred.push_back(label_from_index(rng.below(kLabelCount)));
        gold.push_back(label_from_index(rng.below(kLabelCount)));
        if (pred.back() == gold.back()) ++matches;
      }
      const PRF1Report report = prf1(pred, gold);
      std::uint64_t tp_total = 0;
      for (const ClassMetrics& m : report.per_class) {
        tp_total += static_cast<std::uint64_t>(
            std::llround(m.recall * static_cast<double>(m.support)));
      }
      CHECK(tp_total == matches);
    }
  }

  TEST_CASE("mismatched and empty inputs are contract errors") {
    const std::vector<EventLabel> two = {A, B};
    const std::vector<EventLabel> three = {A, B, C};
    CHECK_THROWS_AS(prf1(two, three), ContractError);
    CHECK_THROWS_AS(prf1({}, {}), ContractError);
  }
}

TEST_SUITE("ndcg") {
  RankedLabels abc_fixture() {
    RankedLabels ranked;
    ranked.gains[label_index(A)] = 3.0;
    ranked.gains[label_index(B)] = 2.0;
    ranked.gains[label_index(C)] = 1.0;
    ranked.labels = {B, A, C};
    return ranked;
  }

  TEST_CASE("ideal ordering scores exactly one") {
    RankedLabels ranked = abc_fixture();
    ranked.labels = {A, B, C};
    CHECK(ndcg(ranked, 3) == 1.0);
    CHECK(ndcg(ranked, kLabelCount) == 1.0);
  }

  TEST_CASE("zero gains score one by convention") {
    RankedLabels ranked;
    ranked.labels = {A, B};
    CHECK(ndcg(ranked, 5) == 1.0);
  }

  TEST_CASE("swapped head pays the documented discount") {
    const RankedLabels ranked = abc_fixture();
    // DCG = 2 + 3/log2(3) + 1/2; IDCG = 3 + 2/log2(3) + 1/2.
    CHECK(ndcg(ranked, 3) == Approx(0.9224945116765986).epsilon(1e-9));
    // Cutoff 1 compares the heads alone: 2 against the ideal 3.
    CHECK(ndcg(ranked, 1) == Approx(2.0 / 3.0).epsilon(1e-12));
    // Cutoff beyond the list length changes nothing.
    CHECK(ndcg(ranked, 64) == Approx(ndcg(ranked, 3)).epsilon(1e-12));
  }

  TEST_CASE("fixing an adjacent inversion never lowers the score") {
    Rng rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
      RankedLabels ranked;
      for (double& gain : ranked.gains) gain = rng.below(5);
      auto order = all_labels();
      std::vector<EventLabel> labels(order.begin(), order.end());
      rng.shuffle(labels);
      const std::size_t len = 2 + rng.below(kLabelCount - 1);
      labels.resize(len);
      ranked.labels = labels;

      const std::size_t i = rng.below(len - 1);
      const double gain_lo = ranked.gains[label_index(ranked.labels[i])];
      const double gain_hi = ranked.gains[label_index(ranked.labels[i + 1])];
      if (gain_lo >= gain_hi) continue;
      const double before = ndcg(ranked, len);
      std::swap(ranked.labels[i], ranked.labels[i + 1]);
      CHECK(ndcg(ranked, len) >= before - 1e-12);
    }
  }

  TEST_CASE("invalid rankings are contract errors") {
    RankedLabels duplicate = abc_fixture();
    duplicate.labels = {B, A, B};
    CHECK_THROWS_AS(ndcg(duplicate, 3), ContractError);
    RankedLabels negative = abc_fixture();
    negative.gains[label_index(C)] = -0.5;
    CHECK_THROWS_AS(ndcg(negative, 3), ContractError);
    CHECK_THROWS_AS(ndcg(abc_fixture(), 0), ContractError);
  }
}

TEST_SUITE("bcubed") {
  TEST_CASE("identical segmentations are perfect") {
    const std::vector<Passage> tiling = {Passage{0, 2, A}, Passage{3, 5, B}};
    const BCubedScore s = bcubed(tiling, tiling, 6);
    CHECK(s.precision == 1.0);
    CHECK(s.recall == 1.0);
    CHECK(s.f1 == 1.0);
  }

  TEST_CASE("singletons against one block follow the closed form") {
    const std::size_t n = 4;
    std::vector<Passage> singles;
    for (std::size_t i = 0; i < n; ++i) singles.push_back(Passage{i, i, A});
    const std::vector<Passage> block = {Passage{0, n - 1, A}};
    const BCubedScore s = bcubed(singles, block, n);
    CHECK(s.precision == 1.0);
    CHECK(s.recall == 0.25);
    CHECK(s.f1 == Approx(2.0 / (n + 1.0)).epsilon(1e-12));
  }

  TEST_CASE("offset blocks match the per-sentence hand computation") {
    const std::vector<Passage> pred = {Passage{0, 2, A}, Passage{3, 5, A}};
    const std::vector<Passage> gold = {Passage{0, 3, A}, Passage{4, 5, A}};
    // P = (1+1+1+1/3+2/3+2/3)/6 = 7/9; R = (3/4 x3 + 1/4 + 1 + 1)/6 = 3/4.
    const BCubedScore s = bcubed(pred, gold, 6);
    CHECK(s.precision == Approx(7.0 / 9.0).epsilon(1e-12));
    CHECK(s.recall == Approx(3.0 / 4.0).epsilon(1e-12));
    CHECK(s.f1 == Approx(42.0 / 55.0).epsilon(1e-12));

    // Swapping the arguments swaps the two roles exactly.
    const BCubedScore t = bcubed(gold, pred, 6);
    CHECK(t.precision == s.recall);
    CHECK(t.recall == s.precision);
    CHECK(t.f1 == s.f1);
  }

  TEST_CASE("random tilings agree with the definition bit for bit") {
    Rng rng(31337);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 1 + rng.below(24);
      const auto pred = random_tiling(rng, n);
      const auto gold = random_tiling(rng, n);

      BCubedTotals totals;
      totals.add(pred, gold, n);
      double p_sum = 0.0;
      double r_sum = 0.0;
      oracle_bcubed(pred, gold, n, p_sum, r_sum);
      CHECK(totals.precision_sum == p_sum);
      CHECK(totals.recall_sum == r_sum);

      const BCubedScore s = totals.score();
      CHECK(s.precision >= 0.0);
      CHECK(s.precision <= 1.0);
      CHECK(s.recall >= 0.0);
      CHECK(s.recall <= 1.0);
      CHECK(s.f1 <= 1.0);

      const BCubedScore swapped = bcubed(gold, pred, n);
      CHECK(swapped.precision == s.recall);
      CHECK(swapped.recall == s.precision);
    }
  }

  TEST_CASE("totals pool sentences across documents") {
    BCubedTotals totals;
    const std::vector<Passage> one = {Passage{0, 2, A}};
    totals.add(one, one, 3);
    const std::vector<Passage> singles = {Passage{0, 0, A}, Passage{1, 1, B}};
    const std::vector<Passage> block = {Passage{0, 1, A}};
    totals.add(singles, block, 2);
    CHECK(totals.sentences == 5);
    const BCubedScore s = totals.score();
    CHECK(s.precision == 1.0);       // 5/5
    CHECK(s.recall == 0.8);          // (3 + 1)/5
    CHECK(s.f1 == Approx(8.0 / 9.0).epsilon(1e-12));
  }

  TEST_CASE("tiling violations and empty totals are contract errors") {
    const std::vector<Passage> gold = {Passage{0, 5, A}};
    const std::vector<Passage> gap = {Passage{0, 1, A}, Passage{3, 5, A}};
    CHECK_THROWS_AS(bcubed(gap, gold, 6), ContractError);
    const std::vector<Passage> overlap = {Passage{0, 3, A}, Passage{3, 5, A}};
    CHECK_THROWS_AS(bcubed(overlap, gold, 6), ContractError);
    const std::vector<Passage> beyond = {Passage{0, 6, A}};
    CHECK_THROWS_AS(bcubed(beyond, gold, 6), ContractError);
    CHECK_THROWS_AS(bcubed({}, gold, 6), ContractError);
    CHECK_THROWS_AS(bcubed(gold, gold, 5), ContractError);

    CHECK_THROWS_AS(BCubedTotals{}.score(), ContractError);
  }
}
