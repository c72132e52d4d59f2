#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <sstream>

#include "doctest.h"
#include "scancor/cluster.hpp"
#include "scancor/rng.hpp"
#include "upgma_oracle.hpp"

using namespace scancor;

namespace {

IpAddress ip(size_t i) {
  return *IpAddress::parse("10." + std::to_string(i / 250) + ".0." +
                           std::to_string(1 + i % 250));
}

std::vector<IpAddress> make_ids(size_t n) {
  std::vector<IpAddress> ids;
  for (size_t i = 0; i < n; ++i) ids.push_back(ip(i));
  return ids;
}

template <class F>
SimilarityMatrix make_matrix(size_t n, F&& sim) {
  std::vector<double> upper(n * (n - 1) / 2);
  for (size_t i = 0; i + 1 < n; ++i)
    for (size_t j = i + 1; j < n; ++j)
      upper[SimilarityMatrix::pair_index(n, i, j)] = sim(i, j);
  return SimilarityMatrix(make_ids(n), std::move(upper));
}

SimilarityMatrix random_matrix(Rng& rng, size_t n, bool quantize) {
  return make_matrix(n, [&](size_t, size_t) {
    double s = rng.uniform_real();
    if (quantize) s = (double)rng.uniform(0, 16) / 16.0;
    return s;
  });
}

std::vector<std::vector<std::string>> canon(
    const std::vector<std::vector<IpAddress>>& groups) {
  std::vector<std::vector<std::string>> out;
  for (const auto& g : groups) {
    std::vector<std::string> names;
    for (const IpAddress& m : g) names.push_back(m.to_string());
    std::sort(names.begin(), names.end());
    out.push_back(std::move(names));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("three-leaf agglomeration by hand") {
  // d(0,1) = 0.125, d(1,2) = 0.25, d(0,2) = 0.5
  SimilarityMatrix m = make_matrix(3, [](size_t i, size_t j) {
    if (i == 0 && j == 1) return 0.875;
    if (i == 1 && j == 2) return 0.75;
    return 0.5;
  });
  Dendrogram dg = upgma(m);
  REQUIRE(dg.merges.size() == 2);
  CHECK(dg.merges[0].left == 0);
  CHECK(dg.merges[0].right == 1);
  CHECK(dg.merges[0].distance == 0.125);
  // {0,1} vs {2}: (0.5 + 0.25) / 2
  CHECK(dg.merges[1].left == 3);
  CHECK(dg.merges[1].right == 2);
  CHECK(dg.merges[1].distance == 0.375);

  std::vector<ClusterCut> two = cut_clusters(dg, 0.7);  // cutoff 0.3
  REQUIRE(two.size() == 2);
  CHECK(two[0].members.size() == 2);
  CHECK(two[0].max_internal_distance == 0.125);
  CHECK(two[1].members.size() == 1);
  CHECK(two[1].max_internal_distance == 0.0);

  std::vector<ClusterCut> one = cut_clusters(dg, 0.625);  // cutoff 0.375
  REQUIRE(one.size() == 1);
  CHECK(one[0].members.size() == 3);
  CHECK(one[0].max_internal_distance == 0.375);

  CHECK(cut(dg, 0.9).size() == 3);  // cutoff 0.1 applies nothing
}

TEST_CASE("equal distances merge in key order") {
  SimilarityMatrix m = make_matrix(4, [](size_t, size_t) { return 0.75; });
  Dendrogram dg = upgma(m);
  REQUIRE(dg.merges.size() == 3);
  CHECK(dg.merges[0].left == 0);
  CHECK(dg.merges[0].right == 1);
  CHECK(dg.merges[1].left == 4);
  CHECK(dg.merges[1].right == 2);
  CHECK(dg.merges[2].left == 5);
  CHECK(dg.merges[2].right == 3);
  for (const Merge& mg : dg.merges) CHECK(mg.distance == 0.25);
}

TEST_CASE("tiny inputs") {
  SimilarityMatrix empty;
  CHECK(upgma(empty).merges.empty());
  CHECK(cut(upgma(empty), 0.5).empty());

  SimilarityMatrix single({ip(0)}, {});
  Dendrogram dg1 = upgma(single);
  CHECK(dg1.merges.empty());
  CHECK(cut(dg1, 0.0).size() == 1);
  CHECK(cut(dg1, 1.5).size() == 1);

  SimilarityMatrix pair_m({ip(0), ip(1)}, {0.6});
  Dendrogram dg2 = upgma(pair_m);
  REQUIRE(dg2.merges.size() == 1);
  CHECK(dg2.merges[0].distance == 1.0 - 0.6);
  CHECK(cut(dg2, 0.5).size() == 1);
  CHECK(cut(dg2, 0.7).size() == 2);
}

TEST_CASE("production clustering matches the naive reference") {
  Rng rng(555);
  for (int trial = 0; trial < 60; ++trial) {
    size_t n = rng.uniform(2, 32);
    SimilarityMatrix m = random_matrix(rng, n, trial % 2 == 0);
    Dendrogram got = upgma(m);
    Dendrogram want = testing::upgma_reference(m);
    REQUIRE(got.merges.size() == want.merges.size());
    for (size_t k = 0; k < want.merges.size(); ++k) {
      CHECK(got.merges[k].left == want.merges[k].left);
      CHECK(got.merges[k].right == want.merges[k].right);
      CHECK(got.merges[k].distance == want.merges[k].distance);
    }
  }
}

TEST_CASE("merge heights never decrease") {
  Rng rng(556);
  for (int trial = 0; trial < 30; ++trial) {
    size_t n = rng.uniform(2, 48);
    Dendrogram dg = upgma(random_matrix(rng, n, trial % 3 == 0));
    for (size_t k = 1; k < dg.merges.size(); ++k)
      CHECK(dg.merges[k].distance >= dg.merges[k - 1].distance - 1e-12);
  }
}

TEST_CASE("clustering is independent of input order") {
  Rng rng(557);
  for (int trial = 0; trial < 20; ++trial) {
    size_t n = rng.uniform(3, 24);
    SimilarityMatrix m = random_matrix(rng, n, true);

    std::vector<size_t> perm(n);
    for (size_t i = 0; i < n; ++i) perm[i] = i;
    for (size_t i = n; i > 1; --i)
      std::swap(perm[i - 1], perm[rng.uniform(0, i - 1)]);

    std::vector<IpAddress> pids;
    for (size_t i = 0; i < n; ++i) pids.push_back(m.ids()[perm[i]]);
    std::vector<double> pupper(n * (n - 1) / 2);
    for (size_t i = 0; i + 1 < n; ++i)
      for (size_t j = i + 1; j < n; ++j)
        pupper[SimilarityMatrix::pair_index(n, i, j)] = m.at(perm[i], perm[j]);
    SimilarityMatrix pm(std::move(pids), std::move(pupper));

    Dendrogram a = upgma(m);
    Dendrogram b = upgma(pm);
    REQUIRE(a.merges.size() == b.merges.size());
    for (size_t k = 0; k < a.merges.size(); ++k)
      CHECK(a.merges[k].distance == b.merges[k].distance);
    for (double t : {0.1, 0.25, 0.4, 0.6, 0.9})
      CHECK(canon(cut(a, t)) == canon(cut(b, t)));
  }
}

TEST_CASE("cut always partitions the leaves") {
  Rng rng(558);
  for (int trial = 0; trial < 15; ++trial) {
    size_t n = rng.uniform(2, 40);
    Dendrogram dg = upgma(random_matrix(rng, n, trial % 2 == 1));

    size_t prev = 1;
    for (int step = 0; step <= 50; ++step) {
      double t = (double)step / 50.0;
      std::vector<ClusterCut> cs = cut_clusters(dg, t);
      size_t total = 0;
      std::vector<IpAddress> seen;
      for (const ClusterCut& c : cs) {
        REQUIRE(!c.members.empty());
        CHECK(std::is_sorted(c.members.begin(), c.members.end()));
        if (c.members.size() > 1)
          CHECK(c.max_internal_distance <= 1.0 - t);
        total += c.members.size();
        seen.insert(seen.end(), c.members.begin(), c.members.end());
      }
      CHECK(total == n);
      std::sort(seen.begin(), seen.end());
      CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());

      // Count grows with t.
      CHECK(cs.size() >= prev);
      prev = cs.size();
    }
    CHECK(cut(dg, 0.0).size() == 1);
    CHECK(cut(dg, 1.0 + 1e-9).size() == n);
  }
}

TEST_CASE("threshold sweep matches direct cuts") {
  Rng rng(559);
  Dendrogram dg = upgma(random_matrix(rng, 30, true));
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back((double)i / 20.0);
  std::vector<std::pair<double, size_t>> sw = sweep_threshold(dg, grid);
  REQUIRE(sw.size() == grid.size());
  for (const auto& [t, count] : sw) CHECK(count == cut(dg, t).size());
}

TEST_CASE("campaign extraction splits groups from loners") {
  std::vector<ClusterCut> cuts;
  cuts.push_back({{ip(5), ip(6)}, 0.125});
  cuts.push_back({{ip(0), ip(1), ip(2)}, 0.25});
  cuts.push_back({{ip(9)}, 0.0});
  cuts.push_back({{ip(3), ip(4)}, 0.0625});
  cuts.push_back({{ip(7)}, 0.0});

  CampaignExtraction ex = extract_campaigns(cuts, 2);
  REQUIRE(ex.campaigns.size() == 3);
  CHECK(ex.campaigns[0].members.size() == 3);  // biggest first
  CHECK(ex.campaigns[0].formation_similarity == 0.75);
  // Equal sizes order by smallest member.
  CHECK(ex.campaigns[1].members.front() == ip(3));
  CHECK(ex.campaigns[1].formation_similarity == 0.9375);
  CHECK(ex.campaigns[2].members.front() == ip(5));
  REQUIRE(ex.standalone.size() == 2);
  CHECK(ex.standalone[0] == ip(7));
  CHECK(ex.standalone[1] == ip(9));
  CHECK(ex.distributed_scanners == 7);
  CHECK(ex.distributed_fraction == 7.0 / 9.0);

  CampaignExtraction big = extract_campaigns(cuts, 3);
  CHECK(big.campaigns.size() == 1);
  CHECK(big.standalone.size() == 6);
  CHECK(big.distributed_scanners == 3);
}

TEST_CASE("dendrogram tsv lists merges in order") {
  SimilarityMatrix m = make_matrix(3, [](size_t i, size_t j) {
    if (i == 0 && j == 1) return 0.875;
    if (i == 1 && j == 2) return 0.75;
    return 0.5;
  });
  std::ostringstream out;
  write_dendrogram_tsv(out, upgma(m));
  CHECK(out.str() ==
        "left\tright\tdistance\n"
        "0\t1\t0.125\n"
        "3\t2\t0.375\n");
}
