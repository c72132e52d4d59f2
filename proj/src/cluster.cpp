#include "scancor/cluster.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

#include "scancor/error.hpp"
#include "scancor/strings.hpp"

namespace scancor {

namespace {

// Candidate merge partner of one cluster: its distance plus the ordered
// key pair that settles ties.
struct Cand {
  double d = 0;
  IpAddress lo, hi;
  int other = -1;
  bool valid = false;
};

bool cand_less(const Cand& a, const Cand& b) {
  if (a.d != b.d) return a.d < b.d;
  if (a.lo != b.lo) return a.lo < b.lo;
  return a.hi < b.hi;
}

}  // namespace

Dendrogram upgma(const SimilarityMatrix& m) {
  const size_t n = m.size();
  Dendrogram dg;
  dg.leaves = m.ids();
  if (n <= 1) return dg;

  std::vector<double> dist(m.upper().size());
  for (size_t k = 0; k < dist.size(); ++k) dist[k] = 1.0 - m.upper()[k];
  auto dref = [&](size_t i, size_t j) -> double& {
    return dist[SimilarityMatrix::pair_index(n, std::min(i, j),
                                             std::max(i, j))];
  };

  // One slot per leaf. A merge keeps the smaller-key slot, so a slot's key
  // never changes while it is alive.
  std::vector<char> alive(n, 1);
  std::vector<size_t> csize(n, 1);
  std::vector<IpAddress> key = m.ids();
  std::vector<int> node(n);
  std::iota(node.begin(), node.end(), 0);
  std::vector<Cand> nn(n);

  auto make_cand = [&](size_t i, size_t j) {
    Cand c;
    c.d = dref(i, j);
    const IpAddress& ki = key[i];
    const IpAddress& kj = key[j];
    if (ki < kj) {
      c.lo = ki;
      c.hi = kj;
    } else {
      c.lo = kj;
      c.hi = ki;
    }
    c.other = (int)j;
    c.valid = true;
    return c;
  };

  auto scan_nn = [&](size_t i) {
    Cand best;
    for (size_t j = 0; j < n; ++j) {
      if (j == i || !alive[j]) continue;
      Cand c = make_cand(i, j);
      if (!best.valid || cand_less(c, best)) best = c;
    }
    nn[i] = best;
  };
  for (size_t i = 0; i < n; ++i) scan_nn(i);

  dg.merges.reserve(n - 1);
  double last = 0;
  for (size_t step = 0; step + 1 < n; ++step) {
    // Cached nearest neighbors are kept exact below, so the best cached
    // candidate is the global minimum.
    long bi = -1;
    for (size_t i = 0; i < n; ++i) {
      if (!alive[i] || !nn[i].valid) continue;
      if (bi < 0 || cand_less(nn[i], nn[(size_t)bi])) bi = (long)i;
    }
    Cand best = nn[(size_t)bi];
    size_t a = (size_t)bi;
    size_t b = (size_t)best.other;
    if (key[b] < key[a]) std::swap(a, b);

    // Average linkage cannot lower the running minimum beyond rounding.
    if (step > 0 && best.d < last - 1e-12)
      throw Error(Errc::internal, "merge heights decreased");
    last = best.d;
    dg.merges.push_back(Merge{node[a], node[b], best.d});
    node[a] = (int)(n + step);

    const size_t sa = csize[a];
    const size_t sb = csize[b];
    for (size_t c = 0; c < n; ++c) {
      if (!alive[c] || c == a || c == b) continue;
      // Keep this expression in sync with the reference implementation in
      // the tests; identical rounding is what makes ties agree.
      dref(a, c) =
          ((double)sa * dref(a, c) + (double)sb * dref(b, c)) /
          (double)(sa + sb);
    }
    csize[a] = sa + sb;
    alive[b] = 0;

    // A cached entry goes stale only if it pointed into the merged pair;
    // everything else just races against the fresh cluster.
    for (size_t c = 0; c < n; ++c) {
      if (!alive[c] || c == a) continue;
      if (nn[c].other == (int)a || nn[c].other == (int)b) {
        scan_nn(c);
      } else {
        Cand cand = make_cand(c, a);
        if (cand_less(cand, nn[c])) nn[c] = cand;
      }
    }
    scan_nn(a);
  }
  return dg;
}

namespace {

struct Dsu {
  std::vector<int> parent;

  explicit Dsu(size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }

  int find(int x) {
    while (parent[(size_t)x] != x) {
      parent[(size_t)x] = parent[(size_t)parent[(size_t)x]];
      x = parent[(size_t)x];
    }
    return x;
  }

  int unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[(size_t)b] = a;
    return a;
  }
};

}  // namespace

std::vector<ClusterCut> cut_clusters(const Dendrogram& dg, double t) {
  const size_t n = dg.leaves.size();
  const double cutoff = 1.0 - t;
  Dsu dsu(n);
  std::vector<double> maxd(n, 0.0);
  // Representative leaf of every node; merge k creates node n+k.
  std::vector<int> rep(n + dg.merges.size());
  std::iota(rep.begin(), rep.begin() + (long)n, 0);
  for (size_t k = 0; k < dg.merges.size(); ++k) {
    const Merge& mg = dg.merges[k];
    rep[n + k] = rep[(size_t)mg.left];
    if (mg.distance <= cutoff) {
      int ra = dsu.find(rep[(size_t)mg.left]);
      int rb = dsu.find(rep[(size_t)mg.right]);
      int r = dsu.unite(ra, rb);
      maxd[(size_t)r] =
          std::max({maxd[(size_t)ra], maxd[(size_t)rb], mg.distance});
    }
  }

  std::vector<std::vector<IpAddress>> groups(n);
  for (size_t i = 0; i < n; ++i)
    groups[(size_t)dsu.find((int)i)].push_back(dg.leaves[i]);

  std::vector<ClusterCut> out;
  for (size_t r = 0; r < n; ++r) {
    if (groups[r].empty()) continue;
    ClusterCut c;
    c.members = std::move(groups[r]);
    std::sort(c.members.begin(), c.members.end());
    c.max_internal_distance = c.members.size() > 1 ? maxd[r] : 0.0;
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(), [](const ClusterCut& a, const ClusterCut& b) {
    return a.members.front() < b.members.front();
  });
  return out;
}

std::vector<std::vector<IpAddress>> cut(const Dendrogram& dg, double t) {
  std::vector<std::vector<IpAddress>> out;
  for (ClusterCut& c : cut_clusters(dg, t)) out.push_back(std::move(c.members));
  return out;
}

CampaignExtraction extract_campaigns(std::span<const ClusterCut> clusters,
                                     size_t min_size) {
  CampaignExtraction ex;
  uint64_t total = 0;
  for (const ClusterCut& c : clusters) {
    total += c.members.size();
    if (c.members.size() >= min_size) {
      Campaign g;
      g.members = c.members;
      g.formation_similarity = 1.0 - c.max_internal_distance;
      ex.distributed_scanners += c.members.size();
      ex.campaigns.push_back(std::move(g));
    } else {
      ex.standalone.insert(ex.standalone.end(), c.members.begin(),
                           c.members.end());
    }
  }
  std::sort(ex.campaigns.begin(), ex.campaigns.end(),
            [](const Campaign& a, const Campaign& b) {
              if (a.members.size() != b.members.size())
                return a.members.size() > b.members.size();
              return a.members.front() < b.members.front();
            });
  std::sort(ex.standalone.begin(), ex.standalone.end());
  ex.distributed_fraction =
      total ? (double)ex.distributed_scanners / (double)total : 0.0;
  return ex;
}

std::vector<std::pair<double, size_t>> sweep_threshold(
    const Dendrogram& dg, std::span<const double> t_grid) {
  std::vector<double> dists;
  dists.reserve(dg.merges.size());
  for (const Merge& m : dg.merges) dists.push_back(m.distance);
  std::sort(dists.begin(), dists.end());
  std::vector<std::pair<double, size_t>> out;
  out.reserve(t_grid.size());
  for (double t : t_grid) {
    const double cutoff = 1.0 - t;
    size_t applied =
        (size_t)(std::upper_bound(dists.begin(), dists.end(), cutoff) -
                 dists.begin());
    out.emplace_back(t, dg.leaves.size() - applied);
  }
  return out;
}

void write_dendrogram_tsv(std::ostream& out, const Dendrogram& dg) {
  out << "left\tright\tdistance\n";
  for (const Merge& m : dg.merges)
    out << m.left << '\t' << m.right << '\t' << format_double(m.distance)
        << '\n';
}

}  // namespace scancor
