// Nest identification loss D = D1 + D2 and the partition searches built on it.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "nsc/dataset.hpp"
#include "nsc/partition.hpp"
#include "nsc/similarity.hpp"

namespace nsc {

struct LossBreakdown {
  double d1 = 0.0;
  double d2 = 0.0;
  double total = 0.0;
  double n1 = 0.0;  // number of (A, B, a, b) tuples behind d1
  double n2 = 0.0;  // number of (A, B) menu pairs behind d2
  std::vector<std::string> flags;
};

// Precomputes everything that does not depend on the candidate partition.
// Not thread-safe: keeps a per-instance cache of block-pair terms.
class LossEvaluator {
 public:
  explicit LossEvaluator(const Dataset& data, bool smoothing = false)
      : n_(data.universe().size()), logf_(data.log_frequencies(smoothing)) {
    for (const auto& e : data.menus()) menus_.push_back(e.menu);
    pairs_ = detail::pair_stats(data, logf_);
  }

  LossBreakdown operator()(const NestStructure& Y) {
    if (Y.universe_size() != n_) throw Error("invalid-partition", "partition does not match the dataset universe");
    LossBreakdown r;
    double s1 = 0.0, s2 = 0.0;
    for (Menu b : Y.blocks())
      for (std::size_t a : b)
        for (std::size_t c : b)
          if (a < c) {
            s1 += pairs_.sum[a][c];
            r.n1 += pairs_.count[a][c];
          }
    const auto& blocks = Y.blocks();
    for (std::size_t i = 0; i < blocks.size(); ++i)
      for (std::size_t j = i + 1; j < blocks.size(); ++j) {
        auto [s, c] = block_pair(blocks[i], blocks[j]);
        s2 += s;
        r.n2 += c;
      }
    if (r.n1 > 0.0)
      r.d1 = s1 / r.n1;
    else
      r.flags.push_back("d1-empty-index-set");
    if (r.n2 > 0.0)
      r.d2 = s2 / r.n2;
    else
      r.flags.push_back("d2-empty-index-set");
    r.total = r.d1 + r.d2;
    return r;
  }

  double d1(const NestStructure& Y) { return (*this)(Y).d1; }
  double d2(const NestStructure& Y) { return (*this)(Y).d2; }

 private:
  // Squared-deviation sum and pair count for one unordered block pair.
  std::pair<double, double> block_pair(Menu y, Menu z) {
    auto key = std::make_pair(y.bits(), z.bits());
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    std::vector<std::tuple<std::uint64_t, std::uint64_t, double>> rows;
    for (std::size_t k = 0; k < menus_.size(); ++k) {
      const Menu A = menus_[k], ay = A & y, az = A & z;
      if (ay.empty() || az.empty()) continue;
      rows.emplace_back(ay.bits(), az.bits(), log_share(k, ay) - log_share(k, az));
    }
    std::sort(rows.begin(), rows.end());
    double sum = 0.0, count = 0.0;
    std::vector<double> xs;
    for (std::size_t lo = 0; lo < rows.size();) {
      std::size_t hi = lo;
      xs.clear();
      while (hi < rows.size() && std::get<0>(rows[hi]) == std::get<0>(rows[lo]) &&
             std::get<1>(rows[hi]) == std::get<1>(rows[lo]))
        xs.push_back(std::get<2>(rows[hi++]));
      sum += detail::pairwise_square_sum(xs);
      count += static_cast<double>(xs.size() * xs.size());
      lo = hi;
    }
    return cache_[key] = {sum, count};
  }

  // log p(S, A) for the k-th menu, by log-sum-exp over members of S.
  double log_share(std::size_t k, Menu s) const {
    const Menu A = menus_[k];
    double top = -1e300;
    std::size_t pos = 0;
    for (std::size_t i : A) {
      if (s.contains(i)) top = std::max(top, logf_[k][pos]);
      ++pos;
    }
    double z = 0.0;
    pos = 0;
    for (std::size_t i : A) {
      if (s.contains(i)) z += std::exp(logf_[k][pos] - top);
      ++pos;
    }
    return top + std::log(z);
  }

  std::size_t n_;
  std::vector<std::vector<double>> logf_;
  std::vector<Menu> menus_;
  detail::PairStats pairs_;
  std::map<std::pair<std::uint64_t, std::uint64_t>, std::pair<double, double>> cache_;
};

inline double loss_d1(const Dataset& data, const NestStructure& Y, bool smoothing = false) {
  return LossEvaluator(data, smoothing)(Y).d1;
}
inline double loss_d2(const Dataset& data, const NestStructure& Y, bool smoothing = false) {
  return LossEvaluator(data, smoothing)(Y).d2;
}

struct ScoredPartition {
  NestStructure partition;
  LossBreakdown loss;
  std::size_t order = 0;  // position in the enumeration (restricted-growth order)
};

struct IdentificationResult {
  NestStructure best;
  std::vector<ScoredPartition> ranked;  // best first, then by increasing loss
};

struct IdentifyOptions {
  bool smoothing = false;
  // Losses within this distance of the minimum count as tied; ties go to the
  // partition with fewer blocks, then to the earlier one in enumeration order.
  double tie_tolerance = 1e-18;
  std::size_t threads = 1;
  std::size_t top_k = 0;  // 0 keeps the full ranking
};

namespace detail {

inline IdentificationResult rank(std::vector<ScoredPartition> scored, const IdentifyOptions& opt) {
  std::sort(scored.begin(), scored.end(), [](const ScoredPartition& a, const ScoredPartition& b) {
    if (a.loss.total != b.loss.total) return a.loss.total < b.loss.total;
    if (a.partition.size() != b.partition.size()) return a.partition.size() < b.partition.size();
    return a.order < b.order;
  });
  const double cutoff = scored.front().loss.total + opt.tie_tolerance;
  std::size_t pick = 0;
  for (std::size_t k = 1; k < scored.size() && scored[k].loss.total <= cutoff; ++k) {
    const auto &c = scored[k], &p = scored[pick];
    if (c.partition.size() < p.partition.size() ||
        (c.partition.size() == p.partition.size() && c.order < p.order))
      pick = k;
  }
  std::rotate(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(pick),
              scored.begin() + static_cast<std::ptrdiff_t>(pick) + 1);
  if (opt.top_k > 0 && scored.size() > opt.top_k) scored.resize(opt.top_k);
  IdentificationResult r{scored.front().partition, std::move(scored)};
  return r;
}

}  // namespace detail

// Scores every partition of the universe; |X| <= 12.
inline IdentificationResult identify_full(const Dataset& data, const IdentifyOptions& opt = {}) {
  const std::size_t n = data.universe().size();
  if (n > kMaxEnumeration) throw Error("universe-too-large", "full search is capped at 12 alternatives");
  const LossEvaluator proto(data, opt.smoothing);
  const std::size_t T = std::max<std::size_t>(1, opt.threads);
  std::vector<std::vector<ScoredPartition>> parts(T);
  auto work = [&](std::size_t tid) {
    LossEvaluator ev = proto;
    PartitionStream s(n);
    std::size_t order = 0;
    while (auto p = s.next()) {
      if (order % T == tid) parts[tid].push_back({*p, ev(*p), order});
      ++order;
    }
  };
  if (T == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < T; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }
  std::vector<ScoredPartition> all;
  for (auto& p : parts)
    for (auto& s : p) all.push_back(std::move(s));
  return detail::rank(std::move(all), opt);
}

// Scores only the threshold candidates derived from the distance matrix.
inline IdentificationResult identify_reduced(const Dataset& data, const IdentifyOptions& opt = {}) {
  const auto cands = candidate_partitions(distance_matrix(data, opt.smoothing));
  LossEvaluator ev(data, opt.smoothing);
  std::vector<ScoredPartition> scored;
  for (std::size_t k = 0; k < cands.partitions.size(); ++k)
    scored.push_back({cands.partitions[k], ev(cands.partitions[k]), k});
  // Order candidates by restricted-growth order so ties resolve as in the full search.
  std::vector<std::pair<std::vector<std::size_t>, std::size_t>> keys;
  for (std::size_t k = 0; k < scored.size(); ++k) {
    const auto& p = scored[k].partition;
    std::vector<std::size_t> labels(p.universe_size());
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = p.block_of(i);
    keys.emplace_back(std::move(labels), k);
  }
  std::sort(keys.begin(), keys.end());
  for (std::size_t r = 0; r < keys.size(); ++r) scored[keys[r].second].order = r;
  return detail::rank(std::move(scored), opt);
}

}  // namespace nsc
