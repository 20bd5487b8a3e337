#include "vstitch/matching.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <string>

#include "vstitch/error.hpp"

namespace vstitch {

namespace {

double descriptor_distance(const std::vector<float>& a, const std::vector<float>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

struct Nearest {
  std::size_t best = 0;
  double d1 = std::numeric_limits<double>::infinity();
  double d2 = std::numeric_limits<double>::infinity();
};

// Bit set over hypothesis indices, one per match.
using Bits = std::vector<std::uint64_t>;

std::vector<Bits> prefix_sets(const ResidualTable& table, std::size_t m) {
  const std::size_t words = (table.hypotheses + 63) / 64;
  std::vector<Bits> out(table.matches, Bits(words, 0));
  for (std::size_t i = 0; i < table.matches; ++i) {
    const auto ranking = table.ranking(i);
    for (std::size_t k = 0; k < m; ++k) out[i][ranking[k] / 64] |= std::uint64_t{1} << (ranking[k] % 64);
  }
  return out;
}

std::size_t overlap(const Bits& a, const Bits& b) {
  std::size_t n = 0;
  for (std::size_t w = 0; w < a.size(); ++w) n += static_cast<std::size_t>(std::popcount(a[w] & b[w]));
  return n;
}

std::vector<Homography> inverses(const HypothesisSet& hyps) {
  std::vector<Homography> out;
  out.reserve(hyps.size());
  for (const auto& h : hyps.hypotheses) out.push_back(h.inverse());
  return out;
}

}  // namespace

MatchSet match_descriptors(std::span<const Keypoint> a, std::span<const Keypoint> b,
                           double ratio) {
  if (a.empty() || b.empty()) return {};
  std::vector<Nearest> forward(a.size());
  std::vector<Nearest> backward(b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double d = descriptor_distance(a[i].descriptor, b[j].descriptor);
      Nearest& f = forward[i];
      if (d < f.d1) {
        f.d2 = f.d1;
        f.d1 = d;
        f.best = j;
      } else if (d < f.d2) {
        f.d2 = d;
      }
      Nearest& r = backward[j];
      if (d < r.d1) {
        r.d2 = r.d1;
        r.d1 = d;
        r.best = i;
      } else if (d < r.d2) {
        r.d2 = d;
      }
    }
  }
  MatchSet out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Nearest& f = forward[i];
    if (!(f.d1 < ratio * f.d2)) continue;
    if (backward[f.best].best != i) continue;
    const double r = f.d2 > 0.0 && std::isfinite(f.d2) ? f.d1 / f.d2 : 0.0;
    out.push_back({{a[i].position, b[f.best].position}, r, i, f.best});
  }
  return out;
}

MatchSet to_match_set(std::span<const Correspondence> pairs) {
  MatchSet out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) out.push_back({pairs[i], 0.0, i, i});
  return out;
}

CorrespondenceSet correspondences(std::span<const Match> matches) {
  CorrespondenceSet out;
  out.reserve(matches.size());
  for (const auto& m : matches) out.push_back(m.pair);
  return out;
}

void SelectionParams::validate() const {
  if (s < 4) throw Error(ErrorCode::kParameter, "minimal subset size s must be at least 4");
  if (m0 < 1 || m_total < m0) throw Error(ErrorCode::kParameter, "need M >= M0 >= 1");
  if (m < 1 || m > m_total) throw Error(ErrorCode::kParameter, "need 1 <= m <= M");
  if (!(eps_o > 0.0)) throw Error(ErrorCode::kParameter, "eps_o must be positive");
  if (!(eps_r >= 0.0 && eps_r <= 1.0)) throw Error(ErrorCode::kParameter, "eps_r must lie in [0, 1]");
  if (min_agreement < 1) throw Error(ErrorCode::kParameter, "min_agreement must be at least 1");
  if (min_support < 0) throw Error(ErrorCode::kParameter, "min_support must be non-negative");
}

// ---------------------------------------------------------------------------

double symmetric_transfer_error(const Homography& h, const Homography& h_inv,
                                const Correspondence& c) {
  const double fwd = distance(h.apply(c.src), c.dst);
  const double bwd = distance(h_inv.apply(c.dst), c.src);
  const double e = 0.5 * (fwd + bwd);
  return std::isfinite(e) ? e : std::numeric_limits<double>::max();
}

ResidualTable rank_hypotheses(std::span<const Match> matches, const HypothesisSet& hyps) {
  ResidualTable table;
  table.matches = matches.size();
  table.hypotheses = hyps.size();
  table.residuals.resize(table.matches * table.hypotheses);
  table.ranked.resize(table.matches * table.hypotheses);
  const std::vector<Homography> inv = inverses(hyps);
  for (std::size_t i = 0; i < matches.size(); ++i) {
    double* row = table.residuals.data() + i * table.hypotheses;
    for (std::size_t k = 0; k < hyps.size(); ++k) {
      row[k] = symmetric_transfer_error(hyps.hypotheses[k], inv[k], matches[i].pair);
    }
    std::uint32_t* order = table.ranked.data() + i * table.hypotheses;
    std::iota(order, order + table.hypotheses, std::uint32_t{0});
    std::stable_sort(order, order + table.hypotheses,
                     [row](std::uint32_t a, std::uint32_t b) { return row[a] < row[b]; });
  }
  return table;
}

double conditional_inlier_probability(std::span<const std::uint32_t> list_i,
                                      std::span<const std::uint32_t> list_j, int m) {
  if (m < 1 || static_cast<std::size_t>(m) > list_i.size() ||
      static_cast<std::size_t>(m) > list_j.size()) {
    throw Error(ErrorCode::kParameter, "prefix length m out of range");
  }
  const std::set<std::uint32_t> prefix(list_i.begin(), list_i.begin() + m);
  std::size_t shared = 0;
  for (int k = 0; k < m; ++k) shared += prefix.count(list_j[static_cast<std::size_t>(k)]);
  return static_cast<double>(shared) / m;
}

// ---------------------------------------------------------------------------

HypothesisSet generate_hypotheses(std::span<const Match> matches, const SelectionParams& params,
                                  std::uint64_t seed) {
  params.validate();
  const std::size_t n = matches.size();
  const std::size_t s = static_cast<std::size_t>(params.s);
  if (n < s) {
    throw Error(ErrorCode::kInsufficientData, "need at least " + std::to_string(s) +
                                                  " matches for hypothesis generation, got " +
                                                  std::to_string(n));
  }

  std::mt19937_64 rng(seed);
  HypothesisSet out;
  std::set<std::vector<std::size_t>> seen;
  const std::size_t target = static_cast<std::size_t>(params.m_total);
  const std::size_t attempt_limit = 20 * target + 100;
  std::size_t attempts = 0;

  auto try_add = [&](std::vector<std::size_t> subset) {
    std::ranges::sort(subset);
    if (seen.contains(subset)) return;
    seen.insert(subset);
    CorrespondenceSet pts;
    for (std::size_t idx : subset) pts.push_back(matches[idx].pair);
    try {
      Homography h = estimate_global_homography(pts);
      if (!h.invertible()) return;
      out.hypotheses.push_back(h);
      out.subsets.push_back(std::move(subset));
    } catch (const Error&) {
      // degenerate minimal subset
    }
  };

  auto uniform_subset = [&] {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t k = 0; k < s; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, n - 1);
      std::swap(idx[k], idx[pick(rng)]);
    }
    idx.resize(s);
    return idx;
  };

  while (out.size() < static_cast<std::size_t>(params.m0) && attempts < attempt_limit) {
    ++attempts;
    try_add(uniform_subset());
  }

  // Conditional sampling: rankings are refreshed every M0 hypotheses.
  std::vector<Bits> prefixes;
  std::size_t ranked_at = 0;
  while (out.size() < target && attempts < attempt_limit) {
    ++attempts;
    if (out.size() == 0) {
      try_add(uniform_subset());
      continue;
    }
    if (prefixes.empty() || out.size() >= ranked_at + static_cast<std::size_t>(params.m0)) {
      const ResidualTable table = rank_hypotheses(matches, out);
      const double scaled = static_cast<double>(params.m) * out.size() / params.m_total;
      const std::size_t m = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(scaled)),
                                                    1, out.size());
      prefixes = prefix_sets(table, m);
      ranked_at = out.size();
    }

    std::vector<std::size_t> subset;
    std::vector<double> weight(n, 1.0);
    std::vector<bool> chosen(n, false);
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    subset.push_back(first(rng));
    chosen[subset.back()] = true;
    while (subset.size() < s) {
      double total = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (chosen[j]) {
          weight[j] = 0.0;
          continue;
        }
        weight[j] *= static_cast<double>(overlap(prefixes[subset.back()], prefixes[j]));
        total += weight[j];
      }
      std::size_t next = 0;
      if (total > 0.0) {
        std::discrete_distribution<std::size_t> pick(weight.begin(), weight.end());
        next = pick(rng);
      } else {
        std::vector<std::size_t> free;
        for (std::size_t j = 0; j < n; ++j) {
          if (!chosen[j]) free.push_back(j);
        }
        std::uniform_int_distribution<std::size_t> pick(0, free.size() - 1);
        next = free[pick(rng)];
        // Reset so later members are not stuck at zero weight.
        for (std::size_t j = 0; j < n; ++j) weight[j] = chosen[j] ? 0.0 : 1.0;
      }
      chosen[next] = true;
      subset.push_back(next);
    }
    try_add(std::move(subset));
  }

  if (out.size() == 0) {
    throw Error(ErrorCode::kEstimationDegenerate, "every minimal subset was degenerate");
  }
  return out;
}

// ---------------------------------------------------------------------------

CorrespondenceSet select_inliers(std::span<const Match> matches, const ResidualTable& table,
                                 const HypothesisSet& hyps, const SelectionParams& params) {
  params.validate();
  if (table.matches != matches.size() || table.hypotheses != hyps.size() || hyps.size() == 0) {
    throw Error(ErrorCode::kParameter, "residual table does not match its inputs");
  }
  const std::size_t n = matches.size();

  // A minimal subset fits its own members exactly, so a match's evidence
  // comes from hypotheses drawn without it.
  std::vector<std::vector<bool>> member(hyps.size());
  for (std::size_t k = 0; k < hyps.size(); ++k) {
    member[k].assign(n, false);
    for (std::size_t idx : hyps.subsets[k]) {
      if (idx < n) member[k][idx] = true;
    }
  }
  // Hypotheses agreed with by at least min_support matches outside their own
  // subset; chance fits of gross outliers come from unsupported ones.
  std::vector<bool> supported(hyps.size(), false);
  bool any_supported = false;
  for (std::size_t k = 0; k < hyps.size(); ++k) {
    std::size_t support = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!member[k][i] && table.residual(i, k) <= params.eps_o) ++support;
    }
    supported[k] = support >= static_cast<std::size_t>(params.min_support);
    any_supported = any_supported || supported[k];
  }
  // score = k-th smallest residual over eligible hypotheses, k = min_agreement.
  // A chance fit of an outlier rarely repeats across independent hypotheses.
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<double> eligible;
  for (std::size_t i = 0; i < n; ++i) {
    eligible.clear();
    double any = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < hyps.size(); ++k) {
      const double r = table.residual(i, k);
      any = std::min(any, r);
      if (!member[k][i] && (supported[k] || !any_supported)) eligible.push_back(r);
    }
    if (eligible.empty()) {
      best[i] = any;
      continue;
    }
    const std::size_t kth =
        std::min<std::size_t>(static_cast<std::size_t>(std::max(params.min_agreement, 1)),
                              eligible.size()) - 1;
    std::nth_element(eligible.begin(), eligible.begin() + static_cast<std::ptrdiff_t>(kth),
                     eligible.end());
    best[i] = eligible[kth];
  }

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < n; ++i) {
    if (best[i] <= params.eps_o) order.push_back(i);
  }
  // Coordinates break residual ties so the result does not depend on input
  // order.
  std::ranges::sort(order, [&](std::size_t a, std::size_t b) {
    if (best[a] != best[b]) return best[a] < best[b];
    const auto& pa = matches[a].pair;
    const auto& pb = matches[b].pair;
    return std::tie(pa.src.x, pa.src.y, pa.dst.x, pa.dst.y) <
           std::tie(pb.src.x, pb.src.y, pb.dst.x, pb.dst.y);
  });
  if (order.empty()) throw Error(ErrorCode::kNoInliers, "no match is within eps_o of a hypothesis");

  const std::size_t m = std::min<std::size_t>(static_cast<std::size_t>(params.m), hyps.size());
  const std::vector<Bits> prefixes = prefix_sets(table, m);

  std::vector<std::size_t> selected = {order.front()};
  for (std::size_t k = 1; k < order.size(); ++k) {
    const std::size_t cand = order[k];
    double f = 0.0;
    if (params.mode == SelectionMode::kFirstInlier) {
      f = static_cast<double>(overlap(prefixes[selected.front()], prefixes[cand])) / m;
    } else {
      std::size_t shared = 0;
      for (std::size_t sel : selected) shared += overlap(prefixes[sel], prefixes[cand]);
      f = static_cast<double>(shared) / static_cast<double>(m * selected.size());
    }
    if (f >= params.eps_r) selected.push_back(cand);
  }

  std::ranges::sort(selected);
  CorrespondenceSet out;
  out.reserve(selected.size());
  for (std::size_t idx : selected) out.push_back(matches[idx].pair);
  return out;
}

}  // namespace vstitch
