#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "vstitch/features.hpp"
#include "vstitch/geometry.hpp"

namespace vstitch {

struct Match {
  Correspondence pair;
  // Best over second-best descriptor distance.
  double ratio = 0.0;
  std::size_t index_a = 0;
  std::size_t index_b = 0;
};

using MatchSet = std::vector<Match>;

// Nearest-neighbour ratio test with a symmetric cross-check.
MatchSet match_descriptors(std::span<const Keypoint> a, std::span<const Keypoint> b,
                           double ratio = 0.8);

MatchSet to_match_set(std::span<const Correspondence> pairs);
CorrespondenceSet correspondences(std::span<const Match> matches);

enum class SelectionMode {
  // Candidate admitted when its mean conditional probability over every
  // selected inlier reaches eps_r.
  kMeanOfSelected,
  // Candidate compared against the first selected inlier only.
  kFirstInlier,
};

struct SelectionParams {
  int s = 4;
  double eps_o = 1.0;
  double eps_r = 0.01;
  int m0 = 10;
  int m_total = 500;
  int m = 50;
  // Matches outside a hypothesis' own subset that must lie within eps_o of
  // it before it may vouch for other matches.
  int min_support = 4;
  // Independent supported hypotheses that must place a match within eps_o.
  int min_agreement = 2;
  SelectionMode mode = SelectionMode::kMeanOfSelected;

  // Throws kParameter on violated invariants.
  void validate() const;
};

struct HypothesisSet {
  std::vector<Homography> hypotheses;
  // Indices into the match set of the minimal subset behind each hypothesis,
  // sorted ascending.
  std::vector<std::vector<std::size_t>> subsets;

  std::size_t size() const noexcept { return hypotheses.size(); }
};

// M0 uniform minimal subsets followed by conditional sampling guided by the
// residual rankings of the hypotheses drawn so far. Deterministic per seed.
HypothesisSet generate_hypotheses(std::span<const Match> matches,
                                  const SelectionParams& params, std::uint64_t seed);

struct ResidualTable {
  std::size_t matches = 0;
  std::size_t hypotheses = 0;
  // Symmetric transfer error, row-major matches x hypotheses.
  std::vector<double> residuals;
  // Per match, hypothesis indices by nondescending residual (ties by index).
  std::vector<std::uint32_t> ranked;

  double residual(std::size_t match, std::size_t hyp) const {
    return residuals[match * hypotheses + hyp];
  }
  std::span<const std::uint32_t> ranking(std::size_t match) const {
    return {ranked.data() + match * hypotheses, hypotheses};
  }
};

// Average of forward and backward reprojection distances.
double symmetric_transfer_error(const Homography& h, const Homography& h_inv,
                                const Correspondence& c);

ResidualTable rank_hypotheses(std::span<const Match> matches, const HypothesisSet& hyps);

// |first m of list_i  intersect  first m of list_j| / m.
double conditional_inlier_probability(std::span<const std::uint32_t> list_i,
                                      std::span<const std::uint32_t> list_j, int m);

// Greedy admission in ascending best-residual order. Throws kNoInliers when
// nothing qualifies.
CorrespondenceSet select_inliers(std::span<const Match> matches, const ResidualTable& table,
                                 const HypothesisSet& hyps, const SelectionParams& params);

}  // namespace vstitch
