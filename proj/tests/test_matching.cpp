#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "test_support.hpp"
#include "vstitch/error.hpp"
#include "vstitch/matching.hpp"

using namespace vstitch;
using vstitch::testing::BlockTexture;
using vstitch::testing::map_points;
using vstitch::testing::random_homography;
using vstitch::testing::random_points;

namespace {

// Planar inliers plus gross outliers displaced 20..200 px from their true
// position. The first `inliers` entries are the true matches.
CorrespondenceSet planted_scene(std::mt19937_64& rng, int inliers, int outliers, double noise) {
  const Homography h = random_homography(rng);
  CorrespondenceSet all = map_points(h, random_points(rng, inliers), &rng, noise);
  std::uniform_real_distribution<double> angle(0.0, 6.283185307179586);
  std::uniform_real_distribution<double> mag(20.0, 200.0);
  for (const Point2& p : random_points(rng, outliers)) {
    Point2 q = h.apply(p);
    const double a = angle(rng);
    const double r = mag(rng);
    q.x += r * std::cos(a);
    q.y += r * std::sin(a);
    all.push_back({p, q});
  }
  return all;
}

bool contains(const CorrespondenceSet& set, const Correspondence& c) {
  return std::ranges::find(set, c) != set.end();
}

std::vector<float> random_descriptor(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<float> d(kDescriptorLength);
  double norm = 0.0;
  for (auto& v : d) {
    v = static_cast<float>(n(rng));
    norm += v * v;
  }
  for (auto& v : d) v = static_cast<float>(v / std::sqrt(norm));
  return d;
}

}  // namespace

TEST_SUITE("matching") {

TEST_CASE("flat image has no keypoints") {
  const ImageU8 flat(200, 150, 3, 90);
  CHECK(detect_and_describe(flat).empty());
}

TEST_CASE("checkerboard corners are detected") {
  const int square = 16;
  ImageU8 board(160, 160, 3);
  for (int y = 0; y < 160; ++y) {
    for (int x = 0; x < 160; ++x) {
      const bool dark = ((x / square) + (y / square)) % 2 == 0;
      for (int c = 0; c < 3; ++c) board.at(x, y, c) = dark ? 30 : 220;
    }
  }
  const auto kps = detect_and_describe(board);
  int found = 0;
  int corners = 0;
  for (int cy = 2; cy <= 8; ++cy) {
    for (int cx = 2; cx <= 8; ++cx) {
      ++corners;
      const Point2 corner{cx * square - 0.5, cy * square - 0.5};
      for (const auto& kp : kps) {
        if (distance(kp.position, corner) < 3.0) {
          ++found;
          break;
        }
      }
    }
  }
  CHECK(found == corners);
  for (const auto& kp : kps) CHECK(kp.descriptor.size() == static_cast<std::size_t>(kDescriptorLength));
}

TEST_CASE("keypoints are repeatable under translation") {
  std::mt19937_64 rng(21);
  const BlockTexture tex = BlockTexture::random(rng, 150, 320, 240);
  const auto a = detect_and_describe(tex.render(320, 240));
  const auto b = detect_and_describe(tex.render(320, 240, 10.0, 0.0));
  REQUIRE(a.size() > 50);
  int considered = 0;
  int repeated = 0;
  for (const auto& kp : a) {
    const Point2 moved{kp.position.x + 10.0, kp.position.y};
    if (moved.x > 310 - 16) continue;  // leaves the frame
    ++considered;
    for (const auto& other : b) {
      if (distance(other.position, moved) <= 1.5) {
        ++repeated;
        break;
      }
    }
  }
  CHECK(static_cast<double>(repeated) / considered >= 0.7);
}

TEST_CASE("identical keypoint sets match themselves") {
  std::mt19937_64 rng(22);
  const BlockTexture tex = BlockTexture::random(rng, 80, 200, 150);
  const auto kps = detect_and_describe(tex.render(200, 150));
  REQUIRE(kps.size() > 10);
  const MatchSet m = match_descriptors(kps, kps);
  // Duplicated descriptors (d2 = 0) are rejected by the ratio test; all others
  // must match themselves at ratio 0.
  CHECK(m.size() >= kps.size() * 9 / 10);
  for (const auto& match : m) {
    CHECK(match.index_a == match.index_b);
    CHECK(match.ratio == 0.0);
  }
}

TEST_CASE("random descriptors rarely pass the ratio test") {
  std::size_t total = 0;
  for (int trial = 0; trial < 5; ++trial) {
    std::mt19937_64 rng(100 + trial);
    std::vector<Keypoint> a(200), b(200);
    for (auto& k : a) k.descriptor = random_descriptor(rng);
    for (auto& k : b) k.descriptor = random_descriptor(rng);
    total += match_descriptors(a, b, 0.8).size();
  }
  CHECK(total <= 5 * 200 / 20);
}

TEST_CASE("planted matches are recovered") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> noise(0.0, 0.02);
  std::vector<Keypoint> a, b;
  for (int i = 0; i < 50; ++i) {
    Keypoint ka;
    ka.position = {static_cast<double>(i), 0.0};
    ka.descriptor = random_descriptor(rng);
    Keypoint kb = ka;
    for (auto& v : kb.descriptor) v = static_cast<float>(v + noise(rng));
    a.push_back(ka);
    b.push_back(kb);
  }
  for (int i = 0; i < 50; ++i) {
    Keypoint da, db;
    da.position = {1000.0 + i, 0.0};
    db.position = {2000.0 + i, 0.0};
    da.descriptor = random_descriptor(rng);
    db.descriptor = random_descriptor(rng);
    a.push_back(da);
    b.push_back(db);
  }
  const MatchSet m = match_descriptors(a, b, 0.8);
  int correct = 0;
  std::vector<std::size_t> sources;
  for (const auto& match : m) {
    if (match.index_a < 50 && match.index_a == match.index_b) ++correct;
    sources.push_back(match.index_a);
  }
  CHECK(correct >= 45);
  std::ranges::sort(sources);
  CHECK(std::ranges::adjacent_find(sources) == sources.end());
}

TEST_CASE("hypotheses from a single plane fit every match") {
  std::mt19937_64 rng(24);
  const auto set = map_points(random_homography(rng), random_points(rng, 60));
  const MatchSet matches = to_match_set(set);
  SelectionParams params;
  params.m_total = 100;
  params.m = 10;
  const HypothesisSet hyps = generate_hypotheses(matches, params, 5);
  CHECK(hyps.size() == 100);
  for (const auto& h : hyps.hypotheses) {
    const Homography inv = h.inverse();
    for (const auto& c : set) CHECK(symmetric_transfer_error(h, inv, c) < 1e-6);
  }
  std::set<std::vector<std::size_t>> distinct(hyps.subsets.begin(), hyps.subsets.end());
  CHECK(distinct.size() == hyps.size());
}

TEST_CASE("hypothesis generation boundaries") {
  std::mt19937_64 rng(25);
  const MatchSet matches = to_match_set(planted_scene(rng, 30, 10, 0.0));
  SelectionParams params;
  params.m0 = 20;
  params.m_total = 20;
  params.m = 5;
  CHECK(generate_hypotheses(matches, params, 1).size() == 20);

  params = SelectionParams{};
  const HypothesisSet a = generate_hypotheses(matches, params, 99);
  const HypothesisSet b = generate_hypotheses(matches, params, 99);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.hypotheses[i].matrix() == b.hypotheses[i].matrix());
    CHECK(a.subsets[i] == b.subsets[i]);
  }

  const MatchSet three(matches.begin(), matches.begin() + 3);
  try {
    generate_hypotheses(three, params, 1);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInsufficientData);
  }
  params.m = 600;
  CHECK_THROWS_AS(generate_hypotheses(matches, params, 1), Error);
}

TEST_CASE("ranking with a single hypothesis") {
  std::mt19937_64 rng(26);
  const MatchSet matches = to_match_set(planted_scene(rng, 10, 5, 0.0));
  HypothesisSet hyps;
  hyps.hypotheses = {random_homography(rng)};
  hyps.subsets = {{0, 1, 2, 3}};
  const ResidualTable t = rank_hypotheses(matches, hyps);
  for (std::size_t i = 0; i < matches.size(); ++i) CHECK(t.ranking(i)[0] == 0u);
}

TEST_CASE("ranking puts the exact hypothesis first and breaks ties by index") {
  const Correspondence c{{100, 100}, {130, 90}};
  HypothesisSet hyps;
  hyps.hypotheses = {Homography::translation(31, -10), Homography::translation(35, -10),
                     Homography::translation(30, -10), Homography::translation(31, -10)};
  hyps.subsets.assign(4, {});
  const ResidualTable t = rank_hypotheses(to_match_set(CorrespondenceSet{c}), hyps);
  CHECK(t.ranking(0)[0] == 2u);
  CHECK(t.residual(0, 2) < 1e-9);
  // Hypotheses 0 and 3 are identical: lower index first.
  CHECK(t.ranking(0)[1] == 0u);
  CHECK(t.ranking(0)[2] == 3u);
  CHECK(t.ranking(0)[3] == 1u);
}

TEST_CASE("ranked lists are nondescending permutations") {
  std::mt19937_64 rng(27);
  const MatchSet matches = to_match_set(planted_scene(rng, 40, 40, 0.5));
  SelectionParams params;
  params.m_total = 60;
  params.m = 6;
  const HypothesisSet hyps = generate_hypotheses(matches, params, 3);
  const ResidualTable t = rank_hypotheses(matches, hyps);
  for (std::size_t i = 0; i < matches.size(); ++i) {
    const auto r = t.ranking(i);
    std::vector<std::uint32_t> sorted(r.begin(), r.end());
    std::ranges::sort(sorted);
    for (std::size_t k = 0; k < sorted.size(); ++k) CHECK(sorted[k] == k);
    for (std::size_t k = 1; k < r.size(); ++k) {
      CHECK(t.residual(i, r[k - 1]) <= t.residual(i, r[k]));
      if (t.residual(i, r[k - 1]) == t.residual(i, r[k])) CHECK(r[k - 1] < r[k]);
    }
  }
}

TEST_CASE("conditional inlier probability") {
  std::vector<std::uint32_t> a(20);
  std::iota(a.begin(), a.end(), 0u);
  CHECK(conditional_inlier_probability(a, a, 10) == 1.0);
  std::vector<std::uint32_t> b(20);
  std::iota(b.begin(), b.end(), 100u);
  CHECK(conditional_inlier_probability(a, b, 10) == 0.0);
  // First ten of c share {0,..,4} with the first ten of a.
  std::vector<std::uint32_t> c = {4, 50, 3, 51, 2, 52, 1, 53, 0, 54, 5, 6, 7, 8, 9};
  CHECK(conditional_inlier_probability(a, c, 10) == 0.5);
  CHECK_THROWS_AS(conditional_inlier_probability(a, c, 0), Error);
  CHECK_THROWS_AS(conditional_inlier_probability(a, c, 16), Error);

  std::mt19937_64 rng(28);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::uint32_t> x(30), y(30);
    std::iota(x.begin(), x.end(), 0u);
    std::iota(y.begin(), y.end(), 0u);
    std::ranges::shuffle(x, rng);
    std::ranges::shuffle(y, rng);
    const int m = 1 + trial % 30;
    const double fxy = conditional_inlier_probability(x, y, m);
    CHECK(fxy == conditional_inlier_probability(y, x, m));
    CHECK(conditional_inlier_probability(x, x, m) == 1.0);
    CHECK(fxy >= 0.0);
    CHECK(fxy <= 1.0);
  }
}

TEST_CASE("planar matches are all selected") {
  std::mt19937_64 rng(29);
  const auto set = map_points(random_homography(rng), random_points(rng, 80));
  const MatchSet matches = to_match_set(set);
  const SelectionParams params;
  const HypothesisSet hyps = generate_hypotheses(matches, params, 7);
  const CorrespondenceSet inliers = select_inliers(matches, rank_hypotheses(matches, hyps), hyps, params);
  CHECK(inliers.size() == set.size());
}

TEST_CASE("gross outliers are rejected") {
  int recalled = 0;
  int gross = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    const CorrespondenceSet all = planted_scene(rng, 60, 60, 0.0);
    const MatchSet matches = to_match_set(all);
    const SelectionParams params;
    const HypothesisSet hyps = generate_hypotheses(matches, params, seed);
    const CorrespondenceSet in = select_inliers(matches, rank_hypotheses(matches, hyps), hyps, params);
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (!contains(in, all[i])) continue;
      (i < 60 ? recalled : gross) += 1;
    }
  }
  CHECK(recalled >= 0.9 * 20 * 60);
  CHECK(gross == 0);
}

TEST_CASE("a minimal set is selected when it fits") {
  std::mt19937_64 rng(30);
  const auto set = map_points(random_homography(rng), random_points(rng, 4));
  const MatchSet matches = to_match_set(set);
  SelectionParams params;
  params.m0 = 1;
  params.m_total = 1;
  params.m = 1;
  const HypothesisSet hyps = generate_hypotheses(matches, params, 1);
  const auto in = select_inliers(matches, rank_hypotheses(matches, hyps), hyps, params);
  CHECK(in.size() == 4);
}

TEST_CASE("selection is a permutation-invariant subset") {
  std::mt19937_64 rng(31);
  const CorrespondenceSet all = planted_scene(rng, 50, 30, 0.3);
  const MatchSet matches = to_match_set(all);
  const SelectionParams params;
  const HypothesisSet hyps = generate_hypotheses(matches, params, 11);
  const CorrespondenceSet in = select_inliers(matches, rank_hypotheses(matches, hyps), hyps, params);
  for (const auto& c : in) CHECK(contains(all, c));

  std::vector<std::size_t> perm(all.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::ranges::shuffle(perm, rng);
  std::vector<std::size_t> where(all.size());
  CorrespondenceSet shuffled;
  for (std::size_t k = 0; k < perm.size(); ++k) {
    shuffled.push_back(all[perm[k]]);
    where[perm[k]] = k;
  }
  HypothesisSet remapped = hyps;
  for (auto& subset : remapped.subsets) {
    for (auto& idx : subset) idx = where[idx];
    std::ranges::sort(subset);
  }
  const MatchSet shuffled_matches = to_match_set(shuffled);
  const CorrespondenceSet in2 = select_inliers(
      shuffled_matches, rank_hypotheses(shuffled_matches, remapped), remapped, params);
  auto key = [](const Correspondence& c) { return std::tie(c.src.x, c.src.y, c.dst.x, c.dst.y); };
  auto sorted = [&](CorrespondenceSet s) {
    std::ranges::sort(s, [&](const auto& a, const auto& b) { return key(a) < key(b); });
    return s;
  };
  CHECK(sorted(in) == sorted(in2));
}

TEST_CASE("no inliers") {
  const CorrespondenceSet set = {{{0, 0}, {0, 0}}, {{100, 0}, {100, 0}}, {{0, 100}, {0, 100}},
                                 {{100, 100}, {100, 100}}, {{50, 30}, {400, 300}}};
  const MatchSet matches = to_match_set(set);
  SelectionParams params;
  params.eps_o = 1e-30;
  params.m0 = 1;
  params.m_total = 5;
  params.m = 1;
  HypothesisSet hyps;
  hyps.hypotheses = {Homography::translation(500, 500)};
  hyps.subsets = {{0, 1, 2, 3}};
  try {
    select_inliers(matches, rank_hypotheses(matches, hyps), hyps, params);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNoInliers);
  }
}

}  // TEST_SUITE
