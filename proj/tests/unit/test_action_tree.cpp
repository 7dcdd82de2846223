#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include "hamppo/action_tree.hpp"

using namespace hamppo;

namespace {

ActionMask all_valid_mask() {
  ActionMask mask;
  mask.type_valid = {true, true};
  mask.low_valid.fill(true);
  return mask;
}

}  // namespace

TEST_CASE("mask_and_normalize reproduces the uniform five-way example") {
  const std::vector<double> logits(5, 1.0);
  const std::vector<bool> dummy;  // silence unused warning patterns
  (void)dummy;
  const std::array<bool, 5> valid{true, true, true, true, true};
  const auto probs = mask_and_normalize(logits, valid);
  for (const double p : probs) CHECK(p == 0.2);

  const std::array<bool, 5> masked{true, false, true, true, true};
  const auto masked_probs = mask_and_normalize(logits, masked, -1e10);
  CHECK(masked_probs[1] == 0.0);
  for (const int i : {0, 2, 3, 4}) CHECK(masked_probs[i] == doctest::Approx(0.25).epsilon(1e-12));
  double sum = 0.0;
  for (const double p : masked_probs) sum += p;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("mask_and_normalize puts all mass on a single unmasked entry") {
  const std::vector<double> logits{3.0, -2.0, 0.5};
  const std::array<bool, 3> valid{false, true, false};
  const auto probs = mask_and_normalize(logits, valid);
  CHECK(probs[1] == 1.0);
  CHECK(probs[0] == 0.0);
  CHECK(probs[2] == 0.0);
}

TEST_CASE("mask_and_normalize rejects an all-masked vector") {
  const std::vector<double> logits{1.0, 2.0};
  const std::array<bool, 2> valid{false, false};
  CHECK_THROWS_AS(mask_and_normalize(logits, valid), std::invalid_argument);
}

TEST_CASE("masked probabilities vanish for the default constant") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> logits(6);
    std::vector<bool> valid(6);
    bool any = false;
    for (int i = 0; i < 6; ++i) {
      logits[i] = rng.normal(0.0, 3.0);
      valid[i] = rng.bernoulli(0.7);
      any = any || valid[i];
    }
    if (!any) valid[rng.uniform_int(6)] = true;
    const auto probs = mask_and_normalize(logits, valid);
    for (int i = 0; i < 6; ++i) {
      if (!valid[i]) CHECK(probs[i] < 1e-9);
    }
  }
}

TEST_CASE("log softmax gradient matches the worked uniform example exactly") {
  const std::vector<double> logits(5, 1.0);
  const std::array<bool, 5> valid{true, true, true, true, true};
  const auto grad = masked_log_softmax_grad(logits, valid, 0);
  CHECK(grad[0] == 0.8);
  for (const int i : {1, 2, 3, 4}) CHECK(grad[i] == -0.2);

  const std::array<bool, 5> masked{true, false, true, true, true};
  const auto masked_grad = masked_log_softmax_grad(logits, masked, 0);
  CHECK(masked_grad[0] == 0.75);
  CHECK(masked_grad[1] == 0.0);
  for (const int i : {2, 3, 4}) CHECK(masked_grad[i] == -0.25);
}

TEST_CASE("compute_masks instantiates the movement rules") {
  const FieldGeometry geom{10, 10, 1};

  SUBCASE("interior crop cell: vertical moves plus deep scout") {
    const auto mask = compute_masks(geom, {5, 4}, false);
    CHECK(mask.type_valid[0]);
    CHECK(mask.type_valid[1]);
    CHECK(mask.low_valid[static_cast<int>(Move::Up)]);
    CHECK(mask.low_valid[static_cast<int>(Move::Down)]);
    CHECK_FALSE(mask.low_valid[static_cast<int>(Move::Left)]);
    CHECK_FALSE(mask.low_valid[static_cast<int>(Move::Right)]);
    CHECK(mask.low_valid[kSpraySlotOffset]);
    CHECK(mask.low_valid[kSpraySlotOffset + 1]);
  }

  SUBCASE("headland corner: off-grid moves and deep scout masked") {
    const auto mask = compute_masks(geom, {0, 0}, false);
    CHECK_FALSE(mask.type_valid[static_cast<int>(ActionType::DeepScout)]);
    CHECK_FALSE(mask.low_valid[static_cast<int>(Move::Up)]);
    CHECK(mask.low_valid[static_cast<int>(Move::Down)]);
    CHECK_FALSE(mask.low_valid[static_cast<int>(Move::Left)]);
    CHECK(mask.low_valid[static_cast<int>(Move::Right)]);
    CHECK_FALSE(mask.low_valid[kSpraySlotOffset]);
  }

  SUBCASE("already sprayed interior cell: scout only") {
    const auto mask = compute_masks(geom, {5, 4}, true);
    CHECK(mask.type_valid[static_cast<int>(ActionType::Scout)]);
    CHECK_FALSE(mask.type_valid[static_cast<int>(ActionType::DeepScout)]);
  }

  SUBCASE("scout is valid on every cell of the grid") {
    for (int r = 0; r < geom.rows(); ++r) {
      for (int c = 0; c < geom.cols; ++c) {
        CHECK(compute_masks(geom, {r, c}, false).type_valid[0]);
        CHECK(compute_masks(geom, {r, c}, true).type_valid[0]);
      }
    }
  }
}

TEST_CASE("sample_hierarchical on a forced deep scout with even spray logits") {
  ActionMask mask;
  mask.type_valid = {false, true};
  mask.low_valid = {false, false, false, false, true, true};
  const TypeLogits type_logits{0.3, -1.2};
  const LowLogits low_logits{0.0, 0.0, 0.0, 0.0, 0.7, 0.7};
  Rng rng(5);
  int sprays = 0;
  const int trials = 200000;
  for (int i = 0; i < trials; ++i) {
    const auto s = sample_hierarchical(type_logits, low_logits, mask, kDefaultMaskConstant, rng);
    CHECK(s.action.type == ActionType::DeepScout);
    CHECK(s.log_prob == doctest::Approx(std::log(0.5)).epsilon(1e-12));
    if (s.action.spray()) ++sprays;
  }
  // 3 sigma binomial bound around p = 0.5
  const double sigma = std::sqrt(0.25 * trials);
  CHECK(std::abs(sprays - trials * 0.5) < 3 * sigma);
}

TEST_CASE("uniform logits give the product of uniform level probabilities") {
  const TypeLogits type_logits{0.0, 0.0};
  const LowLogits low_logits{};
  const ActionMask mask = all_valid_mask();
  Rng rng(9);
  const auto s = sample_hierarchical(type_logits, low_logits, mask, kDefaultMaskConstant, rng);
  if (s.action.type == ActionType::Scout) {
    CHECK(std::exp(s.log_prob) == doctest::Approx(0.5 * 0.25).epsilon(1e-12));
  } else {
    CHECK(std::exp(s.log_prob) == doctest::Approx(0.5 * 0.5).epsilon(1e-12));
  }
}

TEST_CASE("a masked move is never sampled") {
  ActionMask mask = all_valid_mask();
  mask.low_valid[static_cast<int>(Move::Left)] = false;
  const TypeLogits type_logits{0.2, -0.4};
  const LowLogits low_logits{1.0, 0.5, 2.0, -0.3, 0.1, 0.1};
  Rng rng(1234);
  for (int i = 0; i < 1000000; ++i) {
    const auto s = sample_hierarchical(type_logits, low_logits, mask, kDefaultMaskConstant, rng);
    if (s.action.type == ActionType::Scout) {
      REQUIRE(s.action.move() != Move::Left);
    }
  }
}

TEST_CASE("sampling frequencies match the masked probabilities") {
  ActionMask mask = all_valid_mask();
  mask.low_valid[static_cast<int>(Move::Right)] = false;
  const TypeLogits type_logits{0.4, -0.1};
  const LowLogits low_logits{0.3, -0.6, 0.9, 0.0, -0.2, 0.5};
  const HierProbs probs = hierarchical_probs(type_logits, low_logits, mask);

  Rng rng(77);
  const int trials = 1000000;
  std::array<int, kNumLowSlots> counts{};
  std::array<int, 2> type_counts{};
  for (int i = 0; i < trials; ++i) {
    const auto s = sample_hierarchical(type_logits, low_logits, mask, kDefaultMaskConstant, rng);
    ++type_counts[static_cast<int>(s.action.type)];
    ++counts[s.action.low_slot()];
  }
  for (int b = 0; b < 2; ++b) {
    const double p = probs.type[b];
    const double sigma = std::sqrt(p * (1 - p) * trials);
    CHECK(std::abs(type_counts[b] - trials * p) < 3 * sigma);
  }
  for (int m = 0; m < kNumMoves; ++m) {
    const double p = probs.type[0] * probs.move[m];
    const double sigma = std::sqrt(p * (1 - p) * trials);
    CHECK(std::abs(counts[m] - trials * p) <= 3 * sigma + 1);
  }
  for (int s = 0; s < kNumSpraySlots; ++s) {
    const double p = probs.type[1] * probs.spray[s];
    const double sigma = std::sqrt(p * (1 - p) * trials);
    CHECK(std::abs(counts[kSpraySlotOffset + s] - trials * p) <= 3 * sigma + 1);
  }
}

TEST_CASE("hierarchical entropy is additive for uniform levels") {
  const std::array<double, 2> type_probs{0.5, 0.5};
  const std::vector<std::vector<double>> subs{
      {0.25, 0.25, 0.25, 0.25},
      {0.25, 0.25, 0.25, 0.25},
  };
  CHECK(hierarchical_entropy(type_probs, subs) ==
        doctest::Approx(std::log(2.0) + std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("deterministic masks give zero entropy") {
  ActionMask mask;
  mask.type_valid = {true, false};
  mask.low_valid = {false, true, false, false, false, false};
  const TypeLogits type_logits{1.0, 2.0};
  const LowLogits low_logits{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  const auto score =
      log_prob_and_entropy(type_logits, low_logits, mask, HierAction::scout(Move::Down));
  CHECK(score.entropy == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(score.log_prob == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("tree entropy equals the entropy of the flattened joint distribution") {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    TypeLogits type_logits;
    LowLogits low_logits;
    for (auto& z : type_logits) z = rng.normal(0.0, 2.0);
    for (auto& z : low_logits) z = rng.normal(0.0, 2.0);
    ActionMask mask = all_valid_mask();
    // keep at least one move and one spray slot valid
    for (int m = 1; m < kNumMoves; ++m) mask.low_valid[m] = rng.bernoulli(0.8);
    mask.low_valid[kSpraySlotOffset + 1] = rng.bernoulli(0.8);

    const HierProbs probs = hierarchical_probs(type_logits, low_logits, mask);
    // Joint enumeration oracle over all (type, parameter) paths.
    double joint_entropy = 0.0;
    for (int m = 0; m < kNumMoves; ++m) {
      const double p = probs.type[0] * probs.move[m];
      if (p > 0.0) joint_entropy -= p * std::log(p);
    }
    for (int s = 0; s < kNumSpraySlots; ++s) {
      const double p = probs.type[1] * probs.spray[s];
      if (p > 0.0) joint_entropy -= p * std::log(p);
    }

    const auto score =
        log_prob_and_entropy(type_logits, low_logits, mask, HierAction::scout(Move::Up));
    CHECK(score.entropy == doctest::Approx(joint_entropy).epsilon(1e-10));
  }
}

TEST_CASE("log probabilities are consistent with the factored probabilities") {
  Rng rng(57);
  for (int trial = 0; trial < 100; ++trial) {
    TypeLogits type_logits;
    LowLogits low_logits;
    for (auto& z : type_logits) z = rng.normal();
    for (auto& z : low_logits) z = rng.normal();
    const ActionMask mask = all_valid_mask();
    const HierProbs probs = hierarchical_probs(type_logits, low_logits, mask);

    double total = 0.0;
    for (int m = 0; m < kNumMoves; ++m) {
      const auto score = log_prob_and_entropy(type_logits, low_logits, mask,
                                              HierAction::scout(static_cast<Move>(m)));
      CHECK(std::exp(score.log_prob) ==
            doctest::Approx(probs.type[0] * probs.move[m]).epsilon(1e-12));
      total += std::exp(score.log_prob);
    }
    for (const bool spray : {true, false}) {
      const auto score =
          log_prob_and_entropy(type_logits, low_logits, mask, HierAction::deep_scout(spray));
      CHECK(std::exp(score.log_prob) ==
            doctest::Approx(probs.type[1] * probs.spray[spray ? 0 : 1]).epsilon(1e-12));
      total += std::exp(score.log_prob);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("an action invalid under the mask is rejected") {
  ActionMask mask = all_valid_mask();
  mask.low_valid[static_cast<int>(Move::Left)] = false;
  CHECK_THROWS_AS(log_prob_and_entropy({0.0, 0.0}, {}, mask, HierAction::scout(Move::Left)),
                  std::invalid_argument);
}

TEST_CASE("greedy action respects masks") {
  ActionMask mask = all_valid_mask();
  mask.low_valid[static_cast<int>(Move::Down)] = false;
  const TypeLogits type_logits{2.0, 1.0};
  const LowLogits low_logits{0.1, 5.0, 0.3, 0.2, 0.0, 0.0};
  const auto a = greedy_action(type_logits, low_logits, mask);
  CHECK(a.type == ActionType::Scout);
  CHECK(a.move() == Move::Left);  // best unmasked slot once Down is masked
}
