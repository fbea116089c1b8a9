#include <doctest.h>

#include <algorithm>
#include <random>

#include "esv/ablation.hpp"
#include "esv/error.hpp"
#include "esv/model_spec.hpp"
#include "esv/models.hpp"
#include "support/builders.hpp"

using namespace esv;

namespace {

bool is_permutation_of_n(const std::vector<int>& v, int n) {
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < n; ++i)
    if (sorted[i] != i) return false;
  return static_cast<int>(v.size()) == n;
}

}  // namespace

TEST_CASE("order names round trip") {
  const char* names[] = {"esv-descending", "esv-ascending", "center-out",
                         "edges-in",       "uniform",       "random"};
  for (const char* name : names) {
    auto order = ablation_order_from_name(name);
    REQUIRE(order.has_value());
    CHECK(ablation_order_name(*order) == std::string(name));
  }
  CHECK_FALSE(ablation_order_from_name("sideways").has_value());
}

// [DERIVED] center-out for n=8: start at (8-1)/2 = 3, then alternate right
// and left with growing step.
TEST_CASE("center out removal order") {
  auto order = removal_permutation(AblationOrder::center_out, 8, nullptr, 0, 0);
  CHECK(order == std::vector<int>{3, 4, 2, 5, 1, 6, 0, 7});
  CHECK(removal_permutation(AblationOrder::center_out, 1, nullptr, 0, 0) == std::vector<int>{0});
  CHECK(removal_permutation(AblationOrder::center_out, 3, nullptr, 0, 0) ==
        std::vector<int>{1, 2, 0});
}

TEST_CASE("edges in removal order") {
  CHECK(removal_permutation(AblationOrder::edges_in, 5, nullptr, 0, 0) ==
        std::vector<int>{0, 4, 1, 3, 2});
  CHECK(removal_permutation(AblationOrder::edges_in, 8, nullptr, 0, 0) ==
        std::vector<int>{0, 7, 1, 6, 2, 5, 3, 4});
}

// [DERIVED] greedy spread from a contiguous sequence: every removal ties at
// a minimum gap of 1 until three survivors remain, so the front goes first;
// at {5,6,7} dropping 6 opens a gap of 2, then the pair tie resolves low.
TEST_CASE("uniform removal order") {
  CHECK(removal_permutation(AblationOrder::uniform, 8, nullptr, 0, 0) ==
        std::vector<int>{0, 1, 2, 3, 4, 6, 5, 7});
  CHECK(removal_permutation(AblationOrder::uniform, 4, nullptr, 0, 0) ==
        std::vector<int>{0, 2, 1, 3});
  // Half of n=8 removed leaves exactly the back half alive.
  auto order = removal_permutation(AblationOrder::uniform, 8, nullptr, 0, 0);
  std::vector<int> removed(order.begin(), order.begin() + 4);
  std::sort(removed.begin(), removed.end());
  CHECK(removed == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("random order is a seeded permutation") {
  auto a = removal_permutation(AblationOrder::random_order, 10, nullptr, 0, 7);
  auto b = removal_permutation(AblationOrder::random_order, 10, nullptr, 0, 7);
  auto c = removal_permutation(AblationOrder::random_order, 10, nullptr, 0, 8);
  CHECK(is_permutation_of_n(a, 10));
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("attribution ranked orders sort by phi with stable ties") {
  AttributionResult r;
  r.n = 4;
  r.classes = {0};
  r.phi = {0.5, -0.25, 0.5, 1.0};
  auto desc = removal_permutation(AblationOrder::esv_descending, 4, &r, 0, 0);
  CHECK(desc == std::vector<int>{3, 0, 2, 1});
  auto asc = removal_permutation(AblationOrder::esv_ascending, 4, &r, 0, 0);
  CHECK(asc == std::vector<int>{1, 0, 2, 3});
  CHECK_THROWS_AS(removal_permutation(AblationOrder::esv_descending, 4, nullptr, 0, 0),
                  ValidationError);
  CHECK_THROWS_AS(removal_permutation(AblationOrder::esv_descending, 5, &r, 0, 0),
                  ValidationError);
}

TEST_CASE("ablation curve walks from full to a single element") {
  // Additive one-class model over all-negative values with a positive prior:
  // removing the most distracting element first must raise the score at the
  // first step.
  LinearAdditiveModel model(1, 1, {1.0}, {2.0});
  FeatureSequence x(4, 1, {-0.1, -0.2, -0.3, -0.4});
  auto esv = exact_esv(model, x, {0});
  auto curve = ablate_by_rank(model, x, AblationOrder::esv_ascending, &esv, 0, 0);

  REQUIRE(curve.points.size() == 4);
  CHECK(curve.points[0].elements_remaining == 4);
  CHECK(curve.points[3].elements_remaining == 1);
  CHECK(curve.points[0].class_score == doctest::Approx(2.0 - 1.0).epsilon(1e-12));
  // Most negative attribution is element 3; its removal raises the score.
  CHECK(curve.removal_order[0] == 3);
  CHECK(curve.points[1].class_score == doctest::Approx(1.4).epsilon(1e-12));
  CHECK(curve.points[1].class_score > curve.points[0].class_score);
  // Final survivor is the least negative element.
  CHECK(curve.points[3].class_score == doctest::Approx(2.0 - 0.1).epsilon(1e-12));
  CHECK(is_permutation_of_n(curve.removal_order, 4));
}

TEST_CASE("ablation marks argmax correctness per step") {
  // Two classes; class 1 wins on the full sequence, class 0 after removals.
  LinearAdditiveModel model(2, 1, {-1.0, 1.0}, {0.5, 0.0});
  FeatureSequence x(3, 1, {0.2, 0.2, 0.2});
  auto curve = ablate_by_rank(model, x, AblationOrder::edges_in, nullptr, 1, 1);
  CHECK(curve.points[0].correct);       // f = (-0.1, 0.6)
  CHECK_FALSE(curve.points[2].correct); // f = (0.3, 0.2)
}

TEST_CASE("ablation validates class and label") {
  LinearAdditiveModel model(2, 1, {1.0, 1.0}, {0.0, 0.0});
  FeatureSequence x(2, 1, {1, 2});
  CHECK_THROWS_AS(ablate_by_rank(model, x, AblationOrder::edges_in, nullptr, 2, 0),
                  ValidationError);
  CHECK_THROWS_AS(ablate_by_rank(model, x, AblationOrder::edges_in, nullptr, 0, -1),
                  ValidationError);
}
