#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ssdef/perturbation.hpp"
#include "test_support.hpp"

using namespace ssdef;

TEST_CASE("project_ball clamp arithmetic") {
  ImageBatch<double> anchor(1, 1, 3, 1), cand(1, 1, 3, 1);
  anchor.data << 0.5, 0.5, 0.02;
  cand.data << 0.9, 0.5, -0.3;
  auto out = project_ball(cand, anchor, 0.1);
  CHECK(out.data(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(out.data(1, 0) == 0.5);  // candidate == anchor stays put
  CHECK(out.data(2, 0) == 0.0);  // ball clamp to -0.08, then range clamp to 0
}

TEST_CASE("project_ball validates inputs") {
  auto a = ts::random_batch(1, 2, 2, 1, 1);
  auto b = ts::random_batch(1, 2, 3, 1, 2);
  CHECK_THROWS_AS(project_ball(b, a, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(project_ball(a, a, -0.01), std::invalid_argument);
}

TEST_CASE("project_ball containment and idempotence") {
  Rng rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const double eps = rng.uniform(0.0, 0.3);
    auto anchor = ts::random_batch(1, 3, 3, 2, 100 + trial, 0.0, 1.0);
    auto cand = ts::random_batch(1, 3, 3, 2, 200 + trial, -0.5, 1.5);
    auto out = project_ball(cand, anchor, eps);
    CHECK(linf_distance(out, anchor) <= eps + 1e-12);
    CHECK(in_unit_range(out));
    auto twice = project_ball(out, anchor, eps);
    CHECK((twice.data - out.data).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("random_init basics") {
  auto anchor = ts::random_batch(3, 4, 4, 2, 3);
  SUBCASE("zero epsilon is the identity") {
    auto out = random_init(anchor, 0.0, 42);
    CHECK((out.data - anchor.data).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("fixed seed is deterministic") {
    auto a = random_init(anchor, 0.05, 42);
    auto b = random_init(anchor, 0.05, 42);
    CHECK((a.data - b.data).cwiseAbs().maxCoeff() == 0.0);
    auto c = random_init(anchor, 0.05, 43);
    CHECK((a.data - c.data).cwiseAbs().maxCoeff() > 0.0);
  }
  SUBCASE("containment") {
    auto out = random_init(anchor, 0.05, 42);
    CHECK(linf_distance(out, anchor) <= 0.05 + 1e-12);
    CHECK(in_unit_range(out));
  }
}

TEST_CASE("random_init noise law is uniform on [-eps, eps]") {
  // 10^4 scalar samples; anchor mid-range so the range clamp never bites
  const double eps = 0.03;
  ImageBatch<double> anchor(1, 100, 100, 1);
  anchor.data.setConstant(0.5);
  auto out = random_init(anchor, eps, 99);
  Eigen::ArrayXXd dev = (out.data - anchor.data).array();
  const double mean_abs = dev.abs().mean();
  CHECK(mean_abs == doctest::Approx(eps / 2).epsilon(0.02));  // E|U| = eps/2
  const double var = (dev - dev.mean()).square().mean();
  CHECK(var == doctest::Approx(eps * eps / 3).epsilon(0.05));  // Var U = eps^2/3
  CHECK(dev.maxCoeff() <= eps);
  CHECK(dev.minCoeff() >= -eps);
  // crude uniformity: each quarter of the support holds ~25% of samples
  const auto n = dev.size();
  int quarters[4] = {0, 0, 0, 0};
  for (Eigen::Index i = 0; i < n; ++i) {
    int q = static_cast<int>((dev(i) + eps) / (eps / 2));
    quarters[std::min(3, std::max(0, q))]++;
  }
  for (int q = 0; q < 4; ++q) CHECK(std::abs(quarters[q] / double(n) - 0.25) < 0.02);
}

TEST_CASE("loss_weight fractions") {
  CHECK(loss_weight(2.0, 4.0) == 0.5);
  CHECK(loss_weight(4.0, 4.0) == 1.0);
  const double w = loss_weight(1.0, 3.0);
  CHECK(w == doctest::Approx(1.0 / 3).epsilon(1e-15));
  SUBCASE("three-task weights sum to one") {
    Rng rng(5);
    for (int t = 0; t < 200; ++t) {
      double l[3] = {rng.uniform(0, 5), rng.uniform(0, 5), rng.uniform(0, 5)};
      const double total = l[0] + l[1] + l[2];
      if (total <= 0) continue;
      const double sum = loss_weight(l[0], total) + loss_weight(l[1], total) +
                         loss_weight(l[2], total);
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }
  }
  SUBCASE("degenerate totals are rejected") {
    CHECK_THROWS_AS(loss_weight(0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(loss_weight(1.0, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(loss_weight(2.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(loss_weight(-0.5, 1.0), std::invalid_argument);
  }
}

TEST_CASE("PerturbationBudget validation") {
  PerturbationBudget b;
  CHECK_NOTHROW(b.validate());
  b.epsilon = -0.1;
  CHECK_THROWS_AS(b.validate(), std::invalid_argument);
  b.epsilon = 0.1;
  b.step_size = 0;
  CHECK_THROWS_AS(b.validate(), std::invalid_argument);
  b.step_size = 0.01;
  b.iterations = 0;
  CHECK_THROWS_AS(b.validate(1), std::invalid_argument);
  CHECK_NOTHROW(b.validate(0));
}
