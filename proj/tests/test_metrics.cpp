#include <catch2/catch_amalgamated.hpp>

#include "modhealth/metrics.hpp"

using modhealth::metrics::compute_labels;
using Catch::Approx;

TEST_CASE("labels for the max-CtCV cell triple", "[metrics]") {
  const auto l = compute_labels({0.992, 0.806, 0.785});
  // 9.31% in the source table; the gap is table rounding of the cell values
  CHECK(l.sd == Approx(0.0931).margin(0.0005));
  CHECK(l.m_soh == Approx(0.861).margin(0.0005));
  CHECK(l.range == Approx(0.207).margin(1e-12));
  CHECK(l.cv == Approx(l.sd / l.m_soh).epsilon(1e-15));
}

TEST_CASE("labels for the median-CtCV cell triple", "[metrics]") {
  const auto l = compute_labels({0.919, 0.918, 0.823});
  CHECK(l.m_soh == Approx(0.8867).margin(0.0005));
}

TEST_CASE("labels for the min-CtCV cell triple", "[metrics]") {
  const auto l = compute_labels({0.830, 0.819, 0.809});
  CHECK(l.sd == Approx(0.0084).margin(0.0005));
}

TEST_CASE("identical cells give zero spread", "[metrics]") {
  for (const double x : {0.3, 0.75, 1.0}) {
    const auto l = compute_labels({x, x, x});
    CHECK(l.sd == 0.0);
    CHECK(l.range == 0.0);
    CHECK(l.cv == 0.0);
    CHECK(l.m_soh == x);
  }
}

TEST_CASE("single-cell module has zero SD", "[metrics]") {
  CHECK(compute_labels({0.9}).sd == 0.0);
}

TEST_CASE("population (divide-by-N) convention", "[metrics]") {
  // population sd of {1/2, 1} is 1/4; the sample convention would give ~0.3536
  const auto l = compute_labels({0.5, 1.0});
  CHECK(l.sd == Approx(0.25).epsilon(1e-12));
}

TEST_CASE("label statistics are permutation invariant", "[metrics]") {
  std::vector<double> v{0.992, 0.806, 0.785, 0.91};
  const auto base = compute_labels(v);
  std::sort(v.begin(), v.end());
  do {
    const auto l = compute_labels(v);
    CHECK(l.sd == Approx(base.sd).epsilon(1e-14));
    CHECK(l.m_soh == Approx(base.m_soh).epsilon(1e-14));
    CHECK(l.range == Approx(base.range).epsilon(1e-14));
    CHECK(l.cv == Approx(base.cv).epsilon(1e-14));
  } while (std::next_permutation(v.begin(), v.end()));
}

TEST_CASE("CV times M-SoH recovers SD", "[metrics]") {
  const auto l = compute_labels({0.97, 0.84, 0.8, 0.92});
  CHECK(l.cv * l.m_soh == Approx(l.sd).epsilon(1e-15));
}

TEST_CASE("label input validation", "[metrics]") {
  CHECK_THROWS_AS(compute_labels({}), modhealth::InputError);
  CHECK_THROWS_AS(compute_labels({0.9, 0.0}), modhealth::InputError);
  CHECK_THROWS_AS(compute_labels({0.9, 1.2}), modhealth::InputError);
  CHECK_THROWS_AS(compute_labels({-0.1}), modhealth::InputError);
}
