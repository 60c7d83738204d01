#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "modhealth/infotheory.hpp"

using namespace modhealth;
using namespace modhealth::infotheory;
using Catch::Approx;

namespace {

SampleColumn gaussian_column(std::size_t n, std::uint64_t seed) {
  NormalSampler g(seed);
  SampleColumn c;
  c.values.resize(n);
  for (auto& v : c.values) v = g();
  return c;
}

SampleColumn std_gaussian_column(std::size_t n, std::uint64_t seed) {
  return standardize(gaussian_column(n, seed));
}

}  // namespace

TEST_CASE("standardize matches the closed form on {1,2,3}", "[infotheory]") {
  SampleColumn c;
  c.values = {1.0, 2.0, 3.0};
  const auto s = standardize(c);
  // population sd of {1,2,3} is sqrt(2/3)
  CHECK(s.values[0] == Approx(-1.224744871391589).epsilon(1e-12));
  CHECK(s.values[1] == Approx(0.0).margin(1e-15));
  CHECK(s.values[2] == Approx(1.224744871391589).epsilon(1e-12));
}

TEST_CASE("standardize is idempotent", "[infotheory]") {
  const auto c = std_gaussian_column(200, 7);
  const auto again = standardize(c);
  for (std::size_t i = 0; i < c.values.size(); ++i) {
    CHECK(again.values[i] == Approx(c.values[i]).margin(1e-12));
  }
}

TEST_CASE("standardize rejects constant columns", "[infotheory]") {
  SampleColumn c;
  c.values.assign(50, 3.14);
  CHECK_THROWS_AS(standardize(c), InputError);
}

TEST_CASE("independent variables have near-zero MI", "[infotheory]") {
  const std::size_t n = 2000;
  double acc = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto f = std_gaussian_column(n, 100 + seed);
    const auto g = std_gaussian_column(n, 200 + seed);
    acc += estimate_mi(f, g, 7, 300 + seed);
  }
  CHECK(std::fabs(acc / 10.0) <= 0.02);
}

TEST_CASE("bivariate Gaussian MI matches the analytic value", "[infotheory]") {
  const std::size_t n = 2000;
  const double rho = 0.6;
  const double truth = -0.5 * std::log(1.0 - rho * rho);
  double acc = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    NormalSampler gen(40 + seed);
    SampleColumn f, g;
    f.values.resize(n);
    g.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = gen();
      f.values[i] = x;
      g.values[i] = rho * x + std::sqrt(1.0 - rho * rho) * gen();
    }
    acc += estimate_mi(standardize(f), standardize(g), 7, 900 + seed);
  }
  CHECK(acc / 10.0 == Approx(truth).margin(0.03));
}

TEST_CASE("Markov chain F->H->G has near-zero CMI but positive MI", "[infotheory]") {
  const std::size_t n = 2000;
  double cmi_acc = 0.0, mi_acc = 0.0, cmi_norm_acc = 0.0, mi_norm_acc = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    NormalSampler gen(5000 + seed);
    SampleColumn f, g, h;
    f.values.resize(n);
    g.values.resize(n);
    h.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = gen();
      const double hh = x + 0.5 * gen();
      f.values[i] = x;
      h.values[i] = hh;
      g.values[i] = hh + 0.5 * gen();
    }
    const auto fs = standardize(f), gs = standardize(g), hs = standardize(h);
    const double c = estimate_cmi(fs, gs, hs, 7);
    const double m = estimate_mi(fs, gs, 7, 7000 + seed);
    cmi_acc += c;
    mi_acc += m;
    const double self_f = estimate_mi(fs, fs, 7, 7100 + seed);
    const double self_g = estimate_mi(gs, gs, 7, 7200 + seed);
    cmi_norm_acc += normalize(c, self_f, self_g);
    mi_norm_acc += normalize(m, self_f, self_g);
  }
  // analytic correlation for the chosen noise levels: 1/sqrt(1.5) -> MI 0.55 nats
  CHECK(std::fabs(cmi_acc / 10.0) <= 0.03);
  CHECK(mi_acc / 10.0 >= 0.1);
  // data-processing sanity on the normalized quantities
  CHECK(mi_norm_acc / 10.0 - cmi_norm_acc / 10.0 >= 0.05);
}

TEST_CASE("self-MI saturates high for identical columns", "[infotheory]") {
  // finite-sample self-estimate stands in for the divergent self-information
  const auto f = std_gaussian_column(2000, 31);
  const double v2000 = estimate_mi(f, f, 3, 77);
  CHECK(v2000 > 2.0);
  const auto f500 = std_gaussian_column(500, 32);
  CHECK(estimate_mi(f500, f500, 3, 77) < v2000);  // grows with N
}

TEST_CASE("normalized self-MI is exactly one", "[infotheory]") {
  const auto f = std_gaussian_column(400, 9);
  const auto est = estimate_mi_normalized(f, f, 7, 1234);
  CHECK(est.normalized == 1.0);
}

TEST_CASE("normalization arithmetic and clipping", "[infotheory]") {
  CHECK(normalize(0.5, 1.0, 2.0) == Approx(0.5));
  CHECK(normalize(-0.004, 1.0, 1.0) == 0.0);
  CHECK(normalize(1.2, 1.0, 1.0) == 1.0);
  CHECK_THROWS_AS(normalize(0.5, 0.0, 1.0), InputError);
}

TEST_CASE("MI is symmetric in its arguments", "[infotheory]") {
  const auto f = std_gaussian_column(300, 11);
  auto g = std_gaussian_column(300, 12);
  for (std::size_t i = 0; i < g.values.size(); ++i) g.values[i] += 0.5 * f.values[i];
  g = standardize(g);
  const double ab = estimate_mi(f, g, 7, 555);
  const double ba = estimate_mi(g, f, 7, 555);
  CHECK(ab == Approx(ba).margin(1e-12));
}

TEST_CASE("CMI is invariant under joint sample permutation", "[infotheory]") {
  const std::size_t n = 240;
  const auto f = std_gaussian_column(n, 21);
  const auto g = std_gaussian_column(n, 22);
  const auto h = std_gaussian_column(n, 23);
  const double base = estimate_cmi(f, g, h, 5);
  SampleColumn fp, gp, hp;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i * 7 + 3) % n;  // 7 coprime with 240: a permutation
    fp.values.push_back(f.values[j]);
    gp.values.push_back(g.values[j]);
    hp.values.push_back(h.values[j]);
  }
  CHECK(estimate_cmi(fp, gp, hp, 5) == Approx(base).margin(1e-12));
}

TEST_CASE("fixed seed gives bitwise-identical estimates", "[infotheory]") {
  const auto f = std_gaussian_column(300, 61);
  const auto g = std_gaussian_column(300, 62);
  const double a = estimate_mi(f, g, 7, 4242);
  const double b = estimate_mi(f, g, 7, 4242);
  CHECK(a == b);
  CHECK(estimate_mi(f, g, 7, 4243) != a);  // and the seed matters
}

TEST_CASE("estimator input validation", "[infotheory]") {
  const auto f = std_gaussian_column(100, 1);
  const auto g = std_gaussian_column(100, 2);
  const auto h = std_gaussian_column(100, 3);
  CHECK_THROWS_AS(estimate_cmi(f, g, h, 2), ConfigError);   // k below 3
  CHECK_THROWS_AS(estimate_cmi(f, g, h, 26), ConfigError);  // k above N/4
  auto short_g = g;
  short_g.values.resize(50);
  CHECK_THROWS_AS(estimate_cmi(f, short_g, h, 7), InputError);
  SampleColumn tiny;
  tiny.values.assign(10, 0.5);
  CHECK_THROWS_AS(estimate_cmi(tiny, tiny, tiny, 3), InputError);
}
