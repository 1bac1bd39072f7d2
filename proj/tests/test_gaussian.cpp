#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "refchoice/gaussian.hpp"
#include "refchoice/prng.hpp"

using namespace refchoice;

namespace {
struct Phi2Case {
  double h, k, rho, expected;
};

// Reference values computed with mpmath (dps=40) by adaptive quadrature of
// phi(x) * Phi((k - rho x)/sqrt(1-rho^2)) over (-inf, h].
const Phi2Case kPhi2Cases[] = {
    {-2.5, -2.0, -0.99, 2.8792713729218590e-225},
    {-2.5, -2.0, 0.35, 0.00087851424212182345},
    {-2.5, -0.7, -0.2, 0.00061366320547531515},
    {-2.5, -0.7, 0.94, 0.0062096646369686572},
    {-2.5, 0.0, -0.95, 9.3767716847969368e-18},
    {-2.5, 0.0, 0.6, 0.0060915292831697184},
    {-2.5, 0.5, 0.0, 0.0042937504698490628},
    {-2.5, 0.5, 0.99, 0.0062096653257761352},
    {-2.5, 1.5, -0.75, 0.0011692087245449456},
    {-2.5, 1.5, 0.8, 0.0062096653213440393},
    {-1.0, -2.0, -0.75, 6.1761757551774158e-7},
    {-1.0, -2.0, 0.8, 0.020859583932255541},
    {-1.0, -0.7, 0.1, 0.046209989972394306},
    {-1.0, 0.0, -0.5, 0.031257047354831917},
    {-1.0, 0.0, 0.925, 0.15844136111926479},
    {-1.0, 0.5, -0.99, 2.1631334915490061e-6},
    {-1.0, 0.5, 0.35, 0.13674399353400369},
    {-1.0, 1.5, -0.2, 0.14084228864766650},
    {-1.0, 1.5, 0.94, 0.15865525393145222},
    {-0.5, -2.0, -0.2, 0.0036515056104977020},
    {-0.5, -2.0, 0.94, 0.022750033228513687},
    {-0.5, -0.7, -0.95, 2.2102006749996237e-6},
    {-0.5, -0.7, 0.6, 0.15093249055127340},
    {-0.5, 0.0, 0.0, 0.15426876936299345},
    {-0.5, 0.0, 0.99, 0.30853475809354332},
    {-0.5, 0.5, -0.75, 0.10093100290256387},
    {-0.5, 0.5, 0.8, 0.30216808615203683},
    {-0.5, 1.5, 0.1, 0.29230643020233695},
    {0.0, -2.0, 0.1, 0.013518197412605233},
    {0.0, -0.7, -0.5, 0.057358795689412249},
    {0.0, -0.7, 0.925, 0.23990114894498550},
    {0.0, 0.0, -0.99, 0.022526706822206062},
    {0.0, 0.0, 0.35, 0.30690920865200739},
    {0.0, 0.5, -0.2, 0.31749824710124145},
    {0.0, 0.5, 0.94, 0.49549360432400553},
    {0.0, 1.5, -0.95, 0.43319281836822346},
    {0.0, 1.5, 0.6, 0.49462572612650279},
    {0.3, -2.0, -0.95, 4.3237160867349671e-10},
    {0.3, -2.0, 0.6, 0.022344125962244819},
    {0.3, -0.7, 0.0, 0.14951210446319219},
    {0.3, -0.7, 0.99, 0.24196365222306722},
    {0.3, 0.0, -0.75, 0.18184821072872421},
    {0.3, 0.0, 0.8, 0.44732333038450310},
    {0.3, 0.5, 0.1, 0.44080659395765142},
    {0.3, 1.5, -0.5, 0.55617365978606442},
    {0.3, 1.5, 0.925, 0.61788363848794049},
    {1.2, -2.0, -0.5, 0.011528866008896686},
    {1.2, -2.0, 0.925, 0.022750131948179206},
    {1.2, -0.7, -0.99, 0.12689580557097076},
    {1.2, -0.7, 0.35, 0.23199613497588427},
    {1.2, 0.0, -0.2, 0.42701908382589839},
    {1.2, 0.0, 0.94, 0.49999215060683252},
    {1.2, 0.5, -0.95, 0.57639279185164027},
    {1.2, 0.5, 0.6, 0.66021714035877211},
    {1.2, 1.5, 0.0, 0.82581061112787645},
    {1.2, 1.5, 0.99, 0.88479226187146824},
    {2.0, -2.0, 0.0, 0.022232563444519643},
    {2.0, -2.0, 0.99, 0.022750131948179207},
    {2.0, -0.7, -0.75, 0.22061524705942087},
    {2.0, -0.7, 0.8, 0.24196321224601938},
    {2.0, 0.0, 0.1, 0.49076806546442603},
    {2.0, 0.5, -0.5, 0.66934210615545830},
    {2.0, 0.5, 0.925, 0.69146158920002487},
    {2.0, 1.5, -0.99, 0.91044266678296273},
    {2.0, 1.5, 0.35, 0.91588192778981542},
};
}  // namespace

TEST_CASE("univariate normal cdf", "[gaussian]") {
  CHECK(norm_cdf(0.0) == 0.5);
  // mpmath dps=30 references
  CHECK(norm_cdf(-1.96) == Catch::Approx(0.0249978951482204362).epsilon(1e-12));
  CHECK(norm_cdf(-3.5) == Catch::Approx(0.000232629079035525036).epsilon(1e-12));
  CHECK(norm_cdf(1.0) == Catch::Approx(0.841344746068542949).epsilon(1e-14));
  CHECK(norm_cdf(-8.0) == Catch::Approx(6.22096057427178412e-16).epsilon(1e-12));

  for (double z : {-6.0, -2.3, -0.7, 0.0, 0.41, 1.9, 5.5})
    CHECK(norm_cdf(z) + norm_cdf(-z) == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("normal quantile inverts cdf", "[gaussian]") {
  for (double p : {1e-12, 1e-6, 0.025, 0.31, 0.5, 0.77, 0.999, 1 - 1e-9})
    CHECK(norm_cdf(norm_quantile(p)) == Catch::Approx(p).epsilon(1e-11));
  CHECK(norm_quantile(0.5) == Catch::Approx(0.0).margin(1e-15));
  CHECK_THROWS_AS(norm_quantile(0.0), std::domain_error);
  CHECK_THROWS_AS(norm_quantile(1.0), std::domain_error);
}

TEST_CASE("bivariate cdf against quadrature references", "[gaussian]") {
  for (const auto& c : kPhi2Cases) {
    CAPTURE(c.h, c.k, c.rho);
    CHECK(binorm_cdf(c.h, c.k, c.rho) ==
          Catch::Approx(c.expected).margin(1e-13).epsilon(1e-11));
  }
}

TEST_CASE("bivariate cdf closed forms", "[gaussian]") {
  CHECK(binorm_cdf(0.0, 0.0, 0.0) == 0.25);
  // Median-orthant identity on a 99-point rho grid.
  for (int i = 1; i <= 99; ++i) {
    const double rho = -0.99 + 0.02 * (i - 1);
    CAPTURE(rho);
    const double expected = 0.25 + std::asin(rho) / kTwoPi;
    CHECK(binorm_cdf(0.0, 0.0, rho) == Catch::Approx(expected).margin(1e-10));
  }
  CHECK(binorm_cdf(0.0, 0.0, 0.5) == Catch::Approx(1.0 / 3.0).margin(1e-12));

  // Independence factorization.
  for (double h : {-1.5, 0.2, 2.0})
    for (double k : {-0.4, 0.9})
      CHECK(binorm_cdf(h, k, 0.0) ==
            Catch::Approx(norm_cdf(h) * norm_cdf(k)).epsilon(1e-14));

  // Infinite limits collapse to univariate values.
  CHECK(binorm_cdf(kInf, 0.7, 0.4) == Catch::Approx(norm_cdf(0.7)).epsilon(1e-15));
  CHECK(binorm_cdf(-0.3, kInf, -0.6) == Catch::Approx(norm_cdf(-0.3)).epsilon(1e-15));
  CHECK(binorm_cdf(-kInf, 0.7, 0.4) == 0.0);
  CHECK(binorm_cdf(kInf, kInf, 0.4) == 1.0);

  CHECK_THROWS_AS(binorm_cdf(0.0, 0.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(binorm_cdf(0.0, 0.0, -1.2), std::domain_error);
}

TEST_CASE("bivariate cdf monotonicity", "[gaussian]") {
  auto rng = substream(7, 1);
  for (int trial = 0; trial < 200; ++trial) {
    const double h = uniform_real(rng, -3.0, 3.0);
    const double k = uniform_real(rng, -3.0, 3.0);
    const double rho = uniform_real(rng, -0.98, 0.98);
    const double base = binorm_cdf(h, k, rho);
    CHECK(binorm_cdf(h + 0.1, k, rho) >= base - 1e-14);
    CHECK(binorm_cdf(h, k + 0.1, rho) >= base - 1e-14);
    CHECK(binorm_cdf(h, k, std::min(0.985, rho + 0.01)) >= base - 1e-13);
  }
}

TEST_CASE("rectangle probabilities", "[gaussian]") {
  CHECK(rect_prob({-kInf, kInf, -kInf, kInf, 0.3}) == 1.0);
  CHECK(rect_prob({-kInf, 0.0, -kInf, 0.0, 0.0}) == 0.25);
  const double p01 = norm_cdf(1.0) - 0.5;
  CHECK(rect_prob({0.0, 1.0, 0.0, 1.0, 0.0}) ==
        Catch::Approx(p01 * p01).epsilon(1e-12));
  CHECK(rect_prob({8.0, 9.0, -9.0, -8.0, -0.99}) >= kProbFloor);
  CHECK_THROWS_AS(rect_prob({1.0, 0.0, 0.0, 1.0, 0.0}), std::domain_error);
}

TEST_CASE("shared-corner rectangle path matches inclusion-exclusion",
          "[gaussian]") {
  auto rng = substream(99, 4);
  for (int trial = 0; trial < 500; ++trial) {
    Rect2 r;
    r.rho = uniform_real(rng, -0.99, 0.99);
    auto bound = [&](bool* is_inf) {
      const double u = uniform01(rng);
      *is_inf = u < 0.2;
      return uniform_real(rng, -3.0, 3.0);
    };
    bool inf_lo1, inf_hi1, inf_lo2, inf_hi2;
    double a = bound(&inf_lo1), b = bound(&inf_hi1);
    double c = bound(&inf_lo2), d = bound(&inf_hi2);
    r.lo1 = inf_lo1 ? -kInf : std::min(a, b);
    r.hi1 = inf_hi1 ? kInf : std::max(a, b) + 0.1;
    r.lo2 = inf_lo2 ? -kInf : std::min(c, d);
    r.hi2 = inf_hi2 ? kInf : std::max(c, d) + 0.1;
    const double direct = binorm_cdf(r.hi1, r.hi2, r.rho) -
                          binorm_cdf(r.lo1, r.hi2, r.rho) -
                          binorm_cdf(r.hi1, r.lo2, r.rho) +
                          binorm_cdf(r.lo1, r.lo2, r.rho);
    CAPTURE(r.lo1, r.hi1, r.lo2, r.hi2, r.rho);
    CHECK(rect_prob(r) ==
          Catch::Approx(std::clamp(direct, kProbFloor, 1.0)).margin(5e-14));
  }
}

TEST_CASE("rectangle partition sums to one", "[gaussian]") {
  const std::vector<double> cuts1 = {-kInf, -2.1, -0.4, 0.0, 0.9, 2.5, kInf};
  const std::vector<double> cuts2 = {-kInf, -1.3, 0.2, 1.8, kInf};
  for (double rho : {-0.95, -0.4, 0.0, 0.3, 0.8, 0.97}) {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts1.size(); ++i)
      for (std::size_t j = 0; j + 1 < cuts2.size(); ++j)
        total += rect_prob({cuts1[i], cuts1[i + 1], cuts2[j], cuts2[j + 1], rho});
    CAPTURE(rho);
    CHECK(total == Catch::Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("substream determinism and draw helpers", "[prng]") {
  auto a = substream(42, 3, 1);
  auto b = substream(42, 3, 1);
  auto c = substream(42, 4, 1);
  CHECK(a() == b());
  CHECK(a() == b());
  auto a2 = substream(42, 3, 1);
  CHECK(a2() != c());  // distinct tags give distinct streams

  auto rng = substream(1, 2, 3);
  for (int i = 0; i < 1000; ++i) {
    const double u = uniform01(rng);
    CHECK(u > 0.0);
    CHECK(u < 1.0);
    CHECK(uniform_below(rng, 24) < 24);
  }

  // Sample moments of the inverse-CDF normal.
  double sum = 0.0, sum2 = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double z = normal(rng);
    sum += z;
    sum2 += z * z;
  }
  CHECK(sum / n == Catch::Approx(0.0).margin(3.0 / std::sqrt(double(n))));
  CHECK(sum2 / n == Catch::Approx(1.0).margin(4.0 / std::sqrt(double(n))));

  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7};
  auto r1 = substream(9, 9);
  auto r2 = substream(9, 9);
  auto w = v;
  shuffle_inplace(v, r1);
  shuffle_inplace(w, r2);
  CHECK(v == w);
}
