#include <doctest.h>

#include <cmath>
#include <map>

#include "bssroute/distfit.hpp"
#include "bssroute/error.hpp"
#include "bssroute/gof.hpp"
#include "bssroute/rng.hpp"
#include "bssroute/simulate.hpp"
#include "oracles.hpp"

#ifdef BSSROUTE_HAVE_BOOST
#include <boost/math/distributions/chi_squared.hpp>
#endif

using namespace bssroute;

TEST_SUITE("gof") {
  TEST_CASE("survival function against quadrature") {
    for (int dof : {1, 2, 4, 9, 30}) {
      for (double x : {0.2, 1.0, 3.84, 11.07, 50.0}) {
        CHECK(chi_square_sf(x, dof) == doctest::Approx(oracle::chi2_sf(x, dof)).epsilon(1e-7));
#ifdef BSSROUTE_HAVE_BOOST
        const boost::math::chi_squared_distribution<double> d(dof);
        CHECK(chi_square_sf(x, dof) == doctest::Approx(boost::math::cdf(boost::math::complement(d, x))).epsilon(1e-10));
#endif
      }
    }
    CHECK(chi_square_sf(3.841458820694124, 1) == doctest::Approx(0.05).epsilon(1e-10));
    CHECK(chi_square_sf(0.0, 3) == 1.0);
    CHECK_THROWS_AS(chi_square_sf(1.0, 0), Error);
  }

  TEST_CASE("merged bins partition the sample and the model mass") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      Rng rng(seed);
      const auto gt = mixture_truth(rng.uniform(0.5, 0.9), rng.uniform(4, 9), rng.uniform(10, 16),
                                    rng.uniform(0.08, 0.3), 50 + static_cast<std::int64_t>(rng.next() % 900), seed);
      const auto s = gen_sample(gt);
      const auto fit = fit_lognormal(s);
      const auto bins = chi_square_bins(s, fit);
      double obs = 0.0;
      double exp = 0.0;
      for (std::size_t i = 0; i < bins.size(); ++i) {
        obs += bins[i].observed;
        exp += bins[i].expected;
        if (bins.size() > 1) CHECK(bins[i].expected >= kMinExpectedCount);
        if (i > 0) CHECK(bins[i].k_low == bins[i - 1].k_high + 1);
      }
      CHECK(obs == doctest::Approx(static_cast<double>(s.n)));
      CHECK(exp == doctest::Approx(static_cast<double>(s.n)).epsilon(1e-9));
      CHECK(bins.front().k_low == 0);
      CHECK(bins.back().k_high == kOpenBin);
    }
  }

  TEST_CASE("statistic and decision") {
    const auto s = gen_sample(single_truth(8.0, 0.25, 500, 42));
    const auto fit = fit_lognormal(s);
    const auto r = chi_square_test(s, fit, 0.05);
    double stat = 0.0;
    for (const auto& b : r.bins) stat += (b.observed - b.expected) * (b.observed - b.expected) / b.expected;
    CHECK(r.statistic == doctest::Approx(stat));
    CHECK(r.dof == static_cast<int>(r.bins.size()) - 3);
    CHECK(r.p_value == doctest::Approx(oracle::chi2_sf(stat, r.dof)).epsilon(1e-7));
    CHECK(r.reject == (r.p_value < 0.05));

    const auto mix = gen_sample(mixture_truth(0.6, 6.0, 10.0, 0.15, 500, 42));
    CHECK(chi_square_test(mix, fit_lognormal(mix), 0.05).reject);
  }

  TEST_CASE("lower alpha never rejects more") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      const auto s = gen_sample(mixture_truth(0.8, 7.0, 9.0, 0.2, 300, seed));
      const auto fit = fit_lognormal(s);
      const bool strict = chi_square_test(s, fit, 0.01).reject;
      const bool loose = chi_square_test(s, fit, 0.05).reject;
      CHECK((!strict || loose));
    }
  }

  TEST_CASE("degenerate inputs") {
    const auto one = PairSample::from_counts({{7, 200}});
    CHECK_THROWS_WITH_AS(chi_square_test(one, fit_lognormal(one), 0.05), doctest::Contains("too concentrated"), Error);
    const auto three = PairSample::from_counts({{6, 50}, {7, 100}, {8, 50}});
    CHECK_THROWS_AS(chi_square_test(three, fit_lognormal(three), 0.05), Error);
    const auto s = gen_sample(single_truth(8.0, 0.25, 300, 1));
    CHECK_THROWS_AS(chi_square_test(s, fit_lognormal(s), 0.0), Error);
    CHECK_THROWS_AS(chi_square_test(s, fit_lognormal(s), 1.0), Error);
  }
}
