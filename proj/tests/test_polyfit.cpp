#include <cmath>

#include "proprio/polyfit.hpp"
#include "support.hpp"

using namespace proprio;
using doctest::Approx;

TEST_SUITE("polyfit") {

TEST_CASE("exact quadratic is recovered") {
  std::vector<double> x, y;
  for (int k = -4; k <= 4; ++k) {
    x.push_back(5.0 * k);
    y.push_back(2.0 - 0.5 * x.back() + 0.03 * x.back() * x.back());
  }
  const PolyFit fit = fit_polynomial(x, y, 2);
  REQUIRE(fit.coeffs.size() == 3);
  CHECK(fit.coeffs[0] == Approx(2.0).epsilon(1e-10));
  CHECK(fit.coeffs[1] == Approx(-0.5).epsilon(1e-10));
  CHECK(fit.coeffs[2] == Approx(0.03).epsilon(1e-10));
  CHECK(fit.max_residual <= 1e-9);
  CHECK(fit.rms_residual <= fit.max_residual);
  CHECK(fit(7.0) == Approx(2.0 - 3.5 + 0.03 * 49).epsilon(1e-12));
}

TEST_CASE("degree four through five points interpolates") {
  const std::vector<double> x = {-20, -10, 0, 10, 20};
  const std::vector<double> y = {1.3, 0.2, -0.7, 4.0, 2.5};
  const PolyFit fit = fit_polynomial(x, y, 4);
  for (std::size_t k = 0; k < x.size(); ++k) CHECK(std::abs(fit(x[k]) - y[k]) <= 1e-9);
}

TEST_CASE("least squares residual is orthogonal to the basis") {
  std::mt19937_64 rng(31);
  std::vector<double> x, y;
  for (int k = 0; k < 40; ++k) {
    x.push_back(test::uniform(rng, -3, 3));
    y.push_back(std::sin(x.back()) + test::uniform(rng, -0.1, 0.1));
  }
  const PolyFit fit = fit_polynomial(x, y, 3);
  for (int p = 0; p <= 3; ++p) {
    double dot = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) dot += (y[k] - fit(x[k])) * std::pow(x[k], p);
    CHECK(std::abs(dot) < 1e-9);
  }
}

TEST_CASE("too few distinct abscissae is rank deficient") {
  const std::vector<double> x = {-10, -5, 0, 5, 5, -10};
  const std::vector<double> y = {1, 2, 3, 4, 5, 6};
  CHECK_THROWS_WITH_AS(fit_polynomial(x, y, 4), doctest::Contains("rank-deficient"), ValidationError);
  const std::vector<double> short_y = {1, 2};
  CHECK_THROWS_AS(fit_polynomial(x, short_y, 1), ValidationError);
}

}  // TEST_SUITE
